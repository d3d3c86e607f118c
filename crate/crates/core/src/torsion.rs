//! Torsion of a Fourier component: `θ′(0)` for
//! `θ(z) = −M[STr N e^{-t□} Π⊥](z) = −Σ_{λ>0} (−1)^q q · mult · λ^{-z}`.
//!
//! Two independent evaluations are provided. The heat path runs the Mellin
//! machinery on the super trace with its small-time coefficients `B̂`. The
//! direct path sums `(−1)^q q · mult · log λ` and continues quadratic-law
//! tails analytically.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mellin::{mellin_at_zero, DecayCertificate, MellinInput, QuadratureConfig};
use crate::series::{bernoulli_plus, fit_half_powers, FitConfig, HalfPowerFit};
use crate::spectra::{n_weight, GeometryModel, QuadraticLaw, SpectrumTable, TailPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionConfig {
    pub quadrature: QuadratureConfig,
    /// Expansion slots past `t^0` handed to the Mellin transform.
    pub extension_terms: usize,
    /// Euler–Maclaurin correction terms in the direct path.
    pub tail_terms: usize,
}

impl Default for TorsionConfig {
    fn default() -> Self {
        Self { quadrature: QuadratureConfig::default(), extension_terms: 8, tail_terms: 6 }
    }
}

/// A value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Least-squares `B̂` coefficients of `STr[N e^{-t□}]` on `t_grid`, with base `t^{-n}`.
pub fn extract_bhat(
    spec: &SpectrumTable,
    num_terms: usize,
    t_grid: &[f64],
    fit: &FitConfig,
) -> Result<HalfPowerFit> {
    let n = spec.n() as usize;
    if num_terms > 2 * n + 2 {
        return Err(domain("extract_bhat supports at most 2n + 2 terms"));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(domain("sample times must be positive"));
        }
        let h = spec.heat_supertrace_n(t, false);
        if !(h.tail_bound <= 1e-12 * h.value.abs().max(1.0)) {
            return Err(Error::TailNotNegligible { t, bound: h.tail_bound });
        }
        samples.push((t, h.value));
    }
    fit_half_powers(&samples, -2 * n as i32, num_terms, fit)
}

/// Exact small-time coefficients `B̂_{-n + j/2}`, `j = 0..count`, of
/// `STr[N e^{-t□}]` from the lines and growth laws.
pub fn closed_form_bhat(spec: &SpectrumTable, count: usize) -> Result<Vec<f64>> {
    let n = spec.n() as i32;
    let base2 = -2 * n;
    let trunc2 = base2 + count as i32;
    let series = spec.expansion_weighted(n_weight, false, trunc2.max(0))?;
    Ok((0..count as i32).map(|j| series.coeff2(base2 + j).unwrap_or(0.0)).collect())
}

fn supertrace_fn(spec: &SpectrumTable) -> Result<impl Fn(f64) -> f64 + '_> {
    match spec.tail() {
        TailPolicy::Uncertified => Err(Error::UnsupportedTail),
        TailPolicy::Finite => Ok(alloc::boxed::Box::new(move |t: f64| spec.heat_supertrace_n(t, true).value)
            as alloc::boxed::Box<dyn Fn(f64) -> f64>),
        TailPolicy::WeylTail(_) => Ok(alloc::boxed::Box::new(move |t: f64| {
            spec.completed_weighted(t, n_weight, true).map(|h| h.value).unwrap_or(f64::NAN)
        }) as alloc::boxed::Box<dyn Fn(f64) -> f64>),
    }
}

/// Mellin transform at zero of `s^{-n} STr[N e^{-(t/s)□} Π⊥]`.
fn rescaled_mellin(
    spec: &SpectrumTable,
    bhat: &[f64],
    s: f64,
    cfg: &QuadratureConfig,
) -> Result<crate::mellin::MellinAtZero> {
    let n = spec.n() as usize;
    if bhat.len() < 2 * n + 1 {
        return Err(Error::Arity { needed: 2 * n + 1, got: bhat.len() });
    }
    let f = supertrace_fn(spec)?;
    let norm = libm::pow(s, -(n as f64));
    let mut expansion: Vec<f64> = bhat.to_vec();
    expansion[2 * n] -= spec.kernel_supertrace_n();
    for (j, c) in expansion.iter_mut().enumerate() {
        let e = j as f64 * 0.5 - n as f64;
        *c *= norm * libm::pow(s, -e);
    }
    let decay = match spec.supertrace_decay(1.0 / s)? {
        Some(d) => DecayCertificate { constant: norm * d.constant, rate: d.rate / s },
        None => DecayCertificate { constant: 0.0, rate: 1.0 },
    };
    let input = MellinInput { f: |t: f64| norm * f(t / s), k: n as u32, expansion, decay };
    mellin_at_zero(&input, cfg)
}

/// `θ′(0)` through the heat super trace and its `B̂` coefficients.
///
/// `bhat` must reach `t^0`; further entries sharpen the quadrature near zero.
pub fn theta_prime_zero(spec: &SpectrumTable, bhat: &[f64], cfg: &QuadratureConfig) -> Result<Estimate> {
    let r = rescaled_mellin(spec, bhat, 1.0, cfg)?;
    Ok(Estimate { value: -r.derivative0, error: r.error_estimate })
}

/// `(θ̃(0), θ̃′(0))` for the rescaled trace `m^{-n} STr[N e^{-(t/m)□} Π⊥]`.
pub fn theta_tilde(
    spec: &SpectrumTable,
    bhat: &[f64],
    m: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, Estimate)> {
    let r = rescaled_mellin(spec, bhat, m, cfg)?;
    Ok((-r.value0, Estimate { value: -r.derivative0, error: r.error_estimate }))
}

/// `θ′(0)` by direct summation of `(−1)^q q · mult · log λ`, with each growth
/// law continued past its listed range by `tail_terms` Euler–Maclaurin terms.
pub fn theta_prime_zero_direct(spec: &SpectrumTable, tail_terms: usize) -> Result<Estimate> {
    let (extras, segments): (Vec<_>, Vec<_>) = match spec.tail() {
        TailPolicy::Uncertified => return Err(Error::UnsupportedTail),
        TailPolicy::Finite => (spec.lines().to_vec(), Vec::new()),
        TailPolicy::WeylTail(segs) => (spec.extras().to_vec(), segs.clone()),
    };
    let mut value = 0.0;
    let mut abs = 0.0;
    for l in &extras {
        if l.lambda > 0.0 {
            let term = n_weight(l.q) * l.mult as f64 * libm::log(l.lambda);
            value += term;
            abs += term.abs();
        }
    }
    let mut error = 4.0 * f64::EPSILON * abs;
    for s in &segments {
        let w = n_weight(s.law.q);
        if w == 0.0 {
            continue;
        }
        let z = law_log_zeta(&s.law, s.k_first, s.k_max, tail_terms);
        // θ picks up −w · Z(z), so θ′(0) gains −w · Z′(0).
        value -= w * z.value;
        error += w.abs() * z.error;
    }
    Ok(Estimate { value, error })
}

/// `Z′(0)` for `Z(z) = Σ_{k≥k_first, λ>0} κλ′(k) λ(k)^{-z}`.
///
/// With `F = λ log λ − λ` and `G = λ′ log λ`,
/// `Z′(0) = κ[F(k1 − ½) + Σ_{k=k1}^{K} (F(k+½) − F(k−½) − G(k)) + Σ_p c_p G^{(2p−1)}(K+½)]`
/// where `c_p = B_{2p}(½)/(2p)!`. The brackets are evaluated without
/// cancellation through `λ(k ± ½) = λ(k)(1 + u±)`.
fn law_log_zeta(law: &QuadraticLaw, k_first: u64, k_max: u64, tail_terms: usize) -> Estimate {
    let kappa = law.kappa;
    let mut k = k_first;
    if law.lambda(k as f64) == 0.0 {
        k += 1;
    }
    // Lines whose left half-cell reaches λ ≤ 0 are summed directly.
    let mut direct = 0.0;
    while law.lambda(k as f64 - 0.5) <= 0.0 {
        let kf = k as f64;
        direct -= law.slope(kf) * libm::log(law.lambda(kf));
        k += 1;
    }
    let k1 = k;
    let upper = k_max.max(k1);
    let f_at = |x: f64| {
        let l = law.lambda(x);
        l * libm::log(l) - l
    };
    let mut sum = f_at(k1 as f64 - 0.5) + direct;
    let mut abs = sum.abs();
    for k in k1..=upper {
        let b = bracket(law, k as f64);
        sum += b;
        abs += b.abs();
    }
    let x0 = upper as f64 + 0.5;
    let derivs = log_slope_taylor(law, x0, 2 * tail_terms + 2);
    let bern: Vec<f64> = bernoulli_plus(2 * tail_terms + 3);
    let mut fact = 1.0;
    let mut last = 0.0;
    for p in 1..=tail_terms + 1 {
        let r = 2 * p;
        fact *= ((r - 1) * r) as f64;
        let c = (libm::pow(2.0, 1.0 - r as f64) - 1.0) * bern[r] / fact;
        // G^{(r-1)}(x0) = (r-1)! · G_{r-1}
        let g = derivs[r - 1] * fact / r as f64;
        let term = c * g;
        if p <= tail_terms {
            sum += term;
            abs += term.abs();
        } else {
            last = term;
        }
    }
    Estimate { value: kappa * sum, error: kappa * (last.abs() + 8.0 * f64::EPSILON * abs) }
}

/// `F(k+½) − F(k−½) − λ′(k) log λ(k)` with `F = λ log λ − λ`.
fn bracket(law: &QuadraticLaw, k: f64) -> f64 {
    let l = law.lambda(k);
    let s = law.slope(k);
    let a = law.alpha;
    let up = (0.5 * s + 0.25 * a) / l;
    let um = (-0.5 * s + 0.25 * a) / l;
    l * (psi(up) - psi(um) + 0.25 * a * s / (l * l))
}

/// `(1+u) log(1+u) − u − u²/2 = Σ_{j≥3} (−1)^j u^j / (j(j−1))`.
fn psi(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let mut s = 0.0;
        let mut p = u * u;
        for j in 3..40 {
            p *= -u;
            let term = p / (j * (j - 1)) as f64;
            s += term;
            if term.abs() < 1e-18 * s.abs() {
                break;
            }
        }
        s
    } else {
        (1.0 + u) * libm::log1p(u) - u - 0.5 * u * u
    }
}

/// Taylor coefficients `G_r`, `r = 0..count`, of `G(x0 + h) = λ′ log λ`.
fn log_slope_taylor(law: &QuadraticLaw, x0: f64, count: usize) -> Vec<f64> {
    let l0 = law.lambda(x0);
    let s0 = law.slope(x0);
    let a = law.alpha;
    // (log λ)′ = λ′/λ has coefficients ell_r from λ · ell = λ′.
    let mut ell = vec![0.0; count + 1];
    ell[0] = s0 / l0;
    if count >= 1 {
        ell[1] = (2.0 * a - s0 * ell[0]) / l0;
    }
    for r in 2..=count {
        ell[r] = -(s0 * ell[r - 1] + a * ell[r - 2]) / l0;
    }
    let mut log_c = vec![0.0; count + 1];
    log_c[0] = libm::log(l0);
    for r in 1..=count {
        log_c[r] = ell[r - 1] / r as f64;
    }
    let mut g = vec![0.0; count + 1];
    g[0] = s0 * log_c[0];
    for r in 1..=count {
        g[r] = s0 * log_c[r] + 2.0 * a * log_c[r - 1];
    }
    g
}

/// `(rk/4π) m^n Σ_j log(m a_j/2π) det(R/2π) · volume`.
pub fn torsion_rhs(model: &GeometryModel, m: u32) -> Result<f64> {
    if !model.levi.is_strongly_pseudoconvex() {
        return Err(domain("asymptotic right-hand side needs positive Levi eigenvalues"));
    }
    let n = model.n() as f64;
    let mf = m as f64;
    let det = model.levi.det() * libm::pow(TAU, -n);
    let logs: f64 = model.levi.eigenvalues().iter().map(|&a| libm::log(mf * a / TAU)).sum();
    Ok(model.rank_e as f64 / (4.0 * PI) * libm::pow(mf, n) * logs * det * model.volume)
}

/// Large-`m` limits `(lim θ̃(0), lim θ̃′(0))` from the local densities.
pub fn theta_tilde_limits(model: &GeometryModel) -> Result<(f64, f64)> {
    let (_, hat_a0) = crate::density::hat_a_coeffs(&model.levi)?;
    let rk = model.rank_e as f64;
    let n = model.n() as f64;
    let det = model.levi.det() * libm::pow(TAU, -n);
    let zeta_prime = 0.5 * det * libm::log(det) * model.volume;
    Ok((-rk * hat_a0 * model.volume / TAU, rk / TAU * zeta_prime))
}

/// Limit of `m^{-n-ℓ} B̂_ℓ` as `m → ∞`: `rk · volume/(2π)` times the `R_t` expansion,
/// at exponents `−n + j/2` for `j = 0..count`.
pub fn bhat_density_limit(model: &GeometryModel, count: usize) -> Result<Vec<f64>> {
    let n = model.n() as i32;
    let rt = crate::density::rt_series(&model.levi, -2 * n + count as i32)?;
    let scale = model.rank_e as f64 * model.volume / TAU;
    Ok((0..count as i32).map(|j| scale * rt.coeff2(-2 * n + j).unwrap_or(0.0)).collect())
}

/// `m^{-n-ℓ} B̂_ℓ` for `ℓ = −n + j/2`.
pub fn rescale_bhat(bhat: &[f64], n: usize, m: f64) -> Vec<f64> {
    bhat.iter()
        .enumerate()
        .map(|(j, &b)| b * libm::pow(m, -(n as f64) - (j as f64 * 0.5 - n as f64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub m: u32,
    pub theta_prime_0: f64,
    pub theta_prime_0_direct: f64,
    pub bhat: Vec<f64>,
    pub rhs: f64,
    /// `(θ′(0) − rhs) / m^n`.
    pub residual: f64,
    pub error_budget: f64,
    pub theta_tilde_0: f64,
    pub theta_tilde_prime_0: f64,
    /// `m^{-n} θ′(0) + log(m) θ̃(0) − θ̃′(0)`.
    pub scaling_identity_residual: f64,
    pub kernel_supertrace: f64,
}

/// Full report for one spectrum at weight `m`.
pub fn torsion_report(
    model: &GeometryModel,
    spec: &SpectrumTable,
    m: u32,
    cfg: &TorsionConfig,
) -> Result<TorsionReport> {
    let n = spec.n() as usize;
    if n != model.n() {
        return Err(domain("spectrum and geometry disagree on n"));
    }
    let bhat = closed_form_bhat(spec, 2 * n + 1 + cfg.extension_terms)?;
    let heat = theta_prime_zero(spec, &bhat, &cfg.quadrature)?;
    let direct = theta_prime_zero_direct(spec, cfg.tail_terms)?;
    let mf = m.max(1) as f64;
    let (tt0, ttp) = theta_tilde(spec, &bhat, mf, &cfg.quadrature)?;
    let rhs = torsion_rhs(model, m)?;
    let mn = libm::pow(mf, n as f64);
    let scaling = heat.value / mn + libm::log(mf) * tt0 - ttp.value;
    Ok(TorsionReport {
        m,
        theta_prime_0: heat.value,
        theta_prime_0_direct: direct.value,
        bhat: bhat[..2 * n + 1].to_vec(),
        rhs,
        residual: (heat.value - rhs) / mn,
        error_budget: heat.error + direct.error,
        theta_tilde_0: tt0,
        theta_tilde_prime_0: ttp.value,
        scaling_identity_residual: scaling,
        kernel_supertrace: spec.kernel_supertrace_n(),
    })
}

/// One report per `m`, in order. `ms` must be strictly increasing.
pub fn asympt_sweep(
    model: &GeometryModel,
    spectrum_source: impl Fn(u32) -> SpectrumTable,
    ms: &[u32],
    cfg: &TorsionConfig,
) -> Result<Vec<TorsionReport>> {
    check_sweep(ms)?;
    ms.iter().map(|&m| torsion_report(model, &spectrum_source(m), m, cfg)).collect()
}

pub fn check_sweep(ms: &[u32]) -> Result<()> {
    if ms.is_empty() || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("m values must be nonempty and strictly increasing"));
    }
    Ok(())
}

/// `c₁ m − c₂` lower bound for a spectral gap sequence: least-squares slope,
/// then the smallest offset that keeps every point above the line.
pub fn fit_gap_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Arity { needed: 2, got: points.len() });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(domain("gap fit needs distinct m values"));
    }
    let c1 = sxy / sxx;
    let c2 = points.iter().map(|&(m, g)| c1 * m - g).fold(f64::NEG_INFINITY, f64::max);
    Ok((c1, c2))
}

/// `m^{-n} Tr^{(q)}[e^{-(t/m)□}] ≤ C exp(−(c − c′/m) t)` for `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongTimeBound {
    pub constant: f64,
    pub c: f64,
    pub c_prime: f64,
}

impl LongTimeBound {
    /// Fit `c, c′` from the degree-`q` gaps of `family` (pairs of `m` and
    /// spectrum) and `C` from the traces at `t = 1`. The rescaled trace times
    /// `e^{(c − c′/m)t}` is nonincreasing in `t` once `c − c′/m` is below the
    /// rescaled gap, so `t = 1` gives the supremum.
    pub fn fit(family: &[(u32, SpectrumTable)], q: u32) -> Result<Self> {
        let gaps: Vec<(f64, f64)> =
            family.iter().map(|(m, s)| Ok((*m as f64, s.spectral_gap(q)?))).collect::<Result<_>>()?;
        let (c, c_prime) = fit_gap_line(&gaps)?;
        let mut constant: f64 = 0.0;
        for (m, s) in family {
            let v = Self::rescaled_trace(s, q, *m, 1.0)?;
            constant = constant.max(v * libm::exp(c - c_prime / *m as f64));
        }
        Ok(Self { constant, c, c_prime })
    }

    /// `m^{-n} Tr^{(q)}[e^{-(t/m)□}]`, nonzero eigenvalues only.
    pub fn rescaled_trace(s: &SpectrumTable, q: u32, m: u32, t: f64) -> Result<f64> {
        let mf = m as f64;
        let h = s.completed_weighted(t / mf, |p| if p == q { 1.0 } else { 0.0 }, true)?;
        Ok(libm::pow(mf, -(s.n() as f64)) * (h.value + h.tail_bound))
    }

    pub fn envelope(&self, m: u32, t: f64) -> f64 {
        self.constant * libm::exp(-(self.c - self.c_prime / m as f64) * t)
    }
}
