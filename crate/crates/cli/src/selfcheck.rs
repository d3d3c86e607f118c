//! Invariant suites behind `crtorsion selfcheck`.
//!
//! Checks run in a fixed order and never stop early; the verdict names the
//! first failure. Randomized checks draw from one ChaCha8 stream seeded by
//! `--seed`, and their tolerances leave room for every seed.

use std::f64::consts::{PI, TAU};

use crtorsion::density::{hat_a_coeffs, rt_series, supertrace_n_density, LeviSpectrum};
use crtorsion::mellin::{mellin_at_zero, riemann_zeta_check, DecayCertificate, MellinInput};
use crtorsion::spectra::galerkin::validate_cp1;
use crtorsion::spectra::{cp1_spectrum, GeometryModel, SpectrumLine, SpectrumTable, TailPolicy};
use crtorsion::strata::{StratumIntegrand, StratumMonomial};
use crtorsion::torsion::{
    asympt_sweep, closed_form_bhat, fit_gap_line, theta_prime_zero, theta_prime_zero_direct, torsion_report,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{residual_trend_decreasing, stratum_cross_check};
use crate::config::{RunConfig, Tolerances};
use crate::report::{Provenance, Report};
use crate::Outcome;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub verdict: &'static str,
    pub detail: String,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }

    pub fn line(&self) -> String {
        let x = self.measured;
        let measured =
            if x == 0.0 || x.is_nan() || x.abs() >= 1e-3 { format!("{x:.12}") } else { format!("{x:.3e}") };
        format!("{}: {measured} {} ({})", self.check, self.verdict, self.detail)
    }
}

/// `(measured, passed, detail)`.
type Measured = anyhow::Result<(f64, bool, String)>;

struct Check {
    name: &'static str,
    tolerance: fn(&Tolerances) -> f64,
    run: fn(&Tolerances, &mut ChaCha8Rng) -> Measured,
}

const CHECKS: [Check; 10] = [
    Check { name: "torsion_two_path", tolerance: |t| t.two_path_rel, run: two_path },
    Check { name: "scaling_identity", tolerance: |t| t.scaling_abs, run: scaling_identity },
    Check { name: "zeta_prime0", tolerance: |t| t.zeta_abs, run: zeta_prime0 },
    Check { name: "supertrace_identity", tolerance: |t| t.supertrace_rel, run: supertrace_identity },
    Check { name: "hat_a", tolerance: |t| t.hat_a_rel, run: hat_a },
    Check { name: "mellin_gamma_family", tolerance: |t| t.mellin_error_factor, run: mellin_family },
    Check { name: "cp1_galerkin", tolerance: |t| t.galerkin_rel, run: galerkin },
    Check { name: "gap_slope", tolerance: |t| t.gap_slope_min, run: gap_slope },
    Check { name: "residual_trend", tolerance: |_| 0.0, run: residual_trend },
    Check { name: "stratum_quadrature", tolerance: |t| t.stratum_rel, run: stratum },
];

pub fn run_checks(tol: &Tolerances, seed: u64) -> Vec<CheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CHECKS
        .iter()
        .map(|c| {
            let (measured, ok, detail) =
                (c.run)(tol, &mut rng).unwrap_or_else(|e| (f64::NAN, false, format!("{e:#}")));
            CheckRow {
                check: c.name,
                measured,
                tolerance: (c.tolerance)(tol),
                verdict: if ok { "PASS" } else { "FAIL" },
                detail,
            }
        })
        .collect()
}

pub fn selfcheck(cfg: &RunConfig, tol: &Tolerances) -> anyhow::Result<(Outcome, String)> {
    let rows = run_checks(tol, cfg.seed);
    let text: String = rows.iter().map(|r| r.line() + "\n").collect();
    let first_failure = rows.iter().find(|r| !r.passed());
    let summary = match first_failure {
        None => format!("selfcheck: all {} checks passed", rows.len()),
        Some(r) => format!("selfcheck: first failure {}", r.check),
    };
    let report = Report::new(
        Provenance::new(cfg, tol),
        &["check", "measured", "tolerance", "verdict", "detail"],
        &rows,
    )?;
    Ok((Outcome { report, passed: first_failure.is_none(), summary }, text))
}

fn finite(n: u32, lines: &[(u32, f64, u64)]) -> SpectrumTable {
    let lines = lines.iter().map(|&(q, lambda, mult)| SpectrumLine { q, lambda, mult }).collect();
    SpectrumTable::new(n, 0, lines, TailPolicy::Finite).expect("valid fixed spectrum")
}

fn random_finite(rng: &mut ChaCha8Rng) -> SpectrumTable {
    let n = rng.gen_range(1..=3u32);
    let count = rng.gen_range(1..=30);
    let lines: Vec<_> = (0..count)
        .map(|_| {
            let lambda = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.2..40.0) };
            (rng.gen_range(0..=n), lambda, rng.gen_range(1..=6u64))
        })
        .collect();
    finite(n, &lines)
}

fn random_levi(rng: &mut ChaCha8Rng) -> LeviSpectrum {
    let n = rng.gen_range(1..=4);
    LeviSpectrum::new((0..n).map(|_| rng.gen_range(0.5..3.0)).collect()).expect("positive eigenvalues")
}

/// The fixed spectrum has a nonzero `t^0` coefficient, so any error in the
/// constant-term handling of the heat path shows up here.
fn two_path(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Measured {
    let cfg = &tol.torsion;
    let fixed = finite(2, &[(1, 2.0, 3), (1, 0.0, 2), (2, 5.0, 1), (0, 0.0, 4)]);
    let mut worst: f64 = 0.0;
    for spec in std::iter::once(fixed).chain((0..20).map(|_| random_finite(rng))) {
        let n = spec.n() as usize;
        let bhat = closed_form_bhat(&spec, 2 * n + 1 + cfg.extension_terms)?;
        let heat = theta_prime_zero(&spec, &bhat, &cfg.quadrature)?;
        let direct = theta_prime_zero_direct(&spec, cfg.tail_terms)?;
        worst = worst.max((heat.value - direct.value).abs() / direct.value.abs().max(1.0));
    }
    Ok((worst, worst < tol.two_path_rel, "max relative difference over 21 finite spectra".into()))
}

fn scaling_identity(tol: &Tolerances, _: &mut ChaCha8Rng) -> Measured {
    let model = GeometryModel::cp1();
    let mut worst: f64 = 0.0;
    let mut kernel = 0.0f64;
    for m in [8u32, 16, 32] {
        let r = torsion_report(&model, &cp1_spectrum(m, 64), m, &tol.torsion)?;
        worst = worst.max(r.scaling_identity_residual.abs());
        kernel = kernel.max(r.kernel_supertrace.abs());
    }
    Ok((worst, worst < tol.scaling_abs && kernel == 0.0, format!("cp1 m = 8, 16, 32; STr[N Pi] = {kernel}")))
}

fn zeta_prime0(tol: &Tolerances, _: &mut ChaCha8Rng) -> Measured {
    let (z0, zp) = riemann_zeta_check(&tol.torsion.quadrature)?;
    let err = (zp + 0.5 * TAU.ln()).abs();
    Ok((zp, z0 == -0.5 && err < tol.zeta_abs, format!("zeta(0) = {z0}, |err| {err:.1e}")))
}

fn supertrace_identity(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Measured {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let levi = random_levi(rng);
        let st = supertrace_n_density(&levi, 14)?;
        let rt = rt_series(&levi, 14)?;
        let scale = rt.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        worst = worst.max(st.max_abs_diff(&rt) / scale);
    }
    Ok((worst, worst < tol.supertrace_rel, "50 random Levi spectra through t^6".into()))
}

fn hat_a(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Measured {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let levi = random_levi(rng);
        let (am1, a0) = hat_a_coeffs(&levi)?;
        let rt = rt_series(&levi, 2)?;
        let (bm1, b0) = (rt.coeff2(-2).unwrap_or(0.0), rt.coeff2(0).unwrap_or(0.0));
        worst = worst.max((am1 - bm1).abs() / bm1.abs()).max((a0 - b0).abs() / b0.abs());
    }
    Ok((worst, worst < tol.hat_a_rel, "50 random Levi spectra".into()))
}

/// Γ at half-integers and positive integers.
fn gamma(p: f64) -> f64 {
    if p.fract() == 0.0 {
        return (1..p as u32).map(f64::from).product();
    }
    let (mut x, mut acc) = (p, PI.sqrt());
    while x > 0.5 {
        x -= 1.0;
        acc *= x;
    }
    while x < 0.5 {
        acc /= x;
        x += 1.0;
    }
    acc
}

/// `(value0, derivative0)` of `M[t^p e^{-bt}] = Γ(z+p) b^{-z-p} / Γ(z)`.
fn gamma_quotient_at_zero(p: f64, b: f64) -> (f64, f64) {
    if p == 0.0 {
        return (1.0, -b.ln());
    }
    if p < 0.0 && p.fract() == 0.0 {
        let j = (-p) as u32;
        let fact: f64 = (1..=j).map(f64::from).product();
        let harmonic: f64 = (1..=j).map(|i| 1.0 / f64::from(i)).sum();
        let v = if j.is_multiple_of(2) { 1.0 } else { -1.0 } * b.powi(j as i32) / fact;
        return (v, v * (harmonic - b.ln()));
    }
    (0.0, gamma(p) * b.powf(-p))
}

fn mellin_family(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Measured {
    let mut worst: f64 = 0.0;
    for p in [-1.0f64, -0.5, 0.0, 0.5, 1.0, 2.0] {
        let b: f64 = rng.gen_range(0.5..3.0);
        let k = (-p).ceil().max(0.0) as u32;
        let mut expansion = vec![0.0; 2 * k as usize + 11];
        let mut fact = 1.0;
        for i in 0..12 {
            if i > 0 {
                fact *= i as f64;
            }
            let slot = 2.0 * (p + (i + k) as f64);
            if (slot as usize) < expansion.len() {
                expansion[slot as usize] = (-b).powi(i as i32) / fact;
            }
        }
        let constant =
            if p > 0.0 && 2.0 * p / b > 1.0 { (2.0 * p / b).powf(p) * (-p).exp() } else { (-b / 2.0).exp() };
        let input = MellinInput {
            f: |t: f64| t.powf(p) * (-b * t).exp(),
            k,
            expansion,
            decay: DecayCertificate { constant, rate: b / 2.0 },
        };
        let r = mellin_at_zero(&input, &tol.torsion.quadrature)?;
        let (v, d) = gamma_quotient_at_zero(p, b);
        if (r.value0 - v).abs() > 1e-14 * v.abs().max(1.0) {
            return Ok((f64::INFINITY, false, format!("p={p}: value0 {} vs {v}", r.value0)));
        }
        worst = worst.max((r.derivative0 - d).abs() / r.error_estimate);
    }
    Ok((worst, worst <= tol.mellin_error_factor, "max |error| / estimate over t^p e^(-bt)".into()))
}

fn galerkin(tol: &Tolerances, _: &mut ChaCha8Rng) -> Measured {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for m in 0..=8 {
        let v = validate_cp1(m, 10)?;
        ok &= v.passes(tol.galerkin_rel);
        worst = worst.max(v.max_rel_error);
    }
    Ok((worst, ok, "first 10 eigenvalues and kernel dimension, m = 0..8".into()))
}

fn gap_slope(tol: &Tolerances, _: &mut ChaCha8Rng) -> Measured {
    let pts = (4..=64u32)
        .map(|m| Ok((m as f64, cp1_spectrum(m, 4).spectral_gap(1)?)))
        .collect::<crtorsion::Result<Vec<_>>>()?;
    let (c1, c2) = fit_gap_line(&pts)?;
    Ok((
        c1,
        c1 >= tol.gap_slope_min,
        format!(
            "degree-1 gap >= {c1:.6} m {} {:.6} on m = 4..64",
            if c2 < 0.0 { '+' } else { '-' },
            c2.abs()
        ),
    ))
}

fn residual_trend(tol: &Tolerances, _: &mut ChaCha8Rng) -> Measured {
    let ms = [8, 16, 32, 64];
    let reports = asympt_sweep(&GeometryModel::cp1(), |m| cp1_spectrum(m, 64), &ms, &tol.torsion)?;
    let last = reports.last().map_or(f64::NAN, |r| r.residual.abs());
    let trend = reports.iter().map(|r| format!("{:.5}", r.residual.abs())).collect::<Vec<_>>().join(", ");
    Ok((last, residual_trend_decreasing(&reports), format!("|residual| over m = 8..64: {trend}")))
}

fn stratum(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Measured {
    let mut worst: f64 = 0.0;
    for trial in 0..6 {
        let r = 1 + trial % 3;
        let mut poly = vec![StratumMonomial { coeff: 1.0, powers: vec![0; r] }];
        for _ in 0..rng.gen_range(1..4) {
            let mut powers = vec![0u32; r];
            for _ in 0..rng.gen_range(1..=4) {
                powers[rng.gen_range(0..r)] += 1;
            }
            poly.push(StratumMonomial { coeff: rng.gen_range(-1.0..1.0), powers });
        }
        let g = StratumIntegrand::new(r, poly, rng.gen_range(0.5..2.0))?;
        let m = rng.gen_range(1..50u32);
        let t = m as f64 * 10f64.powf(rng.gen_range(-4.0..-1.0));
        let (err, scale) = stratum_cross_check(&g, m, t, 1e-12)?;
        worst = worst.max(err / scale);
    }
    Ok((worst, worst < tol.stratum_rel, "6 random integrands, r = 1..3".into()))
}
