//! Mellin transform at `z = 0` of functions with a certified small-time
//! expansion and exponential decay.
//!
//! For `M[f](z) = Γ(z)^{-1} ∫₀^∞ f(t) t^{z-1} dt` and
//! `f(t) ~ Σ_j f_j t^{-k+j/2}` as `t → 0`, the value at zero is the constant
//! coefficient `f_0` and the derivative is
//!
//! ```text
//! ∫₀¹ (f − Σ_{j≤2k} f_j t^{-k+j/2}) dt/t + ∫₁^∞ f dt/t
//!     + Σ_{j<2k} f_j/(j/2 − k) − Γ′(1) f_0.
//! ```

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::integrate;
use crate::series::bose_factor;

/// Euler–Mascheroni constant to 20 digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// `Γ′(1)`. The `mutant-zero-gamma` feature replaces it by zero so the
/// two-path torsion check can be shown to detect the missing term.
#[cfg(not(feature = "mutant-zero-gamma"))]
pub const GAMMA_PRIME_ONE: f64 = -EULER_GAMMA;
#[cfg(feature = "mutant-zero-gamma")]
pub const GAMMA_PRIME_ONE: f64 = 0.0;

/// `|f(t)| ≤ constant · e^{-rate·t}` for `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub constant: f64,
    pub rate: f64,
}

pub struct MellinInput<F> {
    pub f: F,
    /// Leading order is `t^{-k}`.
    pub k: u32,
    /// Coefficients of `t^{-k + j/2}` for `j = 0, 1, ...`; at least `2k + 1` entries.
    /// Entries past `j = 2k` are used to sharpen the quadrature near zero.
    pub expansion: Vec<f64>,
    pub decay: DecayCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_cutoff_tol: f64,
    /// Equal panels each interval starts from; doubling it halves the initial step.
    pub initial_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
            tail_cutoff_tol: 1e-15,
            initial_panels: 4,
        }
    }
}

impl QuadratureConfig {
    /// Same config with absolute and relative tolerances set to `tol`.
    pub fn with_tol(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, tail_cutoff_tol: tol * 1e-2, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.tail_cutoff_tol > 0.0
            && self.max_subdivisions > 0
            && self.initial_panels > 0;
        if ok {
            Ok(())
        } else {
            Err(domain("quadrature tolerances must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MellinAtZero {
    pub value0: f64,
    pub derivative0: f64,
    pub error_estimate: f64,
    /// Below this point the integrand is replaced by its expansion.
    pub near_cutoff: f64,
    /// Upper end of the truncated tail integral.
    pub tail_end: f64,
}

fn exponent(k: u32, j: usize) -> f64 {
    j as f64 * 0.5 - k as f64
}

/// `∫_lo^hi t^{e-1} dt`.
fn power_integral(e: f64, lo: f64, hi: f64) -> f64 {
    if e == 0.0 {
        libm::log(hi / lo)
    } else {
        (libm::pow(hi, e) - libm::pow(lo, e)) / e
    }
}

/// `f` minus every expansion term.
fn remainder<F: Fn(f64) -> f64>(input: &MellinInput<F>, t: f64) -> f64 {
    let sqrt_t = libm::sqrt(t);
    let mut p = libm::pow(t, -(input.k as f64));
    let mut s = 0.0;
    for c in &input.expansion {
        s += c * p;
        p *= sqrt_t;
    }
    (input.f)(t) - s
}

/// Pick the split point below which the remainder is dropped, balancing the
/// dropped mass against cancellation noise in `f − expansion`.
fn choose_near_cutoff<F: Fn(f64) -> f64>(input: &MellinInput<F>) -> (f64, f64) {
    let noise = |tc: f64| -> f64 {
        let mut s = 0.0;
        for (j, c) in input.expansion.iter().enumerate() {
            s += c.abs() * power_integral(exponent(input.k, j), tc, 1.0).abs();
        }
        32.0 * f64::EPSILON * s
    };
    let mut best = (1.0, f64::INFINITY);
    for s in 4..=64 {
        let tc = libm::pow(10.0, -(s as f64) / 4.0);
        let r = remainder(input, tc).abs().max(remainder(input, 0.6 * tc).abs());
        if !r.is_finite() {
            continue;
        }
        let est = 2.0 * r + noise(tc);
        if est < best.1 {
            best = (tc, est);
        }
    }
    best
}

/// Value and derivative at `z = 0` of the Mellin transform of `input.f`.
pub fn mellin_at_zero<F: Fn(f64) -> f64>(
    input: &MellinInput<F>,
    cfg: &QuadratureConfig,
) -> Result<MellinAtZero> {
    cfg.validate()?;
    let k = input.k as usize;
    if input.expansion.len() < 2 * k + 1 {
        return Err(crate::Error::Arity { needed: 2 * k + 1, got: input.expansion.len() });
    }
    let DecayCertificate { constant, rate } = input.decay;
    if !(rate > 0.0) || !(constant >= 0.0) || !constant.is_finite() {
        return Err(domain("decay certificate needs C >= 0 and c > 0"));
    }
    let f0 = input.expansion[2 * k];

    let (tc, cut_err) = choose_near_cutoff(input);
    // t = u² removes half-power cusps; dt/t = 2 du/u.
    let near = integrate(
        |u| {
            let t = u * u;
            2.0 * remainder(input, t) / u
        },
        libm::sqrt(tc),
        1.0,
        cfg.initial_panels,
        // Cancellation noise below the cutoff limits what quadrature can resolve.
        cfg.abs_tol.max(cut_err),
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;

    let tail_end = 1.0 + (libm::log(constant / (rate * cfg.tail_cutoff_tol)) / rate).max(0.0);
    let tail = if tail_end > 1.0 {
        let panels = cfg.initial_panels * (1 + (tail_end - 1.0) as usize / 4);
        integrate(
            |t| (input.f)(t) / t,
            1.0,
            tail_end,
            panels,
            cfg.abs_tol,
            cfg.rel_tol,
            cfg.max_subdivisions,
        )?
    } else {
        crate::quadrature::Integral { value: 0.0, error: 0.0, subdivisions: 0 }
    };
    let tail_cut_err = constant * libm::exp(-rate * tail_end) / rate;

    let mut analytic = 0.0;
    let mut analytic_abs = 0.0;
    for (j, &c) in input.expansion.iter().enumerate() {
        if j == 2 * k {
            continue;
        }
        let term = c / exponent(input.k, j);
        analytic += term;
        analytic_abs += term.abs();
    }
    let gamma_term = -GAMMA_PRIME_ONE * f0;
    let derivative0 = near.value + tail.value + analytic + gamma_term;

    let rounding =
        16.0 * f64::EPSILON * (near.value.abs() + tail.value.abs() + analytic_abs + gamma_term.abs());
    let error_estimate = near.error + tail.error + tail_cut_err + cut_err + rounding;
    Ok(MellinAtZero { value0: f0, derivative0, error_estimate, near_cutoff: tc, tail_end })
}

/// `(ζ(0), ζ′(0))` of the Riemann zeta function through the kernel
/// `1/(e^t − 1)`, whose expansion comes from the Bose factor.
pub fn riemann_zeta_check(cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let bose = bose_factor(1.0, 16)?;
    let mut expansion: Vec<f64> = bose.coeffs().to_vec();
    expansion[2] -= 1.0;
    let input = MellinInput {
        f: |t: f64| 1.0 / libm::expm1(t),
        k: 1,
        expansion,
        decay: DecayCertificate { constant: 1.0 / -libm::expm1(-1.0), rate: 1.0 },
    };
    let r = mellin_at_zero(&input, cfg)?;
    Ok((r.value0, r.derivative0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_741_78;

    #[test]
    fn exponential_is_constant_one() {
        let input = MellinInput {
            f: |t: f64| libm::exp(-t),
            k: 0,
            expansion: vec![1.0, 0.0, -1.0, 0.0, 0.5, 0.0, -1.0 / 6.0],
            decay: DecayCertificate { constant: 1.0, rate: 1.0 },
        };
        let r = mellin_at_zero(&input, &QuadratureConfig::default()).unwrap();
        assert_eq!(r.value0, 1.0);
        assert!(r.derivative0.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn t_exp_is_z() {
        let input = MellinInput {
            f: |t: f64| t * libm::exp(-t),
            k: 0,
            expansion: vec![0.0],
            decay: DecayCertificate { constant: 1.0, rate: 0.5 },
        };
        let r = mellin_at_zero(&input, &QuadratureConfig::default()).unwrap();
        assert_eq!(r.value0, 0.0);
        assert!((r.derivative0 - 1.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn minimal_bose_expansion() {
        let input = MellinInput {
            f: |t: f64| 1.0 / libm::expm1(t),
            k: 1,
            expansion: vec![1.0, 0.0, -0.5],
            decay: DecayCertificate { constant: 1.0 / -libm::expm1(-1.0), rate: 1.0 },
        };
        let r = mellin_at_zero(&input, &QuadratureConfig::default()).unwrap();
        assert_eq!(r.value0, -0.5);
        assert!((r.derivative0 + HALF_LOG_TWO_PI).abs() < 1e-7, "{r:?}");
        assert!((r.derivative0 + HALF_LOG_TWO_PI).abs() < 10.0 * r.error_estimate);
    }

    #[test]
    fn riemann_zeta() {
        let (z0, zp) = riemann_zeta_check(&QuadratureConfig::default()).unwrap();
        assert_eq!(z0, -0.5);
        assert!((zp + HALF_LOG_TWO_PI).abs() < 1e-12, "{zp}");
        let (z0, zp) = riemann_zeta_check(&QuadratureConfig::with_tol(1e-4)).unwrap();
        assert_eq!(z0, -0.5);
        assert!((zp + HALF_LOG_TWO_PI).abs() < 1e-4);
    }

    #[test]
    fn short_expansion_is_arity_error() {
        let input = MellinInput {
            f: |t: f64| 1.0 / t,
            k: 1,
            expansion: vec![1.0],
            decay: DecayCertificate { constant: 1.0, rate: 1.0 },
        };
        assert!(matches!(
            mellin_at_zero(&input, &QuadratureConfig::default()),
            Err(crate::Error::Arity { needed: 3, got: 1 })
        ));
    }

    #[test]
    fn starved_quadrature_reports_partial_estimate() {
        let input = MellinInput {
            f: |t: f64| libm::sin(200.0 * t) * libm::exp(-t),
            k: 0,
            expansion: vec![0.0],
            decay: DecayCertificate { constant: 1.0, rate: 1.0 },
        };
        let cfg = QuadratureConfig { max_subdivisions: 1, initial_panels: 1, ..Default::default() };
        assert!(matches!(mellin_at_zero(&input, &cfg), Err(crate::Error::Quadrature { .. })));
    }
}
