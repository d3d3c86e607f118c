//! Gaussian collapse near a singular stratum.
//!
//! Near a stratum of codimension `r` the off-diagonal heat contributions
//! localize to `∫_{ℝ^r} g(y) e^{-mc|y|²/t} dy`, a finite sum of Gaussian
//! moments. Odd `r` puts every term on the `t^{1/2}` ladder.

use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, Integral};
use crate::series::HalfPowerSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumMonomial {
    pub coeff: f64,
    /// One exponent per chart coordinate.
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumIntegrand {
    r: usize,
    poly: Vec<StratumMonomial>,
    c: f64,
}

impl StratumIntegrand {
    pub fn new(r: usize, poly: Vec<StratumMonomial>, c: f64) -> Result<Self> {
        if r == 0 {
            return Err(domain("stratum codimension must be at least 1"));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(domain("quadratic form scale must be positive"));
        }
        if let Some(bad) = poly.iter().find(|t| t.powers.len() != r || !t.coeff.is_finite()) {
            return Err(domain(alloc::format!("monomial {:?} does not match codimension {r}", bad.powers)));
        }
        Ok(Self { r, poly, c })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn poly(&self) -> &[StratumMonomial] {
        &self.poly
    }

    pub fn eval_poly(&self, y: &[f64]) -> f64 {
        self.poly
            .iter()
            .map(|t| t.coeff * t.powers.iter().zip(y).map(|(&p, &x)| libm::pow(x, p as f64)).product::<f64>())
            .sum()
    }
}

/// `Γ(k + ½) = √π (2k)! / (4^k k!)`.
fn gamma_half(k: u32) -> f64 {
    let mut v = libm::sqrt(PI);
    for i in 0..k {
        v *= i as f64 + 0.5;
    }
    v
}

/// Small-`t` expansion of `∫_{ℝ^r} g(y) e^{-mc|y|²/t} dy`, exact, with
/// exponents `r/2 + j` for integer `j ≥ 0`, truncated below `t^{trunc2/2}`.
pub fn gaussian_stratum_expansion(
    integrand: &StratumIntegrand,
    m: u32,
    trunc2: i32,
) -> Result<HalfPowerSeries> {
    if m == 0 {
        return Err(domain("m must be positive"));
    }
    let base2 = integrand.r as i32;
    let mut out = HalfPowerSeries::zero(base2, trunc2.max(base2));
    let s = m as f64 * integrand.c;
    for term in &integrand.poly {
        if term.powers.iter().any(|p| p % 2 == 1) {
            continue;
        }
        let half: u32 = term.powers.iter().map(|p| p / 2).sum();
        let e2 = 2 * half as i32 + base2;
        if e2 >= trunc2 {
            continue;
        }
        let moments: f64 = term.powers.iter().map(|p| gamma_half(p / 2)).product();
        // (t/s)^{|α| + r/2}
        let coeff = term.coeff * moments * libm::pow(s, -(e2 as f64) / 2.0);
        out = out.add(&HalfPowerSeries::monomial(coeff, e2, trunc2));
    }
    Ok(out)
}

/// Adaptive nested quadrature of the same integral over the ball of radius
/// `10 √(t/(mc))`, outside of which the weight is below `e^{-100}`.
pub fn stratum_quadrature(integrand: &StratumIntegrand, m: u32, t: f64, rel_tol: f64) -> Result<Integral> {
    if !(t > 0.0) || m == 0 {
        return Err(domain("stratum quadrature needs t > 0 and m > 0"));
    }
    if integrand.r > 3 {
        return Err(domain("stratum quadrature supports r <= 3"));
    }
    let s = m as f64 * integrand.c / t;
    let radius = 10.0 / libm::sqrt(s);
    // |g| on the ball, times the Gaussian mass per remaining coordinate, sets
    // an absolute floor for slices near the rim.
    let g_max: f64 = integrand
        .poly
        .iter()
        .map(|t| libm::fabs(t.coeff) * libm::pow(radius.max(1.0), t.powers.iter().sum::<u32>() as f64))
        .sum();
    let nested = Nested {
        integrand,
        s,
        radius,
        rel_tol,
        abs_floor: rel_tol * g_max,
        failure: RefCell::new(None),
        error: RefCell::new(0.0),
    };
    let value = nested.level(0, 0.0, [0.0; 3]);
    if let Some(e) = nested.failure.into_inner() {
        return Err(e);
    }
    Ok(Integral { value, error: nested.error.into_inner(), subdivisions: 0 })
}

struct Nested<'a> {
    integrand: &'a StratumIntegrand,
    s: f64,
    radius: f64,
    rel_tol: f64,
    abs_floor: f64,
    /// First inner failure; the enclosing integrals see NaN after it.
    failure: RefCell<Option<Error>>,
    error: RefCell<f64>,
}

impl Nested<'_> {
    /// Integrate coordinate `i` over the chord of the ball left by `y[..i]`.
    fn level(&self, i: usize, used: f64, y: [f64; 3]) -> f64 {
        let r = self.integrand.r;
        let half = libm::sqrt((self.radius * self.radius - used).max(0.0));
        if half == 0.0 {
            return 0.0;
        }
        let f = |x: f64| {
            let mut yy = y;
            yy[i] = x;
            if i + 1 == r {
                let q: f64 = yy[..r].iter().map(|v| v * v).sum();
                self.integrand.eval_poly(&yy[..r]) * libm::exp(-self.s * q)
            } else {
                self.level(i + 1, used + x * x, yy)
            }
        };
        let mass = libm::pow(PI / self.s, (r - i) as f64 / 2.0);
        match integrate(f, -half, half, 4, self.abs_floor * mass, self.rel_tol, 400) {
            Ok(v) => {
                *self.error.borrow_mut() += v.error;
                v.value
            }
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }
}

/// `C m^n e^{-ε m d²}`.
pub fn stratum_suppression_envelope(m: u32, d: f64, constant: f64, eps: f64, n: i32) -> f64 {
    let m = m as f64;
    constant * libm::pow(m, n as f64) * libm::exp(-eps * m * d * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mono(coeff: f64, powers: &[u32]) -> StratumMonomial {
        StratumMonomial { coeff, powers: powers.to_vec() }
    }

    #[test]
    fn single_gaussians() {
        let m = 7;
        let one = StratumIntegrand::new(1, vec![mono(1.0, &[0])], 1.0).unwrap();
        let s = gaussian_stratum_expansion(&one, m, 9).unwrap();
        assert_eq!(s.base2(), 1);
        assert!((s.coeff(0.5).unwrap() - libm::sqrt(PI / 7.0)).abs() < 1e-15);
        let sq = StratumIntegrand::new(1, vec![mono(1.0, &[2])], 1.0).unwrap();
        let s = gaussian_stratum_expansion(&sq, m, 9).unwrap();
        assert!((s.coeff(1.5).unwrap() - libm::sqrt(PI) / 2.0 * libm::pow(7.0, -1.5)).abs() < 1e-15);
        assert_eq!(s.coeff(0.5).unwrap(), 0.0);
        let plane = StratumIntegrand::new(2, vec![mono(1.0, &[0, 0])], 1.0).unwrap();
        let s = gaussian_stratum_expansion(&plane, m, 9).unwrap();
        assert!((s.coeff(1.0).unwrap() - PI / 7.0).abs() < 1e-15);
    }

    #[test]
    fn odd_monomials_vanish() {
        let g = StratumIntegrand::new(2, vec![mono(3.0, &[1, 2]), mono(1.0, &[3, 0])], 2.0).unwrap();
        let s = gaussian_stratum_expansion(&g, 5, 12).unwrap();
        assert!(s.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let g = StratumIntegrand::new(
            3,
            vec![mono(1.0, &[0, 0, 0]), mono(-0.5, &[2, 0, 2]), mono(0.3, &[1, 0, 0])],
            1.5,
        )
        .unwrap();
        let t = 0.2;
        let s = gaussian_stratum_expansion(&g, 4, 20).unwrap();
        let q = stratum_quadrature(&g, 4, t, 1e-11).unwrap();
        assert!((q.value - s.eval(t)).abs() < 1e-8 * s.eval(t).abs(), "{q:?} {}", s.eval(t));
    }

    #[test]
    fn envelope_values() {
        assert_eq!(stratum_suppression_envelope(9, 0.0, 2.0, 0.3, 2), 162.0);
        let (m, eps, n) = (16u32, 0.5, 1);
        let d = libm::sqrt(libm::log(16.0) / (eps * m as f64));
        assert!((stratum_suppression_envelope(m, d, 3.0, eps, n) - 3.0).abs() < 1e-12);
    }
}
