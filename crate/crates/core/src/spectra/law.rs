//! Quadratic growth laws `λ(k) = αk² + βk + γ` with multiplicity
//! `d(k) = κ λ′(k)`, and their heat sums over `k ≥ k0`.
//!
//! The sum `Σ_{k≥k0} d(k) e^{-tλ(k)}` is evaluated with Euler–Maclaurin.
//! Writing `k = k0 + x` and `h(x) = e^{-t(λ′x + αx²)}`, the summand is
//! `-(κ/t) e^{-tλ(k0)} h′(x)`, so the whole sum reduces to
//! `κ e^{-tλ(k0)} (1 + Σ_{r≥1} B⁻_r [x^r]h) / t`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::series::{bernoulli_plus, HalfPowerSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticLaw {
    pub q: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
}

/// Lines `k_first..=k_max` of a law are listed in the table; `k > k_max` are omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawSegment {
    pub law: QuadraticLaw,
    pub k_first: u64,
    pub k_max: u64,
}

/// Highest Euler–Maclaurin order used, as the index of the last Bernoulli number.
const EM_ORDER: usize = 16;

/// Euler–Maclaurin from `k0` is used when `t·λ′(k0)` and `t·α` are below these.
const EM_SLOPE_LIMIT: f64 = 0.25;
const EM_CURVATURE_LIMIT: f64 = 0.05;

/// `B_0..B_16` with `B_1 = -1/2`.
const BERNOULLI_MINUS: [f64; EM_ORDER + 1] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
];

impl QuadraticLaw {
    pub fn lambda(&self, k: f64) -> f64 {
        (self.alpha * k + self.beta) * k + self.gamma
    }

    /// `λ′(k) = 2αk + β`.
    pub fn slope(&self, k: f64) -> f64 {
        2.0 * self.alpha * k + self.beta
    }

    pub fn mult(&self, k: f64) -> f64 {
        self.kappa * self.slope(k)
    }

    pub(crate) fn validate(&self, k_first: u64) -> Result<()> {
        let k = k_first as f64;
        let finite = [self.alpha, self.beta, self.gamma, self.kappa].iter().all(|v| v.is_finite());
        if !finite || !(self.alpha > 0.0) || !(self.kappa > 0.0) {
            return Err(domain("growth law needs finite coefficients with alpha, kappa > 0"));
        }
        if !(self.slope(k) > 0.0) || !(self.lambda(k) >= 0.0) {
            return Err(domain("growth law must be nonnegative and increasing from k_first"));
        }
        Ok(())
    }

    /// Certified bound on `Σ_{k≥k0} d(k) e^{-tλ(k)}`: the summand is unimodal,
    /// so the sum is at most its integral plus its maximum.
    pub fn sum_bound_from(&self, k0: u64, t: f64) -> f64 {
        let k = k0 as f64;
        let peak = self.slope(k).max(libm::sqrt(2.0 * self.alpha / t));
        self.kappa * libm::exp(-t * self.lambda(k)) * (1.0 / t + peak)
    }

    /// `Σ_{k≥k0} d(k) e^{-tλ(k)}` with an error estimate.
    pub fn sum_from(&self, k0: u64, t: f64) -> (f64, f64) {
        let mut k = k0;
        let mut direct = 0.0;
        loop {
            let kf = k as f64;
            let slope = self.slope(kf);
            if t * slope <= EM_SLOPE_LIMIT && t * self.alpha <= EM_CURVATURE_LIMIT {
                let (v, e) = self.euler_maclaurin_from(k, t);
                return (direct + v, e + f64::EPSILON * direct.abs());
            }
            let bound = self.sum_bound_from(k, t);
            if bound <= 1e-17 * direct.abs() || bound < f64::MIN_POSITIVE {
                return (direct, bound + f64::EPSILON * direct.abs());
            }
            direct += self.kappa * slope * libm::exp(-t * self.lambda(kf));
            k += 1;
        }
    }

    fn euler_maclaurin_from(&self, k0: u64, t: f64) -> (f64, f64) {
        let k = k0 as f64;
        let slope = self.slope(k);
        let bern = &BERNOULLI_MINUS;
        // Taylor coefficients of h(x) = e^{-t(slope·x + αx²)}.
        let mut e = [0.0; EM_ORDER + 1];
        e[0] = 1.0;
        for r in 0..EM_ORDER {
            let prev = if r > 0 { e[r - 1] } else { 0.0 };
            e[r + 1] = -t * (slope * e[r] + 2.0 * self.alpha * prev) / (r + 1) as f64;
        }
        let mut s = 1.0;
        let mut last = 0.0;
        for r in 1..=EM_ORDER {
            let term = bern[r] * e[r];
            if term != 0.0 {
                last = term;
            }
            s += term;
        }
        let pref = self.kappa * libm::exp(-t * self.lambda(k)) / t;
        (pref * s, pref * (last.abs() + 4.0 * f64::EPSILON * s.abs()))
    }

    /// Asymptotic expansion of `Σ_{k≥k0} d(k) e^{-tλ(k)}` in powers of `t`,
    /// base `t^{-1}`, known below `t^{trunc2/2}`.
    pub fn series_from(&self, k0: u64, trunc2: i32) -> HalfPowerSeries {
        let k = k0 as f64;
        let slope = self.slope(k);
        let top = (trunc2 / 2).max(0) as usize + 1;
        let bern = bernoulli_minus_to(2 * top + 2);
        // G(t) = (1 + Σ_r B⁻_r [x^r]h)/t with [x^r]h = Σ_j (-t)^j/j! C(j, r-j) slope^{2j-r} α^{r-j}.
        let mut ints = vec![0.0; top + 1];
        ints[0] = 1.0;
        let mut fact = 1.0;
        for j in 1..=top {
            fact *= j as f64;
            let mut inner = 0.0;
            let mut binom = 1.0; // C(j, r - j) for r = j
            for r in j..=2 * j {
                let i = r - j;
                if i > 0 {
                    binom = binom * (j + 1 - i) as f64 / i as f64;
                }
                inner +=
                    bern[r] * binom * libm::pow(slope, (2 * j - r) as f64) * libm::pow(self.alpha, i as f64);
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            ints[j] = sign * inner / fact;
        }
        let g = HalfPowerSeries::from_integer_powers(-1, &ints, trunc2 + 2);
        let decay = HalfPowerSeries::exp_linear(&self.lambda(k), trunc2 + 2);
        g.mul(&decay).scale(&self.kappa).truncate(trunc2)
    }
}

fn bernoulli_minus_to(count: usize) -> Vec<f64> {
    let mut b: Vec<f64> = bernoulli_plus(count + 1);
    b[1] = -b[1];
    b
}

impl LawSegment {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.k_max < self.k_first {
            return Err(domain("law segment needs k_max >= k_first"));
        }
        self.law.validate(self.k_first)
    }

    /// Certified bound on the omitted lines `k > k_max`.
    pub fn omitted_bound(&self, t: f64) -> f64 {
        self.law.sum_bound_from(self.k_max + 1, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp1(m: f64, q: u32) -> QuadraticLaw {
        QuadraticLaw { q, alpha: 1.0, beta: m + 1.0, gamma: 0.0, kappa: 1.0 }
    }

    fn brute(law: &QuadraticLaw, k0: u64, t: f64) -> f64 {
        let mut s = 0.0;
        let mut k = k0;
        loop {
            let term = law.mult(k as f64) * libm::exp(-t * law.lambda(k as f64));
            s += term;
            if term <= 1e-20 * s && t * law.slope(k as f64) > 1.0 {
                return s;
            }
            k += 1;
        }
    }

    #[test]
    fn euler_maclaurin_matches_brute_force() {
        let law = cp1(10.0, 1);
        for &t in &[1e-4, 3e-3, 0.02, 0.2, 1.0, 3.0] {
            let (v, e) = law.sum_from(1, t);
            let b = brute(&law, 1, t);
            assert!((v - b).abs() <= 1e-12 * b.abs() + e, "t={t} {v} {b} {e}");
            assert!(e <= 1e-11 * b.abs(), "t={t} err {e}");
        }
    }

    #[test]
    fn bound_dominates_sum() {
        let law = cp1(4.0, 1);
        for &t in &[1e-3, 0.1, 1.0, 5.0] {
            for k0 in [1, 10, 100] {
                assert!(brute(&law, k0, t) <= law.sum_bound_from(k0, t));
            }
        }
    }

    #[test]
    fn series_leading_terms_cp1() {
        // Σ_{k≥1} (2k+m+1) e^{-tk(k+m+1)} = 1/t - (m+1)/2 - 1/6 + O(t).
        let m = 10.0;
        let s = cp1(m, 1).series_from(1, 4);
        assert!((s.coeff(-1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((s.coeff(0.0).unwrap() + (m + 1.0) / 2.0 + 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn series_matches_sum_at_small_t() {
        let law = cp1(3.0, 0);
        let s = law.series_from(0, 10);
        for &t in &[1e-3, 5e-3] {
            let (v, _) = law.sum_from(0, t);
            assert!((s.eval(t) - v).abs() < 1e-8 * v, "t={t}");
        }
    }
}
