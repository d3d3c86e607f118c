//! Truncated Laurent series in half-integer powers of `t`.
//!
//! Every small-time expansion in the crate is carried by [`HalfPowerSeries`].
//! Exponents are stored doubled, so `t^{-3/2}` has key `-3` and `t^2` has key
//! `4`. A series knows its lowest exponent and the first exponent it does not
//! represent; arithmetic propagates that truncation order.

mod fit;

pub use fit::{fit_half_powers, FitConfig, HalfPowerFit, IllConditioned};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::Neg;

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Coefficient ring for series: `f64` by default, `BigRational` for exact checks.
pub trait Coeff: Clone + Debug + PartialOrd + Num + Neg<Output = Self> + FromPrimitive {
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer is representable")
    }
}

impl<T> Coeff for T where T: Clone + Debug + PartialOrd + Num + Neg<Output = T> + FromPrimitive {}

/// Exact rational coefficients.
pub type Rational = num_rational::BigRational;

/// Laurent series `Σ_j c_j t^{(base2 + j)/2}` known up to (excluding) `t^{trunc2/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPowerSeries<C = f64> {
    base2: i32,
    coeffs: Vec<C>,
}

impl<C: Coeff> HalfPowerSeries<C> {
    /// Series with lowest doubled exponent `base2` and the given coefficients
    /// on the half-integer ladder `base2, base2 + 1, ...`.
    pub fn new(base2: i32, coeffs: Vec<C>) -> Self {
        Self { base2, coeffs }
    }

    /// The zero series known on `[base2, trunc2)`.
    pub fn zero(base2: i32, trunc2: i32) -> Self {
        let len = (trunc2 - base2).max(0) as usize;
        Self { base2, coeffs: vec![C::zero(); len] }
    }

    /// The monomial `c · t^{e2/2}` known up to `trunc2`.
    pub fn monomial(c: C, e2: i32, trunc2: i32) -> Self {
        let mut s = Self::zero(e2, trunc2.max(e2));
        if let Some(x) = s.coeffs.first_mut() {
            *x = c;
        }
        s
    }

    /// Power series from integer-exponent coefficients `c_0 + c_1 t + ...`,
    /// truncated at `trunc2`.
    pub fn from_integer_powers(base: i32, coeffs: &[C], trunc2: i32) -> Self {
        let base2 = 2 * base;
        let mut s = Self::zero(base2, trunc2);
        for (i, c) in coeffs.iter().enumerate() {
            let idx = 2 * i;
            if idx < s.coeffs.len() {
                s.coeffs[idx] = c.clone();
            }
        }
        s
    }

    /// `e^{-a t}` truncated at `trunc2`.
    pub fn exp_linear(a: &C, trunc2: i32) -> Self {
        let mut s = Self::zero(0, trunc2.max(0));
        let mut term = C::one();
        let mut k: i64 = 0;
        while 2 * (k as usize) < s.coeffs.len() {
            s.coeffs[2 * k as usize] = term.clone();
            k += 1;
            term = term * (-a.clone()) / C::from_int(k);
        }
        s
    }

    pub fn base2(&self) -> i32 {
        self.base2
    }

    /// First doubled exponent not represented.
    pub fn trunc2(&self) -> i32 {
        self.base2 + self.coeffs.len() as i32
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Coefficient of `t^{e2/2}`; zero below the base, `None` at or past truncation.
    pub fn coeff2(&self, e2: i32) -> Option<C> {
        if e2 >= self.trunc2() {
            None
        } else if e2 < self.base2 {
            Some(C::zero())
        } else {
            Some(self.coeffs[(e2 - self.base2) as usize].clone())
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Drop every term at or above `trunc2`.
    pub fn truncate(mut self, trunc2: i32) -> Self {
        let len = (trunc2 - self.base2).max(0) as usize;
        self.coeffs.truncate(len);
        self
    }

    /// Multiply by `t^{e2/2}`.
    pub fn shift(mut self, e2: i32) -> Self {
        self.base2 += e2;
        self
    }

    pub fn scale(mut self, c: &C) -> Self {
        for x in &mut self.coeffs {
            *x = x.clone() * c.clone();
        }
        self
    }

    /// Remove leading exactly-zero coefficients.
    pub fn trim_leading_zeros(self) -> Self {
        self.trim_leading_by(|c| c.is_zero())
    }

    /// Remove leading coefficients for which `negligible` holds.
    pub fn trim_leading_by(mut self, negligible: impl Fn(&C) -> bool) -> Self {
        let skip = self.coeffs.iter().take_while(|c| negligible(c)).count();
        self.coeffs.drain(..skip);
        self.base2 += skip as i32;
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let base2 = self.base2.min(other.base2);
        let trunc2 = self.trunc2().min(other.trunc2());
        let mut out = Self::zero(base2, trunc2);
        for (i, slot) in out.coeffs.iter_mut().enumerate() {
            let e2 = base2 + i as i32;
            *slot = self.coeff2(e2).unwrap_or_else(C::zero) + other.coeff2(e2).unwrap_or_else(C::zero);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.clone().scale(&-C::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let base2 = self.base2 + other.base2;
        let trunc2 = (self.trunc2() + other.base2).min(other.trunc2() + self.base2);
        let mut out = Self::zero(base2, trunc2);
        let len = out.coeffs.len();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                out.coeffs[i + j] = out.coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        out
    }

    /// Multiplicative inverse. The result has base `-base` and truncation
    /// `trunc - 2·base` (both in undoubled units), i.e. the same number of
    /// known coefficients.
    pub fn inv(&self) -> Result<Self> {
        let lead = match self.coeffs.first() {
            Some(c) if !c.is_zero() => c.clone(),
            _ => return Err(Error::SingularLead),
        };
        let len = self.coeffs.len();
        let mut out: Vec<C> = Vec::with_capacity(len);
        out.push(C::one() / lead.clone());
        for k in 1..len {
            let mut acc = C::zero();
            for i in 1..=k {
                acc = acc + self.coeffs[i].clone() * out[k - i].clone();
            }
            out.push(-acc / lead.clone());
        }
        Ok(Self { base2: -self.base2, coeffs: out })
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> HalfPowerSeries<D> {
        HalfPowerSeries { base2: self.base2, coeffs: self.coeffs.iter().map(f).collect() }
    }
}

impl HalfPowerSeries<f64> {
    /// Coefficient of `t^e` for a half-integer `e`.
    pub fn coeff(&self, e: f64) -> Option<f64> {
        self.coeff2(libm::round(2.0 * e) as i32)
    }

    /// Evaluate the truncated sum at `t > 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let sqrt_t = libm::sqrt(t);
        let mut pow = libm::pow(sqrt_t, self.base2 as f64);
        let mut acc = 0.0;
        for c in &self.coeffs {
            acc += c * pow;
            pow *= sqrt_t;
        }
        acc
    }

    /// Maximum absolute coefficient difference over the common known range.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.base2.min(other.base2);
        let hi = self.trunc2().min(other.trunc2());
        (lo..hi)
            .map(|e2| libm::fabs(self.coeff2(e2).unwrap_or(0.0) - other.coeff2(e2).unwrap_or(0.0)))
            .fold(0.0, f64::max)
    }
}

/// Arithmetic operation selector for [`series_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Mul,
    Inv,
}

/// Dispatching form of the series operations.
pub fn series_arith<C: Coeff>(
    op: SeriesOp,
    a: &HalfPowerSeries<C>,
    b: Option<&HalfPowerSeries<C>>,
) -> Result<HalfPowerSeries<C>> {
    match (op, b) {
        (SeriesOp::Add, Some(b)) => Ok(a.add(b)),
        (SeriesOp::Mul, Some(b)) => Ok(a.mul(b)),
        (SeriesOp::Inv, None) => a.inv(),
        (SeriesOp::Inv, Some(_)) => Err(domain("inv takes a single operand")),
        (_, None) => Err(domain("binary operation needs two operands")),
    }
}

/// Bernoulli numbers `B_0..B_{count-1}` with the convention `B_1 = +1/2`,
/// i.e. the coefficients of `x/(1 - e^{-x}) = Σ B_k x^k / k!`.
pub fn bernoulli_plus<C: Coeff>(count: usize) -> Vec<C> {
    let mut b: Vec<C> = Vec::with_capacity(count);
    for m in 0..count {
        if m == 0 {
            b.push(C::one());
            continue;
        }
        // Σ_{k<m} C(m+1, k) B_k^- = -(m+1) B_m^-, with B^- the B_1 = -1/2 convention.
        let mut acc = C::zero();
        let mut binom = C::one();
        for (k, bk) in b.iter().enumerate() {
            let bk_minus = if k == 1 { -bk.clone() } else { bk.clone() };
            acc = acc + binom.clone() * bk_minus;
            binom = binom * C::from_int((m + 1 - k) as i64) / C::from_int(k as i64 + 1);
        }
        let bm_minus = -acc / C::from_int(m as i64 + 1);
        b.push(if m == 1 { -bm_minus } else { bm_minus });
    }
    b
}

/// Laurent expansion of `1/(1 - e^{-a t})` about `t = 0`, truncated at `trunc2`.
pub fn bose_factor(a: f64, trunc2: i32) -> Result<HalfPowerSeries<f64>> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain("bose factor needs a > 0"));
    }
    Ok(bose_factor_exact(&a, trunc2))
}

/// [`bose_factor`] over any coefficient ring; the caller guarantees `a > 0`.
pub fn bose_factor_exact<C: Coeff>(a: &C, trunc2: i32) -> HalfPowerSeries<C> {
    // 1/(1-e^{-at}) = Σ_k B_k^+ a^{k-1} t^{k-1} / k!
    let len = (trunc2 + 2).max(0) as usize;
    let count = len.div_ceil(2);
    let bern: Vec<C> = bernoulli_plus(count);
    let mut ints = Vec::with_capacity(count);
    let mut apow = C::one() / a.clone();
    let mut fact = C::one();
    for (k, bk) in bern.iter().enumerate() {
        if k > 0 {
            fact = fact * C::from_int(k as i64);
        }
        ints.push(bk.clone() * apow.clone() / fact.clone());
        apow = apow * a.clone();
    }
    HalfPowerSeries::from_integer_powers(-1, &ints, trunc2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn mul_polynomials() {
        // (t^{-1} + 1) * t = 1 + t
        let a = HalfPowerSeries::new(-2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let b = HalfPowerSeries::monomial(1.0, 2, 8);
        let p = series_arith(SeriesOp::Mul, &a, Some(&b)).unwrap();
        assert_eq!(p.base2(), 0);
        assert_eq!(p.coeff(0.0), Some(1.0));
        assert_eq!(p.coeff(1.0), Some(1.0));
        assert_eq!(p.coeff(0.5), Some(0.0));
        assert_eq!(p.coeff(1.5), Some(0.0));
    }

    #[test]
    fn inv_geometric() {
        let a = HalfPowerSeries::<Rational>::from_integer_powers(0, &[rat(1, 1), rat(1, 1)], 7);
        let inv = series_arith(SeriesOp::Inv, &a, None).unwrap();
        assert_eq!(inv.trunc2(), 7);
        let want = [1, 0, -1, 0, 1, 0, -1];
        for (e2, w) in want.iter().enumerate() {
            assert_eq!(inv.coeff2(e2 as i32).unwrap(), rat(*w, 1));
        }
    }

    #[test]
    fn half_powers_add_exponents() {
        let a = HalfPowerSeries::monomial(1.0, 1, 6);
        let p = a.mul(&a);
        assert_eq!(p.base2(), 2);
        assert_eq!(p.coeff(1.0), Some(1.0));
    }

    #[test]
    fn inv_truncation_rule() {
        // base -1 (t^{-1}), trunc 2 -> inverse base 1, trunc 2 - 2(-1) = 4
        let a = HalfPowerSeries::new(-2, vec![2.0, 0.0, 1.0, 0.0, 3.0, 0.0]);
        let inv = a.inv().unwrap();
        assert_eq!(inv.base2(), 2);
        assert_eq!(inv.trunc2(), a.trunc2() - 2 * a.base2());
    }

    #[test]
    fn inv_rejects_zero_lead() {
        let a = HalfPowerSeries::new(0, vec![0.0, 1.0]);
        assert_eq!(a.inv(), Err(Error::SingularLead));
        let empty = HalfPowerSeries::<f64>::zero(0, 0);
        assert_eq!(empty.inv(), Err(Error::SingularLead));
    }

    #[test]
    fn arity_mismatch() {
        let a = HalfPowerSeries::new(0, vec![1.0]);
        assert!(series_arith(SeriesOp::Add, &a, None).is_err());
        assert!(series_arith(SeriesOp::Inv, &a, Some(&a)).is_err());
    }

    #[test]
    fn bernoulli_values() {
        let b: Vec<Rational> = bernoulli_plus(9);
        let want = [
            rat(1, 1),
            rat(1, 2),
            rat(1, 6),
            rat(0, 1),
            rat(-1, 30),
            rat(0, 1),
            rat(1, 42),
            rat(0, 1),
            rat(-1, 30),
        ];
        assert_eq!(b, want);
    }

    #[test]
    fn bose_unit_rate() {
        // Oracle: series division of t/(1 - e^{-t}) = 1 + t/2 + t^2/12 - t^4/720
        let s = bose_factor(1.0, 8).unwrap();
        let want = [(-1.0, 1.0), (0.0, 0.5), (1.0, 1.0 / 12.0), (2.0, 0.0), (3.0, -1.0 / 720.0)];
        for (e, w) in want {
            assert!((s.coeff(e).unwrap() - w).abs() < 1e-15, "t^{e}");
        }
        for e2 in [-1, 1, 3, 5, 7] {
            assert_eq!(s.coeff2(e2), Some(0.0));
        }
        assert_eq!(s.coeff2(8), None);
    }

    #[test]
    fn bose_rate_two() {
        let s = bose_factor(2.0, 4).unwrap();
        assert!((s.coeff(-1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.coeff(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.coeff(1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn bose_domain() {
        assert!(bose_factor(0.0, 4).is_err());
        assert!(bose_factor(-1.0, 4).is_err());
        for a in [0.3, 1.7, 9.0] {
            assert!((bose_factor(a, 2).unwrap().coeff(-1.0).unwrap() - 1.0 / a).abs() < 1e-15);
        }
    }

    #[test]
    fn bose_against_direct_division() {
        // 1/(1 - e^{-at}) computed by inverting the series of 1 - e^{-at}.
        let a = rat(3, 2);
        let one_minus = HalfPowerSeries::monomial(Rational::from_int(1), 0, 14)
            .sub(&HalfPowerSeries::exp_linear(&a, 14))
            .trim_leading_zeros();
        let direct = one_minus.inv().unwrap();
        let bose = bose_factor_exact(&a, direct.trunc2());
        assert_eq!(direct, bose);
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        let a = HalfPowerSeries::new(-1, vec![rat(1, 3), rat(2, 7), rat(-5, 11)]);
        let b = HalfPowerSeries::new(0, vec![rat(3, 1), rat(0, 1), rat(1, 13)]);
        let p = a.mul(&b);
        assert_eq!(p.coeff2(-1).unwrap(), rat(1, 1));
        assert_eq!(p.coeff2(0).unwrap(), rat(6, 7));
        let back = p.mul(&b.inv().unwrap());
        for e2 in back.base2()..back.trunc2() {
            assert_eq!(back.coeff2(e2), a.coeff2(e2));
        }
    }

    #[test]
    fn eval_matches_sum() {
        let s = HalfPowerSeries::new(-2, vec![2.0, 0.0, 3.0, 5.0]);
        let t: f64 = 0.04;
        let want = 2.0 / t + 3.0 + 5.0 * t.sqrt();
        assert!((s.eval(t) - want).abs() < 1e-12);
    }
}
