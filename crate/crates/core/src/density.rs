//! Model heat-kernel densities of a constant Levi form.
//!
//! Everything is expressed in the adapted basis where the Levi endomorphism
//! is diagonal with eigenvalues `a_1..a_n`. A wedge basis element is indexed
//! by a subset `J` of `{1..n}`, stored as a bitmask.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::series::{bose_factor_exact, Coeff, HalfPowerSeries};

/// Eigenvalues of the Levi form on `T^{1,0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviSpectrum {
    eigenvalues: Vec<f64>,
}

impl LeviSpectrum {
    /// Entries must be finite and nonnegative. `n` is the number of entries.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(domain("Levi spectrum needs n >= 1"));
        }
        if eigenvalues.len() > 16 {
            return Err(domain("Levi spectrum supports n <= 16"));
        }
        if eigenvalues.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(domain("Levi eigenvalues must be finite and >= 0"));
        }
        Ok(Self { eigenvalues })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn det(&self) -> f64 {
        self.eigenvalues.iter().product()
    }

    pub fn is_strongly_pseudoconvex(&self) -> bool {
        self.eigenvalues.iter().all(|&a| a > 0.0)
    }

    fn require_positive(&self) -> Result<()> {
        if self.is_strongly_pseudoconvex() {
            Ok(())
        } else {
            Err(domain("identity requires all Levi eigenvalues > 0"))
        }
    }
}

/// Prefactor `(2π)^{-n-1}` of the density on the CR manifold.
pub fn cr_density_normalization(n: usize) -> f64 {
    libm::pow(TAU, -(n as f64) - 1.0)
}

/// Prefactor `(2π)^{-n}` of the super-traced density and of `R_t`; equals
/// `2π` times [`cr_density_normalization`].
pub fn supertrace_normalization(n: usize) -> f64 {
    libm::pow(TAU, -(n as f64))
}

/// Density values on the wedge basis, one series per subset bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeDiagonalDensity<C = f64> {
    n: usize,
    entries: Vec<HalfPowerSeries<C>>,
}

impl<C: Coeff> WedgeDiagonalDensity<C> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry for the subset whose members are the set bits of `mask`.
    pub fn get(&self, mask: usize) -> &HalfPowerSeries<C> {
        &self.entries[mask]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &HalfPowerSeries<C>)> {
        self.entries.iter().enumerate()
    }

    /// `Σ_J (-1)^{|J|} |J| · entry_J`.
    pub fn n_supertrace(&self) -> HalfPowerSeries<C> {
        let mut acc: Option<HalfPowerSeries<C>> = None;
        for (mask, s) in self.iter() {
            let w = supertrace_weight::<C>(mask);
            if w.is_zero() {
                continue;
            }
            let term = s.clone().scale(&w);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        acc.unwrap_or_else(|| self.entries[0].clone().scale(&C::zero()))
    }
}

fn supertrace_weight<C: Coeff>(mask: usize) -> C {
    let k = mask.count_ones() as i64;
    let sign = if k % 2 == 0 { 1 } else { -1 };
    C::from_int(sign * k)
}

/// `a · 1/(1 - e^{-a t})`, or `1/t` when `a = 0`, known through `trunc2`.
fn levi_factor<C: Coeff>(a: &C, trunc2: i32) -> HalfPowerSeries<C> {
    if a.is_zero() {
        HalfPowerSeries::monomial(C::one(), -2, trunc2)
    } else {
        bose_factor_exact(a, trunc2).scale(a)
    }
}

/// `Π_j a_j/(1 - e^{-a_j t})` through `trunc2`; base `t^{-n}`.
fn levi_product<C: Coeff>(eigs: &[C], trunc2: i32) -> HalfPowerSeries<C> {
    let n = eigs.len() as i32;
    // Each of the other n-1 factors starts at t^{-1}.
    let per_factor = trunc2 + 2 * (n - 1);
    let mut prod = HalfPowerSeries::monomial(C::one(), 0, per_factor + 2 * n);
    for a in eigs {
        prod = prod.mul(&levi_factor(a, per_factor));
    }
    prod.truncate(trunc2)
}

fn subset_rate<C: Coeff>(eigs: &[C], mask: usize) -> C {
    let mut s = C::zero();
    for (j, a) in eigs.iter().enumerate() {
        if mask >> j & 1 == 1 {
            s = s + a.clone();
        }
    }
    s
}

/// Wedge-diagonal density `scale · Π_j a_j/(1-e^{-a_j t}) · e^{-t Σ_{j∈J} a_j}`
/// over any coefficient ring. Zero eigenvalues contribute `1/t`.
pub fn model_density_scaled<C: Coeff>(eigs: &[C], scale: &C, trunc2: i32) -> WedgeDiagonalDensity<C> {
    let n = eigs.len();
    let prod = levi_product(eigs, trunc2 + 2 * n as i32).scale(scale);
    let entries = (0..1usize << n)
        .map(|mask| {
            let e = HalfPowerSeries::exp_linear(&subset_rate(eigs, mask), trunc2 + 2 * n as i32);
            prod.mul(&e).truncate(trunc2)
        })
        .collect();
    WedgeDiagonalDensity { n, entries }
}

/// The model density times `rank_e · (2π)^{-n-1}`, known below `t^{trunc2/2}`.
pub fn model_density_coeffs(levi: &LeviSpectrum, rank_e: u32, trunc2: i32) -> Result<WedgeDiagonalDensity> {
    let n = levi.n();
    if trunc2 < -2 * n as i32 {
        return Err(domain("truncation below the leading order t^{-n}"));
    }
    let scale = rank_e as f64 * cr_density_normalization(n);
    Ok(model_density_scaled(levi.eigenvalues(), &scale, trunc2))
}

/// Brute-force subset sum `scale · Σ_J (-1)^{|J|}|J| Π a_j/(1-e^{-a_j t}) e^{-t Σ_J a_j}`.
///
/// The `t^{-n}..t^{-2}` terms cancel; `negligible(c, magnitude)` decides when
/// a leading coefficient has cancelled, given the sum of absolute values of
/// the contributions to it.
pub fn supertrace_scaled<C: Coeff>(
    eigs: &[C],
    scale: &C,
    trunc2: i32,
    negligible: impl Fn(&C, &C) -> bool,
) -> HalfPowerSeries<C> {
    let n = eigs.len();
    let work = trunc2 + 2 * n as i32;
    let prod = levi_product(eigs, work).scale(scale);
    let mut sum = HalfPowerSeries::zero(prod.base2(), work);
    let mut mag = HalfPowerSeries::zero(prod.base2(), work);
    for mask in 1..1usize << n {
        let w = supertrace_weight::<C>(mask);
        let e = HalfPowerSeries::exp_linear(&subset_rate(eigs, mask), work);
        let term = prod.mul(&e).scale(&w);
        mag = mag.add(&term.map(abs));
        sum = sum.add(&term);
    }
    let sum = sum.truncate(trunc2);
    let mag = mag.truncate(trunc2);
    let lead = sum.coeffs().iter().zip(mag.coeffs()).take_while(|(c, m)| negligible(c, m)).count();
    HalfPowerSeries::new(sum.base2() + lead as i32, sum.coeffs()[lead..].to_vec())
}

fn abs<C: Coeff>(c: &C) -> C {
    if *c < C::zero() {
        -c.clone()
    } else {
        c.clone()
    }
}

/// `(2π)^{-n} det · STr[N e^{tγ}] / det(1 - e^{-tR})` as a series starting at `t^{-1}`.
pub fn supertrace_n_density(levi: &LeviSpectrum, trunc2: i32) -> Result<HalfPowerSeries> {
    levi.require_positive()?;
    let n = levi.n();
    let scale = supertrace_normalization(n);
    Ok(supertrace_scaled(levi.eigenvalues(), &scale, trunc2, |c, m| c.abs() <= 64.0 * f64::EPSILON * m))
}

/// `R_t = det(R/2π) Σ_j 1/(1 - e^{a_j t})`.
pub fn rt_density(levi: &LeviSpectrum, t: f64) -> Result<f64> {
    levi.require_positive()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain("R_t needs t > 0"));
    }
    let sum: f64 = levi.eigenvalues().iter().map(|&a| 1.0 / -libm::expm1(a * t)).sum();
    Ok(levi.det() * supertrace_normalization(levi.n()) * sum)
}

/// Small-t expansion of `R_t` with any coefficient ring: `scale · det · Σ_j (1 - 1/(1-e^{-a_j t}))`.
pub fn rt_series_scaled<C: Coeff>(eigs: &[C], scale: &C, trunc2: i32) -> HalfPowerSeries<C> {
    let det = eigs.iter().fold(C::one(), |p, a| p * a.clone());
    let one = HalfPowerSeries::monomial(C::one(), 0, trunc2);
    let mut acc = HalfPowerSeries::zero(-2, trunc2);
    for a in eigs {
        acc = acc.add(&one.sub(&bose_factor_exact(a, trunc2)));
    }
    acc.scale(&(scale.clone() * det))
}

pub fn rt_series(levi: &LeviSpectrum, trunc2: i32) -> Result<HalfPowerSeries> {
    levi.require_positive()?;
    let scale = supertrace_normalization(levi.n());
    Ok(rt_series_scaled(levi.eigenvalues(), &scale, trunc2))
}

/// The two nonvanishing singular coefficients `(Â_{-1}, Â_0)` of `R_t`.
pub fn hat_a_coeffs(levi: &LeviSpectrum) -> Result<(f64, f64)> {
    levi.require_positive()?;
    let n = levi.n();
    let d = levi.det() * supertrace_normalization(n);
    let inv_sum: f64 = levi.eigenvalues().iter().map(|a| 1.0 / a).sum();
    Ok((-d * inv_sum, 0.5 * n as f64 * d))
}
