//! Spectral data of a Fourier component of the Kohn Laplacian.
//!
//! A [`SpectrumTable`] lists eigenvalue lines by form degree. Its tail policy
//! states what happens past the listed lines: nothing (finite spectrum), a
//! quadratic growth law per degree with a certified bound, or nothing known.

pub mod galerkin;
mod law;

pub use law::{LawSegment, QuadraticLaw};

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::density::LeviSpectrum;
use crate::error::{domain, Error, Result};
use crate::mellin::DecayCertificate;
use crate::series::HalfPowerSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub q: u32,
    pub lambda: f64,
    pub mult: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TailPolicy {
    /// The listed lines are the whole spectrum.
    Finite,
    /// Lines beyond each segment's `k_max` follow its law.
    WeylTail(Vec<LawSegment>),
    /// The table is a truncation with unknown continuation.
    Uncertified,
}

/// A value together with a bound on what the omitted spectrum could add.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatTrace {
    pub value: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    n: u32,
    m: i64,
    lines: Vec<SpectrumLine>,
    tail: TailPolicy,
    /// Lines not accounted for by any law segment.
    extras: Vec<SpectrumLine>,
}

fn line_order(a: &SpectrumLine, b: &SpectrumLine) -> Ordering {
    a.q.cmp(&b.q).then(a.lambda.total_cmp(&b.lambda))
}

/// `(-1)^q q`.
pub fn n_weight(q: u32) -> f64 {
    let w = q as f64;
    if q.is_multiple_of(2) {
        w
    } else {
        -w
    }
}

impl SpectrumTable {
    /// Validates, sorts by `(q, λ)` and merges equal `(q, λ)` pairs.
    pub fn new(n: u32, m: i64, mut lines: Vec<SpectrumLine>, tail: TailPolicy) -> Result<Self> {
        for (index, l) in lines.iter().enumerate() {
            let reason = if !(l.lambda >= 0.0) || !l.lambda.is_finite() {
                Some("eigenvalue must be finite and >= 0")
            } else if l.mult == 0 {
                Some("multiplicity must be positive")
            } else if l.q > n {
                Some("degree outside [0, n]")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::InvalidLine { index, reason: reason.into() });
            }
        }
        lines.sort_by(line_order);
        let mut merged: Vec<SpectrumLine> = Vec::with_capacity(lines.len());
        for l in lines {
            match merged.last_mut() {
                Some(last) if line_order(last, &l) == Ordering::Equal => last.mult += l.mult,
                _ => merged.push(l),
            }
        }
        let extras = match &tail {
            TailPolicy::WeylTail(segs) => {
                for s in segs {
                    s.validate()?;
                    if s.law.q > n {
                        return Err(domain("law segment degree outside [0, n]"));
                    }
                }
                subtract_laws(&merged, segs)?
            }
            _ => merged.clone(),
        };
        Ok(Self { n, m, lines: merged, tail, extras })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn lines(&self) -> &[SpectrumLine] {
        &self.lines
    }

    pub fn tail(&self) -> &TailPolicy {
        &self.tail
    }

    /// Listed lines not accounted for by any law segment.
    pub fn extras(&self) -> &[SpectrumLine] {
        &self.extras
    }

    fn segments(&self) -> &[LawSegment] {
        match &self.tail {
            TailPolicy::WeylTail(s) => s,
            _ => &[],
        }
    }

    /// Listed-line sum `Σ w(q) mult e^{-λt}` with the certified bound on omitted lines.
    pub fn trace_weighted(&self, t: f64, weight: impl Fn(u32) -> f64, nonzero_only: bool) -> HeatTrace {
        let mut value = 0.0;
        for l in &self.lines {
            if nonzero_only && l.lambda == 0.0 {
                continue;
            }
            let w = weight(l.q);
            if w != 0.0 {
                value += w * l.mult as f64 * libm::exp(-t * l.lambda);
            }
        }
        let mut tail_bound: f64 =
            self.segments().iter().map(|s| weight(s.law.q).abs() * s.omitted_bound(t)).sum();
        if matches!(self.tail, TailPolicy::Uncertified) {
            tail_bound = f64::INFINITY;
        }
        HeatTrace { value, tail_bound }
    }

    /// Heat sum over the full spectrum: listed extras plus each law summed to
    /// infinity. `tail_bound` is the Euler–Maclaurin error estimate.
    pub fn completed_weighted(
        &self,
        t: f64,
        weight: impl Fn(u32) -> f64,
        nonzero_only: bool,
    ) -> Result<HeatTrace> {
        if matches!(self.tail, TailPolicy::Uncertified) {
            return Err(Error::UnsupportedTail);
        }
        let mut value = 0.0;
        let mut err = 0.0;
        for l in &self.extras {
            if nonzero_only && l.lambda == 0.0 {
                continue;
            }
            value += weight(l.q) * l.mult as f64 * libm::exp(-t * l.lambda);
        }
        for s in self.segments() {
            let w = weight(s.law.q);
            if w == 0.0 {
                continue;
            }
            let (v, e) = s.law.sum_from(s.k_first, t);
            let mut v = v;
            let k0 = s.k_first as f64;
            if nonzero_only && s.law.lambda(k0) == 0.0 {
                v -= s.law.mult(k0);
            }
            value += w * v;
            err += w.abs() * e;
        }
        Ok(HeatTrace { value, tail_bound: err })
    }

    /// `STr[N e^{-t□}]`, or `STr[N e^{-t□} Π⊥]` when `nonzero_only`.
    pub fn heat_supertrace_n(&self, t: f64, nonzero_only: bool) -> HeatTrace {
        self.trace_weighted(t, n_weight, nonzero_only)
    }

    /// `Tr e^{-t□}` restricted to degree `q`.
    pub fn heat_trace_degree(&self, q: u32, t: f64) -> HeatTrace {
        self.trace_weighted(t, |p| if p == q { 1.0 } else { 0.0 }, false)
    }

    /// Small-t expansion of the weighted heat sum, base `t^{-1}` when a law
    /// is present, known below `t^{trunc2/2}`.
    pub fn expansion_weighted(
        &self,
        weight: impl Fn(u32) -> f64,
        nonzero_only: bool,
        trunc2: i32,
    ) -> Result<HalfPowerSeries> {
        if matches!(self.tail, TailPolicy::Uncertified) {
            return Err(Error::UnsupportedTail);
        }
        let mut acc = HalfPowerSeries::zero(-2, trunc2);
        for l in &self.extras {
            if nonzero_only && l.lambda == 0.0 {
                continue;
            }
            let w = weight(l.q) * l.mult as f64;
            if w != 0.0 {
                acc = acc.add(&HalfPowerSeries::exp_linear(&l.lambda, trunc2).scale(&w));
            }
        }
        for s in self.segments() {
            let w = weight(s.law.q);
            if w == 0.0 {
                continue;
            }
            let mut series = s.law.series_from(s.k_first, trunc2);
            let k0 = s.k_first as f64;
            if nonzero_only && s.law.lambda(k0) == 0.0 {
                let kernel = HalfPowerSeries::monomial(s.law.mult(k0), 0, trunc2);
                series = series.sub(&kernel);
            }
            acc = acc.add(&series.scale(&w));
        }
        Ok(acc)
    }

    /// `Σ_{λ=0} (-1)^q q mult`, i.e. `STr[N Π]`.
    pub fn kernel_supertrace_n(&self) -> f64 {
        self.lines.iter().filter(|l| l.lambda == 0.0).map(|l| n_weight(l.q) * l.mult as f64).sum()
    }

    /// Smallest nonzero eigenvalue in degree `q`.
    pub fn spectral_gap(&self, q: u32) -> Result<f64> {
        let listed = self.lines.iter().filter(|l| l.q == q && l.lambda > 0.0).map(|l| l.lambda);
        let laws = self.segments().iter().filter(|s| s.law.q == q).map(|s| {
            let k = s.k_first as f64;
            let l0 = s.law.lambda(k);
            if l0 > 0.0 {
                l0
            } else {
                s.law.lambda(k + 1.0)
            }
        });
        listed.chain(laws).min_by(f64::total_cmp).ok_or(Error::EmptyDegree(q as usize))
    }

    /// Smallest nonzero eigenvalue over degrees with nonzero N-weight.
    pub fn weighted_gap(&self) -> Option<f64> {
        (1..=self.n).filter_map(|q| self.spectral_gap(q).ok()).min_by(f64::total_cmp)
    }

    /// Decay certificate for `STr[N e^{-t□} Π⊥]` valid for `t ≥ delta`,
    /// with rate `λ_min/2`. Returns `None` when there is no nonzero line.
    pub fn supertrace_decay(&self, delta: f64) -> Result<Option<DecayCertificate>> {
        let Some(gap) = self.weighted_gap() else {
            return Ok(None);
        };
        let rate = gap / 2.0;
        // |STr(t)| ≤ Σ q mult e^{-λt/2} e^{-λt/2} ≤ e^{-rate·t} Σ q mult e^{-λδ/2}.
        let abs_weight = |q: u32| q as f64;
        let h = match self.tail {
            TailPolicy::Finite => self.trace_weighted(delta / 2.0, abs_weight, true),
            _ => self.completed_weighted(delta / 2.0, abs_weight, true)?,
        };
        Ok(Some(DecayCertificate { constant: h.value + h.tail_bound, rate }))
    }
}

fn subtract_laws(lines: &[SpectrumLine], segs: &[LawSegment]) -> Result<Vec<SpectrumLine>> {
    let mut rest: Vec<SpectrumLine> = lines.to_vec();
    for s in segs {
        for k in s.k_first..=s.k_max {
            let kf = k as f64;
            let probe = SpectrumLine { q: s.law.q, lambda: s.law.lambda(kf), mult: 0 };
            let want = libm::round(s.law.mult(kf));
            let found = rest.binary_search_by(|l| line_order(l, &probe));
            match found {
                Ok(i) if rest[i].mult as f64 >= want => rest[i].mult -= want as u64,
                _ => {
                    return Err(Error::InvalidLine {
                        index: k as usize,
                        reason: format!(
                            "law line (q={}, lambda={}, mult={}) not present in table",
                            probe.q, probe.lambda, want
                        ),
                    })
                }
            }
        }
    }
    rest.retain(|l| l.mult > 0);
    Ok(rest)
}

/// Homogeneous CR data of a compact model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryModel {
    pub levi: LeviSpectrum,
    pub volume: f64,
    pub rank_e: u32,
}

impl GeometryModel {
    pub fn new(levi: LeviSpectrum, volume: f64, rank_e: u32) -> Result<Self> {
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(domain("volume must be positive"));
        }
        if rank_e == 0 {
            return Err(domain("bundle rank must be positive"));
        }
        Ok(Self { levi, volume, rank_e })
    }

    pub fn n(&self) -> usize {
        self.levi.n()
    }

    /// Unit circle bundle of `O(-1)` over `CP¹` with the round metric of area `π`:
    /// Levi eigenvalue 1 and total volume `(2π)²`.
    pub fn cp1() -> Self {
        let levi = LeviSpectrum::new(alloc::vec![1.0]).expect("valid Levi data");
        Self { levi, volume: CP1_VOLUME, rank_e: 1 }
    }
}

/// Volume of the `CP¹` circle-bundle model.
pub const CP1_VOLUME: f64 = 4.0 * core::f64::consts::PI * core::f64::consts::PI;

/// Degree-0 and degree-1 growth laws of the `CP¹` model at weight `m`.
pub fn cp1_laws(m: u32) -> [QuadraticLaw; 2] {
    let law = |q| QuadraticLaw { q, alpha: 1.0, beta: m as f64 + 1.0, gamma: 0.0, kappa: 1.0 };
    [law(0), law(1)]
}

/// Spectrum of the weight-`m` Fourier component on the `CP¹` model:
/// `λ_k = k(k+m+1)` with multiplicity `m+2k+1`, for `k = 0..=k_max` in
/// degree 0 and `k = 1..=k_max` in degree 1.
///
/// The closed form is checked against a Galerkin diagonalization in
/// [`galerkin::validate_cp1`].
pub fn cp1_spectrum(m: u32, k_max: u64) -> SpectrumTable {
    let k_max = k_max.max(1);
    let [l0, l1] = cp1_laws(m);
    let mut lines = Vec::with_capacity(2 * k_max as usize + 1);
    for k in 0..=k_max {
        let kf = k as f64;
        let mult = m as u64 + 2 * k + 1;
        lines.push(SpectrumLine { q: 0, lambda: l0.lambda(kf), mult });
        if k >= 1 {
            lines.push(SpectrumLine { q: 1, lambda: l1.lambda(kf), mult });
        }
    }
    let tail = TailPolicy::WeylTail(alloc::vec![
        LawSegment { law: l0, k_first: 0, k_max },
        LawSegment { law: l1, k_first: 1, k_max },
    ]);
    SpectrumTable::new(1, m as i64, lines, tail).expect("closed-form spectrum is valid")
}
