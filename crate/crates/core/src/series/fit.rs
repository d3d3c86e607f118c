use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Condition number of the column-scaled design matrix above which the
    /// fit carries an [`IllConditioned`] warning.
    pub condition_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { condition_threshold: 1e10 }
    }
}

/// Non-fatal diagnostic attached to a fit whose design matrix is badly conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IllConditioned {
    pub condition: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPowerFit {
    /// Coefficients of `t^{base + j/2}`, `j = 0..num_terms`.
    pub coeffs: Vec<f64>,
    pub base2: i32,
    pub condition: f64,
    pub residual_rms: f64,
    pub warning: Option<IllConditioned>,
}

/// Least-squares fit of `value ≈ Σ_j c_j t^{(base2 + j)/2}`.
///
/// Columns are scaled to unit norm before a Householder QR solve; the
/// reported condition number is that of the scaled design matrix.
pub fn fit_half_powers(
    samples: &[(f64, f64)],
    base2: i32,
    num_terms: usize,
    cfg: &FitConfig,
) -> Result<HalfPowerFit> {
    if num_terms == 0 {
        return Err(domain("fit needs at least one term"));
    }
    if samples.len() < num_terms {
        return Err(Error::Arity { needed: num_terms, got: samples.len() });
    }
    if samples.iter().any(|&(t, v)| !(t > 0.0) || !t.is_finite() || !v.is_finite()) {
        return Err(domain("fit samples need finite t > 0 and finite values"));
    }
    let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(domain("fit sample abscissae must be distinct"));
    }

    let rows = samples.len();
    let mut design = DMatrix::<f64>::zeros(rows, num_terms);
    for (i, &(t, _)) in samples.iter().enumerate() {
        let sqrt_t = libm::sqrt(t);
        let mut p = libm::pow(sqrt_t, base2 as f64);
        for j in 0..num_terms {
            design[(i, j)] = p;
            p *= sqrt_t;
        }
    }
    let mut col_scale = Vec::with_capacity(num_terms);
    for j in 0..num_terms {
        let norm = design.column(j).norm();
        let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        design.column_mut(j).scale_mut(s);
        col_scale.push(s);
    }
    let rhs = DVector::from_iterator(rows, samples.iter().map(|s| s.1));

    let sv = design.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let qr = design.clone().qr();
    let qtb = qr.q().transpose() * &rhs;
    let scaled =
        qr.r().solve_upper_triangular(&qtb).ok_or_else(|| domain("design matrix is rank deficient"))?;
    let resid = &design * &scaled - &rhs;
    let residual_rms = libm::sqrt(resid.norm_squared() / rows as f64);
    let coeffs: Vec<f64> = scaled.iter().zip(&col_scale).map(|(c, s)| c * s).collect();

    let warning = (condition > cfg.condition_threshold)
        .then_some(IllConditioned { condition, threshold: cfg.condition_threshold });
    Ok(HalfPowerFit { coeffs, base2, condition, residual_rms, warning })
}
