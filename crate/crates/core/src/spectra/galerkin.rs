//! Independent check of the `CP¹` closed-form spectrum.
//!
//! Sections of `O(m)` (degree 0) and `(0,1)`-forms `f dz̄` (degree 1) are
//! written in the affine chart as finite sums of `z^a z̄^b (1+|z|²)^{-Q}`.
//! The fiber metric is `(1+|z|²)^{-m}` and the area form is
//! `(1+|z|²)^{-2} dx dy`, so the sphere has area `π`. Every Rayleigh-quotient
//! integral reduces to
//!
//! ```text
//! ∫ z^{a1} z̄^{b1} conj(z^{a2} z̄^{b2}) (1+|z|²)^{-P} dx dy
//!     = [a1 - b1 = a2 - b2] · π · B(s+1, P-s-1),   s = (a1+b1+a2+b2)/2,
//! ```
//!
//! and the operator is diagonalized per `U(1)` charge `a - b`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `c · z^a z̄^b`.
#[derive(Debug, Clone, Copy)]
struct Mono {
    c: f64,
    a: i64,
    b: i64,
}

/// `π B(s+1, P-s-1)` for integer `s ≥ 0` and `P - s - 1 ≥ 1`.
fn radial_moment(s: i64, p: i64) -> f64 {
    let q = p - s - 1;
    assert!(s >= 0 && q >= 1, "divergent moment s={s} P={p}");
    let mut v = 1.0 / q as f64;
    for i in 1..=s {
        v *= i as f64 / (q + i) as f64;
    }
    PI * v
}

/// `∫ u conj(v) (1+|z|²)^{-p}` for monomial sums `u`, `v`.
fn pair(u: &[Mono], v: &[Mono], p: i64) -> f64 {
    let mut acc = 0.0;
    for x in u {
        for y in v {
            if x.c == 0.0 || y.c == 0.0 || x.a - x.b != y.a - y.b {
                continue;
            }
            let s2 = x.a + x.b + y.a + y.b;
            acc += x.c * y.c * radial_moment(s2 / 2, p);
        }
    }
    acc
}

struct Sector {
    /// Each basis element is a single monomial times `(1+|z|²)^{-cap}`.
    basis: Vec<(i64, i64)>,
}

fn solve_sector(mass: DMatrix<f64>, energy: DMatrix<f64>) -> Result<Vec<f64>> {
    let n = mass.nrows();
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / libm::sqrt(mass[(i, i)])).collect();
    let m = DMatrix::from_fn(n, n, |i, j| mass[(i, j)] * scale[i] * scale[j]);
    let k = DMatrix::from_fn(n, n, |i, j| energy[(i, j)] * scale[i] * scale[j]);
    let chol = m.cholesky().ok_or_else(|| domain("Galerkin mass matrix is not positive definite"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| domain("singular Cholesky factor"))?;
    let c = &linv * k * linv.transpose();
    let sym = (&c + c.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.iter().copied().collect())
}

/// All Galerkin eigenvalues of the degree-`q` operator at weight `m`, using
/// the basis with radial cap `cap`, sorted ascending.
///
/// Degree 0 spans exactly the levels `0..=cap`; degree 1 spans `1..cap`.
pub fn galerkin_eigenvalues(m: u32, q: u32, cap: u32) -> Result<Vec<f64>> {
    let m = m as i64;
    let cap = cap as i64;
    if q > 1 || (q == 1 && cap < 2) {
        return Err(domain("Galerkin basis needs q <= 1 and cap >= 2 in degree 1"));
    }
    let b_top = if q == 0 { cap } else { cap - 2 };
    let a_top = m + cap;
    let mut out = Vec::new();
    for charge in -b_top..=a_top {
        let basis: Vec<(i64, i64)> =
            (0..=b_top).map(|b| (b + charge, b)).filter(|&(a, _)| (0..=a_top).contains(&a)).collect();
        if basis.is_empty() {
            continue;
        }
        let sector = Sector { basis };
        let (mass, energy) =
            if q == 0 { forms_degree0(&sector, m, cap) } else { forms_degree1(&sector, m, cap) };
        out.extend(solve_sector(mass, energy)?);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Mass `∫|s|² h dA` and energy `∫|∂_z̄ s|² h dx dy` for sections.
fn forms_degree0(sector: &Sector, m: i64, cap: i64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sector.basis.len();
    let grads: Vec<[Mono; 2]> = sector
        .basis
        .iter()
        .map(|&(a, b)| {
            // ∂_z̄ [z^a z̄^b (1+|z|²)^{-Q}] = (1+|z|²)^{-Q-1} [b z^a z̄^{b-1} + (b-Q) z^{a+1} z̄^b]
            [Mono { c: b as f64, a, b: b - 1 }, Mono { c: (b - cap) as f64, a: a + 1, b }]
        })
        .collect();
    let mono = |&(a, b): &(i64, i64)| [Mono { c: 1.0, a, b }];
    let mass = DMatrix::from_fn(n, n, |i, j| {
        pair(&mono(&sector.basis[i]), &mono(&sector.basis[j]), 2 * cap + m + 2)
    });
    let energy = DMatrix::from_fn(n, n, |i, j| pair(&grads[i], &grads[j], 2 * cap + 2 + m));
    (mass, energy)
}

/// Mass `∫|f|² h dx dy` and energy `∫|∂_z(h f)|² h^{-1} ρ^{-1} dx dy` for `f dz̄`.
fn forms_degree1(sector: &Sector, m: i64, cap: i64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sector.basis.len();
    let grads: Vec<[Mono; 2]> = sector
        .basis
        .iter()
        .map(|&(a, b)| {
            // ∂_z [z^a z̄^b (1+|z|²)^{-Q-m}] = (1+|z|²)^{-Q-m-1} [a z^{a-1} z̄^b + (a-Q-m) z^a z̄^{b+1}]
            [Mono { c: a as f64, a: a - 1, b }, Mono { c: (a - cap - m) as f64, a, b: b + 1 }]
        })
        .collect();
    let mono = |&(a, b): &(i64, i64)| [Mono { c: 1.0, a, b }];
    let mass =
        DMatrix::from_fn(n, n, |i, j| pair(&mono(&sector.basis[i]), &mono(&sector.basis[j]), 2 * cap + m));
    let energy = DMatrix::from_fn(n, n, |i, j| pair(&grads[i], &grads[j], 2 * cap + m));
    (mass, energy)
}

/// Outcome of comparing the closed form with Galerkin diagonalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cp1Validation {
    pub m: u32,
    pub compared: usize,
    /// Basis dimension in degrees 0 and 1.
    pub basis_dim: [usize; 2],
    /// Largest `|galerkin - closed| / max(1, closed)` over both degrees.
    pub max_rel_error: f64,
    /// Number of degree-0 eigenvalues below `1e-8`.
    pub kernel_dim: usize,
    pub degree1_kernel_dim: usize,
}

impl Cp1Validation {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol && self.kernel_dim == self.m as usize + 1 && self.degree1_kernel_dim == 0
    }
}

fn closed_form(m: u32, first_level: u64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut k = first_level;
    while out.len() < count {
        let lambda = (k * (k + m as u64 + 1)) as f64;
        for _ in 0..(m as u64 + 2 * k + 1) {
            out.push(lambda);
        }
        k += 1;
    }
    out.truncate(count);
    out
}

/// Compare the lowest `count` eigenvalues (with multiplicity) in each degree
/// against `λ_k = k(k+m+1)`, `d_k = m+2k+1`, using a basis at least four
/// times larger than `count`.
pub fn validate_cp1(m: u32, count: usize) -> Result<Cp1Validation> {
    let need = 4 * count.max(1);
    let mut cap0 = 1u32;
    while (((cap0 + 1) * (m + cap0 + 1)) as usize) < need {
        cap0 += 1;
    }
    let mut cap1 = 2u32;
    while (((cap1 - 1) * (m + cap1 + 1)) as usize) < need {
        cap1 += 1;
    }
    let g0 = galerkin_eigenvalues(m, 0, cap0)?;
    let g1 = galerkin_eigenvalues(m, 1, cap1)?;
    let c0 = closed_form(m, 0, count);
    let c1 = closed_form(m, 1, count);
    let rel =
        |g: &[f64], c: &[f64]| g.iter().zip(c).map(|(x, y)| (x - y).abs() / y.max(1.0)).fold(0.0, f64::max);
    Ok(Cp1Validation {
        m,
        compared: count,
        basis_dim: [g0.len(), g1.len()],
        max_rel_error: rel(&g0, &c0).max(rel(&g1, &c1)),
        kernel_dim: g0.iter().filter(|&&x| x.abs() < 1e-8).count(),
        degree1_kernel_dim: g1.iter().filter(|&&x| x.abs() < 1e-8).count(),
    })
}
