use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use crtorsion::mellin::QuadratureConfig;
use crtorsion::torsion::TorsionConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Run the invariant suites; exit 0 iff every check passes.
    Selfcheck,
    /// Dump small-time coefficients of the model heat-kernel densities.
    Density,
    /// θ′(0) by both paths for one spectrum.
    Torsion,
    /// Residual of the large-m asymptotic over several m.
    Sweep,
    /// Least-squares small-time coefficients of the weighted super-trace.
    Fit,
    /// Gaussian moment expansion of a stratum integrand.
    Stratum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One invocation. Every field lands in the report provenance.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "crtorsion", version, about = "Analytic torsion of Kohn Laplacian Fourier components")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Geometry JSON (`n`, `eigenvalues`, `volume`, `rank_e`); defaults to the bundled circle bundle.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Spectrum CSV (`q,lambda,mult`); defaults to the closed-form circle-bundle spectrum.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<u32>>,
    /// Eigenvalue index cutoff for generated spectra; defaults to max(m², 64).
    #[arg(long)]
    pub k_max: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Quadrature tolerance, absolute and relative.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 20_160_428)]
    pub seed: u64,
    /// Expansion order `K`: coefficients of `t^e` for `e < K`.
    #[arg(long, default_value_t = 4)]
    pub order: i32,
    #[arg(long, default_value_t = 3)]
    pub terms: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub t_min: f64,
    #[arg(long, default_value_t = 2e-3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    /// Stratum codimension.
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Scale of the quadratic form `c|y|²`.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Polynomial as JSON, e.g. `[{"coeff":1.0,"powers":[2]}]`; defaults to 1.
    #[arg(long)]
    pub poly: Option<String>,
    /// Time at which to cross-check the stratum expansion by quadrature.
    #[arg(long)]
    pub t: Option<f64>,
}

/// Every numerical tolerance a run depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub torsion: TorsionConfig,
    pub two_path_rel: f64,
    pub scaling_abs: f64,
    pub zeta_abs: f64,
    pub supertrace_rel: f64,
    pub hat_a_rel: f64,
    pub mellin_error_factor: f64,
    pub galerkin_rel: f64,
    pub gap_slope_min: f64,
    pub stratum_rel: f64,
}

impl Tolerances {
    pub fn for_run(cfg: &RunConfig) -> Self {
        let quadrature = cfg.tol.map_or_else(QuadratureConfig::default, QuadratureConfig::with_tol);
        Self {
            torsion: TorsionConfig { quadrature, ..TorsionConfig::default() },
            two_path_rel: 1e-8,
            scaling_abs: 1e-8,
            zeta_abs: 1e-8,
            supertrace_rel: 1e-10,
            hat_a_rel: 1e-12,
            mellin_error_factor: 10.0,
            galerkin_rel: 1e-6,
            gap_slope_min: 0.9,
            stratum_rel: 1e-8,
        }
    }
}

impl RunConfig {
    pub fn m_required(&self) -> anyhow::Result<u32> {
        self.m.ok_or_else(|| anyhow::anyhow!("{:?} needs --m", self.command))
    }

    pub fn k_max_for(&self, m: u32) -> u64 {
        self.k_max.unwrap_or_else(|| (m as u64 * m as u64).max(64))
    }
}
