use anyhow::Context;
use crtorsion::density::{model_density_coeffs, rt_series, supertrace_n_density};
use crtorsion::series::FitConfig;
use crtorsion::spectra::{cp1_spectrum, GeometryModel, SpectrumTable};
use crtorsion::strata::{gaussian_stratum_expansion, stratum_quadrature, StratumIntegrand, StratumMonomial};
use crtorsion::torsion::{check_sweep, closed_form_bhat, extract_bhat, torsion_report, TorsionReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Tolerances};
use crate::io::{is_cp1, load_geometry, load_spectrum};
use crate::report::{Provenance, Report};
use crate::Outcome;

pub const TORSION_COLUMNS: [&str; 6] =
    ["m", "theta_prime_0", "theta_prime_0_direct", "rhs", "residual", "error_budget"];

fn require_cp1(model: &GeometryModel, what: &str) -> anyhow::Result<()> {
    anyhow::ensure!(
        is_cp1(model),
        "{what} uses the built-in circle-bundle spectrum, which needs the circle-bundle geometry \
         (n = 1, eigenvalues [1], volume 4π², rank_e 1); pass --spectrum for other geometries"
    );
    Ok(())
}

/// The spectrum file if given, else the closed-form circle-bundle spectrum.
fn spectrum_for(
    cfg: &RunConfig,
    model: &GeometryModel,
    m: u32,
    k_floor: u64,
) -> anyhow::Result<SpectrumTable> {
    match &cfg.spectrum {
        Some(path) => load_spectrum(path, model.n() as u32, m as i64),
        None => {
            require_cp1(model, "this command")?;
            Ok(cp1_spectrum(m, cfg.k_max_for(m).max(k_floor)))
        }
    }
}

#[derive(Serialize)]
struct DensityRow {
    series: &'static str,
    /// Wedge indices joined by `;`, empty outside the per-wedge densities.
    subset: String,
    exponent: f64,
    coeff: f64,
}

pub fn density(cfg: &RunConfig, tol: &Tolerances) -> anyhow::Result<Outcome> {
    let model = load_geometry(cfg.geometry.as_deref())?;
    let trunc2 = 2 * cfg.order;
    let mut rows = Vec::new();
    let dens = model_density_coeffs(&model.levi, model.rank_e, trunc2)?;
    for (mask, s) in dens.iter() {
        let subset = (0..model.n()).filter(|j| mask >> j & 1 == 1).map(|j| j.to_string()).collect::<Vec<_>>();
        push_series(&mut rows, "wedge", &subset.join(";"), s);
    }
    push_series(&mut rows, "supertrace_n", "", &supertrace_n_density(&model.levi, trunc2)?);
    push_series(&mut rows, "rt", "", &rt_series(&model.levi, trunc2)?);
    let report = Report::new(Provenance::new(cfg, tol), &["series", "subset", "exponent", "coeff"], &rows)?;
    Ok(Outcome {
        report,
        passed: true,
        summary: format!("{} coefficients below t^{}", rows.len(), cfg.order),
    })
}

fn push_series(
    rows: &mut Vec<DensityRow>,
    series: &'static str,
    subset: &str,
    s: &crtorsion::series::HalfPowerSeries,
) {
    for (j, &coeff) in s.coeffs().iter().enumerate() {
        let exponent = (s.base2() + j as i32) as f64 / 2.0;
        rows.push(DensityRow { series, subset: subset.to_string(), exponent, coeff });
    }
}

fn two_paths_agree(r: &TorsionReport, tol: &Tolerances) -> bool {
    (r.theta_prime_0 - r.theta_prime_0_direct).abs() <= tol.two_path_rel * r.theta_prime_0.abs().max(1.0)
}

pub fn torsion(cfg: &RunConfig, tol: &Tolerances) -> anyhow::Result<Outcome> {
    let model = load_geometry(cfg.geometry.as_deref())?;
    let m = cfg.m_required()?;
    let spec = spectrum_for(cfg, &model, m, 0)?;
    let r = torsion_report(&model, &spec, m, &tol.torsion).context("torsion computation failed")?;
    let passed = two_paths_agree(&r, tol);
    let summary = format!(
        "m={m}: theta'(0) heat {} direct {} ({}), residual {}",
        r.theta_prime_0,
        r.theta_prime_0_direct,
        if passed { "paths agree" } else { "PATHS DISAGREE" },
        r.residual
    );
    let report = Report::new(Provenance::new(cfg, tol), &TORSION_COLUMNS, &[r])?;
    Ok(Outcome { report, passed, summary })
}

/// Whether `|residual|` strictly decreases over the last three entries.
pub fn residual_trend_decreasing(reports: &[TorsionReport]) -> bool {
    reports.len() >= 3
        && reports[reports.len() - 3..].windows(2).all(|w| w[1].residual.abs() < w[0].residual.abs())
}

pub fn sweep(cfg: &RunConfig, tol: &Tolerances) -> anyhow::Result<Outcome> {
    let model = load_geometry(cfg.geometry.as_deref())?;
    anyhow::ensure!(cfg.spectrum.is_none(), "sweep generates its spectra; --spectrum is not accepted");
    require_cp1(&model, "sweep")?;
    let ms = cfg.ms.clone().or(cfg.m.map(|m| vec![m])).context("sweep needs --ms")?;
    check_sweep(&ms)?;
    let reports = ms
        .par_iter()
        .map(|&m| {
            torsion_report(&model, &cp1_spectrum(m, cfg.k_max_for(m)), m, &tol.torsion)
                .with_context(|| format!("torsion at m = {m}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let passed = residual_trend_decreasing(&reports);
    let trend =
        reports.iter().map(|r| format!("m={} |residual|={:.6}", r.m, r.residual.abs())).collect::<Vec<_>>();
    let summary =
        format!("{}; last three {}", trend.join(", "), if passed { "decreasing" } else { "NOT decreasing" });
    let report = Report::new(Provenance::new(cfg, tol), &TORSION_COLUMNS, &reports)?;
    Ok(Outcome { report, passed, summary })
}

#[derive(Serialize)]
struct FitRow {
    exponent: f64,
    fitted: f64,
    closed_form: f64,
    condition: f64,
    residual_rms: f64,
}

pub fn fit(cfg: &RunConfig, tol: &Tolerances) -> anyhow::Result<Outcome> {
    let model = load_geometry(cfg.geometry.as_deref())?;
    let m = cfg.m_required()?;
    anyhow::ensure!(
        cfg.t_min > 0.0 && cfg.t_max > cfg.t_min && cfg.points >= cfg.terms,
        "fit needs 0 < t_min < t_max and at least as many points as terms"
    );
    // The smallest sample time sees eigenvalues up to about 40 / t_min.
    let k_floor = (40.0 / cfg.t_min).sqrt().ceil() as u64;
    let spec = spectrum_for(cfg, &model, m, k_floor)?;
    let ratio = cfg.t_max / cfg.t_min;
    let last = (cfg.points - 1).max(1) as f64;
    let grid: Vec<f64> = (0..cfg.points).map(|i| cfg.t_min * ratio.powf(i as f64 / last)).collect();
    let fitted = extract_bhat(&spec, cfg.terms, &grid, &FitConfig::default())?;
    let exact = closed_form_bhat(&spec, cfg.terms)?;
    let rows: Vec<FitRow> = fitted
        .coeffs
        .iter()
        .zip(&exact)
        .enumerate()
        .map(|(j, (&f, &c))| FitRow {
            exponent: (fitted.base2 + j as i32) as f64 / 2.0,
            fitted: f,
            closed_form: c,
            condition: fitted.condition,
            residual_rms: fitted.residual_rms,
        })
        .collect();
    let summary = match &fitted.warning {
        Some(w) => format!("fit condition {:.3e}: {w:?}", fitted.condition),
        None => format!("fit condition {:.3e}", fitted.condition),
    };
    let columns = ["exponent", "fitted", "closed_form", "condition", "residual_rms"];
    let report = Report::new(Provenance::new(cfg, tol), &columns, &rows)?;
    Ok(Outcome { report, passed: true, summary })
}

#[derive(Serialize)]
struct StratumRow {
    exponent: f64,
    coeff: f64,
}

pub fn stratum(cfg: &RunConfig, tol: &Tolerances) -> anyhow::Result<Outcome> {
    let m = cfg.m_required()?;
    let poly: Vec<StratumMonomial> = match &cfg.poly {
        Some(json) => serde_json::from_str(json).context("--poly must be a JSON list of {coeff, powers}")?,
        None => vec![StratumMonomial { coeff: 1.0, powers: vec![0; cfg.r] }],
    };
    let g = StratumIntegrand::new(cfg.r, poly, cfg.c)?;
    let s = gaussian_stratum_expansion(&g, m, 2 * cfg.order)?;
    let rows: Vec<StratumRow> = s
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, &coeff)| StratumRow { exponent: (s.base2() + j as i32) as f64 / 2.0, coeff })
        .collect();
    let (passed, summary) = match cfg.t {
        None => (true, format!("{} coefficients", rows.len())),
        Some(t) => {
            let (err, scale) = stratum_cross_check(&g, m, t, tol.stratum_rel * 1e-3)?;
            let passed = err <= tol.stratum_rel * scale;
            (passed, format!("quadrature at t={t}: |diff| {err:.3e}, scale {scale:.3e}"))
        }
    };
    let report = Report::new(Provenance::new(cfg, tol), &["exponent", "coeff"], &rows)?;
    Ok(Outcome { report, passed, summary })
}

/// `(|quadrature − expansion|, Σ|terms|)` at `t`, with the expansion taken to all orders.
pub fn stratum_cross_check(g: &StratumIntegrand, m: u32, t: f64, rel_tol: f64) -> anyhow::Result<(f64, f64)> {
    let degree = g.poly().iter().map(|p| p.powers.iter().sum::<u32>()).max().unwrap_or(0) as i32;
    let full = gaussian_stratum_expansion(g, m, g.r() as i32 + degree + 2)?;
    let abs = full.map(|c| c.abs());
    let q = stratum_quadrature(g, m, t, rel_tol)?;
    Ok(((q.value - full.eval(t)).abs(), abs.eval(t)))
}
