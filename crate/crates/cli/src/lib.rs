//! Command-line front end for `crtorsion`.
//!
//! Every command produces a [`Report`] (CSV or JSON) and a pass/fail verdict
//! that becomes the process exit status, so CI can consume the binary as is.

pub mod commands;
pub mod config;
pub mod io;
pub mod report;
pub mod selfcheck;

use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::Context;

use crate::config::{Command, RunConfig, Tolerances};
use crate::report::Report;

pub struct Outcome {
    pub report: Report,
    pub passed: bool,
    /// One human-readable line for stderr.
    pub summary: String,
}

/// Run `cfg`, writing the report to `--out` or stdout. Returns the verdict.
pub fn run(cfg: &RunConfig) -> anyhow::Result<bool> {
    let tol = Tolerances::for_run(cfg);
    let mut stdout = std::io::stdout().lock();
    let outcome = match cfg.command {
        Command::Selfcheck => {
            let (outcome, text) = selfcheck::selfcheck(cfg, &tol)?;
            stdout.write_all(text.as_bytes())?;
            outcome
        }
        Command::Density => commands::density(cfg, &tol)?,
        Command::Torsion => commands::torsion(cfg, &tol)?,
        Command::Sweep => commands::sweep(cfg, &tol)?,
        Command::Fit => commands::fit(cfg, &tol)?,
        Command::Stratum => commands::stratum(cfg, &tol)?,
    };
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            outcome.report.write(cfg.format, &mut w)?;
            w.flush().with_context(|| format!("cannot write {}", path.display()))?;
        }
        None if cfg.command != Command::Selfcheck => outcome.report.write(cfg.format, &mut stdout)?,
        None => {}
    }
    eprintln!("{}", outcome.summary);
    Ok(outcome.passed)
}
