//! One function per experiment kind. Each writes its artifacts into the run
//! directory and returns the filled report.

mod deterministic;
mod stochastic;

use crate::config::{ExperimentConfig, Kind, Resolved};
use crate::error::CliError;
use fracheat::analysis::{write_csv, write_svg, PlotSpec, Report};
use std::path::Path;

pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub res: &'a Resolved,
    pub dir: &'a Path,
    pub report: Report,
    pub artifacts: Vec<String>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, res: &'a Resolved, dir: &'a Path) -> Self {
        Self {
            cfg,
            res,
            dir,
            report: Report::new(cfg.experiment.name()),
            artifacts: Vec::new(),
        }
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn svg(&mut self, name: &str, spec: &PlotSpec) -> Result<(), CliError> {
        write_svg(&self.dir.join(name), spec)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.report.check(name, passed, detail);
    }

    pub fn value(&mut self, key: &str, v: impl serde::Serialize) -> Result<(), CliError> {
        self.report.value(key, v)?;
        Ok(())
    }
}

pub(crate) fn plot(
    title: &str,
    x: &str,
    y: &str,
    log: (bool, bool),
    series: Vec<(String, Vec<(f64, f64)>)>,
) -> PlotSpec {
    PlotSpec {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_x: log.0,
        log_y: log.1,
        series,
    }
}

/// Runs the experiment; returns the report and the artifact names written.
pub fn execute(
    cfg: &ExperimentConfig,
    res: &Resolved,
    dir: &Path,
) -> Result<(Report, Vec<String>), CliError> {
    let mut ctx = Ctx::new(cfg, res, dir);
    match cfg.experiment {
        Kind::GreenChecks => deterministic::green_checks(&mut ctx)?,
        Kind::KernelChecks => deterministic::kernel_checks(&mut ctx)?,
        Kind::ApproxLadder => deterministic::approx_ladder(&mut ctx)?,
        Kind::Simulate => stochastic::simulate(&mut ctx)?,
        Kind::Compare => stochastic::compare(&mut ctx)?,
        Kind::Positivity => stochastic::positivity(&mut ctx)?,
        Kind::Holder => stochastic::holder(&mut ctx)?,
        Kind::WeakConvergence => stochastic::weak_convergence(&mut ctx)?,
        Kind::Intermittency => stochastic::intermittency(&mut ctx)?,
    }
    Ok((ctx.report, ctx.artifacts))
}
