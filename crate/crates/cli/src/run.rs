use crate::config::{ExperimentConfig, Kind};
use crate::error::CliError;
use crate::experiments;
use fracheat::analysis::Report;
use fracheat::spde_solver::replicate_seed;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";
pub const CONFIG_ECHO: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub scheme: String,
    /// Seed of replicate r at index r.
    pub replicates: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Kind,
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub versions: Versions,
    pub threads: usize,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub artifacts: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub fracheat: String,
    pub fracheat_core: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            field: "<manifest>".into(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: Report,
    pub manifest: Manifest,
}

/// Refuses a directory that holds the output of a different experiment.
fn prepare_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.clone();
    let m = dir.join(MANIFEST);
    if m.exists() {
        let old = Manifest::read(&m)?;
        if old.experiment != cfg.experiment {
            return Err(CliError::Config {
                field: "output_dir".into(),
                message: format!("{} holds a {} run", dir.display(), old.experiment.name()),
            });
        }
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Validates, computes, and writes config echo, artifacts, report and manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let resolved = cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    std::fs::write(dir.join(CONFIG_ECHO), cfg.to_toml())?;
    let (report, mut artifacts) = experiments::execute(cfg, &resolved, &dir)?;
    report.write(&dir.join(REPORT))?;
    artifacts.push(REPORT.to_string());
    let manifest = Manifest {
        experiment: cfg.experiment,
        config: cfg.clone(),
        seeds: Seeds {
            base: cfg.seed,
            scheme: "replicate r uses splitmix64(base, r)".into(),
            replicates: (0..cfg.replicates() as u64)
                .map(|r| replicate_seed(cfg.seed, r))
                .collect(),
        },
        versions: Versions {
            fracheat: env!("CARGO_PKG_VERSION").into(),
            fracheat_core: fracheat::VERSION.into(),
        },
        threads: rayon::current_num_threads(),
        started_unix_s,
        wall_clock_s: clock.elapsed().as_secs_f64(),
        artifacts,
        passed: report.all_passed(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST), text + "\n")?;
    Ok(RunOutcome {
        dir,
        report,
        manifest,
    })
}

/// Re-reads a report and fails unless every check passed.
pub fn check(path: &Path) -> Result<Report, CliError> {
    let report = Report::read(path).map_err(|e| CliError::Config {
        field: "<report>".into(),
        message: e.to_string(),
    })?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: report.checks.len(),
        });
    }
    Ok(report)
}
