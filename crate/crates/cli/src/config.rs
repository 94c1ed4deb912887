//! Experiment configuration files.
//!
//! A config is a TOML document. Top-level keys:
//!
//! ```text
//! experiment = "<kind>"          # see `fracheat list`
//! output_dir = "runs/name"       # created if missing
//! seed = 1                       # base seed, default 1
//! replicates = 2000              # ensemble size (stochastic kinds)
//! noise_lag = "endpoint"         # or "variance-matched"
//!
//! [params]   a = 1.5, delta = 0.3
//! [measure]  kind = "dirac" (loc, mass) | "lebesgue" | "constant" (value)
//!            | "indicator" (lo, hi) | "zero" | "sum" (parts = [...])
//! [measure2] second measure of a coupled run (compare)
//! [rho]      kind = "linear" | "sine" | "saturating" (lambda)
//!            | "sqrt_affine" (lambda, vartheta)
//! [grid]     T, L, n_t, n_x, optional cfl
//! ```
//!
//! plus one optional table named after the experiment kind holding its own
//! settings (e.g. `[compare]`, `[holder]`); every setting has a default.
//! Replicate r of a run uses seed splitmix64(seed, r).

use crate::error::CliError;
use fracheat::kernel_series::{RhoKind, RhoSpec};
use fracheat::spde_solver::{NoiseLag, SpaceTimeGrid};
use fracheat::stable_green::{make_params, InitialMeasure, StableParams};
use fracheat::Error;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    GreenChecks,
    KernelChecks,
    ApproxLadder,
    Simulate,
    Compare,
    Positivity,
    Holder,
    WeakConvergence,
    Intermittency,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::GreenChecks,
        Kind::KernelChecks,
        Kind::ApproxLadder,
        Kind::Simulate,
        Kind::Compare,
        Kind::Positivity,
        Kind::Holder,
        Kind::WeakConvergence,
        Kind::Intermittency,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::GreenChecks => "green-checks",
            Kind::KernelChecks => "kernel-checks",
            Kind::ApproxLadder => "approx-ladder",
            Kind::Simulate => "simulate",
            Kind::Compare => "compare",
            Kind::Positivity => "positivity",
            Kind::Holder => "holder",
            Kind::WeakConvergence => "weak-convergence",
            Kind::Intermittency => "intermittency",
        }
    }

    fn is_stochastic(&self) -> bool {
        !matches!(
            self,
            Kind::GreenChecks | Kind::KernelChecks | Kind::ApproxLadder
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub a: f64,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Zero,
    Dirac {
        #[serde(default)]
        loc: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    Lebesgue,
    Constant {
        value: f64,
    },
    Indicator {
        lo: f64,
        hi: f64,
    },
    Sum {
        parts: Vec<MeasureSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl MeasureSpec {
    pub fn build(&self) -> fracheat::Result<InitialMeasure> {
        let m = match self {
            MeasureSpec::Zero => InitialMeasure::zero(),
            MeasureSpec::Dirac { loc, mass } => InitialMeasure::dirac(*loc, *mass),
            MeasureSpec::Lebesgue => InitialMeasure::lebesgue(),
            MeasureSpec::Constant { value } => InitialMeasure::constant(*value),
            MeasureSpec::Indicator { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::Invalid(format!(
                        "indicator needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
                InitialMeasure::indicator(*lo, *hi)
            }
            MeasureSpec::Sum { parts } => {
                let mut acc = InitialMeasure::zero();
                for p in parts {
                    acc = acc.plus(&p.build()?)?;
                }
                acc
            }
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenOpts {
    /// (a, delta) cases.
    pub cases: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    pub mass_tol: f64,
    /// (s, t) pairs for G(s) * G(t) = G(s + t).
    pub semigroup_pairs: Vec<[f64; 2]>,
    pub semigroup_xs: Vec<f64>,
    pub semigroup_tol: f64,
    /// Symmetric cases for the Lambda anchor Gamma(1 + 1/a) / pi.
    pub lambda_as: Vec<f64>,
    pub beta_points: usize,
    pub beta_tol: f64,
}

impl Default for GreenOpts {
    fn default() -> Self {
        Self {
            cases: vec![[2.0, 0.0], [1.5, 0.0], [1.5, 0.4], [1.2, 0.7]],
            times: vec![0.1, 1.0],
            mass_tol: 1e-6,
            semigroup_pairs: vec![[0.5, 0.5], [0.3, 1.2]],
            semigroup_xs: vec![-2.0, 0.0, 0.7, 3.0],
            semigroup_tol: 1e-5,
            lambda_as: vec![1.2, 1.5, 1.8],
            beta_points: 20,
            beta_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelOpts {
    pub lambda: f64,
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    pub series_tol: f64,
    /// Relative tolerance against the closed form (Gaussian case only).
    pub closed_tol: f64,
}

impl Default for KernelOpts {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            ts: (0..16).map(|i| 0.25 + 0.1 * i as f64).collect(),
            xs: (0..16).map(|j| -2.0 + 4.0 * j as f64 / 15.0).collect(),
            series_tol: 1e-13,
            closed_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxOpts {
    pub series_bs: Vec<f64>,
    pub series_z: f64,
    pub series_tol: f64,
    /// (eps, t) cases of the mass identity.
    pub mass_cases: Vec<[f64; 2]>,
    pub mass_tol: f64,
    pub l1_eps: Vec<f64>,
    pub l1_ts: Vec<f64>,
    pub l2_eps: Vec<f64>,
    pub l2_t: f64,
}

impl Default for ApproxOpts {
    fn default() -> Self {
        Self {
            series_bs: vec![-1.0, 0.0, 0.5, 1.0 / 1.5],
            series_z: 500.0,
            series_tol: 0.02,
            mass_cases: vec![[0.1, 0.25], [0.01, 1.0], [0.5, 0.2]],
            mass_tol: 1e-8,
            l1_eps: vec![1e-3, 1e-2, 3e-2, 1e-1],
            l1_ts: vec![0.25, 0.5, 1.0, 2.0],
            l2_eps: vec![0.1, 0.05, 0.025, 0.0125],
            l2_t: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOpts {
    /// (t, x) probes; must sit on grid rows and nodes.
    pub probes: Vec<[f64; 2]>,
    /// Width of the mean and moment checks in standard errors.
    pub n_se: f64,
    pub moment_bound: bool,
}

impl Default for SimulateOpts {
    fn default() -> Self {
        Self {
            probes: vec![[0.25, 0.0], [0.5, 0.0], [0.5, 0.5]],
            n_se: 3.0,
            moment_bound: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOpts {
    pub tol: f64,
    /// Refinement levels k (n_x * k, n_t * ceil(k^a)), starting with 1.
    pub refinements: Vec<usize>,
    pub max_fraction: f64,
}

impl Default for CompareOpts {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            refinements: vec![1, 2, 4],
            max_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositivityOpts {
    pub t_range: [f64; 2],
    pub x_range: [f64; 2],
    pub eps: Vec<f64>,
    pub min_count: usize,
    pub n_boot: usize,
}

impl Default for PositivityOpts {
    fn default() -> Self {
        Self {
            t_range: [0.25, 0.5],
            x_range: [-0.5, 0.5],
            eps: vec![0.35, 0.3, 0.25, 0.2, 0.15, 0.1, 0.07, 0.05],
            min_count: 5,
            n_boot: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderOpts {
    /// Lags in time steps.
    pub time_lags: Vec<usize>,
    /// Lags in grid nodes.
    pub space_lags: Vec<usize>,
    /// Rows with t >= t_min_frac * T only.
    pub t_min_frac: f64,
    /// Nodes with |x| <= x_max_frac * L only.
    pub x_max_frac: f64,
    pub tol: f64,
}

impl Default for HolderOpts {
    fn default() -> Self {
        Self {
            time_lags: vec![8, 16, 32, 64],
            space_lags: vec![1, 2, 4, 8],
            t_min_frac: 0.25,
            x_max_frac: 0.5,
            tol: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakOpts {
    /// Decreasing times; the gap should shrink along them.
    pub ts: Vec<f64>,
    /// Half-width of the bump test function.
    pub bump_width: f64,
    pub bump_center: f64,
    pub min_ratio: f64,
}

impl Default for WeakOpts {
    fn default() -> Self {
        Self {
            ts: vec![0.4, 0.2, 0.1, 0.05],
            bump_width: 1.0,
            bump_center: 0.0,
            min_ratio: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntermittencyOpts {
    pub ts: Vec<f64>,
    /// Spatial nodes with |x| <= x_max enter each replicate statistic.
    pub x_max: f64,
}

impl Default for IntermittencyOpts {
    fn default() -> Self {
        Self {
            ts: (1..=8).map(|i| 0.25 * i as f64).collect(),
            x_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Kind,
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub noise_lag: NoiseLag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure2: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SpaceTimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_checks: Option<GreenOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_checks: Option<KernelOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx_ladder: Option<ApproxOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivityOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_convergence: Option<WeakOpts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermittency: Option<IntermittencyOpts>,
}

fn default_seed() -> u64 {
    1
}

/// Validated pieces of a config, ready for compute.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: Option<StableParams>,
    pub measure: Option<InitialMeasure>,
    pub measure2: Option<InitialMeasure>,
    pub rho: Option<RhoSpec>,
    pub grid: Option<SpaceTimeGrid>,
}

fn cfg_err(field: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Config {
        field: field.into(),
        message: msg.to_string(),
    }
}

fn need<'a, T>(v: &'a Option<T>, field: &str, kind: Kind) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| cfg_err(field, format!("required by experiment {}", kind.name())))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(cfg_err(field, "must not be empty"))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::de::Deserializer::parse(text)
            .map_err(|e| cfg_err("<document>", e.to_string().trim_end()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            cfg_err(
                if path == "." {
                    "<document>".to_string()
                } else {
                    path
                },
                e.into_inner().message().trim_end(),
            )
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err("<file>", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn green_opts(&self) -> GreenOpts {
        self.green_checks.clone().unwrap_or_default()
    }
    pub fn kernel_opts(&self) -> KernelOpts {
        self.kernel_checks.clone().unwrap_or_default()
    }
    pub fn approx_opts(&self) -> ApproxOpts {
        self.approx_ladder.clone().unwrap_or_default()
    }
    pub fn simulate_opts(&self) -> SimulateOpts {
        self.simulate.clone().unwrap_or_default()
    }
    pub fn compare_opts(&self) -> CompareOpts {
        self.compare.clone().unwrap_or_default()
    }
    pub fn positivity_opts(&self) -> PositivityOpts {
        self.positivity.clone().unwrap_or_default()
    }
    pub fn holder_opts(&self) -> HolderOpts {
        self.holder.clone().unwrap_or_default()
    }
    pub fn weak_opts(&self) -> WeakOpts {
        self.weak_convergence.clone().unwrap_or_default()
    }
    pub fn intermittency_opts(&self) -> IntermittencyOpts {
        self.intermittency.clone().unwrap_or_default()
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or(0)
    }

    /// Checks every precondition the experiment will rely on.
    pub fn validate(&self) -> Result<Resolved, CliError> {
        let kind = self.experiment;
        let params = match &self.params {
            Some(p) => Some(make_params(p.a, p.delta).map_err(|e| match e {
                Error::OutOfRange { name, .. } => cfg_err(format!("params.{name}"), &e),
                other => cfg_err("params", other),
            })?),
            None => None,
        };
        let measure = self
            .measure
            .as_ref()
            .map(|m| m.build())
            .transpose()
            .map_err(|e| cfg_err("measure", e))?;
        let measure2 = self
            .measure2
            .as_ref()
            .map(|m| m.build())
            .transpose()
            .map_err(|e| cfg_err("measure2", e))?;
        let rho = self
            .rho
            .map(RhoSpec::new)
            .transpose()
            .map_err(|e| cfg_err("rho", e))?;
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| match e {
                Error::OutOfRange { name, .. } => cfg_err(format!("grid.{name}"), &e),
                other => cfg_err("grid", other),
            })?;
            if let Some(p) = params {
                g.check_cfl(p.a()).map_err(|e| cfg_err("grid", e))?;
            }
        }
        let out = Resolved {
            params,
            measure,
            measure2,
            rho,
            grid: self.grid,
        };
        if kind.is_stochastic() {
            let p = *need(&out.params, "params", kind)?;
            need(&out.measure, "measure", kind)?;
            let g = *need(&out.grid, "grid", kind)?;
            if kind != Kind::Simulate {
                need(&out.rho, "rho", kind)?;
            }
            if self.replicates() < 2 {
                return Err(cfg_err(
                    "replicates",
                    format!("need at least 2, got {}", self.replicates()),
                ));
            }
            self.validate_kind(p, g, &out)?;
        } else {
            match kind {
                Kind::GreenChecks => {
                    let o = self.green_opts();
                    for (i, c) in o.cases.iter().enumerate() {
                        make_params(c[0], c[1])
                            .map_err(|e| cfg_err(format!("green_checks.cases[{i}]"), e))?;
                    }
                    for &t in &o.times {
                        positive("green_checks.times", t)?;
                    }
                    for &d in &o.semigroup_pairs {
                        positive("green_checks.semigroup_pairs", d[0].min(d[1]))?;
                    }
                    for &a in &o.lambda_as {
                        make_params(a, 0.0).map_err(|e| cfg_err("green_checks.lambda_as", e))?;
                    }
                }
                Kind::KernelChecks => {
                    need(&out.params, "params", kind)?;
                    let o = self.kernel_opts();
                    nonempty("kernel_checks.ts", &o.ts)?;
                    nonempty("kernel_checks.xs", &o.xs)?;
                    for &t in &o.ts {
                        positive("kernel_checks.ts", t)?;
                    }
                    positive("kernel_checks.series_tol", o.series_tol)?;
                }
                Kind::ApproxLadder => {
                    need(&out.params, "params", kind)?;
                    let o = self.approx_opts();
                    for &e in o.l1_eps.iter().chain(&o.l2_eps).chain(&o.l1_ts) {
                        positive("approx_ladder", e)?;
                    }
                    for c in &o.mass_cases {
                        positive("approx_ladder.mass_cases", c[0].min(c[1]))?;
                    }
                    positive("approx_ladder.l2_t", o.l2_t)?;
                }
                _ => unreachable!(),
            }
        }
        Ok(out)
    }

    fn validate_kind(
        &self,
        p: StableParams,
        g: SpaceTimeGrid,
        r: &Resolved,
    ) -> Result<(), CliError> {
        let on_row = |field: &str, t: f64| -> Result<(), CliError> {
            // solver rows sit at k dt, k = 1..=n_t
            let k = t / g.dt();
            if (k - k.round()).abs() < 1e-6 && k.round() >= 1.0 && k.round() <= g.n_t as f64 {
                Ok(())
            } else {
                Err(cfg_err(
                    field,
                    format!("t = {t} is not a grid time (dt = {})", g.dt()),
                ))
            }
        };
        let on_node = |field: &str, x: f64| -> Result<(), CliError> {
            g.node_of(x).map(|_| ()).ok_or_else(|| {
                cfg_err(
                    field,
                    format!("x = {x} is not a grid node (dx = {})", g.dx()),
                )
            })
        };
        match self.experiment {
            Kind::Simulate => {
                let o = self.simulate_opts();
                nonempty("simulate.probes", &o.probes)?;
                for pr in &o.probes {
                    on_row("simulate.probes", pr[0])?;
                    on_node("simulate.probes", pr[1])?;
                }
                positive("simulate.n_se", o.n_se)?;
            }
            Kind::Compare => {
                let o = self.compare_opts();
                let (m1, m2) = (
                    r.measure.as_ref().unwrap(),
                    need(&r.measure2, "measure2", self.experiment)?,
                );
                if !m1.is_dominated_by(m2) {
                    return Err(cfg_err("measure2", "must dominate measure"));
                }
                nonempty("compare.refinements", &o.refinements)?;
                if o.refinements[0] != 1 || o.refinements.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(cfg_err(
                        "compare.refinements",
                        "must start at 1 and increase",
                    ));
                }
                for &k in &o.refinements {
                    g.refined(k, p.a())
                        .check_cfl(p.a())
                        .map_err(|e| cfg_err("compare.refinements", e))?;
                }
                if !(o.tol >= 0.0) {
                    return Err(cfg_err("compare.tol", "must be >= 0"));
                }
            }
            Kind::Positivity => {
                let o = self.positivity_opts();
                if !(o.t_range[0] <= o.t_range[1] && o.x_range[0] <= o.x_range[1]) {
                    return Err(cfg_err("positivity", "t_range and x_range must be ordered"));
                }
                if o.t_range[1] > g.t_end
                    || o.x_range[0] < -g.half_width
                    || o.x_range[1] > g.half_width
                {
                    return Err(cfg_err("positivity", "box must lie inside the grid"));
                }
                nonempty("positivity.eps", &o.eps)?;
                for &e in &o.eps {
                    positive("positivity.eps", e)?;
                }
                if o.n_boot < 2 {
                    return Err(cfg_err("positivity.n_boot", "need at least 2"));
                }
            }
            Kind::Holder => {
                let o = self.holder_opts();
                if o.time_lags.len() < 3 || o.space_lags.len() < 3 {
                    return Err(cfg_err(
                        "holder",
                        "need at least 3 time lags and 3 space lags",
                    ));
                }
                let rows = g.n_t - (o.t_min_frac * g.n_t as f64) as usize;
                if o.time_lags.iter().any(|&h| h == 0 || h >= rows) {
                    return Err(cfg_err(
                        "holder.time_lags",
                        format!("lags must lie in 1..{rows}"),
                    ));
                }
                let nodes = (o.x_max_frac * g.n_x as f64) as usize;
                if o.space_lags.iter().any(|&h| h == 0 || h >= nodes) {
                    return Err(cfg_err(
                        "holder.space_lags",
                        format!("lags must lie in 1..{nodes}"),
                    ));
                }
            }
            Kind::WeakConvergence => {
                let o = self.weak_opts();
                if o.ts.len() < 2 {
                    return Err(cfg_err("weak_convergence.ts", "need at least 2 times"));
                }
                for &t in &o.ts {
                    on_row("weak_convergence.ts", t)?;
                }
                positive("weak_convergence.bump_width", o.bump_width)?;
                if (o.bump_center.abs() + o.bump_width) > g.half_width {
                    return Err(cfg_err(
                        "weak_convergence.bump_width",
                        "bump must lie inside the grid",
                    ));
                }
            }
            Kind::Intermittency => {
                let o = self.intermittency_opts();
                if o.ts.len() < 4 {
                    return Err(cfg_err("intermittency.ts", "need at least 4 times"));
                }
                for &t in &o.ts {
                    on_row("intermittency.ts", t)?;
                }
                positive("intermittency.x_max", o.x_max)?;
            }
            _ => unreachable!(),
        }
        Ok(())
    }
}
