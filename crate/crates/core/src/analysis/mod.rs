//! Estimators over solution ensembles: moments, Lyapunov slopes, ordering
//! violations, lower-tail probabilities, increment exponents and
//! convergence curves.

mod output;
mod stats;

pub use output::{write_csv, write_svg, Check, PlotSpec, Report};
pub use stats::{
    fit_line, jackknife, mean, mean_stderr, normal_quantile, wilson_interval, LineFit,
};

use crate::error::{Error, Result};
use crate::spde_solver::FieldPath;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Jackknife block count used by the slope estimators.
pub const JACKKNIFE_GROUPS: usize = 50;

/// Values of u at fixed probes, one row per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub probes: Vec<(f64, f64)>,
    pub samples: Vec<Vec<f64>>,
    pub seed_base: u64,
}

impl Ensemble {
    pub fn from_paths(paths: &[FieldPath], probes: &[(f64, f64)], seed_base: u64) -> Result<Self> {
        let samples = paths
            .iter()
            .map(|p| {
                probes
                    .iter()
                    .map(|&(t, x)| {
                        p.value_at(t, x).ok_or_else(|| {
                            Error::Invalid(format!("probe ({t}, {x}) is off the grid"))
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            probes: probes.to_vec(),
            samples,
            seed_base,
        })
    }

    pub fn n_rep(&self) -> usize {
        self.samples.len()
    }

    pub fn column(&self, probe: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r[probe]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Sample mean of |u|^p at one probe with its jackknife standard error
/// (for a mean the delete-one jackknife equals the classical s / sqrt(n)).
pub fn empirical_moment(ens: &Ensemble, p: u32, probe: usize) -> Result<Estimate> {
    if ens.n_rep() < 2 {
        return Err(Error::Invalid("need at least two replicates".into()));
    }
    if probe >= ens.probes.len() {
        return Err(Error::Invalid(format!("probe index {probe} out of range")));
    }
    let col = ens.column(probe);
    if col.iter().all(|v| *v == col[0]) {
        return Ok(Estimate {
            estimate: col[0].abs().powi(p as i32),
            stderr: 0.0,
        });
    }
    let xs: Vec<f64> = col.iter().map(|v| v.abs().powi(p as i32)).collect();
    let (estimate, stderr) = mean_stderr(&xs);
    Ok(Estimate { estimate, stderr })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_rep: usize,
    pub probes: Vec<(f64, f64)>,
    /// (p, one estimate per probe)
    pub moments: Vec<(u32, Vec<Estimate>)>,
    pub seed_base: u64,
}

pub fn ensemble_stats(ens: &Ensemble, ps: &[u32]) -> Result<EnsembleStats> {
    let moments = ps
        .iter()
        .map(|&p| {
            Ok((
                p,
                (0..ens.probes.len())
                    .map(|i| empirical_moment(ens, p, i))
                    .collect::<Result<Vec<_>>>()?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleStats {
        n_rep: ens.n_rep(),
        probes: ens.probes.clone(),
        moments,
        seed_base: ens.seed_base,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub slope: f64,
    pub stderr: f64,
    /// slope -/+ z_{0.995} stderr
    pub lower_slope: f64,
    pub upper_slope: f64,
    pub ts_used: Vec<f64>,
    pub log_moments: Vec<f64>,
}

/// Slope of log E|u(t)|^p against t over the upper half of the ladder.
/// `samples[r][i]` holds the values of replicate r at rung `ts[i]`, at one or
/// more spatial points whose moments coincide (the replicate statistic is
/// their average of |u|^p). Standard error by grouped jackknife over
/// replicates.
pub fn lyapunov_estimate(
    ts: &[f64],
    samples: &[Vec<Vec<f64>>],
    p: u32,
) -> Result<LyapunovEstimate> {
    if ts.len() < 4 {
        return Err(Error::InsufficientLadder {
            got: ts.len(),
            need: 4,
        });
    }
    if samples.len() < 2 {
        return Err(Error::Invalid("need at least two replicates".into()));
    }
    let first = ts.len() / 2;
    let ts_used = ts[first..].to_vec();
    let stat: Vec<Vec<f64>> = samples
        .iter()
        .map(|r| {
            r[first..]
                .iter()
                .map(|pts| {
                    pts.iter().map(|v| v.abs().powi(p as i32)).sum::<f64>() / pts.len() as f64
                })
                .collect()
        })
        .collect();
    let log_means = |it: &mut dyn Iterator<Item = &Vec<f64>>| -> Vec<f64> {
        let mut acc = vec![0.0; ts_used.len()];
        let mut n = 0.0;
        for r in it {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
            n += 1.0;
        }
        acc.iter().map(|a| (a / n).ln()).collect()
    };
    let log_moments = log_means(&mut stat.iter());
    let (slope, stderr) = jackknife(&stat, JACKKNIFE_GROUPS, |it| {
        stats::slope(&ts_used, &log_means(it))
    });
    let z = normal_quantile(0.995);
    Ok(LyapunovEstimate {
        slope,
        stderr,
        lower_slope: slope - z * stderr,
        upper_slope: slope + z * stderr,
        ts_used,
        log_moments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub total_cells: usize,
    pub violating_cells: usize,
    pub max_violation: f64,
    /// sum over cells of (u1 - u2)_+ dt dx
    pub violation_l1: f64,
    /// Violating fraction per grid of a refinement family, coarse to fine.
    pub refinement_trend: Option<Vec<f64>>,
}

impl ViolationReport {
    pub fn fraction(&self) -> f64 {
        self.violating_cells as f64 / self.total_cells.max(1) as f64
    }

    /// Pools reports from the same grid (e.g. over replicates).
    pub fn merge(&self, other: &ViolationReport) -> ViolationReport {
        ViolationReport {
            total_cells: self.total_cells + other.total_cells,
            violating_cells: self.violating_cells + other.violating_cells,
            max_violation: self.max_violation.max(other.max_violation),
            violation_l1: self.violation_l1 + other.violation_l1,
            refinement_trend: None,
        }
    }

    pub fn empty() -> Self {
        ViolationReport {
            total_cells: 0,
            violating_cells: 0,
            max_violation: 0.0,
            violation_l1: 0.0,
            refinement_trend: None,
        }
    }
}

/// Cells where u1 > u2 + tol.
pub fn comparison_report(
    path1: &FieldPath,
    path2: &FieldPath,
    tol: f64,
) -> Result<ViolationReport> {
    if path1.grid != path2.grid || path1.times != path2.times || path1.u.len() != path2.u.len() {
        return Err(Error::GridMismatch(
            "comparison needs identical grids and times".into(),
        ));
    }
    let cell = path1.grid.dt() * path1.grid.dx();
    let mut r = ViolationReport::empty();
    r.total_cells = path1.u.len();
    for (a, b) in path1.u.iter().zip(&path2.u) {
        let d = a - b;
        if d > tol {
            r.violating_cells += 1;
        }
        if d > 0.0 {
            r.max_violation = r.max_violation.max(d);
            r.violation_l1 += d * cell;
        }
    }
    Ok(r)
}

/// Attaches the refinement trend of `family` (coarse to fine) to the report
/// of the coarsest grid.
pub fn refinement_study(family: &[ViolationReport]) -> Result<ViolationReport> {
    let first = family
        .first()
        .ok_or_else(|| Error::Invalid("empty refinement family".into()))?;
    let mut out = first.clone();
    out.refinement_trend = Some(family.iter().map(|r| r.fraction()).collect());
    Ok(out)
}

/// l(eps) = |log eps|^{1 - 1/a} (log |log eps|)^{2 - 1/a}, defined for eps < 1/e.
pub fn tail_transform(eps: f64, a: f64) -> f64 {
    let l = eps.ln().abs();
    l.powf(1.0 - 1.0 / a) * l.ln().powf(2.0 - 1.0 / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub eps: f64,
    pub count: usize,
    pub prob: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub ell: f64,
}

/// Empirical P(inf_K u < eps) over replicate box minima, with 99% Wilson
/// intervals and the l(eps) column (NaN for eps >= 1/e).
pub fn positivity_tail(box_minima: &[f64], eps_ladder: &[f64], a: f64) -> Vec<TailPoint> {
    let n = box_minima.len();
    eps_ladder
        .iter()
        .map(|&eps| {
            let count = box_minima.iter().filter(|m| **m < eps).count();
            let (wilson_lo, wilson_hi) = wilson_interval(count, n, 0.99);
            let ell = if eps < (-1.0f64).exp() {
                tail_transform(eps, a)
            } else {
                f64::NAN
            };
            TailPoint {
                eps,
                count,
                prob: count as f64 / n.max(1) as f64,
                wilson_lo,
                wilson_hi,
                ell,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailShape {
    pub slope: f64,
    /// 99% percentile bootstrap interval of the slope.
    pub ci99: (f64, f64),
    pub eps_used: Vec<f64>,
    pub n_boot: usize,
}

/// Regression of log((k + 1/2)/(n + 1)) on l(eps) over the rungs with
/// eps < 1/e and at least `min_count` hits, bootstrapped over replicates.
pub fn tail_shape_regression(
    box_minima: &[f64],
    eps_ladder: &[f64],
    a: f64,
    min_count: usize,
    n_boot: usize,
    seed: u64,
) -> Result<TailShape> {
    let pts = positivity_tail(box_minima, eps_ladder, a);
    let used: Vec<TailPoint> = pts
        .into_iter()
        .filter(|p| p.ell.is_finite() && p.count >= min_count)
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientLadder {
            got: used.len(),
            need: 3,
        });
    }
    let ells: Vec<f64> = used.iter().map(|p| p.ell).collect();
    let eps_used: Vec<f64> = used.iter().map(|p| p.eps).collect();
    let fit = |mins: &mut dyn Iterator<Item = f64>| -> f64 {
        let mut counts = vec![0usize; eps_used.len()];
        let mut n = 0usize;
        for m in mins {
            n += 1;
            for (c, e) in counts.iter_mut().zip(&eps_used) {
                if m < *e {
                    *c += 1;
                }
            }
        }
        let ys: Vec<f64> = counts
            .iter()
            .map(|&k| ((k as f64 + 0.5) / (n as f64 + 1.0)).ln())
            .collect();
        stats::slope(&ells, &ys)
    };
    let slope = fit(&mut box_minima.iter().cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = box_minima.len() as u64;
    let mut boots: Vec<f64> = (0..n_boot)
        .map(|_| {
            let draws: Vec<f64> = (0..n)
                .map(|_| box_minima[(rng.next_u64() % n) as usize])
                .collect();
            fit(&mut draws.into_iter())
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let q = |p: f64| boots[((p * (n_boot - 1) as f64).round() as usize).min(n_boot - 1)];
    Ok(TailShape {
        slope,
        ci99: (q(0.005), q(0.995)),
        eps_used,
        n_boot,
    })
}

/// Minimum of a path over rows with t in [t0, t1] and nodes with x in [x0, x1].
pub fn box_minimum(path: &FieldPath, t_range: (f64, f64), x_range: (f64, f64)) -> f64 {
    let xs = path.grid.xs();
    let mut m = f64::INFINITY;
    for (k, &t) in path.times.iter().enumerate() {
        if t < t_range.0 || t > t_range.1 {
            continue;
        }
        for (j, &x) in xs.iter().enumerate() {
            if x >= x_range.0 && x <= x_range.1 {
                m = m.min(path.row(k)[j]);
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub slope: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub lags: Vec<f64>,
    pub mean_sq_increments: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Time,
    Space,
}

/// Per-lag mean squared increment of one path. Time lags are in steps,
/// taken from rows with t >= t_min at every node with |x| <= x_max; space
/// lags are in nodes, taken at rows with t >= t_min over pairs inside
/// |x| <= x_max.
pub fn path_increments(
    path: &FieldPath,
    direction: Direction,
    lags: &[usize],
    t_min: f64,
    x_max: f64,
) -> Vec<f64> {
    let g = path.grid;
    let m = g.n_nodes();
    let xs = g.xs();
    let rows: Vec<usize> = (0..path.n_rows())
        .filter(|&k| path.times[k] >= t_min)
        .collect();
    let cols: Vec<usize> = (0..m).filter(|&j| xs[j].abs() <= x_max).collect();
    lags.iter()
        .map(|&h| {
            let (mut s, mut c) = (0.0, 0usize);
            match direction {
                Direction::Time => {
                    for &k in rows.iter().filter(|&&k| k + h < path.n_rows()) {
                        for &j in &cols {
                            s += (path.u[(k + h) * m + j] - path.u[k * m + j]).powi(2);
                            c += 1;
                        }
                    }
                }
                Direction::Space => {
                    for &k in &rows {
                        for &j in cols
                            .iter()
                            .filter(|&&j| j + h < m && xs[j + h].abs() <= x_max)
                        {
                            s += (path.u[k * m + j + h] - path.u[k * m + j]).powi(2);
                            c += 1;
                        }
                    }
                }
            }
            s / c.max(1) as f64
        })
        .collect()
}

/// Log-log regression of the mean squared increment against the lag.
/// `sq[r][i]` is replicate r's mean squared increment at `lags[i]`.
pub fn holder_exponent(lags: &[f64], sq: &[Vec<f64>]) -> Result<HolderFit> {
    if lags.len() < 3 {
        return Err(Error::InsufficientLags {
            got: lags.len(),
            need: 3,
        });
    }
    if sq.len() < 2 {
        return Err(Error::Invalid("need at least two replicates".into()));
    }
    let ll: Vec<f64> = lags.iter().map(|h| h.ln()).collect();
    let means = |it: &mut dyn Iterator<Item = &Vec<f64>>| -> Vec<f64> {
        let mut acc = vec![0.0; lags.len()];
        let mut n = 0.0;
        for r in it {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
            n += 1.0;
        }
        acc.iter().map(|a| a / n).collect()
    };
    let mean_sq_increments = means(&mut sq.iter());
    let ly: Vec<f64> = mean_sq_increments.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&ll, &ly)?;
    let (_, stderr) = jackknife(sq, JACKKNIFE_GROUPS, |it| {
        let m = means(it);
        stats::slope(&ll, &m.iter().map(|v| v.ln()).collect::<Vec<_>>())
    });
    Ok(HolderFit {
        slope: fit.slope,
        stderr,
        r_squared: fit.r_squared,
        lags: lags.to_vec(),
        mean_sq_increments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    /// Time or eps of the rung.
    pub at: f64,
    pub gap: f64,
    pub stderr: f64,
    pub median: f64,
}

fn gap_point(at: f64, sq: Vec<f64>) -> GapPoint {
    let (gap, stderr) = mean_stderr(&sq);
    let mut s = sq;
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    };
    GapPoint {
        at,
        gap,
        stderr: if n > 1 { stderr } else { 0.0 },
        median,
    }
}

/// <u(t_k, .), phi> by the trapezoid rule on the nodes.
pub fn pair_row(path: &FieldPath, k: usize, phi: impl Fn(f64) -> f64) -> f64 {
    let g = path.grid;
    let row = path.row(k);
    let n = row.len();
    (0..n)
        .map(|j| {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            w * row[j] * phi(g.x(j))
        })
        .sum::<f64>()
        * g.dx()
}

/// E[(<u(t), phi> - <mu, phi>)^2] per rung from `pairings[r][i]` =
/// <u(ts[i]), phi> of replicate r.
pub fn weak_convergence(ts: &[f64], pairings: &[Vec<f64>], target: f64) -> Vec<GapPoint> {
    ts.iter()
        .enumerate()
        .map(|(i, &t)| {
            gap_point(
                t,
                pairings.iter().map(|r| (r[i] - target).powi(2)).collect(),
            )
        })
        .collect()
}

/// E|u(t, x) - u_eps(t, x)|^2 per eps from paired replicate values
/// `pairs[r][i] = (u, u_eps at eps_ladder[i])`.
pub fn approx_convergence(eps_ladder: &[f64], pairs: &[Vec<(f64, f64)>]) -> Vec<GapPoint> {
    eps_ladder
        .iter()
        .enumerate()
        .map(|(i, &e)| gap_point(e, pairs.iter().map(|r| (r[i].0 - r[i].1).powi(2)).collect()))
        .collect()
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
