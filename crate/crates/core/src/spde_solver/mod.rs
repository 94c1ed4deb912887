//! Lattice solver for du = D u dt + rho(u) W(dt, dx) in mild form, plus the
//! mollified-noise system driven by the discrete generator.

mod ensemble;
mod grid;
mod io;
mod mollified;
mod noise;

pub use ensemble::run_ensemble;
pub use grid::SpaceTimeGrid;
pub use io::FieldManifest;
pub use mollified::{mollifier_weights, simulate_mollified, MollifiedSolver};
pub use noise::{cell_normal, make_noise, replicate_seed, NoiseLattice};

use crate::error::{Error, Result};
use crate::kernel_series::RhoSpec;
use crate::stable_green::{green_cdf, j0, InitialMeasure, StableParams};
use serde::{Deserialize, Serialize};

/// Default ceiling on |u| before a run is reported as blown up.
pub const DEFAULT_CEILING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExponentialMild,
    MollifiedSde,
}

/// One realised solution surface. Row k of `u` holds the values at
/// `times[k]` on the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPath {
    pub grid: SpaceTimeGrid,
    pub params: StableParams,
    pub rho: Option<RhoSpec>,
    pub measure: InitialMeasure,
    pub seed: u64,
    pub scheme: Scheme,
    pub warm_start_t: f64,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
}

impl FieldPath {
    pub fn n_rows(&self) -> usize {
        self.times.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let m = self.grid.n_nodes();
        &self.u[k * m..(k + 1) * m]
    }

    /// Row whose time is within dt/2 of t.
    pub fn row_of(&self, t: f64) -> Option<usize> {
        let dt = self.grid.dt();
        self.times.iter().position(|&s| (s - t).abs() < 0.5 * dt)
    }

    pub fn value_at(&self, t: f64, x: f64) -> Option<f64> {
        let k = self.row_of(t)?;
        let j = self.grid.node_of(x)?;
        Some(self.row(k)[j])
    }
}

/// Cell masses of G(t, .): entry k (k = -n..=n) is the mass of
/// [(k - 1/2) dx, (k + 1/2) dx].
pub fn cell_kernel(params: StableParams, t: f64, dx: f64, n: usize) -> Vec<f64> {
    let mut prev = green_cdf(params, t, -(n as f64 + 0.5) * dx);
    (0..=2 * n)
        .map(|i| {
            let k = i as f64 - n as f64;
            let up = green_cdf(params, t, (k + 0.5) * dx);
            let w = up - prev;
            prev = up;
            w
        })
        .collect()
}

/// Drops the outer kernel entries below 1e-18 of the peak (Gaussian tails);
/// heavy stable tails keep the full width.
pub(crate) fn trim_kernel(kernel: &[f64]) -> Vec<f64> {
    let n = (kernel.len() - 1) / 2;
    let peak = kernel.iter().cloned().fold(0.0, f64::max);
    let mut w = n;
    while w > 0 && kernel[n - w] < 1e-18 * peak && kernel[n + w] < 1e-18 * peak {
        w -= 1;
    }
    kernel[n - w..=n + w].to_vec()
}

/// out_i = sum_j kernel[i - j + w] f_j with w the kernel half-width
/// (no wrap, zero outside the nodes).
pub(crate) fn convolve(kernel: &[f64], f: &[f64], out: &mut [f64]) {
    let m = f.len() as isize;
    let w = ((kernel.len() - 1) / 2) as isize;
    for (i, o) in out.iter_mut().enumerate() {
        let i = i as isize;
        let lo = (i - w).max(0);
        let hi = (i + w).min(m - 1);
        // j runs lo..=hi, kernel index i - j + w runs down from i - lo + w
        let fs = &f[lo as usize..=hi as usize];
        let ks = &kernel[(i - hi + w) as usize..=(i - lo + w) as usize];
        let mut acc = 0.0;
        for (k, v) in ks.iter().rev().zip(fs) {
            acc += k * v;
        }
        *o = acc;
    }
}

/// Age at which the noise of one step enters the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLag {
    /// Propagated by G(dt), the left-point rule.
    #[default]
    Endpoint,
    /// Propagated by G(theta dt), theta = (1 - 1/a)^a, so that
    /// dt int G(theta dt, x)^2 dx equals int_0^dt int G(s, x)^2 dx ds.
    VarianceMatched,
}

impl NoiseLag {
    pub fn theta(&self, a: f64) -> f64 {
        match self {
            NoiseLag::Endpoint => 1.0,
            NoiseLag::VarianceMatched => (1.0 - 1.0 / a).powf(a),
        }
    }
}

/// Precomputed pieces of the exponential mild scheme for one
/// (params, measure, rho, grid): u = J0 + I, with
/// I_{k+1} = P * I_k + Q * [rho(u_k) W_k / dx], P the cell-averaged G(dt)
/// and Q = P unless a variance-matched noise lag is chosen.
#[derive(Debug, Clone)]
pub struct MildSolver {
    pub params: StableParams,
    pub rho: Option<RhoSpec>,
    pub measure: InitialMeasure,
    pub grid: SpaceTimeGrid,
    pub ceiling: f64,
    /// J0(t_k, x_j), row-major.
    pub j0: Vec<f64>,
    pub times: Vec<f64>,
    pub noise_lag: NoiseLag,
    kernel: Vec<f64>,
    noise_kernel: Option<Vec<f64>>,
}

impl MildSolver {
    /// `rho = None` switches the noise off.
    pub fn new(
        params: StableParams,
        measure: &InitialMeasure,
        rho: Option<RhoSpec>,
        grid: SpaceTimeGrid,
    ) -> Result<Self> {
        grid.validate()?;
        grid.check_cfl(params.a())?;
        measure.validate()?;
        let dt = grid.dt();
        let xs = grid.xs();
        // warm start: rows at t = dt, 2 dt, ..., T
        let times: Vec<f64> = (1..=grid.n_t).map(|k| k as f64 * dt).collect();
        let mut j0v = Vec::with_capacity(times.len() * xs.len());
        for &t in &times {
            for &x in &xs {
                j0v.push(j0(measure, params, t, x));
            }
        }
        let kernel = trim_kernel(&cell_kernel(params, dt, grid.dx(), grid.n_x));
        Ok(Self {
            params,
            rho,
            measure: measure.clone(),
            grid,
            ceiling: DEFAULT_CEILING,
            j0: j0v,
            times,
            noise_lag: NoiseLag::Endpoint,
            kernel,
            noise_kernel: None,
        })
    }

    pub fn with_noise_lag(mut self, lag: NoiseLag) -> Self {
        self.noise_lag = lag;
        self.noise_kernel = match lag {
            NoiseLag::Endpoint => None,
            NoiseLag::VarianceMatched => {
                let th = lag.theta(self.params.a());
                Some(trim_kernel(&cell_kernel(
                    self.params,
                    th * self.grid.dt(),
                    self.grid.dx(),
                    self.grid.n_x,
                )))
            }
        };
        self
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    /// Solution values, row-major over `times` x nodes.
    pub fn solve(&self, noise: &NoiseLattice) -> Result<Vec<f64>> {
        if noise.grid != self.grid {
            return Err(Error::GridMismatch(
                "noise lattice grid differs from the solver grid".into(),
            ));
        }
        let m = self.grid.n_nodes();
        let rows = self.times.len();
        let mut u = self.j0.clone();
        check_row(&u[..m], 0, self.ceiling)?;
        let Some(rho) = self.rho else {
            return Ok(u);
        };
        let inv_dx = 1.0 / self.grid.dx();
        let mut integral = vec![0.0; m];
        let mut kicked = vec![0.0; m];
        let mut scratch = vec![0.0; m];
        for k in 0..rows - 1 {
            // noise of time cell k + 1 drives t_k -> t_{k+1}; cell 0 is the dropped sliver
            let w = noise.row(k + 1);
            let cur = &u[k * m..(k + 1) * m];
            match &self.noise_kernel {
                None => {
                    for j in 0..m {
                        kicked[j] = integral[j] + rho.eval(cur[j]) * w[j] * inv_dx;
                    }
                    convolve(&self.kernel, &kicked, &mut integral);
                }
                Some(q) => {
                    for j in 0..m {
                        kicked[j] = rho.eval(cur[j]) * w[j] * inv_dx;
                    }
                    convolve(q, &kicked, &mut scratch);
                    convolve(&self.kernel, &integral, &mut kicked);
                    for j in 0..m {
                        integral[j] = kicked[j] + scratch[j];
                    }
                }
            }
            let next = &mut u[(k + 1) * m..(k + 2) * m];
            for (v, i) in next.iter_mut().zip(&integral) {
                *v += i;
            }
            check_row(next, k + 1, self.ceiling)?;
        }
        Ok(u)
    }

    pub fn path(&self, noise: &NoiseLattice) -> Result<FieldPath> {
        Ok(FieldPath {
            grid: self.grid,
            params: self.params,
            rho: self.rho,
            measure: self.measure.clone(),
            seed: noise.seed,
            scheme: Scheme::ExponentialMild,
            warm_start_t: self.grid.dt(),
            times: self.times.clone(),
            u: self.solve(noise)?,
        })
    }
}

pub(crate) fn check_row(row: &[f64], step: usize, ceiling: f64) -> Result<()> {
    for &v in row {
        if !(v.abs() <= ceiling) {
            return Err(Error::Blowup {
                step,
                value: v.abs(),
                ceiling,
            });
        }
    }
    Ok(())
}

pub fn simulate(
    params: StableParams,
    measure: &InitialMeasure,
    rho: Option<RhoSpec>,
    grid: SpaceTimeGrid,
    noise: &NoiseLattice,
) -> Result<FieldPath> {
    MildSolver::new(params, measure, rho, grid)?.path(noise)
}

/// Two paths from mu1 <= mu2 driven by the same noise.
pub fn simulate_coupled(
    params: StableParams,
    mu1: &InitialMeasure,
    mu2: &InitialMeasure,
    rho: Option<RhoSpec>,
    grid: SpaceTimeGrid,
    noise: &NoiseLattice,
) -> Result<(FieldPath, FieldPath)> {
    if !mu1.is_dominated_by(mu2) {
        return Err(Error::Invalid("coupled run needs mu1 <= mu2".into()));
    }
    Ok((
        simulate(params, mu1, rho, grid, noise)?,
        simulate(params, mu2, rho, grid, noise)?,
    ))
}
