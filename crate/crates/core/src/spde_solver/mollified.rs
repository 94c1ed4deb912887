use super::{check_row, FieldPath, NoiseLattice, Scheme, SpaceTimeGrid, DEFAULT_CEILING};
use crate::error::{out_of_range, Error, Result};
use crate::kernel_series::RhoSpec;
use crate::semigroup_approx::{smooth_initial, ApproxStencil};
use crate::stable_green::{InitialMeasure, StableParams};

/// phi_eps(k dx) = (2 pi eps)^{-1/2} exp(-(k dx)^2 / (2 eps)) for |k| <= reach,
/// reach covering 12 standard deviations.
pub fn mollifier_weights(eps: f64, dx: f64, max_reach: usize) -> Vec<f64> {
    let reach = ((12.0 * eps.sqrt() / dx).ceil() as usize).min(max_reach);
    let c = (2.0 * std::f64::consts::PI * eps).sqrt().recip();
    (0..=2 * reach)
        .map(|i| {
            let y = (i as f64 - reach as f64) * dx;
            c * (-y * y / (2.0 * eps)).exp()
        })
        .collect()
}

/// Exponential stepping of du_j = (1/eps)(G(eps) * u - u)_j dt + rho(u_j) dW^eps_j,
/// dW^eps_j = sum_k phi_eps(x_j - y_k) W(cell k), started from
/// (mu psi_eps) * G(eps) at t = 0.
#[derive(Debug, Clone)]
pub struct MollifiedSolver {
    pub params: StableParams,
    pub rho: Option<RhoSpec>,
    pub measure: InitialMeasure,
    pub eps: f64,
    pub grid: SpaceTimeGrid,
    pub ceiling: f64,
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    stencil: ApproxStencil,
    phi: Vec<f64>,
}

impl MollifiedSolver {
    pub fn new(
        params: StableParams,
        measure: &InitialMeasure,
        rho: Option<RhoSpec>,
        eps: f64,
        grid: SpaceTimeGrid,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(out_of_range("eps", eps, "need eps > 0"));
        }
        grid.validate()?;
        grid.check_cfl(params.a())?;
        let xs = grid.xs();
        let initial = smooth_initial(measure, params, eps, &xs)?.values;
        let stencil = ApproxStencil::new(params, eps, grid.dt(), grid.dx(), grid.n_nodes())?;
        let phi = mollifier_weights(eps, grid.dx(), grid.n_x);
        let times = (0..=grid.n_t).map(|k| k as f64 * grid.dt()).collect();
        Ok(Self {
            params,
            rho,
            measure: measure.clone(),
            eps,
            grid,
            ceiling: DEFAULT_CEILING,
            initial,
            times,
            stencil,
            phi,
        })
    }

    pub fn solve(&self, noise: &NoiseLattice) -> Result<Vec<f64>> {
        if noise.grid != self.grid {
            return Err(Error::GridMismatch(
                "noise lattice grid differs from the solver grid".into(),
            ));
        }
        let m = self.grid.n_nodes();
        let mut u = Vec::with_capacity(self.times.len() * m);
        u.extend_from_slice(&self.initial);
        let reach = (self.phi.len() - 1) / 2;
        let mut kicked = vec![0.0; m];
        for n in 0..self.grid.n_t {
            let cur = &u[n * m..(n + 1) * m];
            match self.rho {
                Some(rho) => {
                    let w = noise.row(n);
                    for j in 0..m {
                        let lo = j.saturating_sub(reach);
                        let hi = (j + reach).min(m - 1);
                        let mut dw = 0.0;
                        for k in lo..=hi {
                            dw += self.phi[k + reach - j] * w[k];
                        }
                        kicked[j] = cur[j] + rho.eval(cur[j]) * dw;
                    }
                }
                None => kicked.copy_from_slice(cur),
            }
            let next = self.stencil.apply(&kicked);
            check_row(&next, n + 1, self.ceiling)?;
            u.extend_from_slice(&next);
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
            scheme: Scheme::MollifiedSde,
            warm_start_t: 0.0,
            times: self.times.clone(),
            u: self.solve(noise)?,
        })
    }
}

pub fn simulate_mollified(
    params: StableParams,
    measure: &InitialMeasure,
    rho: Option<RhoSpec>,
    eps: f64,
    grid: SpaceTimeGrid,
    noise: &NoiseLattice,
) -> Result<FieldPath> {
    MollifiedSolver::new(params, measure, rho, eps, grid)?.path(noise)
}
