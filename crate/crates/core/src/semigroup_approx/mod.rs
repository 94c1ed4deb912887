//! Discrete-generator approximation of the stable semigroup:
//! exp(t (G(eps) - I)/eps) = e^{-t/eps} I + R~eps(t), with
//! R~eps(t, x) = e^{-t/eps} sum_{n>=1} (t/eps)^n / n! G(n eps, x),
//! plus the special-function bounds that control R~eps - G.

mod errors;
mod poisson;
mod series;

pub use errors::{
    green_l2_time_integral, l1_constant, l1_error, l2_error_profile, r_l2_mass, L1Error, L2Profile,
};
pub use poisson::{default_n_cut, POISSON_TAIL};
pub use series::{approx_series_f, c_b_sup, l1_sup_factor};

use crate::error::{Error, Result};
use crate::stable_green::{green_cdf, green_density, j0, InitialMeasure, StableParams, Tail};
use poisson::PoissonWindow;
use serde::{Deserialize, Serialize};

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(crate::error::out_of_range("eps", eps, "need eps > 0"));
    }
    Ok(())
}

/// R~eps(t, x) truncated after `n_cut` Poisson terms.
pub fn r_kernel(params: StableParams, eps: f64, t: f64, x: f64, n_cut: usize) -> Result<f64> {
    check_eps(eps)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let win = PoissonWindow::new(t / eps, n_cut)?;
    Ok(win
        .iter()
        .map(|(n, w)| w * green_density(params, n as f64 * eps, x))
        .sum())
}

/// Tabulated R~eps(t, .) and the atom weight e^{-t/eps}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxKernel {
    pub eps: f64,
    pub params: StableParams,
    pub t: f64,
    pub xs: Vec<f64>,
    pub r_values: Vec<f64>,
    pub atom_weight: f64,
    pub n_cut: usize,
    /// Poisson mass dropped beyond n_cut.
    pub trunc_error: f64,
}

impl ApproxKernel {
    pub fn new(params: StableParams, eps: f64, t: f64, xs: Vec<f64>) -> Result<Self> {
        check_eps(eps)?;
        let n_cut = default_n_cut(t / eps);
        let (r_values, trunc_error) = if t == 0.0 {
            (vec![0.0; xs.len()], 0.0)
        } else {
            let win = PoissonWindow::new(t / eps, n_cut)?;
            let v = xs
                .iter()
                .map(|&x| {
                    win.iter()
                        .map(|(n, w)| w * green_density(params, n as f64 * eps, x))
                        .sum()
                })
                .collect();
            (v, win.upper_tail)
        };
        Ok(Self {
            eps,
            params,
            t,
            xs,
            r_values,
            atom_weight: (-t / eps).exp(),
            n_cut,
            trunc_error,
        })
    }

    /// Trapezoid mass on the (possibly nonuniform) grid.
    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.xs, &self.r_values)
    }
}

pub(crate) fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Exact mass of R~eps(t, .) on [lo, hi] through CDF differences.
pub fn r_interval_mass(params: StableParams, eps: f64, t: f64, lo: f64, hi: f64) -> Result<f64> {
    check_eps(eps)?;
    let win = PoissonWindow::new(t / eps, default_n_cut(t / eps))?;
    Ok(win
        .iter()
        .map(|(n, w)| {
            let s = n as f64 * eps;
            w * (green_cdf(params, s, hi) - green_cdf(params, s, lo))
        })
        .sum())
}

/// Cutoff: 1 on [-1/eps, 1/eps], 1 + 1/eps - |x| on the ramp, 0 beyond.
pub fn psi_cutoff(eps: f64, x: f64) -> f64 {
    let r = 1.0 / eps;
    (1.0 + r - x.abs()).clamp(0.0, 1.0)
}

/// (mu psi_eps) * G(eps, .) sampled on `xs`, returned as a piecewise-linear
/// density on those knots.
pub fn smooth_initial(
    measure: &InitialMeasure,
    params: StableParams,
    eps: f64,
    xs: &[f64],
) -> Result<InitialMeasure> {
    check_eps(eps)?;
    measure.validate()?;
    let cut = cut_off(measure, eps)?;
    let values = xs
        .iter()
        .map(|&x| j0(&cut, params, eps, x).max(0.0))
        .collect();
    InitialMeasure::with_density(xs.to_vec(), values, Tail::None)
}

/// mu psi_eps as a measure: atoms scaled by psi, the density (including
/// a constant tail) multiplied by psi and re-linearised on subdivided ramps.
pub fn cut_off(measure: &InitialMeasure, eps: f64) -> Result<InitialMeasure> {
    let r = 1.0 / eps;
    let edge = 1.0 + r;
    let atoms: Vec<(f64, f64)> = measure
        .atoms
        .iter()
        .map(|&(l, m)| (l, m * psi_cutoff(eps, l)))
        .filter(|a| a.1 > 0.0)
        .collect();
    let mut knots: Vec<f64> = measure
        .knots
        .iter()
        .cloned()
        .filter(|k| k.abs() < edge)
        .collect();
    // the product of two linear pieces on the ramps is quadratic; sample it finely
    let ramp = 64;
    for i in 0..=ramp {
        let u = r + i as f64 / ramp as f64;
        knots.push(u);
        knots.push(-u);
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut ks = Vec::with_capacity(knots.len() + 8);
    let mut vals = Vec::with_capacity(knots.len() + 8);
    // keep jumps of the original density as repeated knots
    for &y in &knots {
        let right = measure.density_at(y) * psi_cutoff(eps, y);
        let left_y = if y > -edge { prev_float(y) } else { y };
        let left = measure.density_at(left_y) * psi_cutoff(eps, left_y);
        if (left - right).abs() > 1e-12 * (1.0 + right.abs()) {
            ks.push(y);
            vals.push(left);
        }
        ks.push(y);
        vals.push(right);
    }
    let m = InitialMeasure {
        atoms,
        knots: ks,
        values: vals,
        tail: Tail::None,
    };
    m.validate()
        .map_err(|e| Error::Invalid(format!("cut-off measure: {e}")))?;
    Ok(m)
}

fn prev_float(y: f64) -> f64 {
    if y > 0.0 {
        f64::from_bits(y.to_bits() - 1)
    } else if y < 0.0 {
        f64::from_bits(y.to_bits() + 1)
    } else {
        -f64::MIN_POSITIVE
    }
}

/// Function values on a uniform grid x_j = x0 + j dx, extended by the
/// boundary values outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn xs(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|j| self.x0 + j as f64 * self.dx)
            .collect()
    }
}

/// Cell weights of the G~eps(t) operator on a uniform grid: entry k is the
/// R~ mass of [(k - 1/2) dx, (k + 1/2) dx], k in -(n-1)..=(n-1); the end
/// entries absorb the rest of the line. The atom stays separate.
#[derive(Debug, Clone)]
pub struct ApproxStencil {
    pub atom_weight: f64,
    pub weights: Vec<f64>,
    pub half: usize,
}

impl ApproxStencil {
    pub fn new(params: StableParams, eps: f64, t: f64, dx: f64, n: usize) -> Result<Self> {
        check_eps(eps)?;
        let half = n.saturating_sub(1);
        let z = t / eps;
        let win = PoissonWindow::new(z, default_n_cut(z))?;
        let mut weights = vec![0.0; 2 * half + 1];
        for (nn, w) in win.iter() {
            let s = nn as f64 * eps;
            let cdf = |x: f64| green_cdf(params, s, x);
            let mut prev = 0.0;
            for (i, slot) in weights.iter_mut().enumerate() {
                let k = i as f64 - half as f64;
                let upper = if i == 2 * half {
                    1.0
                } else {
                    cdf((k + 0.5) * dx)
                };
                *slot += w * (upper - prev);
                prev = upper;
            }
        }
        Ok(Self {
            atom_weight: (-z).exp(),
            weights,
            half,
        })
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h = self.half as isize;
        (0..n)
            .map(|i| {
                let mut acc = self.atom_weight * f[i];
                for (k, &w) in self.weights.iter().enumerate() {
                    let j = (i as isize - (k as isize - h)).clamp(0, n as isize - 1) as usize;
                    acc += w * f[j];
                }
                acc
            })
            .collect()
    }
}

/// e^{-t/eps} f + R~eps(t) * f on the grid of `f`, cell-averaged kernel.
pub fn g_eps_apply(
    f: &GridFunction,
    params: StableParams,
    eps: f64,
    t: f64,
) -> Result<GridFunction> {
    if t == 0.0 {
        return Ok(f.clone());
    }
    let st = ApproxStencil::new(params, eps, t, f.dx, f.values.len())?;
    Ok(GridFunction {
        x0: f.x0,
        dx: f.dx,
        values: st.apply(&f.values),
    })
}

#[cfg(test)]
mod tests;
