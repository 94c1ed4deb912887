//! Iterated space-time self-convolutions L_n of lambda^2 G^2, their sum K,
//! heat and wave closed forms, the upper envelope of K and the moment bounds
//! built from it.
//!
//! Layers are computed spectrally: the spatial transform of L_n factorises
//! into a universal profile P_n(t^{1/a} xi) (see [`spectrum`]), so the time
//! convolutions reduce to one-dimensional product integrals in the ratio
//! s/t. L_0 itself is evaluated in real space.

mod closed;
mod moment;
mod rho;
pub mod spectrum;
mod table;

pub use closed::{k_heat_closed, k_wave_closed, moment_growth_bound};
pub use moment::{integrated_mass, moment_upper_bound, moment_upper_bound_with};
pub use rho::{RhoKind, RhoSpec};
pub use spectrum::Resolution;
pub use table::{
    k_kernel, k_kernel_with, ln_kernel, ln_kernel_with, KernelGrid, KernelTable, SeriesOptions,
    DEFAULT_MAX_TERMS,
};

use crate::error::{Error, Result};
use crate::quad::gamma;
use crate::stable_green::{green_density, lambda_const, StableParams};

/// gamma = lambda^2 Lambda Gamma(1 - 1/a).
pub fn upper_gamma(params: StableParams, lambda: f64) -> f64 {
    lambda * lambda * lambda_const(params) * gamma(1.0 - 1.0 / params.a())
}

/// (C / t^{1/a}) G(t,x) (1 + t^{1/a} exp(gamma^{a*} t)).
pub fn k_upper_bound(params: StableParams, lambda: f64, t: f64, x: f64, c: f64) -> f64 {
    let a = params.a();
    let ta = t.powf(1.0 / a);
    let g = upper_gamma(params, lambda);
    c / ta * green_density(params, t, x) * (1.0 + ta * (g.powf(params.a_star()) * t).exp())
}

/// 1.05 times the largest ratio K / bound(C = 1) over the table entries.
pub fn fit_upper_constant(table: &KernelTable) -> Result<f64> {
    let mut worst = 0.0f64;
    for (&t, row) in table.ts.iter().zip(&table.values) {
        for (&x, &k) in table.xs.iter().zip(row) {
            let b = k_upper_bound(table.params, table.lambda, t, x, 1.0);
            if b > 0.0 {
                worst = worst.max(k / b);
            } else if k > 0.0 {
                return Err(Error::Invalid(format!(
                    "bound shape vanishes at (t={t}, x={x}) where K = {k}"
                )));
            }
        }
    }
    Ok(1.05 * worst)
}

#[cfg(test)]
mod tests;
