use super::rho::RhoSpec;
use super::spectrum::{beta_n, spectrum_for, KernelSpectrum, Resolution};
use super::table::{k_kernel_with, KernelGrid, SeriesOptions};
use crate::error::{Error, Result};
use crate::stable_green::{InitialMeasure, StableParams};

/// int_0^t int K(s, x; lambda) dx ds = sum_n lambda^{2n+2} P_n(0) t^{beta_n+1} / (beta_n+1).
pub fn integrated_mass(params: StableParams, lambda: f64, t: f64, res: Resolution) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let spec = spectrum_for(params, res);
    let mut sum = 0.0;
    let mut n = 0;
    loop {
        let term = layer_time_integral(&spec, lambda, n, t);
        sum += term;
        if term <= 1e-14 * sum && n > 2 {
            return Ok(sum);
        }
        n += 1;
        if n >= super::DEFAULT_MAX_TERMS {
            return Err(Error::NoConvergence {
                terms: n,
                last_ratio: term / sum,
            });
        }
    }
}

/// int_0^t int L_n(s, x; lambda) dx ds = lambda^{2n+2} P_n(0) t^{beta_n+1} / (beta_n+1).
pub(crate) fn layer_time_integral(spec: &KernelSpectrum, lambda: f64, n: usize, t: f64) -> f64 {
    let layer = spec.layers(n).pop().expect("layer");
    let p0 = layer.grid.vals[0].re;
    let b = beta_n(spec.params.a(), n) + 1.0;
    let ln_term =
        (2 * n + 2) as f64 * lambda.abs().ln() + b * t.ln() + layer.ln_scale + p0.ln() - b.ln();
    ln_term.exp()
}

/// Second-moment style bound `A J0^2 + ([vartheta^2 + A J0^2] * K(.; lambda))(t, x)`
/// with (A, lambda) = (1, Lip_rho) for p = 2 and (2, 4 sqrt(p) Lip_rho) for p > 2.
///
/// Evaluated exactly through the layer structure for initial data that is
/// zero, a single point mass or a constant density.
pub fn moment_upper_bound(
    p: u32,
    measure: &InitialMeasure,
    rho: &RhoSpec,
    params: StableParams,
    t: f64,
    x: f64,
) -> Result<f64> {
    moment_upper_bound_with(p, measure, rho, params, t, x, SeriesOptions::new(1e-10))
}

pub fn moment_upper_bound_with(
    p: u32,
    measure: &InitialMeasure,
    rho: &RhoSpec,
    params: StableParams,
    t: f64,
    x: f64,
    opts: SeriesOptions,
) -> Result<f64> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::Invalid(format!(
            "moment order must be an even integer >= 2, got {p}"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("moment bound needs t > 0, got {t}")));
    }
    measure.validate()?;
    let (amp, lambda) = if p == 2 {
        (1.0, rho.lip_rho())
    } else {
        (2.0, 4.0 * (p as f64).sqrt() * rho.lip_rho())
    };
    let vt2 = rho.vartheta().powi(2);
    let theta_part = if vt2 > 0.0 {
        vt2 * integrated_mass(params, lambda, t, opts.res)?
    } else {
        0.0
    };
    let has_density = measure.values.iter().any(|v| *v != 0.0);
    let c = measure.tail.value();
    if measure.is_zero() {
        return Ok(theta_part);
    }
    if measure.atoms.is_empty() && !has_density {
        // J0 = c everywhere
        let c2 = amp * c * c;
        return Ok(c2 + theta_part + c2 * integrated_mass(params, lambda, t, opts.res)?);
    }
    if measure.atoms.len() == 1 && !has_density && c == 0.0 {
        // J0^2 = m^2 G^2 = (m^2 / lambda^2) L_0, and L_0 * K = K - L_0
        let (loc, m) = measure.atoms[0];
        let grid = KernelGrid::new(vec![t], vec![x - loc])?;
        let k = k_kernel_with(lambda, params, &grid, opts)?;
        return Ok(amp * m * m / (lambda * lambda) * k.values[0][0] + theta_part);
    }
    Err(Error::Invalid(
        "moment bound is implemented for zero, single point-mass and constant initial data".into(),
    ))
}
