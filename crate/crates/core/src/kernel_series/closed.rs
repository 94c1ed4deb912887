use crate::special::{bessel_i0, normal_cdf};
use std::f64::consts::PI;

fn gauss(nu: f64, t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * nu * t)).exp() / (2.0 * PI * nu * t).sqrt()
}

/// Closed form of K for the heat operator d/dt - (nu/2) d^2/dx^2.
pub fn k_heat_closed(nu: f64, lambda: f64, t: f64, x: f64) -> f64 {
    let l2 = lambda * lambda;
    if l2 == 0.0 {
        return 0.0;
    }
    let l4 = l2 * l2;
    let first = l2 / (4.0 * PI * nu * t).sqrt();
    let second =
        l4 / (2.0 * nu) * (l4 * t / (4.0 * nu)).exp() * normal_cdf(l2 * (t / (2.0 * nu)).sqrt());
    gauss(nu / 2.0, t, x) * (first + second)
}

/// Closed form of K for the wave operator with speed kappa.
pub fn k_wave_closed(kappa: f64, lambda: f64, t: f64, x: f64) -> f64 {
    if x.abs() > kappa * t {
        return 0.0;
    }
    let l2 = lambda * lambda;
    let arg = (l2 * ((kappa * t).powi(2) - x * x) / (2.0 * kappa))
        .max(0.0)
        .sqrt();
    l2 / 4.0 * bessel_i0(arg)
}

/// Envelope Q^p exp(Q p^{(2a-1)/(a-1)} t).
pub fn moment_growth_bound(a: f64, p: f64, t: f64, q: f64) -> f64 {
    q.powf(p) * (q * p.powf((2.0 * a - 1.0) / (a - 1.0)) * t).exp()
}
