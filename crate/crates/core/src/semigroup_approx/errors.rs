use super::poisson::PoissonWindow;
use super::series::l1_sup_factor;
use super::{default_n_cut, trapezoid};
use crate::error::{out_of_range, Result};
use crate::quad::{composite, gauss_legendre, Rule};
use crate::stable_green::{
    beta_integral, fitted_tail_constants, green_cdf, green_density, StableParams,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// L1 distance between R~eps(t, .) and G(t, .) and the bound it must obey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Error {
    pub numeric: f64,
    pub bound: f64,
    /// Constant C of the bound, built from the fitted K_{a,1}.
    pub constant: f64,
    pub k_a1_fitted: f64,
    /// Mass of G(t, .) outside the quadrature window (not counted in `numeric`).
    pub outside_mass: f64,
}

/// C = (1/a)(1 + K_{a,1} Gamma(a/(a+2)) Gamma((a+4)/(a+2))) (sup_z ...)^{1/2}.
pub fn l1_constant(params: StableParams) -> (f64, f64) {
    let a = params.a();
    let k1 = fitted_tail_constants(params).k1;
    // int |y| / (1 + |y|^{2+a}) dy over the line
    let moment = 2.0 * beta_integral(a, 1.0).expect("b = 1 is in range");
    ((1.0 + k1 * moment) / a * l1_sup_factor().sqrt(), k1)
}

/// Quadrature grid for x: uniform core with spacing `h` on [-core, core],
/// geometric spacing (ratio 1.03) beyond, out to `reach`.
fn l1_grid(h: f64, core: f64, reach: f64) -> Vec<f64> {
    let mut right = Vec::new();
    let n = (core / h).ceil() as usize;
    for i in 0..=n {
        right.push(i as f64 * h);
    }
    let mut x = n as f64 * h;
    let mut step = h;
    while x < reach {
        step *= 1.03;
        x += step;
        right.push(x);
    }
    let mut xs: Vec<f64> = right.iter().skip(1).rev().map(|v| -v).collect();
    xs.extend(right);
    xs
}

pub fn l1_error(params: StableParams, eps: f64, t: f64) -> Result<L1Error> {
    if !(eps > 0.0) {
        return Err(out_of_range("eps", eps, "need eps > 0"));
    }
    if !(t > 0.0) {
        return Err(out_of_range("t", t, "need t > 0"));
    }
    let a = params.a();
    let z = t / eps;
    let win = PoissonWindow::new(z, default_n_cut(z))?;
    let n_hi = win.lo + win.weights.len() - 1;
    let narrow = (win.lo as f64 * eps).min(t).powf(1.0 / a);
    let wide = (n_hi as f64 * eps).max(t).powf(1.0 / a);
    let xs = l1_grid(narrow / 16.0, 40.0 * wide, 1e5 * wide);
    let diff: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let r: f64 = win
                .iter()
                .map(|(n, w)| w * green_density(params, n as f64 * eps, x))
                .sum();
            (r - green_density(params, t, x)).abs()
        })
        .collect();
    let numeric = trapezoid(&xs, &diff);
    let reach = xs[xs.len() - 1];
    let outside_mass = 1.0 - (green_cdf(params, t, reach) - green_cdf(params, t, -reach));
    let (constant, k1) = l1_constant(params);
    let bound = (-z).exp() + constant * (eps / t).sqrt();
    Ok(L1Error {
        numeric,
        bound,
        constant,
        k_a1_fitted: k1,
        outside_mass,
    })
}

/// psi(xi) = |xi|^a e^{-i theta sgn xi}, for xi >= 0.
fn psi(params: StableParams, xi: f64) -> C64 {
    C64::from_polar(xi.powf(params.a()), -params.theta())
}

/// Transform of R~eps(s, .): exp(-(s/eps)(1 - e^{-eps psi})) - e^{-s/eps}.
fn r_hat(params: StableParams, eps: f64, s: f64, xi: f64) -> C64 {
    let p = psi(params, xi);
    let z = s / eps;
    // 1 - e^{-eps psi} without cancellation for small eps psi
    let one_minus = -(-(p * eps)).exp_m1();
    (-(one_minus * z)).exp() - (-z).exp()
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for C64 {
    fn exp_m1(self) -> C64 {
        if self.norm() < 1e-5 {
            self + self * self / 2.0 + self * self * self / 6.0
        } else {
            self.exp() - 1.0
        }
    }
}

/// Log-graded rule on [0, reach]: dyadic shells, 8 Gauss panels each.
fn log_rule(reach: f64, shells: usize) -> Rule {
    let mut breaks = vec![0.0];
    for k in (0..shells).rev() {
        let lo = reach * 0.5f64.powi(k as i32 + 1);
        let hi = reach * 0.5f64.powi(k as i32);
        for j in 0..8 {
            breaks.push(lo + (hi - lo) * j as f64 / 8.0);
        }
    }
    breaks.push(reach);
    breaks.dedup();
    composite(&breaks, &gauss_legendre(16))
}

fn freq_reach(params: StableParams, rate: f64) -> f64 {
    // |.|^2 below e^{-80} beyond reach
    let c = params.theta().cos();
    (40.0 / (rate * c)).powf(1.0 / params.a())
}

/// (1/pi) int_0^inf |h(xi)|^2 d xi, h of real-valued kernel.
fn parseval(rule: &Rule, h: impl Fn(f64) -> C64) -> f64 {
    rule.integrate(|xi| h(xi).norm_sqr()) / PI
}

/// int R~eps(t, x)^2 dx.
pub fn r_l2_mass(params: StableParams, eps: f64, t: f64) -> f64 {
    let reach = freq_reach(params, eps.min(t));
    parseval(&log_rule(reach, 48), |xi| r_hat(params, eps, t, xi))
}

/// Space-time L2 gap and companion values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Profile {
    /// int_0^T int (R~eps - G)^2 dx ds.
    pub integral: f64,
    /// int R~eps(T, x)^2 dx.
    pub r_l2_at_t: f64,
}

/// int_0^T g(s) ds for g ~ s^{-1/a} at 0, via s = T v^q, q = a/(a-1).
fn singular_time_integral(a: f64, t_end: f64, g: impl Fn(f64) -> f64) -> f64 {
    let q = a / (a - 1.0);
    let breaks: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
    let rule = composite(&breaks, &gauss_legendre(8));
    rule.integrate(|v| {
        let s = t_end * v.powf(q);
        g(s) * t_end * q * v.powf(q - 1.0)
    })
}

pub fn l2_error_profile(params: StableParams, eps: f64, t_end: f64) -> Result<L2Profile> {
    if !(eps > 0.0) {
        return Err(out_of_range("eps", eps, "need eps > 0"));
    }
    if !(t_end > 0.0) {
        return Err(out_of_range("T", t_end, "need T > 0"));
    }
    let integral = singular_time_integral(params.a(), t_end, |s| {
        let reach = freq_reach(params, eps.min(s));
        parseval(&log_rule(reach, 48), |xi| {
            r_hat(params, eps, s, xi) - (-psi(params, xi) * s).exp()
        })
    });
    Ok(L2Profile {
        integral,
        r_l2_at_t: r_l2_mass(params, eps, t_end),
    })
}

/// int_0^T int G(s, x)^2 dx ds by the same quadrature.
pub fn green_l2_time_integral(params: StableParams, t_end: f64) -> f64 {
    singular_time_integral(params.a(), t_end, |s| {
        parseval(&log_rule(freq_reach(params, s), 48), |xi| {
            (-psi(params, xi) * s).exp()
        })
    })
}
