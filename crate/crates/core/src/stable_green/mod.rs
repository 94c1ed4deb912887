//! Skewed a-stable Green function G(t,x), the homogeneous solution J0 and
//! related constants.

mod density;
mod law;
mod measure;

pub use density::{
    green_density, green_density_direct, green_table, DensityTable, TOL_MASS, TOL_NEG,
};
pub use law::{green_cdf, green_partial_moment, law_for, StableLaw};
pub use measure::{j0, InitialMeasure, Tail};

use crate::error::{out_of_range, Result};
use crate::quad::{composite, gamma, gauss_legendre, graded_breaks};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Operator parameters (a, delta) with 1 < a <= 2 and |delta| <= 2 - a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct StableParams {
    a: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    a: f64,
    delta: f64,
}

impl TryFrom<RawParams> for StableParams {
    type Error = crate::Error;
    fn try_from(r: RawParams) -> Result<Self> {
        StableParams::new(r.a, r.delta)
    }
}

// Allows |delta| to exceed 2 - a by rounding noise, e.g. 2 - 1.5 vs 0.5.
const DELTA_SLACK: f64 = 1e-12;

impl StableParams {
    pub fn new(a: f64, delta: f64) -> Result<Self> {
        if !(a > 1.0 && a <= 2.0) {
            return Err(out_of_range("a", a, "need 1 < a <= 2"));
        }
        if !delta.is_finite() || delta.abs() > 2.0 - a + DELTA_SLACK {
            return Err(out_of_range(
                "delta",
                delta,
                format!("need |delta| <= 2 - a = {}", 2.0 - a),
            ));
        }
        let delta = if a == 2.0 { 0.0 } else { delta };
        Ok(Self { a, delta })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Rotation angle delta*pi/2 of the symbol.
    pub fn theta(&self) -> f64 {
        self.delta * PI / 2.0
    }

    pub fn is_gaussian(&self) -> bool {
        self.a == 2.0
    }

    /// Conjugate exponent a* = a / (a - 1).
    pub fn a_star(&self) -> f64 {
        self.a / (self.a - 1.0)
    }

    pub(crate) fn key(&self) -> (u64, u64) {
        (self.a.to_bits(), self.delta.to_bits())
    }
}

/// Validated constructor.
pub fn make_params(a: f64, delta: f64) -> Result<StableParams> {
    StableParams::new(a, delta)
}

/// Lambda = sup_x G(1, x), by grid search on the tabulated density plus
/// golden-section refinement.
pub fn lambda_const(params: StableParams) -> f64 {
    if params.is_gaussian() {
        return 1.0 / (2.0 * PI.sqrt());
    }
    let law = law_for(params);
    let (mut best_x, mut best) = (0.0, f64::MIN);
    let n = 4000;
    for i in 0..=n {
        let x = -5.0 + 10.0 * i as f64 / n as f64;
        let v = law.density(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let h = 10.0 / n as f64;
    let (mut lo, mut hi) = (best_x - h, best_x + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (law.density(x1), law.density(x2));
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = law.density(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = law.density(x1);
        }
    }
    best.max(f1).max(f2)
}

/// P(Z <= 0) for Z ~ G(1, .), by Gil-Pelaez inversion
/// 1/2 - (1/pi) int_0^inf Im phi(xi) / xi dxi with phi(xi) = E e^{i xi Z}
/// = exp(-xi^a e^{i theta}) for xi > 0.
pub fn prob_nonpositive(params: StableParams) -> f64 {
    if params.delta == 0.0 {
        return 0.5;
    }
    let (a, th) = (params.a, params.theta());
    let (c, s) = (th.cos(), th.sin());
    // with u = xi^a, -Im phi / xi dxi becomes e^{-c u} sin(s u) / (a u) du
    let end = 40.0 / c;
    let breaks = graded_breaks(1e-6, 1.0, 0.5, end);
    let rule = composite(&breaks, &gauss_legendre(16));
    let v = rule.integrate(|u| (-c * u).exp() * (s * u).sin() / (a * u));
    0.5 + v / PI
}

/// gamma = min{P(Z <= 0), P(Z >= 0)} / 2.
pub fn gamma_const(params: StableParams) -> f64 {
    let p = prob_nonpositive(params);
    0.5 * p.min(1.0 - p)
}

/// Closed form of int_0^inf y^b / (1 + y^(2+a)) dy for b in ]-1, a+1[.
pub fn beta_integral(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(out_of_range("a", a, "need a > 0"));
    }
    if !(b > -1.0 && b < a + 1.0) {
        return Err(out_of_range(
            "b",
            b,
            format!("need -1 < b < a + 1 = {}", a + 1.0),
        ));
    }
    let q = a + 2.0;
    Ok(gamma((a - b + 1.0) / q) * gamma((a + b + 3.0) / q) / (b + 1.0))
}

/// Empirically fitted tail constants of G(1, .):
/// `k0 = sup g(x)(1+|x|^(1+a))` and `k1 = sup |g'(x)|(1+|x|^(2+a))`.
/// They are fitted from the computed density, not transcribed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedTailConstants {
    pub k0: f64,
    pub k1: f64,
}

pub fn fitted_tail_constants(params: StableParams) -> FittedTailConstants {
    let law = law_for(params);
    let a = params.a;
    let (mut k0, mut k1) = (0.0f64, 0.0f64);
    let mut scan = |x: f64| {
        let ax = x.abs();
        k0 = k0.max(law.density(x) * (1.0 + ax.powf(1.0 + a)));
        k1 = k1.max(law.derivative(x).abs() * (1.0 + ax.powf(2.0 + a)));
    };
    let n = 8000;
    for i in 0..=n {
        scan(-40.0 + 80.0 * i as f64 / n as f64);
    }
    // geometric sweep of the far tails
    let mut x = 40.0;
    while x < 1e6 {
        scan(x);
        scan(-x);
        x *= 1.05;
    }
    FittedTailConstants { k0, k1 }
}
