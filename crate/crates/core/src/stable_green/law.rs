//! The t = 1 law: density, derivative, CDF and partial first moment, built
//! once per parameter pair and cached.

use super::StableParams;
use crate::quad::{composite, gauss_legendre, graded_breaks, ln_gamma, Rule, UniformInterp};
use crate::special::normal_cdf;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Half-width of the tabulated window; the asymptotic series takes over beyond.
pub(crate) const Z_TABLE: f64 = 20.0;
const H_TABLE: f64 = 1.0 / 64.0;
/// Spectral cutoff level: e^{-c Xi^a} = e^{-32}.
const CUTOFF_EXPONENT: f64 = 32.0;

/// Large-|z| expansion sum_k c_k |z|^{-ak-1} on one side of the origin.
#[derive(Debug, Clone)]
struct TailSeries {
    a: f64,
    // (ln|c_k|, sign, k)
    terms: Vec<(f64, f64, f64)>,
}

impl TailSeries {
    fn new(a: f64, phi: f64) -> Self {
        let mut terms = Vec::new();
        let lz = Z_TABLE.ln();
        let mut prev = f64::INFINITY;
        for k in 1..400 {
            let kf = k as f64;
            let sn = (kf * phi).sin();
            let lg = ln_gamma(a * kf + 1.0) - ln_gamma(kf + 1.0) - PI.ln();
            // magnitude at the window edge, ignoring the sine factor
            let at_edge = lg - a * kf * lz;
            if at_edge > prev || at_edge < -42.0 {
                break;
            }
            prev = at_edge;
            if sn.abs() < 1e-14 {
                continue;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 } * sn.signum();
            terms.push((lg + sn.abs().ln(), sign, kf));
        }
        Self { a, terms }
    }

    /// sum_k c_k z^{-(ak + shift)} / div(ak)
    fn sum(&self, z: f64, shift: f64, div: impl Fn(f64) -> f64) -> f64 {
        let lz = z.ln();
        self.terms
            .iter()
            .map(|&(lc, sg, k)| {
                let ak = self.a * k;
                sg * (lc - (ak + shift) * lz).exp() / div(ak)
            })
            .sum()
    }

    fn density(&self, z: f64) -> f64 {
        self.sum(z, 1.0, |_| 1.0)
    }

    /// d/dz of the density on the positive side.
    fn derivative(&self, z: f64) -> f64 {
        -self.sum(z, 2.0, |ak| 1.0 / (ak + 1.0))
    }

    /// int_z^inf density
    fn mass_beyond(&self, z: f64) -> f64 {
        self.sum(z, 0.0, |ak| ak)
    }

    /// int_z^inf y density(y) dy
    fn moment_beyond(&self, z: f64) -> f64 {
        self.sum(z, -1.0, |ak| ak - 1.0)
    }
}

#[derive(Debug)]
enum Repr {
    Gaussian,
    Table(Box<Tables>),
}

#[derive(Debug)]
struct Tables {
    g: UniformInterp,
    dg: UniformInterp,
    cdf: Vec<f64>,
    m1: Vec<f64>,
    right: TailSeries,
    left: TailSeries,
    total_m1: f64,
    right_mass: f64,
}

/// The density of G(1, .) and its integrals.
#[derive(Debug)]
pub struct StableLaw {
    pub params: StableParams,
    repr: Repr,
    /// Spectral cutoff used in the inversion.
    pub xi_max: f64,
    /// Largest imaginary residue observed in the inversion (self-check).
    pub imag_residue: f64,
}

/// Quadrature nodes on [0, xi_max] adequate for |z| <= z_max, with weights
/// folded into the amplitude e^{-c xi^a} / pi.
pub(crate) struct SpectralNodes {
    pub xi: Vec<f64>,
    pub amp: Vec<f64>,
    pub phase: Vec<f64>,
}

pub(crate) fn spectral_nodes(params: StableParams, z_max: f64) -> SpectralNodes {
    let a = params.a();
    let th = params.theta();
    let (c, s) = (th.cos(), th.sin());
    let xi_max = (CUTOFF_EXPONENT / c).powf(1.0 / a);
    let omega = z_max + a * s.abs() * xi_max.powf(a - 1.0) + 1.0;
    let width = (8.0 / omega).min(0.5);
    let breaks = graded_breaks(1e-6, 1.0, width, xi_max);
    let rule: Rule = composite(&breaks, &gauss_legendre(16));
    let mut amp = Vec::with_capacity(rule.len());
    let mut phase = Vec::with_capacity(rule.len());
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let xa = x.powf(a);
        amp.push(w * (-c * xa).exp() / PI);
        phase.push(s * xa);
    }
    SpectralNodes {
        xi: rule.nodes,
        amp,
        phase,
    }
}

impl SpectralNodes {
    /// (g(z), g'(z)) where g(z) = (1/pi) int e^{-c xi^a} cos(xi z + s xi^a).
    pub fn eval(&self, z: f64) -> (f64, f64) {
        let (mut g, mut dg) = (0.0, 0.0);
        for k in 0..self.xi.len() {
            let (sn, cs) = (self.xi[k] * z + self.phase[k]).sin_cos();
            g += self.amp[k] * cs;
            dg -= self.amp[k] * self.xi[k] * sn;
        }
        (g, dg)
    }
}

impl StableLaw {
    fn build(params: StableParams) -> Self {
        if params.is_gaussian() {
            return Self {
                params,
                repr: Repr::Gaussian,
                xi_max: f64::INFINITY,
                imag_residue: 0.0,
            };
        }
        let a = params.a();
        let delta = params.delta();
        let nodes = spectral_nodes(params, Z_TABLE);
        let xi_max = *nodes.xi.last().unwrap_or(&0.0);
        let n = (2.0 * Z_TABLE / H_TABLE).round() as usize + 1;
        let x0 = -Z_TABLE;
        let mut gv = Vec::with_capacity(n);
        let mut dv = Vec::with_capacity(n);
        for i in 0..n {
            let (g, d) = nodes.eval(x0 + i as f64 * H_TABLE);
            gv.push(g);
            dv.push(d);
        }
        let imag_residue = imaginary_residue(params, &nodes);
        assert!(imag_residue < 1e-9, "imaginary residue {imag_residue:e}");
        let g = UniformInterp::new(x0, H_TABLE, gv);
        let dg = UniformInterp::new(x0, H_TABLE, dv);
        let right = TailSeries::new(a, PI * (a - delta) / 2.0);
        let left = TailSeries::new(a, PI * (a + delta) / 2.0);

        let gl4 = gauss_legendre(4);
        let mut cdf = Vec::with_capacity(n);
        let mut m1 = Vec::with_capacity(n);
        let mut f = left.mass_beyond(Z_TABLE);
        let mut m = -left.moment_beyond(Z_TABLE);
        cdf.push(f);
        m1.push(m);
        for i in 0..n - 1 {
            let lo = x0 + i as f64 * H_TABLE;
            let (df, dm) = cell_integrals(&g, &gl4, lo, lo + H_TABLE);
            f += df;
            m += dm;
            cdf.push(f);
            m1.push(m);
        }
        let right_mass = right.mass_beyond(Z_TABLE);
        let total_m1 = m + right.moment_beyond(Z_TABLE);
        let tables = Tables {
            g,
            dg,
            cdf,
            m1,
            right,
            left,
            total_m1,
            right_mass,
        };
        Self {
            params,
            repr: Repr::Table(Box::new(tables)),
            xi_max,
            imag_residue,
        }
    }

    /// g(z) = G(1, z).
    pub fn density(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian => (-z * z / 4.0).exp() / (4.0 * PI).sqrt(),
            Repr::Table(t) => {
                if z > Z_TABLE {
                    t.right.density(z)
                } else if z < -Z_TABLE {
                    t.left.density(-z)
                } else {
                    t.g.eval(z)
                }
            }
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian => -0.5 * z * self.density(z),
            Repr::Table(t) => {
                if z > Z_TABLE {
                    t.right.derivative(z)
                } else if z < -Z_TABLE {
                    -t.left.derivative(-z)
                } else {
                    t.dg.eval(z)
                }
            }
        }
    }

    /// P(Z <= z).
    pub fn cdf(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian => normal_cdf(z / std::f64::consts::SQRT_2),
            Repr::Table(t) => {
                if z > Z_TABLE {
                    1.0 - t.right.mass_beyond(z)
                } else if z < -Z_TABLE {
                    t.left.mass_beyond(-z)
                } else {
                    let (i, lo) = self.cell(z);
                    let (df, _) = cell_integrals(&t.g, gl4(), lo, z);
                    t.cdf[i] + df
                }
            }
        }
    }

    /// int_{-inf}^z y g(y) dy.
    pub fn partial_moment(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian => -2.0 * self.density(z),
            Repr::Table(t) => {
                if z > Z_TABLE {
                    t.total_m1 - t.right.moment_beyond(z)
                } else if z < -Z_TABLE {
                    -t.left.moment_beyond(-z)
                } else {
                    let (i, lo) = self.cell(z);
                    let (_, dm) = cell_integrals(&t.g, gl4(), lo, z);
                    t.m1[i] + dm
                }
            }
        }
    }

    /// Mean of Z, int y g(y) dy.
    pub fn mean(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian => 0.0,
            Repr::Table(t) => t.total_m1,
        }
    }

    /// Computed total mass; 1 up to quadrature error.
    pub fn total_mass(&self) -> f64 {
        match &self.repr {
            Repr::Gaussian => 1.0,
            Repr::Table(t) => *t.cdf.last().unwrap() + t.right_mass,
        }
    }

    fn cell(&self, z: f64) -> (usize, f64) {
        let n = (2.0 * Z_TABLE / H_TABLE).round() as usize;
        let i = (((z + Z_TABLE) / H_TABLE).floor() as usize).min(n - 1);
        (i, -Z_TABLE + i as f64 * H_TABLE)
    }
}

/// Imaginary part of the full-line inverse transform at a few points, with the
/// symbol evaluated separately on both half-lines.
fn imaginary_residue(params: StableParams, nodes: &SpectralNodes) -> f64 {
    use num_complex::Complex64;
    let a = params.a();
    let th = params.theta();
    let symbol = |xi: f64| -> Complex64 {
        let rot = Complex64::from_polar(1.0, -th * xi.signum());
        -(xi.abs().powf(a)) * rot
    };
    let mut worst = 0.0f64;
    for &z in &[-1.0, 0.0, 0.7] {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &xi) in nodes.xi.iter().enumerate() {
            // amp already holds w e^{-c xi^a} / pi; recover w / (2 pi)
            let w = nodes.amp[k] * (params.theta().cos() * xi.powf(a)).exp() / 2.0;
            for x in [xi, -xi] {
                acc += w * (Complex64::new(0.0, x * z) + symbol(x)).exp();
            }
        }
        worst = worst.max(acc.im.abs());
    }
    worst
}

fn gl4() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(4))
}

fn cell_integrals(g: &UniformInterp, gl4: &Rule, lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (0.0, 0.0);
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let (mut f, mut m) = (0.0, 0.0);
    for (&x, &w) in gl4.nodes.iter().zip(&gl4.weights) {
        // keep the stencil of the cell containing lo
        let y = (mid + half * x).min(lo + H_TABLE * (1.0 - 1e-12));
        let v = g.eval(y) * half * w;
        f += v;
        m += v * y;
    }
    (f, m)
}

type Slot = Arc<OnceLock<Arc<StableLaw>>>;

fn cache() -> &'static Mutex<HashMap<(u64, u64), Slot>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Slot>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared law for the given parameters. The first caller for a key builds it;
/// concurrent callers for the same key wait, other keys proceed.
pub fn law_for(params: StableParams) -> Arc<StableLaw> {
    let slot = {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry(params.key()).or_default().clone()
    };
    slot.get_or_init(|| Arc::new(StableLaw::build(params)))
        .clone()
}

/// P(X_t <= x) for the law G(t, .).
pub fn green_cdf(params: StableParams, t: f64, x: f64) -> f64 {
    let s = t.powf(1.0 / params.a());
    law_for(params).cdf(x / s)
}

/// int_{-inf}^x y G(t, y) dy.
pub fn green_partial_moment(params: StableParams, t: f64, x: f64) -> f64 {
    let s = t.powf(1.0 / params.a());
    s * law_for(params).partial_moment(x / s)
}
