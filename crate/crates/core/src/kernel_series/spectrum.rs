//! Spectral representation of the layers L_n.
//!
//! With zeta = t^{1/a} xi and E(t, xi) = exp(-t 2^{1-a} |xi|^a e^{-i theta}),
//! the spatial Fourier transform of layer n at lambda = 1 factorises as
//! `L_n^(t, xi) = E(t, xi) t^{beta_n} P_n(zeta)` with
//! `beta_n = (n+1)(1-1/a) - 1`, `P_0 = Q` and
//! `P_n(zeta) = int_0^1 (1-u)^{-1/a} u^{beta_{n-1}} Q((1-u)^{1/a} zeta) P_{n-1}(u^{1/a} zeta) du`,
//! where `Q(zeta) = FT[g^2](zeta) exp(2^{1-a} zeta^a e^{-i theta})` and g = G(1, .).

use crate::quad::{composite, gauss_jacobi_unit, gauss_legendre, Rule};
use crate::stable_green::StableParams;
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Level at which E(t, xi) is treated as zero: |E| = e^{-35}.
pub(crate) const SPECTRAL_DECAY: f64 = 35.0;

pub(crate) const SIGMA_POWER: f64 = 4.0;

/// Numerical resolution of the spectral machinery.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Resolution {
    /// Points of the sigma grid carrying Q and P_n.
    pub n_sigma: usize,
    /// Geometric refinement levels toward each end of the u-integral.
    pub u_levels: usize,
    /// Gauss points per u-panel.
    pub u_order: usize,
    /// Panel width of the zeta-inversion quadrature, relative to the
    /// oscillation scale.
    pub zeta_width: f64,
    /// Gauss points per zeta-panel.
    pub zeta_order: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_sigma: 1200,
            u_levels: 10,
            u_order: 12,
            zeta_width: 1.0,
            zeta_order: 16,
        }
    }
}

impl Resolution {
    /// Resolution ladder: level 0 is coarse, each level halves the spacings.
    pub fn level(k: u32) -> Self {
        let f = 2f64.powi(k as i32);
        Self {
            n_sigma: (300.0 * f) as usize,
            u_levels: 4 + 3 * k as usize,
            u_order: 6 + 3 * k as usize,
            zeta_width: 4.0 / f,
            zeta_order: 6 + 4 * k as usize,
        }
    }

    fn key(&self) -> (usize, usize, usize, u64, usize) {
        (
            self.n_sigma,
            self.u_levels,
            self.u_order,
            self.zeta_width.to_bits(),
            self.zeta_order,
        )
    }
}

/// Complex values on a grid uniform in sigma = zeta^{1/SIGMA_POWER}, 6-point
/// Lagrange interpolation. The power makes the zeta^a cusp at 0 smooth enough.
#[derive(Debug, Clone)]
pub(crate) struct SigmaGrid {
    pub h: f64,
    pub vals: Vec<C64>,
}

impl SigmaGrid {
    pub fn eval(&self, zeta: f64) -> C64 {
        self.eval_index(zeta.max(0.0).powf(1.0 / SIGMA_POWER) / self.h)
    }

    /// Evaluation at fractional grid index `s`.
    pub fn eval_index(&self, s: f64) -> C64 {
        let n = self.vals.len();
        let i = s.floor() as isize;
        let start = (i - 2).clamp(0, n as isize - 6) as usize;
        let x = s - start as f64;
        // Lagrange basis on nodes 0..6 at offset x
        const DEN: [f64; 6] = [-120.0, 24.0, -12.0, 12.0, -24.0, 120.0];
        let d: [f64; 6] = std::array::from_fn(|j| x - j as f64);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..6 {
            if d[j] == 0.0 {
                return self.vals[start + j];
            }
            let mut l = 1.0;
            for (m, dm) in d.iter().enumerate() {
                if m != j {
                    l *= dm;
                }
            }
            acc += self.vals[start + j] * (l / DEN[j]);
        }
        acc
    }
}

/// One layer: P_n = exp(ln_scale) * vals.
#[derive(Debug, Clone)]
pub(crate) struct Layer {
    pub ln_scale: f64,
    pub grid: SigmaGrid,
}

/// Cached spectral layers for one (params, resolution).
#[derive(Debug)]
pub struct KernelSpectrum {
    pub params: StableParams,
    pub res: Resolution,
    /// Spectral window [0, zeta_max] beyond which E(zeta) < e^{-35}.
    pub zeta_max: f64,
    pub(crate) q: SigmaGrid,
    layers: Mutex<Vec<Arc<Layer>>>,
    gaussian: bool,
}

pub(crate) fn beta_n(a: f64, n: usize) -> f64 {
    (n as f64 + 1.0) * (1.0 - 1.0 / a) - 1.0
}

/// e^{-i theta}
fn omega(params: StableParams) -> C64 {
    C64::from_polar(1.0, -params.theta())
}

/// Symbol psi(x) = |x|^a e^{-i theta sgn x}.
fn psi(params: StableParams, x: f64) -> C64 {
    if x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    C64::from_polar(x.abs().powf(params.a()), -params.theta() * x.signum())
}

/// Q(zeta) by quadrature of (1/2pi) int exp(S - psi(eta) - psi(zeta - eta)) d eta.
fn q_direct(params: StableParams, zeta: f64, gl: &Rule) -> C64 {
    let a = params.a();
    let c = params.theta().cos();
    let s_exp = omega(params) * 2f64.powf(1.0 - a) * zeta.powf(a);
    let reach = (45.0 / c).powf(1.0 / a) + 1.0;
    let w_max = 0.25f64.min(1.0 / (a * (zeta + reach).powf(a - 1.0) + 1e-12) * 2.0);
    let mut breaks = vec![-reach, zeta + reach, 0.5 * zeta];
    for &cusp in &[0.0, zeta] {
        breaks.push(cusp);
        let mut d = 1e-5;
        while d < w_max {
            breaks.push(cusp - d);
            breaks.push(cusp + d);
            d *= 2.0;
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut fine = Vec::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let k = (len / w_max).ceil().max(1.0) as usize;
        for j in 0..k {
            fine.push(w[0] + len * j as f64 / k as f64);
        }
    }
    fine.push(*breaks.last().unwrap());
    let rule = composite(&fine, gl);
    let mut acc = C64::new(0.0, 0.0);
    for (&eta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let e = s_exp - psi(params, eta) - psi(params, zeta - eta);
        if e.re > -60.0 {
            acc += e.exp() * w;
        }
    }
    acc / (2.0 * PI)
}

impl KernelSpectrum {
    fn build(params: StableParams, res: Resolution) -> Self {
        let a = params.a();
        let c = params.theta().cos();
        let zeta_max = (SPECTRAL_DECAY / (2f64.powf(1.0 - a) * c)).powf(1.0 / a);
        let gaussian = params.is_gaussian();
        let h = zeta_max.powf(1.0 / SIGMA_POWER) / (res.n_sigma - 1) as f64;
        let q = if gaussian {
            SigmaGrid {
                h,
                vals: vec![C64::new(1.0 / (2.0 * (2.0 * PI).sqrt()), 0.0); res.n_sigma],
            }
        } else {
            let gl = gauss_legendre(16);
            let vals = (0..res.n_sigma)
                .map(|i| q_direct(params, (i as f64 * h).powf(SIGMA_POWER), &gl))
                .collect();
            SigmaGrid { h, vals }
        };
        let layer0 = Arc::new(Layer {
            ln_scale: 0.0,
            grid: q.clone(),
        });
        Self {
            params,
            res,
            zeta_max,
            q,
            layers: Mutex::new(vec![layer0]),
            gaussian,
        }
    }

    /// Layers 0..=n, computing missing ones.
    pub(crate) fn layers(&self, n: usize) -> Vec<Arc<Layer>> {
        let mut guard = self.layers.lock().unwrap_or_else(|e| e.into_inner());
        while guard.len() <= n {
            let k = guard.len();
            let next = self.next_layer(k, guard[k - 1].as_ref());
            guard.push(Arc::new(next));
        }
        guard[..=n].to_vec()
    }

    fn next_layer(&self, n: usize, prev: &Layer) -> Layer {
        let a = self.params.a();
        let rule = u_rule(-1.0 / a, beta_n(a, n - 1), &self.res);
        let h = self.q.h;
        let ns = self.q.vals.len();
        let mut vals = Vec::with_capacity(ns);
        if self.gaussian {
            // Q and P_{n-1} are constant; the integral is a Beta function
            let w: f64 = rule.weights.iter().sum();
            let v = self.q.vals[0] * prev.grid.vals[0] * w;
            vals.resize(ns, v);
        } else {
            // index of u^{1/a} zeta_i is i u^{1/(a p)}
            let e = 1.0 / (a * SIGMA_POWER);
            let fu: Vec<(f64, f64, f64)> = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&u, &w)| ((1.0 - u).powf(e), u.powf(e), w))
                .collect();
            for i in 0..ns {
                let fi = i as f64;
                let mut acc = C64::new(0.0, 0.0);
                for &(fq, fp, w) in &fu {
                    acc += self.q.eval_index(fi * fq) * prev.grid.eval_index(fi * fp) * w;
                }
                vals.push(acc);
            }
        }
        // renormalise to keep magnitudes near one
        let m = vals
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        for v in &mut vals {
            *v /= m;
        }
        Layer {
            ln_scale: prev.ln_scale + m.ln(),
            grid: SigmaGrid { h, vals },
        }
    }

    /// E(1, zeta) = exp(-2^{1-a} zeta^a e^{-i theta}).
    pub(crate) fn decay(&self, zeta: f64) -> C64 {
        let a = self.params.a();
        (-omega(self.params) * 2f64.powf(1.0 - a) * zeta.powf(a)).exp()
    }
}

/// Composite rule on [0, 1] for the weight (1-u)^alpha u^beta, geometric
/// panels toward both ends with Gauss-Jacobi on the two end panels.
pub(crate) fn u_rule(alpha: f64, beta: f64, res: &Resolution) -> Rule {
    let m = res.u_levels.max(1);
    let n = res.u_order;
    let gl = gauss_legendre(n);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let h = 0.5f64.powi(m as i32);
    // left end panel [0, h]: u = h v, weight u^beta explicit through Jacobi
    let left = gauss_jacobi_unit(n, 0.0, beta);
    for (&v, &w) in left.nodes.iter().zip(&left.weights) {
        let u = h * v;
        nodes.push(u);
        weights.push(w * h.powf(beta + 1.0) * (1.0 - u).powf(alpha));
    }
    let mut breaks = vec![h];
    let mut x = h;
    while x < 0.5 {
        x *= 2.0;
        breaks.push(x.min(0.5));
    }
    let mut y = 0.5 - h;
    let mut d = 0.25;
    while d > h * 0.999 {
        y = 1.0 - d;
        breaks.push(y);
        d *= 0.5;
    }
    let _ = y;
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mid = composite(&breaks, &gl);
    for (&u, &w) in mid.nodes.iter().zip(&mid.weights) {
        nodes.push(u);
        weights.push(w * (1.0 - u).powf(alpha) * u.powf(beta));
    }
    let right = gauss_jacobi_unit(n, alpha, 0.0);
    for (&v, &w) in right.nodes.iter().zip(&right.weights) {
        let u = 1.0 - h + h * v;
        nodes.push(u);
        weights.push(w * h.powf(alpha + 1.0) * u.powf(beta));
    }
    Rule { nodes, weights }
}

type Slot = Arc<OnceLock<Arc<KernelSpectrum>>>;
type Key = ((u64, u64), (usize, usize, usize, u64, usize));

fn cache() -> &'static Mutex<HashMap<Key, Slot>> {
    static C: OnceLock<Mutex<HashMap<Key, Slot>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared spectrum for (params, resolution); built once per key.
pub fn spectrum_for(params: StableParams, res: Resolution) -> Arc<KernelSpectrum> {
    let slot = {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry((params.key(), res.key())).or_default().clone()
    };
    slot.get_or_init(|| Arc::new(KernelSpectrum::build(params, res)))
        .clone()
}
