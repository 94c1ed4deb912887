//! Quadrature rules and interpolation primitives shared by the numerical modules.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Jacobi rule on [0, 1] for the weight (1-u)^alpha u^beta (Golub-Welsch).
pub fn gauss_jacobi_unit(n: usize, alpha: f64, beta: f64) -> Rule {
    assert!(
        alpha > -1.0 && beta > -1.0,
        "Jacobi exponents must exceed -1"
    );
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let denom = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        *d = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / denom
        };
    }
    for (idx, o) in off.iter_mut().enumerate() {
        let k = (idx + 1) as f64;
        let b = if idx == 0 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + alpha) * (k + beta) * (k + ab)
                / ((2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0))
        };
        *o = b.sqrt();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = diag[k];
        if k + 1 < n {
            m[(k, k + 1)] = off[k];
            m[(k + 1, k)] = off[k];
        }
    }
    let eig = SymmetricEigen::new(m);
    // Beta(alpha+1, beta+1) is the total weight on [0, 1].
    let mu0 = (ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0)).exp();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Composite Gauss-Legendre rule over consecutive breakpoints.
pub fn composite(breaks: &[f64], base: &Rule) -> Rule {
    let mut nodes = Vec::with_capacity(breaks.len() * base.len());
    let mut weights = Vec::with_capacity(breaks.len() * base.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &wt) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    Rule { nodes, weights }
}

/// Breakpoints on [0, end]: geometric grading from `first` up to `grade_to`,
/// then uniform panels no wider than `width`.
pub fn graded_breaks(first: f64, grade_to: f64, width: f64, end: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = first.min(end);
    b.push(x);
    let stop = grade_to.min(end);
    while x < stop {
        x = (2.0 * x).min(stop);
        b.push(x);
    }
    let remaining = end - x;
    if remaining > 0.0 {
        let n = (remaining / width).ceil().max(1.0) as usize;
        for k in 1..=n {
            b.push(x + remaining * k as f64 / n as f64);
        }
    }
    b
}

/// Chebyshev points of the second kind mapped to [lo, hi], ascending.
pub fn chebyshev_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|k| {
            let x = -(PI * k as f64 / (n - 1) as f64).cos();
            lo + 0.5 * (hi - lo) * (x + 1.0)
        })
        .collect()
}

/// Barycentric weights for Chebyshev points of the second kind.
pub fn chebyshev_bary_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Row of barycentric interpolation coefficients at `x` for the given nodes.
pub fn bary_row(nodes: &[f64], bw: &[f64], x: f64) -> Vec<f64> {
    let mut row = vec![0.0; nodes.len()];
    for (k, &xk) in nodes.iter().enumerate() {
        if (x - xk).abs() < 1e-300 {
            row[k] = 1.0;
            return row;
        }
    }
    let mut denom = 0.0;
    for k in 0..nodes.len() {
        let c = bw[k] / (x - nodes[k]);
        row[k] = c;
        denom += c;
    }
    for c in &mut row {
        *c /= denom;
    }
    row
}

/// Piecewise Lagrange interpolation on a uniform grid `x0 + i h`, using a
/// centred stencil of `STENCIL` points.
#[derive(Debug, Clone)]
pub struct UniformInterp {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

const STENCIL: usize = 6;

impl UniformInterp {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= STENCIL);
        Self { x0, h, values }
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = (x - self.x0) / self.h;
        let i = s.floor() as isize;
        let start = (i - (STENCIL as isize / 2 - 1)).clamp(0, (n - STENCIL) as isize) as usize;
        let mut acc = 0.0;
        for j in 0..STENCIL {
            let mut l = 1.0;
            let sj = (start + j) as f64;
            for m in 0..STENCIL {
                if m != j {
                    let sm = (start + m) as f64;
                    l *= (s - sm) / (sj - sm);
                }
            }
            acc += l * self.values[start + j];
        }
        acc
    }
}
