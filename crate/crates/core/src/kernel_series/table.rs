use super::spectrum::{beta_n, spectrum_for, KernelSpectrum, Layer, Resolution, SIGMA_POWER};
use crate::error::{Error, Result};
use crate::quad::{composite, gauss_legendre, graded_breaks, Rule};
use crate::stable_green::{green_density, StableParams};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

/// Ceiling on series terms before `NoConvergence`.
pub const DEFAULT_MAX_TERMS: usize = 3000;

/// Space-time evaluation grid; times must be positive and ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
}

impl KernelGrid {
    pub fn new(ts: Vec<f64>, xs: Vec<f64>) -> Result<Self> {
        if ts.is_empty() || xs.is_empty() {
            return Err(Error::Invalid(
                "kernel grid needs at least one time and one point".into(),
            ));
        }
        if ts.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || ts.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::Invalid(
                "kernel grid times must be positive and strictly ascending".into(),
            ));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("kernel grid points must be finite".into()));
        }
        Ok(Self { ts, xs })
    }

    /// `nt` times uniform on ]0, t_max] and `nx` points uniform on [-l, l].
    pub fn uniform(t_max: f64, nt: usize, l: f64, nx: usize) -> Result<Self> {
        let ts = (1..=nt).map(|i| t_max * i as f64 / nt as f64).collect();
        let xs = (0..nx)
            .map(|j| {
                if nx == 1 {
                    0.0
                } else {
                    -l + 2.0 * l * j as f64 / (nx - 1) as f64
                }
            })
            .collect();
        Self::new(ts, xs)
    }
}

/// Tabulated K (or a single layer L_n) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub lambda: f64,
    pub params: StableParams,
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    /// values[i][j] at (ts[i], xs[j]).
    pub values: Vec<Vec<f64>>,
    pub n_terms: usize,
    pub series_tail_bound: f64,
    /// Largest negative quadrature residue clamped to zero, over all layers.
    pub clamped: f64,
    /// Constant of the fitted upper bound, once fitted.
    pub fitted_c: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    lambda: f64,
    params: StableParams,
    n_terms: usize,
    series_tail_bound: f64,
    clamped: f64,
    fitted_c: Option<f64>,
}

impl KernelTable {
    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `<stem>.csv` (`t,x,value`) and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(stem.with_extension("csv"))?);
        writeln!(f, "t,x,value")?;
        for (t, row) in self.ts.iter().zip(&self.values) {
            for (x, v) in self.xs.iter().zip(row) {
                writeln!(f, "{t:e},{x:e},{v:e}")?;
            }
        }
        f.flush()?;
        let side = Sidecar {
            lambda: self.lambda,
            params: self.params,
            n_terms: self.n_terms,
            series_tail_bound: self.series_tail_bound,
            clamped: self.clamped,
            fitted_c: self.fitted_c,
        };
        std::fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&side)?,
        )?;
        Ok(())
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let side: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let file = std::io::BufReader::new(std::fs::File::open(stem.with_extension("csv"))?);
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (i, line) in file.lines().enumerate() {
            let line = line?;
            if i == 0 {
                continue;
            }
            let p: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Invalid(format!("kernel csv line {}: {e}", i + 1)))?;
            if p.len() != 3 {
                return Err(Error::Invalid(format!(
                    "kernel csv line {} needs 3 fields",
                    i + 1
                )));
            }
            rows.push((p[0], p[1], p[2]));
        }
        let mut ts: Vec<f64> = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for (t, x, v) in rows {
            if ts.last() != Some(&t) {
                ts.push(t);
                values.push(Vec::new());
            }
            if ts.len() == 1 {
                xs.push(x);
            }
            values.last_mut().unwrap().push(v);
        }
        if values.iter().any(|r| r.len() != xs.len()) {
            return Err(Error::Invalid("kernel csv is not a full grid".into()));
        }
        Ok(Self {
            lambda: side.lambda,
            params: side.params,
            ts,
            xs,
            values,
            n_terms: side.n_terms,
            series_tail_bound: side.series_tail_bound,
            clamped: side.clamped,
            fitted_c: side.fitted_c,
        })
    }
}

/// sup_x L_n(t, .) / (lambda^{2n+2} t^{beta_n - 1/a}) <= (1/pi) int |E P_n| d zeta.
fn spectral_sup(spec: &KernelSpectrum, layer: &Layer) -> f64 {
    let rule = composite(
        &graded_breaks(1e-6, 0.05, 0.05, spec.zeta_max),
        &gauss_legendre(8),
    );
    let v = rule.integrate(|z| (spec.decay(z) * layer.grid.eval(z)).norm());
    v * layer.ln_scale.exp() / PI
}

/// ln of the layer-n prefactor lambda^{2n+2} t^{beta_n - 1/a}.
fn ln_prefactor(a: f64, lambda: f64, t: f64, n: usize) -> f64 {
    (2 * n + 2) as f64 * lambda.abs().ln() + (beta_n(a, n) - 1.0 / a) * t.ln()
}

/// Inversion nodes in zeta for one time, resolving phases up to `reach`.
fn zeta_rule(spec: &KernelSpectrum, reach: f64) -> Rule {
    let a = spec.params.a();
    let s = spec.params.theta().sin().abs();
    let omega = reach + a * 2f64.powf(1.0 - a) * s * spec.zeta_max.powf(a - 1.0) + 1.0;
    let width = (spec.res.zeta_width * 5.0 / omega).min(0.5);
    let breaks = graded_breaks(1e-6 * width, width, width, spec.zeta_max);
    composite(&breaks, &gauss_legendre(spec.res.zeta_order))
}

/// Real-space layers 1..=n at one time: result[k-1][j] = L_k(t, xs[j]).
fn spectral_layers(
    spec: &KernelSpectrum,
    layers: &[Arc<Layer>],
    lambda: f64,
    t: f64,
    xs: &[f64],
    clamped: &mut f64,
) -> Vec<Vec<f64>> {
    let a = spec.params.a();
    let zs = t.powf(-1.0 / a);
    let reach = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())) * zs;
    let rule = zeta_rule(spec, reach);
    let n = layers.len() - 1;
    // coefficient per (layer, node), prefactors folded in
    let h = spec.q.h;
    let base: Vec<(f64, C64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&z, &w)| (z.powf(1.0 / SIGMA_POWER) / h, spec.decay(z) * w))
        .collect();
    let mut coef: Vec<Vec<C64>> = Vec::with_capacity(n);
    for (k, layer) in layers.iter().enumerate().skip(1) {
        let lf = ln_prefactor(a, lambda, t, k) + layer.ln_scale;
        let row = if lf < -700.0 {
            vec![C64::new(0.0, 0.0); base.len()]
        } else {
            let f = lf.exp() / PI;
            base.iter()
                .map(|&(s, dw)| layer.grid.eval_index(s) * dw * f)
                .collect()
        };
        coef.push(row);
    }
    let mut out = vec![vec![0.0; xs.len()]; n];
    let mut acc = vec![0.0; n];
    for (j, &x) in xs.iter().enumerate() {
        acc.iter_mut().for_each(|v| *v = 0.0);
        let k = x * zs;
        for (i, &z) in rule.nodes.iter().enumerate() {
            let (sn, cs) = (z * k).sin_cos();
            for (l, row) in coef.iter().enumerate() {
                let c = row[i];
                acc[l] += c.re * cs - c.im * sn;
            }
        }
        for l in 0..n {
            let v = acc[l];
            if v < 0.0 {
                *clamped = clamped.max(-v);
            }
            out[l][j] = v.max(0.0);
        }
    }
    out
}

fn l0_row(params: StableParams, lambda: f64, t: f64, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| lambda * lambda * green_density(params, t, x).powi(2))
        .collect()
}

/// Single layer L_n on the grid (n_terms records n + 1, tail bound 0).
pub fn ln_kernel(
    n: usize,
    lambda: f64,
    params: StableParams,
    grid: &KernelGrid,
) -> Result<KernelTable> {
    ln_kernel_with(n, lambda, params, grid, Resolution::default())
}

pub fn ln_kernel_with(
    n: usize,
    lambda: f64,
    params: StableParams,
    grid: &KernelGrid,
    res: Resolution,
) -> Result<KernelTable> {
    assert!(
        params.a() > 1.0,
        "time weight (1-u)^(-1/a) is integrable only for a > 1"
    );
    let mut clamped = 0.0;
    let values = if lambda == 0.0 {
        vec![vec![0.0; grid.xs.len()]; grid.ts.len()]
    } else if n == 0 {
        grid.ts
            .iter()
            .map(|&t| l0_row(params, lambda, t, &grid.xs))
            .collect()
    } else {
        let spec = spectrum_for(params, res);
        let layers = spec.layers(n);
        grid.ts
            .iter()
            .map(|&t| {
                spectral_layers(&spec, &layers, lambda, t, &grid.xs, &mut clamped)
                    .pop()
                    .unwrap()
            })
            .collect()
    };
    Ok(KernelTable {
        lambda,
        params,
        ts: grid.ts.clone(),
        xs: grid.xs.clone(),
        values,
        n_terms: n + 1,
        series_tail_bound: 0.0,
        clamped,
        fitted_c: None,
    })
}

/// Options of the series summation.
#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub tol: f64,
    pub max_terms: usize,
    pub res: Resolution,
}

impl SeriesOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_terms: DEFAULT_MAX_TERMS,
            res: Resolution::default(),
        }
    }
}

/// K = sum_n L_n on the grid, stopping once the newest layer's bound drops
/// below tol times the running maximum.
pub fn k_kernel(
    lambda: f64,
    params: StableParams,
    grid: &KernelGrid,
    tol: f64,
) -> Result<KernelTable> {
    k_kernel_with(lambda, params, grid, SeriesOptions::new(tol))
}

pub fn k_kernel_with(
    lambda: f64,
    params: StableParams,
    grid: &KernelGrid,
    opts: SeriesOptions,
) -> Result<KernelTable> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!(
            "series tolerance must be > 0, got {}",
            opts.tol
        )));
    }
    let (nt, nx) = (grid.ts.len(), grid.xs.len());
    if lambda == 0.0 {
        return Ok(KernelTable {
            lambda,
            params,
            ts: grid.ts.clone(),
            xs: grid.xs.clone(),
            values: vec![vec![0.0; nx]; nt],
            n_terms: 1,
            series_tail_bound: 0.0,
            clamped: 0.0,
            fitted_c: None,
        });
    }
    let a = params.a();
    let l0: Vec<Vec<f64>> = grid
        .ts
        .iter()
        .map(|&t| l0_row(params, lambda, t, &grid.xs))
        .collect();
    let running_max = l0.iter().flatten().cloned().fold(0.0, f64::max);
    let spec = spectrum_for(params, opts.res);
    // bound of sup_x L_n over the grid times
    let bound = |n: usize, layer: &Layer| -> f64 {
        let s = spectral_sup(&spec, layer);
        grid.ts
            .iter()
            .map(|&t| (ln_prefactor(a, lambda, t, n)).exp() * s)
            .fold(0.0, f64::max)
    };
    let mut n = 0;
    let mut last_ratio = f64::NAN;
    let mut prev_bound = f64::INFINITY;
    loop {
        if n + 1 >= opts.max_terms {
            return Err(Error::NoConvergence {
                terms: n + 1,
                last_ratio,
            });
        }
        let layers = spec.layers(n + 1);
        let b = bound(n + 1, &layers[n + 1]);
        last_ratio = b / prev_bound;
        prev_bound = b;
        n += 1;
        if b < opts.tol * running_max {
            break;
        }
    }
    // n layers (0..n) are summed; the bound of layer n fired the rule
    let tail = tail_bound(&spec, n, opts.max_terms, &bound);
    let layers = spec.layers(n - 1);
    let mut clamped = 0.0;
    let mut values = l0;
    if n > 1 {
        for (i, &t) in grid.ts.iter().enumerate() {
            let ls = spectral_layers(&spec, &layers, lambda, t, &grid.xs, &mut clamped);
            for row in &ls {
                for (v, add) in values[i].iter_mut().zip(row) {
                    *v += add;
                }
            }
        }
    }
    Ok(KernelTable {
        lambda,
        params,
        ts: grid.ts.clone(),
        xs: grid.xs.clone(),
        values,
        n_terms: n,
        series_tail_bound: tail,
        clamped,
        fitted_c: None,
    })
}

/// Bound on sum_{m >= first} sup L_m: a few explicit terms, then a geometric
/// majorant from the last ratio (ratios decrease for this series).
fn tail_bound(
    spec: &KernelSpectrum,
    first: usize,
    cap: usize,
    bound: &dyn Fn(usize, &Layer) -> f64,
) -> f64 {
    let extra = 4;
    let layers = spec.layers((first + extra).min(cap));
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut ratio = f64::NAN;
    for (m, layer) in layers.iter().enumerate().skip(first) {
        let b = bound(m, layer);
        ratio = b / prev;
        prev = b;
        sum += b;
    }
    if ratio.is_finite() && ratio < 1.0 {
        sum + prev * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}
