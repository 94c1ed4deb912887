use super::law::{law_for, spectral_nodes, Z_TABLE};
use super::StableParams;
use crate::error::{Error, Result};
use crate::quad::{composite, gauss_legendre, graded_breaks};
use std::f64::consts::PI;
use std::io::{BufRead, Write};

/// Tolerated negative quadrature dust in stored tables.
pub const TOL_NEG: f64 = 1e-9;
/// Tolerated trapezoid mass defect in a DensityTable.
pub const TOL_MASS: f64 = 1e-6;

/// G(t, x) through the cached t = 1 law and the scaling identity.
pub fn green_density(params: StableParams, t: f64, x: f64) -> f64 {
    let s = t.powf(1.0 / params.a());
    law_for(params).density(x / s) / s
}

/// G(t, x) by a dedicated oscillatory quadrature at this point; slower, used
/// for cross-checks. Fails if two resolutions disagree beyond `1e-10`.
pub fn green_density_direct(params: StableParams, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(crate::error::out_of_range("t", t, "need t > 0"));
    }
    let a = params.a();
    if params.is_gaussian() {
        return Ok((-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt());
    }
    let th = params.theta();
    let (c, s) = (th.cos(), th.sin());
    let xi_max = (36.0 / (c * t)).powf(1.0 / a);
    let omega = x.abs() + a * s.abs() * t * xi_max.powf(a - 1.0) + 1.0;
    let eval = |n: usize, scale: f64| {
        let width = (scale * 2.5 / omega).min(0.5 * scale * t.powf(-1.0 / a));
        let xi0 = t.powf(-1.0 / a);
        let breaks = graded_breaks(1e-6 * xi0, xi0, width, xi_max);
        let rule = composite(&breaks, &gauss_legendre(n));
        rule.integrate(|xi| {
            let xa = t * xi.powf(a);
            (-c * xa).exp() * (xi * x + s * xa).cos()
        }) / PI
    };
    let fine = eval(16, 1.0);
    let coarse = eval(12, 1.0);
    let err = (fine - coarse).abs();
    if err > 1e-10 * fine.abs().max(1e-3) {
        return Err(Error::QuadratureFailure(format!(
            "G({t}, {x}): resolution gap {err:e}"
        )));
    }
    Ok(fine)
}

/// Tabulated G(t, .) on an ascending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub params: StableParams,
    pub t: f64,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Mass of G(t, .) outside [xs[0], xs[last]].
    pub trunc_error: f64,
}

impl DensityTable {
    pub fn trapezoid_mass(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# params a={} delta={} t={} trunc_error={:e}",
            self.params.a(),
            self.params.delta(),
            self.t,
            self.trunc_error
        )?;
        writeln!(w, "x,value")?;
        for (x, v) in self.xs.iter().zip(&self.values) {
            writeln!(w, "{x:e},{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty density table".into()))??;
        let field = |key: &str| -> Result<f64> {
            let tag = format!("{key}=");
            header
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix(&tag))
                .ok_or_else(|| Error::Invalid(format!("header lacks {key}")))?
                .parse::<f64>()
                .map_err(|e| Error::Invalid(format!("{key}: {e}")))
        };
        let params = StableParams::new(field("a")?, field("delta")?)?;
        let (t, trunc_error) = (field("t")?, field("trunc_error")?);
        let (mut xs, mut values) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.is_empty() || line.starts_with('x') {
                continue;
            }
            let mut it = line.split(',');
            let mut next = || -> Result<f64> {
                it.next()
                    .ok_or_else(|| Error::Invalid(format!("bad row {line}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(e.to_string()))
            };
            xs.push(next()?);
            values.push(next()?);
        }
        Ok(Self {
            params,
            t,
            xs,
            values,
            trunc_error,
        })
    }
}

// Beyond this |z| the asymptotic series is used instead of the transform.
const Z_SPECTRAL: f64 = 2.0 * Z_TABLE;

/// Tabulate G(t, .) on `xs` in one shared-node inverse-transform pass.
pub fn green_table(params: StableParams, t: f64, xs: &[f64]) -> Result<DensityTable> {
    if !(t > 0.0) {
        return Err(crate::error::out_of_range("t", t, "need t > 0"));
    }
    if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(
            "xs must be strictly ascending with >= 2 points".into(),
        ));
    }
    let a = params.a();
    let sc = t.powf(1.0 / a);
    let law = law_for(params);
    let values: Vec<f64> = if params.is_gaussian() {
        xs.iter().map(|&x| law.density(x / sc) / sc).collect()
    } else {
        let z_max = xs
            .iter()
            .fold(0.0f64, |m, &x| m.max((x / sc).abs()))
            .min(Z_SPECTRAL);
        let nodes = spectral_nodes(params, z_max);
        xs.iter()
            .map(|&x| {
                let z = x / sc;
                if z.abs() <= Z_SPECTRAL {
                    nodes.eval(z).0 / sc
                } else {
                    law.density(z) / sc
                }
            })
            .collect()
    };
    let trunc_error = law.cdf(xs[0] / sc) + (1.0 - law.cdf(xs[xs.len() - 1] / sc));
    let table = DensityTable {
        params,
        t,
        xs: xs.to_vec(),
        values,
        trunc_error,
    };
    let mass = table.trapezoid_mass();
    if mass < 1.0 - trunc_error - TOL_MASS || mass > 1.0 + TOL_MASS {
        return Err(Error::GridTooCoarse(format!(
            "trapezoid mass {mass} vs 1 - {trunc_error:e} at t = {t}"
        )));
    }
    let neg = table.min_value();
    if neg < -TOL_NEG {
        return Err(Error::QuadratureFailure(format!(
            "negative density {neg:e}"
        )));
    }
    Ok(table)
}
