use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Grouped delete-a-block jackknife of a statistic of replicate rows:
/// the replicates are cut into `groups` contiguous blocks (all of them when
/// there are fewer). Returns (estimate on all data, standard error).
pub fn jackknife<T>(
    rows: &[T],
    groups: usize,
    stat: impl Fn(&mut dyn Iterator<Item = &T>) -> f64,
) -> (f64, f64) {
    let n = rows.len();
    let full = stat(&mut rows.iter());
    let g = groups.min(n).max(2);
    let bounds: Vec<usize> = (0..=g).map(|i| i * n / g).collect();
    let leave: Vec<f64> = (0..g)
        .map(|k| {
            let (lo, hi) = (bounds[k], bounds[k + 1]);
            stat(&mut rows[..lo].iter().chain(&rows[hi..]))
        })
        .collect();
    let lm = mean(&leave);
    let gf = g as f64;
    let var = (gf - 1.0) / gf * leave.iter().map(|v| (v - lm).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Wilson score interval for k successes in n trials at two-sided level `conf`.
pub fn wilson_interval(k: usize, n: usize, conf: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(0.5 + conf / 2.0);
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Ordinary least squares y = intercept + slope x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Classical standard error of the slope (NaN with two points).
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Invalid(format!(
            "line fit needs >= 2 paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Invalid("line fit needs distinct x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope_stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

/// OLS slope only; NaN when undefined.
pub(crate) fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    fit_line(xs, ys).map(|f| f.slope).unwrap_or(f64::NAN)
}
