use crate::error::{Error, Result};
use crate::quad::ln_gamma;

/// Tail mass below which the Poisson mixture is truncated.
pub const POISSON_TAIL: f64 = 1e-12;

/// Suggested cutoff: mean + 12 standard deviations + 30.
pub fn default_n_cut(z: f64) -> usize {
    (z + 12.0 * z.sqrt() + 30.0).ceil() as usize
}

/// Poisson(z) weights e^{-z} z^n / n! for n in [lo, n_cut], n >= 1,
/// skipping leading terms below e^{-60}.
#[derive(Debug, Clone)]
pub(crate) struct PoissonWindow {
    pub lo: usize,
    pub weights: Vec<f64>,
    /// Mass of n > n_cut.
    pub upper_tail: f64,
}

fn ln_w(z: f64, n: usize) -> f64 {
    -z + n as f64 * z.ln() - ln_gamma(n as f64 + 1.0)
}

impl PoissonWindow {
    pub fn new(z: f64, n_cut: usize) -> Result<Self> {
        let mut upper_tail = 0.0;
        let mut n = n_cut + 1;
        loop {
            let w = ln_w(z, n).exp();
            upper_tail += w;
            if (n as f64 > z && w < 1e-3 * upper_tail) || w == 0.0 && n as f64 > z {
                break;
            }
            n += 1;
        }
        if upper_tail > POISSON_TAIL {
            return Err(Error::TruncationTooTight {
                n_cut,
                tail: upper_tail,
            });
        }
        let mut lo = 1;
        if z > 100.0 {
            // first n with ln weight above -60
            let (mut a, mut b) = (1usize, z.floor() as usize);
            while b - a > 1 {
                let m = (a + b) / 2;
                if ln_w(z, m) < -60.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            lo = a;
        }
        let weights = (lo..=n_cut.max(lo)).map(|n| ln_w(z, n).exp()).collect();
        Ok(Self {
            lo,
            weights,
            upper_tail,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.lo + i, w))
    }
}
