use crate::error::{out_of_range, Error, Result};
use serde::{Deserialize, Serialize};

/// Lattice on [0, T] x [-L, L]: n_t time cells of width dt = T/n_t and
/// n_x + 1 nodes x_j = -L + j dx, dx = 2L/n_x. Node j owns the cell
/// [x_j - dx/2, x_j + dx/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n_t: usize,
    pub n_x: usize,
    /// dt must not exceed cfl * dx^a; None disables the check.
    #[serde(default = "default_cfl")]
    pub cfl: Option<f64>,
}

fn default_cfl() -> Option<f64> {
    Some(1.0)
}

impl SpaceTimeGrid {
    pub fn new(t_end: f64, half_width: f64, n_t: usize, n_x: usize) -> Result<Self> {
        let g = Self {
            t_end,
            half_width,
            n_t,
            n_x,
            cfl: Some(1.0),
        };
        g.validate()?;
        Ok(g)
    }

    /// An infinite factor turns the check off.
    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl.is_finite().then_some(cfl);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(out_of_range("T", self.t_end, "need T > 0"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(out_of_range("L", self.half_width, "need L > 0"));
        }
        if self.n_t < 2 || self.n_x < 2 {
            return Err(Error::Invalid(format!(
                "need n_t, n_x >= 2, got {} and {}",
                self.n_t, self.n_x
            )));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0) {
                return Err(out_of_range("cfl", c, "need cfl > 0"));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_t as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_x as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_x + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.x(j)).collect()
    }

    /// Node nearest to x, if x lies in [-L, L].
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let r = ((x + self.half_width) / self.dx()).round();
        (r >= 0.0 && r <= self.n_x as f64).then_some(r as usize)
    }

    /// Checks dt <= cfl * dx^a.
    pub fn check_cfl(&self, a: f64) -> Result<()> {
        let Some(c) = self.cfl else {
            return Ok(());
        };
        let cap = c * self.dx().powf(a);
        if self.dt() > cap {
            return Err(Error::Invalid(format!(
                "dt = {} exceeds cfl * dx^a = {cap}; refine n_t or raise cfl",
                self.dt()
            )));
        }
        Ok(())
    }

    /// Same domain with both cell counts multiplied by `k` in space and `k^a`
    /// (rounded up) in time, keeping dt / dx^a roughly fixed.
    pub fn refined(&self, k: usize, a: f64) -> Self {
        let n_t = (self.n_t as f64 * (k as f64).powf(a)).ceil() as usize;
        Self {
            n_t,
            n_x: self.n_x * k,
            ..*self
        }
    }
}
