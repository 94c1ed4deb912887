use super::law::{green_cdf, green_partial_moment};
use super::{green_density, StableParams};
use crate::error::{Error, Result};
use crate::quad::{composite, gauss_legendre};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Extension of the density beyond its knots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tail {
    #[default]
    None,
    Constant(f64),
}

impl Tail {
    pub fn value(&self) -> f64 {
        match self {
            Tail::None => 0.0,
            Tail::Constant(c) => *c,
        }
    }
}

/// Nonnegative initial measure: point masses plus a piecewise-linear density
/// on `knots`, extended by `tail` outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct InitialMeasure {
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub knots: Vec<f64>,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub tail: Tail,
}

impl InitialMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(loc: f64, mass: f64) -> Self {
        Self {
            atoms: vec![(loc, mass)],
            ..Self::default()
        }
    }

    /// Constant density `c` on the whole line.
    pub fn constant(c: f64) -> Self {
        Self {
            tail: Tail::Constant(c),
            ..Self::default()
        }
    }

    pub fn lebesgue() -> Self {
        Self::constant(1.0)
    }

    /// Indicator density of [lo, hi], with jumps encoded by repeated knots.
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self {
            knots: vec![lo, lo, hi, hi],
            values: vec![0.0, 1.0, 1.0, 0.0],
            ..Self::default()
        }
    }

    pub fn with_density(knots: Vec<f64>, values: Vec<f64>, tail: Tail) -> Result<Self> {
        let m = Self {
            knots,
            values,
            tail,
            ..Self::default()
        };
        m.validate()?;
        Ok(m)
    }

    pub fn plus(&self, other: &InitialMeasure) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let mut knots: Vec<f64> = self.knots.iter().chain(&other.knots).cloned().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let sum_at = |y: f64| self.density_at(y) + other.density_at(y);
        let (mut ks, mut values) = (Vec::new(), Vec::new());
        for &y in &knots {
            // keep jumps as repeated knots
            let left = sum_at(next_down(y));
            let right = sum_at(y);
            if (left - right).abs() > 1e-12 * (1.0 + right.abs()) {
                ks.push(y);
                values.push(left);
            }
            ks.push(y);
            values.push(right);
        }
        let knots = ks;
        let tail = match (self.tail, other.tail) {
            (Tail::None, Tail::None) => Tail::None,
            (s, o) => Tail::Constant(s.value() + o.value()),
        };
        let m = Self {
            atoms,
            knots,
            values,
            tail,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(l, m)| (l, c * m)).collect(),
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            tail: match self.tail {
                Tail::None => Tail::None,
                Tail::Constant(v) => Tail::Constant(c * v),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &(l, m) in &self.atoms {
            if !l.is_finite() || !(m > 0.0) || !m.is_finite() {
                return Err(Error::Invalid(format!(
                    "atom ({l}, {m}) needs finite location and mass > 0"
                )));
            }
        }
        if self.knots.len() != self.values.len() {
            return Err(Error::Invalid(
                "density knots and values differ in length".into(),
            ));
        }
        if self.knots.len() == 1 {
            return Err(Error::Invalid("density needs at least two knots".into()));
        }
        if self.knots.windows(2).any(|w| !(w[1] >= w[0]))
            || self.knots.iter().any(|k| !k.is_finite())
        {
            return Err(Error::Invalid(
                "density knots must be finite and nondecreasing".into(),
            ));
        }
        if self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Invalid(
                "density values must be finite and >= 0".into(),
            ));
        }
        if !(self.tail.value() >= 0.0) || !self.tail.value().is_finite() {
            return Err(Error::Invalid(
                "tail constant must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.values.iter().all(|v| *v == 0.0) && self.tail.value() == 0.0
    }

    /// Density value at y (right-continuous at repeated knots).
    pub fn density_at(&self, y: f64) -> f64 {
        let k = &self.knots;
        if k.is_empty() || y < k[0] || y > k[k.len() - 1] {
            return self.tail.value();
        }
        let i = k.partition_point(|&v| v <= y);
        if i == 0 {
            return self.values[0];
        }
        if i >= k.len() {
            return self.values[k.len() - 1];
        }
        let (x0, x1) = (k[i - 1], k[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        if x1 == x0 {
            return v1;
        }
        v0 + (v1 - v0) * (y - x0) / (x1 - x0)
    }

    pub fn sup_density(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(self.tail.value(), f64::max)
    }

    /// Total mass, infinite for a positive constant tail.
    pub fn total_mass(&self) -> f64 {
        if self.tail.value() > 0.0 {
            return f64::INFINITY;
        }
        self.atom_mass() + self.density_mass()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn density_mass(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Upper bound on sup_y int mu(dx) / (1 + |y - x|^(1+a)).
    pub fn admissibility_bound(&self, a: f64) -> f64 {
        let q = 1.0 + a;
        let line = 2.0 * (PI / q) / (PI / q).sin();
        self.atom_mass() + self.sup_density() * line
    }

    /// Whether self <= other as measures, checked atomwise and on the union of
    /// knots (both densities are piecewise linear there) and the tails.
    pub fn is_dominated_by(&self, other: &InitialMeasure) -> bool {
        for &(l, m) in &self.atoms {
            let there: f64 = other.atoms.iter().filter(|a| a.0 == l).map(|a| a.1).sum();
            if there < m {
                return false;
            }
        }
        let tol = 1e-15;
        let pts = self.knots.iter().chain(&other.knots);
        for &y in pts {
            for probe in [y, next_down(y)] {
                if self.density_at(probe) > other.density_at(probe) + tol {
                    return false;
                }
            }
        }
        self.tail.value() <= other.tail.value() + tol
    }

    /// <mu, phi> for phi supported in `support`.
    pub fn pair_with(&self, phi: impl Fn(f64) -> f64, support: (f64, f64)) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(l, m)| m * phi(l)).sum();
        let mut breaks: Vec<f64> = self
            .knots
            .iter()
            .cloned()
            .filter(|&k| k > support.0 && k < support.1)
            .collect();
        breaks.push(support.0);
        breaks.push(support.1);
        breaks.sort_by(f64::total_cmp);
        let mut fine = Vec::new();
        for w in breaks.windows(2) {
            for i in 0..64 {
                fine.push(w[0] + (w[1] - w[0]) * i as f64 / 64.0);
            }
        }
        fine.push(support.1);
        let rule = composite(&fine, &gauss_legendre(8));
        atoms + rule.integrate(|y| self.density_at(y) * phi(y))
    }
}

fn next_down(y: f64) -> f64 {
    if y == 0.0 {
        -f64::MIN_POSITIVE
    } else if y > 0.0 {
        f64::from_bits(y.to_bits() - 1)
    } else {
        f64::from_bits(y.to_bits() + 1)
    }
}

/// J0(t, x) = (G(t, .) * mu)(x). The constant tail is handled through mass
/// conservation; linear density segments through exact CDF and partial-moment
/// differences.
pub fn j0(measure: &InitialMeasure, params: StableParams, t: f64, x: f64) -> f64 {
    let c = measure.tail.value();
    let mut v = c;
    for &(l, m) in &measure.atoms {
        v += m * green_density(params, t, x - l);
    }
    let k = &measure.knots;
    for i in 0..k.len().saturating_sub(1) {
        let (y0, y1) = (k[i], k[i + 1]);
        if y1 <= y0 {
            continue;
        }
        let (f0, f1) = (measure.values[i] - c, measure.values[i + 1] - c);
        if f0 == 0.0 && f1 == 0.0 {
            continue;
        }
        let beta = (f1 - f0) / (y1 - y0);
        let alpha = f0 - beta * y0;
        let (wl, wr) = (x - y1, x - y0);
        let dm = green_cdf(params, t, wr) - green_cdf(params, t, wl);
        let d1 = green_partial_moment(params, t, wr) - green_partial_moment(params, t, wl);
        v += (alpha + beta * x) * dm - beta * d1;
    }
    v
}
