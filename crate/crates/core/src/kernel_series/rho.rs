use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Shape of the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoKind {
    /// rho(u) = lambda u
    Linear { lambda: f64 },
    /// rho(u) = lambda sin(u)
    Sine { lambda: f64 },
    /// rho(u) = lambda sqrt(vartheta^2 + u^2)
    SqrtAffine { lambda: f64, vartheta: f64 },
    /// rho(u) = lambda u / (1 + |u|), bounded
    Saturating { lambda: f64 },
}

/// Diffusion coefficient with its Lipschitz and growth constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RhoKind", into = "RhoKind")]
pub struct RhoSpec {
    pub kind: RhoKind,
    /// Lipschitz constant LIP_rho.
    pub lip: f64,
    /// Growth constants (Lip_rho, vartheta): |rho(x)|^2 <= Lip_rho^2 (vartheta^2 + x^2).
    pub growth: (f64, f64),
    pub rho_zero: f64,
}

impl TryFrom<RhoKind> for RhoSpec {
    type Error = Error;
    fn try_from(k: RhoKind) -> Result<Self> {
        RhoSpec::new(k)
    }
}

impl From<RhoSpec> for RhoKind {
    fn from(r: RhoSpec) -> Self {
        r.kind
    }
}

impl RhoSpec {
    pub fn new(kind: RhoKind) -> Result<Self> {
        let (lambda, vartheta) = match kind {
            RhoKind::Linear { lambda }
            | RhoKind::Sine { lambda }
            | RhoKind::Saturating { lambda } => (lambda, 0.0),
            RhoKind::SqrtAffine { lambda, vartheta } => (lambda, vartheta),
        };
        if !(lambda.is_finite() && lambda != 0.0) {
            return Err(Error::Invalid(format!(
                "rho needs a finite nonzero lambda, got {lambda}"
            )));
        }
        if !(vartheta.is_finite() && vartheta >= 0.0) {
            return Err(Error::Invalid(format!(
                "rho needs vartheta >= 0, got {vartheta}"
            )));
        }
        let l = lambda.abs();
        let rho_zero = match kind {
            RhoKind::SqrtAffine { .. } => l * vartheta * lambda.signum(),
            _ => 0.0,
        };
        Ok(Self {
            kind,
            lip: l,
            growth: (l, vartheta),
            rho_zero,
        })
    }

    pub fn linear(lambda: f64) -> Result<Self> {
        Self::new(RhoKind::Linear { lambda })
    }

    pub fn lip_rho(&self) -> f64 {
        self.growth.0
    }

    pub fn vartheta(&self) -> f64 {
        self.growth.1
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, RhoKind::Linear { .. })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            RhoKind::Linear { lambda } => lambda * u,
            RhoKind::Sine { lambda } => lambda * u.sin(),
            RhoKind::SqrtAffine { lambda, vartheta } => {
                lambda * (vartheta * vartheta + u * u).sqrt()
            }
            RhoKind::Saturating { lambda } => lambda * u / (1.0 + u.abs()),
        }
    }
}
