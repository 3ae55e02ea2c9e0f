use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear isotropic thermo-elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// Young's modulus (Pa).
    #[serde(rename = "E")]
    pub e: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Thermal expansion coefficient (1/°C).
    pub alpha: f64,
}

impl Material {
    pub fn new(e: f64, nu: f64, alpha: f64) -> Result<Self> {
        let m = Material { e, nu, alpha };
        let errs = m.violations();
        if errs.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidInput(errs.join("; ")))
        }
    }

    /// Steel-like benchmark material: E = 200 GPa, ν = 0.3, α = 1.1e-5.
    pub fn steel() -> Self {
        Material {
            e: 2e11,
            nu: 0.3,
            alpha: 1.1e-5,
        }
    }

    /// Every violated range constraint, worded for users.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.e > 0.0 && self.e.is_finite()) {
            out.push(format!("material.E = {} must be > 0", self.e));
        }
        if !(self.nu >= 0.0 && self.nu < 0.5) {
            out.push(format!("material.nu = {} must satisfy 0 <= nu < 0.5", self.nu));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            out.push(format!("material.alpha = {} must be >= 0", self.alpha));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert!(Material::new(2e11, 0.3, 1.1e-5).is_ok());
        assert!(Material::new(0.0, 0.3, 0.0).is_err());
        assert!(Material::new(1.0, 0.5, 0.0).is_err());
        assert!(Material::new(1.0, 0.0, -1.0).is_err());
        assert_eq!(Material::new(-1.0, 0.7, -1.0).unwrap_err().to_string().matches("must").count(), 3);
    }
}
