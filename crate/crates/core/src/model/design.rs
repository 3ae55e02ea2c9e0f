use crate::error::{Error, Result};

/// Per-element level-set values, the cut level and the resulting topology.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignField {
    /// Level-set function (filtered sensitivity field) sampled per element.
    pub values: Vec<f64>,
    /// Cut level; elements above it are present, those below it are void.
    pub tau: f64,
    pub presence: Vec<bool>,
    /// Elements frozen as solid regardless of their value.
    pub non_design: Vec<bool>,
}

impl DesignField {
    /// Every element present.
    pub fn full(non_design: Vec<bool>) -> Self {
        let n = non_design.len();
        DesignField {
            values: vec![0.0; n],
            tau: f64::NEG_INFINITY,
            presence: vec![true; n],
            non_design,
        }
    }

    /// Topology given directly; values are set to ±1 around a zero cut.
    pub fn from_presence(presence: Vec<bool>, non_design: Vec<bool>) -> Result<Self> {
        if presence.len() != non_design.len() {
            return Err(Error::DimensionMismatch {
                expected: non_design.len(),
                got: presence.len(),
            });
        }
        let presence: Vec<bool> = presence
            .iter()
            .zip(&non_design)
            .map(|(&p, &m)| p || m)
            .collect();
        let values = presence.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
        Ok(DesignField {
            values,
            tau: 0.0,
            presence,
            non_design,
        })
    }

    pub fn len(&self) -> usize {
        self.presence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.presence.is_empty()
    }

    pub fn n_present(&self) -> usize {
        self.presence.iter().filter(|&&p| p).count()
    }

    /// Element occupancy: 1 for present, 0 for void.
    pub fn occupancy(&self) -> Vec<f64> {
        self.presence
            .iter()
            .map(|&p| if p { 1.0 } else { 0.0 })
            .collect()
    }

    /// Number of elements whose presence differs from `other`.
    pub fn changed(&self, other: &DesignField) -> usize {
        self.presence
            .iter()
            .zip(&other.presence)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// True when every free element lies on its side of the cut (values equal
    /// to `tau` may fall either way) and every masked element is present.
    pub fn is_consistent(&self) -> bool {
        self.presence
            .iter()
            .zip(&self.values)
            .zip(&self.non_design)
            .all(|((&p, &v), &m)| match (p, m) {
                (true, true) => true,
                (false, true) => false,
                (true, false) => v >= self.tau,
                (false, false) => v <= self.tau,
            })
    }
}

/// Fraction of present elements; 0 with a warning for an empty topology.
pub fn volume_fraction(design: &DesignField) -> f64 {
    if design.is_empty() {
        return 0.0;
    }
    let n = design.n_present();
    if n == 0 {
        log::warn!("degenerate topology: no element is present");
    }
    n as f64 / design.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        let full = DesignField::full(vec![false; 100]);
        assert_eq!(volume_fraction(&full), 1.0);
        assert!(full.is_consistent());

        let p: Vec<bool> = (0..100).map(|i| i < 57).collect();
        let d = DesignField::from_presence(p, vec![false; 100]).unwrap();
        assert_eq!(volume_fraction(&d), 0.57);
        assert!(d.is_consistent());

        let none = DesignField::from_presence(vec![false; 100], vec![false; 100]).unwrap();
        assert_eq!(volume_fraction(&none), 0.0);
    }

    #[test]
    fn mask_forces_presence() {
        let d = DesignField::from_presence(vec![false, false], vec![true, false]).unwrap();
        assert_eq!(d.presence, vec![true, false]);
        assert!(d.is_consistent());
    }
}
