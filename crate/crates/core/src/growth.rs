//! Regularly varying cell-count laws N(x) ~ c·x^q and the occupancy regime
//! they induce.

use crate::error::{Error, Result};

/// Tolerance for deciding whether the growth index sits exactly on a regime
/// boundary.
const Q_TIE_EPS: f64 = 1e-12;

/// Cell-count map N(x) = max(2, round(c·x^q)) with index q ∈ (0, 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthLaw {
    c: f64,
    q: f64,
}

impl GrowthLaw {
    pub fn new(c: f64, q: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "growth constant must be positive, got {c}"
            )));
        }
        if !(q > 0.0 && q < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "growth index must lie in (0, 2), got {q}"
            )));
        }
        Ok(Self { c, q })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Integer cell count at sample size x.
    pub fn cells(&self, x: f64) -> u64 {
        self.cells_f(x) as u64
    }

    /// The same rounding on the continuous scale, for fixed-point iteration.
    pub fn cells_f(&self, x: f64) -> f64 {
        (self.c * x.powf(self.q)).round().max(2.0)
    }

    /// Mean occupancy x/N(x).
    pub fn lambda(&self, x: f64) -> f64 {
        x / self.cells_f(x)
    }

    /// Occupancy regime induced by the index q.
    pub fn regime(&self) -> Regime {
        if (self.q - 1.0).abs() <= Q_TIE_EPS {
            Regime::Sparse {
                lambda: 1.0 / self.c,
            }
        } else if self.q < 1.0 {
            Regime::Dense
        } else {
            Regime::VerySparse
        }
    }
}

/// Limiting behaviour of the mean occupancy λ_n = n/N(n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// q < 1: λ_n → ∞.
    Dense,
    /// q = 1: λ_n → 1/c ∈ (0, ∞).
    Sparse { lambda: f64 },
    /// q > 1: λ_n → 0 while n·λ_n → ∞.
    VerySparse,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Dense => f.write_str("dense"),
            Regime::Sparse { lambda } => write!(f, "sparse(lambda={lambda})"),
            Regime::VerySparse => f.write_str("very-sparse"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes_by_index() {
        assert_eq!(
            GrowthLaw::new(1.0, 1.0).unwrap().regime(),
            Regime::Sparse { lambda: 1.0 }
        );
        assert_eq!(GrowthLaw::new(1.0, 0.5).unwrap().regime(), Regime::Dense);
        assert_eq!(
            GrowthLaw::new(1.0, 1.2).unwrap().regime(),
            Regime::VerySparse
        );
        assert_eq!(
            GrowthLaw::new(2.0, 1.0).unwrap().regime(),
            Regime::Sparse { lambda: 0.5 }
        );
    }

    #[test]
    fn rounding_and_floor() {
        let g = GrowthLaw::new(1.0, 0.5).unwrap();
        assert_eq!(g.cells(1.0), 2); // floor at 2
        assert_eq!(g.cells(10_000.0), 100);
        let g = GrowthLaw::new(1.0, 1.0).unwrap();
        assert_eq!(g.cells(500.0), 500);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(GrowthLaw::new(0.0, 1.0).is_err());
        assert!(GrowthLaw::new(1.0, 2.0).is_err());
        assert!(GrowthLaw::new(1.0, 0.0).is_err());
    }
}
