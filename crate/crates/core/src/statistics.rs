//! The symmetric statistic family: S = Σ_m h(η_m) over the cell counts of a
//! multinomial sample, with the power-divergence and count-statistic cells as
//! built-in special cases.

use crate::error::{Error, Result};
use crate::poisson::{moment_summary, PoissonContext};
use crate::util::sum_compensated;

/// Smallest |d| accepted for the power-divergence index; below this callers
/// must use [`CellFunction::LogLikelihood`], the d = 0 member.
pub const MIN_PDS_INDEX: f64 = 1e-9;

/// Behaviour of a [`CellFunction::Custom`] table beyond its last entry.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    /// h(k) = value for every k past the table.
    Constant(f64),
    /// h(k) = offset + slope * k for every k past the table.
    Affine { offset: f64, slope: f64 },
}

/// Per-cell function h defining a symmetric statistic Σ h(η_m).
///
/// Evaluation is total on the non-negative integers. The power-divergence
/// cells take the limit value 0 at a zero count (the x-prefactor dominates for
/// every index d > -1), and 0·log 0 is read as 0.
#[derive(Debug, Clone, PartialEq)]
pub enum CellFunction {
    /// Cressie-Read cell ψ_d(x) = 2/(d(d+1)) · x[(x/λ)^d − 1], d > −1, d ≠ 0.
    PowerDivergence(f64),
    /// The d = 0 member: ψ₀(x) = 2x log(x/λ).
    LogLikelihood,
    /// h(x) = (x − λ)²/λ; summing gives the chi-square statistic.
    ChiSquareCell,
    /// The d = −1/2 member; summing gives 4Σ(√η − √λ)².
    FreemanTukey,
    /// h(x) = I{x = r}; summing counts the cells holding exactly r observations.
    Indicator(u32),
    /// h(x) = (x − 1)·I{x ≥ 1}; summing counts collisions.
    CollisionCell,
    /// Explicit table of values on 0..len with a tail rule past the end.
    Custom { values: Vec<f64>, tail: TailRule },
}

impl CellFunction {
    /// Power-divergence cell with index validation.
    pub fn power_divergence(d: f64) -> Result<Self> {
        let f = CellFunction::PowerDivergence(d);
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CellFunction::PowerDivergence(d) => {
                if !d.is_finite() || *d <= -1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power-divergence index must satisfy d > -1, got {d}"
                    )));
                }
                if d.abs() < MIN_PDS_INDEX {
                    return Err(Error::InvalidParameter(format!(
                        "power-divergence index |d| = {} < {MIN_PDS_INDEX}; use LogLikelihood",
                        d.abs()
                    )));
                }
                Ok(())
            }
            CellFunction::Custom { values, .. } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "custom cell table must be non-empty and finite".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Evaluate h at count k for mean cell occupancy `lambda`.
    pub fn eval(&self, k: u64, lambda: f64) -> f64 {
        match self {
            CellFunction::PowerDivergence(d) => pds_cell(*d, k, lambda),
            CellFunction::LogLikelihood => {
                if k == 0 {
                    0.0
                } else {
                    let x = k as f64;
                    2.0 * x * (x / lambda).ln()
                }
            }
            CellFunction::ChiSquareCell => {
                let d = k as f64 - lambda;
                d * d / lambda
            }
            CellFunction::FreemanTukey => pds_cell(-0.5, k, lambda),
            CellFunction::Indicator(r) => {
                if k == *r as u64 {
                    1.0
                } else {
                    0.0
                }
            }
            CellFunction::CollisionCell => {
                if k >= 1 {
                    (k - 1) as f64
                } else {
                    0.0
                }
            }
            CellFunction::Custom { values, tail } => match values.get(k as usize) {
                Some(v) => *v,
                None => match tail {
                    TailRule::Constant(v) => *v,
                    TailRule::Affine { offset, slope } => offset + slope * k as f64,
                },
            },
        }
    }
}

impl std::fmt::Display for CellFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellFunction::PowerDivergence(d) => write!(f, "pds({d})"),
            CellFunction::LogLikelihood => write!(f, "loglik"),
            CellFunction::ChiSquareCell => write!(f, "chi2"),
            CellFunction::FreemanTukey => write!(f, "freeman-tukey"),
            CellFunction::Indicator(r) => write!(f, "indicator({r})"),
            CellFunction::CollisionCell => write!(f, "collision"),
            CellFunction::Custom { .. } => write!(f, "custom"),
        }
    }
}

/// ψ_d via the cancellation-free form 2/(d(d+1)) · x · expm1(d·ln(x/λ)).
fn pds_cell(d: f64, k: u64, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let x = k as f64;
    2.0 / (d * (d + 1.0)) * x * (d * (x / lambda).ln()).exp_m1()
}

/// Centered form of the power-divergence cell. Summing λ·ψ̄_d(η_m) over cells
/// gives the same statistic as ψ_d because the per-cell difference is a
/// multiple of (x − λ), which telescopes to zero over a frequency vector.
fn pds_cell_barred(d: f64, k: u64, lambda: f64) -> f64 {
    let t = k as f64 / lambda;
    if d.abs() < MIN_PDS_INDEX {
        let xlogx = if k == 0 { 0.0 } else { t * t.ln() };
        2.0 * (xlogx - (k as f64 - lambda) / lambda)
    } else {
        2.0 / (d * (d + 1.0)) * (t.powf(d + 1.0) - (d + 1.0) * t + d)
    }
}

/// An observed frequency vector: counts over N ≥ 2 cells summing to n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frequencies {
    counts: Vec<u32>,
    n: u64,
}

impl Frequencies {
    /// Build from counts, deriving the total.
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        let n = counts.iter().map(|&c| c as u64).sum();
        Self::with_total(counts, n)
    }

    /// Build from counts with a declared total; rejects mismatches.
    pub fn with_total(counts: Vec<u32>, n: u64) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 cells, got {}",
                counts.len()
            )));
        }
        let sum: u64 = counts.iter().map(|&c| c as u64).sum();
        if sum != n {
            return Err(Error::InvalidParameter(format!(
                "counts sum to {sum}, expected n = {n}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    /// Mean cell occupancy λ = n/N.
    pub fn lambda(&self) -> f64 {
        self.n as f64 / self.counts.len() as f64
    }
}

/// S = Σ_m h(η_m).
pub fn evaluate(h: &CellFunction, freq: &Frequencies) -> Result<f64> {
    h.validate()?;
    let lambda = freq.lambda();
    Ok(sum_compensated(
        freq.counts().iter().map(|&k| h.eval(k as u64, lambda)),
    ))
}

/// The power-divergence statistic in its centered per-cell form,
/// λ·Σ ψ̄_d(η_m). Equals `evaluate(PowerDivergence(d), freq)` on every valid
/// frequency vector; with |d| below [`MIN_PDS_INDEX`] the d = 0 member is used.
pub fn evaluate_pds_barred(d: f64, freq: &Frequencies) -> Result<f64> {
    if !d.is_finite() || d <= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "power-divergence index must satisfy d > -1, got {d}"
        )));
    }
    let lambda = freq.lambda();
    Ok(lambda
        * sum_compensated(
            freq.counts()
                .iter()
                .map(|&k| pds_cell_barred(d, k as u64, lambda)),
        ))
}

/// Standardize a statistic value: (s − N·E h(ξ)) / (σ(h)·√N), with the
/// centering and scale taken from the Poisson moment oracle at λ = n/N.
pub fn standardize(s: f64, h: &CellFunction, n: u64, cells: u64) -> Result<f64> {
    let (center, scale) = standardize_params(h, n, cells)?;
    Ok((s - center) / scale)
}

/// Centering N·E h(ξ) and scale σ(h)·√N used by [`standardize`].
pub fn standardize_params(h: &CellFunction, n: u64, cells: u64) -> Result<(f64, f64)> {
    let ctx = PoissonContext::new(n as f64 / cells as f64)?;
    let m = moment_summary(h, &ctx)?;
    if m.degenerate {
        return Err(Error::DegenerateStatistic);
    }
    let nf = cells as f64;
    Ok((nf * m.mean, m.sigma2.sqrt() * nf.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freq(counts: &[u32]) -> Frequencies {
        Frequencies::new(counts.to_vec()).unwrap()
    }

    #[test]
    fn chi_square_cell_sum() {
        // lambda = 1: (1 + 0 + 0 + 1) / 1
        let s = evaluate(&CellFunction::ChiSquareCell, &freq(&[2, 1, 1, 0])).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_sum() {
        // 2·(2 ln 2 + 0 + 0 + 0) = 4 ln 2, with 0·log 0 = 0
        let s = evaluate(&CellFunction::LogLikelihood, &freq(&[2, 1, 1, 0])).unwrap();
        assert!((s - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn count_statistic_cells() {
        let f = freq(&[2, 1, 1, 0]);
        let empty = evaluate(&CellFunction::Indicator(0), &f).unwrap();
        let collisions = evaluate(&CellFunction::CollisionCell, &f).unwrap();
        assert_eq!(empty, 1.0);
        assert_eq!(collisions, 1.0);
    }

    #[test]
    fn barred_form_examples() {
        let f = freq(&[2, 1, 1, 0]);
        // d = 1 reduces to chi-square
        let s = evaluate_pds_barred(1.0, &f).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        // d = -1/2: 4 Σ (√η − √λ)² = 16 − 8√2
        let t = evaluate_pds_barred(-0.5, &f).unwrap();
        assert!((t - (16.0 - 8.0 * 2.0_f64.sqrt())).abs() < 1e-12);
        // constant vector at integer lambda is exactly at the null fit
        let c = freq(&[2, 2, 2]);
        for d in [-0.5, 0.3, 1.0, 2.0] {
            assert!(evaluate_pds_barred(d, &c).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_chi_square() {
        let z = standardize(2.0, &CellFunction::ChiSquareCell, 4, 4).unwrap();
        assert!((z - (2.0 - 4.0) / 8.0_f64.sqrt()).abs() < 1e-10);
        // centering: s = N·E h maps to 0
        let z0 = standardize(4.0, &CellFunction::ChiSquareCell, 4, 4).unwrap();
        assert!(z0.abs() < 1e-10);
    }

    #[test]
    fn standardize_empty_cell_count() {
        // mu_0 = 1 at n = N = 2 (lambda = 1). Closed form for the scale:
        // sigma² = e^{-λ}(1 − e^{-λ}) − λ e^{-2λ}.
        let e1 = (-1.0_f64).exp();
        let sigma2 = e1 * (1.0 - e1) - (-2.0_f64).exp();
        let expected = (1.0 - 2.0 * e1) / (sigma2.sqrt() * 2.0_f64.sqrt());
        let z = standardize(1.0, &CellFunction::Indicator(0), 2, 2).unwrap();
        assert!(
            (z - expected).abs() < 1e-10,
            "z = {z}, expected {expected}"
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CellFunction::power_divergence(-1.5).is_err());
        assert!(CellFunction::power_divergence(1e-12).is_err());
        assert!(Frequencies::with_total(vec![1, 2], 4).is_err());
        assert!(Frequencies::new(vec![3]).is_err());
    }

    #[test]
    fn pds_total_at_zero() {
        for d in [-0.9, -0.5, 0.3, 1.0, 2.0, 3.5] {
            assert_eq!(pds_cell(d, 0, 0.7), 0.0);
        }
        // barred form at zero carries the centering constant 2/(d+1)
        assert!((pds_cell_barred(1.0, 0, 1.0) - 1.0).abs() < 1e-12);
    }
}
