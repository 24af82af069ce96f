//! Local alternatives: perturbation vectors p_m = (1 + ε_m)/N with mean-zero
//! ε, their moments, and rate-parameterized families used by the efficiency
//! verdicts and the sample-size search.

use crate::error::{Error, Result};
use crate::growth::GrowthLaw;
use crate::util::sum_compensated;

/// Exponent gap below which two rates are considered tied and any asymptotic
/// comparison between them indeterminate.
pub const EXPONENT_TIE_EPS: f64 = 1e-12;

/// A perturbation vector defining cell probabilities (1 + ε_m)/N.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeSpec {
    eps: Vec<f64>,
}

impl AlternativeSpec {
    /// Validates mean zero (probabilities sum to one) and feasibility
    /// (every 1 + ε_m > 0).
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 cells, got {}",
                eps.len()
            )));
        }
        let mean = sum_compensated(eps.iter().copied()) / eps.len() as f64;
        let scale = eps.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
        if mean.abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "perturbations must sum to zero, mean = {mean}"
            )));
        }
        for (cell, &e) in eps.iter().enumerate() {
            if !(1.0 + e > 0.0) || !e.is_finite() {
                return Err(Error::InfeasiblePerturbation {
                    cell,
                    p: (1.0 + e) / eps.len() as f64,
                });
            }
        }
        Ok(Self { eps })
    }

    /// The null spec: no perturbation.
    pub fn null(cells: usize) -> Self {
        Self {
            eps: vec![0.0; cells],
        }
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn cells(&self) -> usize {
        self.eps.len()
    }

    /// Cell probabilities (1 + ε_m)/N.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.eps.len() as f64;
        self.eps.iter().map(|e| (1.0 + e) / n).collect()
    }

    /// Mean squared perturbation ε(n) = N⁻¹ Σ ε_m².
    pub fn eps_norm(&self) -> f64 {
        self.eps_moment(2)
    }

    /// j-th perturbation moment N⁻¹ Σ ε_m^j, j ≥ 2.
    pub fn eps_moment(&self, j: u32) -> f64 {
        sum_compensated(self.eps.iter().map(|e| e.powi(j as i32))) / self.eps.len() as f64
    }

    pub fn max_abs_eps(&self) -> f64 {
        self.eps.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }

    /// Contiguity index n·ε(n)/√N; the alternatives of interest have it
    /// diverging but below √N.
    pub fn contiguity_index(&self, n: u64) -> f64 {
        n as f64 * self.eps_norm() / (self.eps.len() as f64).sqrt()
    }
}

/// Canonical perturbation shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// +δ on one half of the cells, −δ on the other (third moment 0 exactly;
    /// an odd middle cell stays unperturbed).
    TwoBlock,
    /// Excess on the first cell, uniform deficit elsewhere.
    SingleCell,
    /// Smooth mean-zero wave across the cells.
    Cosine,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-block" => Ok(Profile::TwoBlock),
            "single-cell" => Ok(Profile::SingleCell),
            "cosine" => Ok(Profile::Cosine),
            other => Err(Error::InvalidParameter(format!(
                "unknown profile {other:?}; expected two-block, single-cell or cosine"
            ))),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::TwoBlock => "two-block",
            Profile::SingleCell => "single-cell",
            Profile::Cosine => "cosine",
        })
    }
}

/// Build a perturbation of the given shape with mean squared perturbation
/// exactly `eps_norm_target` (the shape is re-centered and rescaled).
pub fn make_profile(profile: Profile, cells: u64, eps_norm_target: f64) -> Result<AlternativeSpec> {
    if cells < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 cells, got {cells}"
        )));
    }
    if !(eps_norm_target >= 0.0) || !eps_norm_target.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps_norm target must be non-negative, got {eps_norm_target}"
        )));
    }
    let n = cells as usize;
    if eps_norm_target == 0.0 {
        return Ok(AlternativeSpec::null(n));
    }

    let mut shape: Vec<f64> = match profile {
        Profile::TwoBlock => {
            let half = n / 2;
            (0..n)
                .map(|m| {
                    if m < half {
                        1.0
                    } else if m >= n - half {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        Profile::SingleCell => {
            let mut v = vec![-1.0; n];
            v[0] = (n - 1) as f64;
            v
        }
        Profile::Cosine => (0..n)
            .map(|m| (2.0 * std::f64::consts::PI * (m + 1) as f64 / n as f64).cos())
            .collect(),
    };

    // Re-center to mean zero, then scale to hit the target norm exactly.
    let mean = sum_compensated(shape.iter().copied()) / n as f64;
    for v in &mut shape {
        *v -= mean;
    }
    let norm = sum_compensated(shape.iter().map(|v| v * v)) / n as f64;
    if norm <= 0.0 {
        return Err(Error::InvalidParameter(
            "profile shape collapsed to zero".into(),
        ));
    }
    let scale = (eps_norm_target / norm).sqrt();
    for v in &mut shape {
        *v *= scale;
    }
    for (cell, &e) in shape.iter().enumerate() {
        if !(1.0 + e > 0.0) {
            return Err(Error::InfeasiblePerturbation {
                cell,
                p: (1.0 + e) / n as f64,
            });
        }
    }
    AlternativeSpec::new(shape)
}

/// Outcome of one asymptotic rate comparison decided on exponents alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    Satisfied,
    Violated,
    /// Exponents tie; slowly varying factors would decide and we refuse to
    /// guess.
    Indeterminate,
}

/// Direction of a rate comparison for ε(n) = c·n^{-gamma}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDirection {
    /// ε(n) ≪ n^{-threshold}: needs gamma strictly above the threshold.
    FasterThan,
    /// ε(n) ≫ n^{-threshold}: needs gamma strictly below the threshold.
    SlowerThan,
}

/// Compare the decay exponent of ε(n) = c·n^{-gamma} against a threshold
/// exponent. Strict separation decides; ties are indeterminate.
pub fn compare_rate(gamma: f64, threshold: f64, direction: RateDirection) -> ConditionStatus {
    let diff = gamma - threshold;
    if diff.abs() <= EXPONENT_TIE_EPS {
        return ConditionStatus::Indeterminate;
    }
    let faster = diff > 0.0;
    match direction {
        RateDirection::FasterThan if faster => ConditionStatus::Satisfied,
        RateDirection::SlowerThan if !faster => ConditionStatus::Satisfied,
        _ => ConditionStatus::Violated,
    }
}

/// A rate-parameterized family of alternatives: at sample size n it has
/// N(n) cells from the growth law and mean squared perturbation c·n^{-gamma}.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFamily {
    pub profile: Profile,
    /// Amplitude constant c of ε(n) = c·n^{-gamma}.
    pub amplitude: f64,
    /// Decay exponent gamma in (0, 1].
    pub gamma: f64,
    pub growth: GrowthLaw,
}

impl RateFamily {
    pub fn new(profile: Profile, amplitude: f64, gamma: f64, growth: GrowthLaw) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Self {
            profile,
            amplitude,
            gamma,
            growth,
        })
    }

    /// ε(n) = c·n^{-gamma}.
    pub fn eps_norm_at(&self, n: u64) -> f64 {
        self.amplitude * (n as f64).powf(-self.gamma)
    }

    pub fn cells_at(&self, n: u64) -> u64 {
        self.growth.cells(n as f64)
    }

    /// The alternative at sample size n.
    pub fn spec_at(&self, n: u64) -> Result<AlternativeSpec> {
        make_profile(self.profile, self.cells_at(n), self.eps_norm_at(n))
    }
}

/// One evaluated asymptotic condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub text: String,
    pub status: ConditionStatus,
}

impl ConditionReport {
    pub fn new(text: impl Into<String>, status: ConditionStatus) -> Self {
        Self {
            text: text.into(),
            status,
        }
    }
}

/// Numeric values of the family quantities at one grid point.
#[derive(Debug, Clone, Copy)]
pub struct SpotValues {
    pub n: u64,
    pub cells: u64,
    /// n·ε(n)/√N.
    pub contiguity: f64,
    /// (n/N)·max_m ε_m².
    pub lambda_eps: f64,
}

/// Membership report for a rate family: the contiguous-alternative conditions
/// decided symbolically, plus numeric spot checks along a grid.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub in_family: ConditionStatus,
    pub conditions: Vec<ConditionReport>,
    pub spot: Vec<SpotValues>,
}

/// Classify a rate family against the contiguous-alternative conditions:
/// the contiguity index must diverge yet stay below √N, and (n/N)·max ε_m²
/// must vanish. All comparisons are exponent-only; ties are indeterminate.
pub fn classify_family(fam: &RateFamily, n_grid: &[u64]) -> MembershipReport {
    let q = fam.growth.q();
    let gamma = fam.gamma;
    let mut conditions = Vec::new();

    // n·ε(n)/√N ~ n^{1 − gamma − q/2} → ∞
    let e1 = 1.0 - gamma - q / 2.0;
    let s1 = exponent_positive(e1);
    conditions.push(ConditionReport::new(
        format!("contiguity index diverges: exponent 1 - gamma - q/2 = {e1:.6} > 0"),
        s1,
    ));

    // n·ε(n)/N ~ n^{1 − gamma − q} → 0
    let e2 = 1.0 - gamma - q;
    let s2 = exponent_negative(e2);
    conditions.push(ConditionReport::new(
        format!("contiguity index below sqrt(N): exponent 1 - gamma - q = {e2:.6} < 0"),
        s2,
    ));

    // (n/N)·max ε² → 0; the max depends on the shape.
    let e3 = match fam.profile {
        // max|ε| = Θ(√ε(n)) ⇒ (n/N)maxε² ~ n^{1 − q − gamma}
        Profile::TwoBlock | Profile::Cosine => 1.0 - q - gamma,
        // max|ε| = Θ(√(ε(n)·N)) ⇒ (n/N)maxε² ~ n^{1 − gamma}
        Profile::SingleCell => 1.0 - gamma,
    };
    let s3 = exponent_negative(e3);
    conditions.push(ConditionReport::new(
        format!("(n/N)·max eps^2 vanishes: exponent {e3:.6} < 0"),
        s3,
    ));

    let in_family = combine_status(&[s1, s2, s3]);

    let spot = n_grid
        .iter()
        .map(|&n| {
            let cells = fam.cells_at(n);
            let eps = fam.eps_norm_at(n);
            let max_eps2 = match fam.profile {
                Profile::TwoBlock | Profile::Cosine => eps,
                Profile::SingleCell => eps * (cells.saturating_sub(1)) as f64,
            };
            SpotValues {
                n,
                cells,
                contiguity: n as f64 * eps / (cells as f64).sqrt(),
                lambda_eps: n as f64 / cells as f64 * max_eps2,
            }
        })
        .collect();

    MembershipReport {
        in_family,
        conditions,
        spot,
    }
}

pub(crate) fn exponent_positive(e: f64) -> ConditionStatus {
    if e > EXPONENT_TIE_EPS {
        ConditionStatus::Satisfied
    } else if e < -EXPONENT_TIE_EPS {
        ConditionStatus::Violated
    } else {
        ConditionStatus::Indeterminate
    }
}

pub(crate) fn exponent_negative(e: f64) -> ConditionStatus {
    exponent_positive(-e)
}

pub(crate) fn combine_status(statuses: &[ConditionStatus]) -> ConditionStatus {
    if statuses.contains(&ConditionStatus::Violated) {
        ConditionStatus::Violated
    } else if statuses.contains(&ConditionStatus::Indeterminate) {
        ConditionStatus::Indeterminate
    } else {
        ConditionStatus::Satisfied
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_norm_examples() {
        let s = AlternativeSpec::new(vec![0.2, 0.2, -0.2, -0.2]).unwrap();
        assert!((s.eps_norm() - 0.04).abs() < 1e-15);
        assert_eq!(AlternativeSpec::null(4).eps_norm(), 0.0);
        let s = AlternativeSpec::new(vec![0.3, -0.1, -0.1, -0.1]).unwrap();
        assert!((s.eps_norm() - 0.03).abs() < 1e-15);
        assert!((s.eps_moment(3) - 0.006).abs() < 1e-15);
    }

    #[test]
    fn contiguity_examples() {
        let s = make_profile(Profile::TwoBlock, 25, 0.1).unwrap();
        assert!((s.contiguity_index(100) - 2.0).abs() < 1e-12);
        assert_eq!(AlternativeSpec::null(25).contiguity_index(100), 0.0);
        let s = make_profile(Profile::TwoBlock, 100, 0.09).unwrap();
        assert!((s.contiguity_index(400) - 3.6).abs() < 1e-12);
    }

    #[test]
    fn profile_construction() {
        let s = make_profile(Profile::TwoBlock, 4, 0.04).unwrap();
        assert_eq!(s.eps(), &[0.2, 0.2, -0.2, -0.2]);
        let s = make_profile(Profile::SingleCell, 4, 0.03).unwrap();
        for (got, want) in s.eps().iter().zip([0.3, -0.1, -0.1, -0.1]) {
            assert!((got - want).abs() < 1e-12);
        }
        let s = make_profile(Profile::Cosine, 10, 0.0).unwrap();
        assert_eq!(s.eps(), AlternativeSpec::null(10).eps());
    }

    #[test]
    fn profiles_hit_target_norm_exactly() {
        for profile in [Profile::TwoBlock, Profile::SingleCell, Profile::Cosine] {
            for cells in [2u64, 3, 5, 8, 17, 100] {
                for target in [1e-6, 1e-3, 0.01] {
                    let s = make_profile(profile, cells, target).unwrap();
                    assert!(
                        (s.eps_norm() - target).abs() <= 1e-12 * target.max(1e-9),
                        "{profile} N={cells} target={target} got {}",
                        s.eps_norm()
                    );
                    let mean: f64 = s.eps().iter().sum::<f64>() / cells as f64;
                    assert!(mean.abs() < 1e-12);
                    assert!(s.eps().iter().all(|e| 1.0 + e > 0.0));
                }
            }
        }
    }

    #[test]
    fn two_block_third_moment_vanishes() {
        for cells in [4u64, 7, 50, 51] {
            let s = make_profile(Profile::TwoBlock, cells, 0.02).unwrap();
            assert!(s.eps_moment(3).abs() < 1e-15, "cells={cells}");
        }
        for cells in [8u64, 32, 129] {
            let s = make_profile(Profile::Cosine, cells, 0.02).unwrap();
            let bound = s.eps_norm().powf(1.5);
            assert!(s.eps_moment(3).abs() <= bound, "cells={cells}");
        }
    }

    #[test]
    fn infeasible_target_rejected() {
        // single-cell with a huge target pushes some p_m below zero
        assert!(make_profile(Profile::SingleCell, 4, 3.0).is_err());
    }

    #[test]
    fn rate_comparisons() {
        use ConditionStatus::*;
        use RateDirection::*;
        assert_eq!(compare_rate(0.4, 1.0 / 3.0, FasterThan), Satisfied);
        assert_eq!(compare_rate(1.0 / 3.0, 1.0 / 3.0, FasterThan), Indeterminate);
        assert_eq!(compare_rate(0.3, 1.0 / 3.0, SlowerThan), Satisfied);
        assert_eq!(compare_rate(0.3, 1.0 / 3.0, FasterThan), Violated);
    }

    #[test]
    fn family_membership() {
        let growth = GrowthLaw::new(1.0, 1.0).unwrap();
        let fam = RateFamily::new(Profile::TwoBlock, 0.5, 0.45, growth).unwrap();
        let report = classify_family(&fam, &[100, 1000]);
        assert_eq!(report.in_family, ConditionStatus::Satisfied);
        assert_eq!(report.spot.len(), 2);
        // contiguity index at n: n·ε/√N = √n · 0.5 n^{-0.45} = 0.5 n^{0.05}
        let c = report.spot[0].contiguity;
        assert!((c - 0.5 * 100.0_f64.powf(0.05)).abs() < 1e-12);
    }
}
