//! Exact truncated-series computation of Poisson functionals.
//!
//! Everything downstream (standardization, efficiency correlations, shift
//! terms, closed-form efficiency) is an expectation of some function of a
//! Poisson count. This module evaluates those expectations by direct summation
//! with a certified tail bound, so the rest of the crate can treat them as
//! exact to the requested tolerance.

use crate::alternatives::AlternativeSpec;
use crate::error::{Error, Result};
use crate::statistics::CellFunction;
use crate::util::KahanSum;

/// Default absolute tail-mass tolerance for truncated series.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

/// Ratio below which the projected variance is treated as zero (h affine in
/// the count, so it carries no test).
const DEGENERACY_RATIO: f64 = 1e-14;

/// Hard cap on the truncation point; reaching it means the integrand grows
/// too fast for the series to be certified.
const MAX_TRUNCATION: u64 = 200_000;

/// Lookahead width used both to probe |f| beyond the current truncation point
/// and as the extension step when the tail bound is not yet satisfied.
const PROBE_WIDTH: u64 = 32;

/// Rate and tolerance for one Poisson series evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PoissonContext {
    lambda: f64,
    truncation_tol: f64,
}

impl PoissonContext {
    /// Context with the default tolerance.
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_tol(lambda, DEFAULT_TRUNCATION_TOL)
    }

    /// Context with an explicit tolerance in (0, 1e-8].
    pub fn with_tol(lambda: f64, truncation_tol: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(truncation_tol > 0.0 && truncation_tol <= 1e-8) {
            return Err(Error::InvalidParameter(format!(
                "truncation tolerance must lie in (0, 1e-8], got {truncation_tol}"
            )));
        }
        Ok(Self {
            lambda,
            truncation_tol,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn truncation_tol(&self) -> f64 {
        self.truncation_tol
    }
}

/// E f(ξ) for ξ ~ Poi(λ), summed to a truncation point K chosen so the
/// neglected tail contributes less than the context tolerance.
///
/// K starts at max(60, ⌈λ + 12√λ + 30⌉) and is extended until the geometric
/// tail-mass bound pmf(K+1)/(1 − λ/(K+2)), weighted by the largest |f| seen on
/// the scanned range plus a probe window beyond it, falls below the tolerance.
/// Rejects non-finite values of f anywhere in the scanned window.
pub fn expect<F: Fn(u64) -> f64>(f: F, ctx: &PoissonContext) -> Result<f64> {
    let lambda = ctx.lambda;
    let mut limit = initial_truncation(lambda);

    // The plain recurrence p_{k+1} = p_k λ/(k+1) underflows at its start for
    // large rates (e^{-λ} is subnormal past λ ≈ 708), so switch to a direct
    // log-space evaluation there.
    let log_space = lambda > 300.0;
    let pmf_at = |k: u64| -> f64 {
        (k as f64 * lambda.ln() - lambda - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp()
    };

    let mut sum = KahanSum::new();
    let mut mass = KahanSum::new();
    let mut max_abs = 0.0_f64;
    let mut pmf = if log_space { f64::NAN } else { (-lambda).exp() };
    let mut k = 0u64;

    loop {
        while k <= limit {
            let v = f(k);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { k, value: v });
            }
            let p = if log_space { pmf_at(k) } else { pmf };
            max_abs = max_abs.max(v.abs());
            sum.add(v * p);
            mass.add(p);
            if !log_space {
                pmf *= lambda / (k + 1) as f64;
            }
            k += 1;
        }
        // Bound the remaining tail by the geometric series with ratio
        // lambda/(K+2) < 1 starting from the mass at K+1.
        let mut probe_max = max_abs;
        for j in (limit + 1)..=(limit + PROBE_WIDTH) {
            let v = f(j);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { k: j, value: v });
            }
            probe_max = probe_max.max(v.abs());
        }
        let head = if log_space { pmf_at(limit + 1) } else { pmf };
        let ratio = lambda / (limit + 2) as f64;
        let tail_mass = head / (1.0 - ratio);
        if tail_mass * probe_max <= ctx.truncation_tol || tail_mass == 0.0 {
            // A wildly wrong total is a numerical failure, not a result.
            if (mass.value() - 1.0).abs() > 1e-6 {
                return Err(Error::TruncationFailure {
                    tol: ctx.truncation_tol,
                    reached: limit,
                });
            }
            return Ok(sum.value());
        }
        limit += PROBE_WIDTH;
        if limit > MAX_TRUNCATION {
            return Err(Error::TruncationFailure {
                tol: ctx.truncation_tol,
                reached: limit,
            });
        }
    }
}

fn initial_truncation(lambda: f64) -> u64 {
    let k = (lambda + 12.0 * lambda.sqrt() + 30.0).ceil() as u64;
    k.max(60)
}

/// Quadratic kernel φ₂(k) = (k−λ)² − (k−λ) − λ: mean zero, uncorrelated with
/// the count, variance 2λ². This is the chi-square direction every other
/// statistic is correlated against.
pub fn charlier2(k: u64, lambda: f64) -> f64 {
    let c = k as f64 - lambda;
    c * c - c - lambda
}

/// Cubic kernel φ₃(k) = (k−λ)³ − 3(k−λ)² + (2−3λ)(k−λ) + 2λ: mean zero,
/// uncorrelated with the count, variance 6λ³.
pub fn charlier3(k: u64, lambda: f64) -> f64 {
    let c = k as f64 - lambda;
    c * c * c - 3.0 * c * c + (2.0 - 3.0 * lambda) * c + 2.0 * lambda
}

/// Exact Poisson functionals of one cell function at a given rate.
#[derive(Debug, Clone, Copy)]
pub struct MomentSummary {
    /// E h(ξ).
    pub mean: f64,
    /// Var h(ξ).
    pub var: f64,
    /// cov(h(ξ), ξ).
    pub cov_count: f64,
    /// cov(h(ξ), ξ)/λ — the coefficient of the linear part removed when
    /// projecting h onto the space orthogonal to {1, ξ}.
    pub slope: f64,
    /// Var g(ξ) with g(x) = h(x) − E h − slope·(x − λ): the variance left
    /// after the projection. Always in [0, var].
    pub sigma2: f64,
    /// Efficiency correlation: corr(g(ξ), φ₂(ξ)) ∈ [−1, 1]. Equals 1 exactly
    /// when h is quadratic in the count. Zero when `degenerate`.
    pub rho: f64,
    /// Set when sigma2 vanishes relative to var (h affine in the count).
    pub degenerate: bool,
}

/// Compute all [`MomentSummary`] fields for an arbitrary function of the count.
pub fn moment_summary_fn<F: Fn(u64) -> f64>(f: F, ctx: &PoissonContext) -> Result<MomentSummary> {
    let lambda = ctx.lambda;
    let mean = expect(&f, ctx)?;
    let var = expect(
        |k| {
            let d = f(k) - mean;
            d * d
        },
        ctx,
    )?;
    let cov_count = expect(|k| (f(k) - mean) * (k as f64 - lambda), ctx)?;
    let slope = cov_count / lambda;
    let g = |k: u64| f(k) - mean - slope * (k as f64 - lambda);
    let sigma2 = expect(
        |k| {
            let v = g(k);
            v * v
        },
        ctx,
    )?;

    let degenerate = !(var > 0.0) || sigma2 < DEGENERACY_RATIO * var;
    let rho = if degenerate {
        0.0
    } else {
        // Correlate against the computed (re-centered) kernel rather than the
        // algebraic variance 2λ²; this keeps |rho| ≤ 1 to rounding.
        let m2 = expect(|k| charlier2(k, lambda), ctx)?;
        let var2 = expect(
            |k| {
                let v = charlier2(k, lambda) - m2;
                v * v
            },
            ctx,
        )?;
        let cov = expect(|k| g(k) * (charlier2(k, lambda) - m2), ctx)?;
        cov / (sigma2.sqrt() * var2.sqrt())
    };

    Ok(MomentSummary {
        mean,
        var,
        cov_count,
        slope,
        sigma2,
        rho,
        degenerate,
    })
}

/// [`moment_summary_fn`] specialised to a cell function, evaluated at the
/// context rate.
pub fn moment_summary(h: &CellFunction, ctx: &PoissonContext) -> Result<MomentSummary> {
    h.validate()?;
    let lambda = ctx.lambda;
    moment_summary_fn(|k| h.eval(k, lambda), ctx)
}

/// First-order coefficient c in the small-λ expansion ρ(h, λ) = 1 − cλ + O(λ²).
///
/// For the power-divergence family the closed forms are
/// c(d) = 3(3^d − 2^{d+1} + 1)² / (8(2^d − 1)²) for d ≠ 0 and
/// c(0) = (3/8)(ln(3/4)/ln 2)²; for the remaining cells the coefficient is
/// (Δ³h(0)/Δ²h(0))²/6 on a rate-free representative of h, which requires
/// Δ²h(0) ≠ 0.
pub fn small_lambda_constant(h: &CellFunction) -> Result<f64> {
    h.validate()?;
    match h {
        CellFunction::PowerDivergence(d) => Ok(pds_small_lambda_constant(*d)),
        CellFunction::FreemanTukey => Ok(pds_small_lambda_constant(-0.5)),
        CellFunction::LogLikelihood => {
            let r = (3.0_f64 / 4.0).ln() / 2.0_f64.ln();
            Ok(3.0 / 8.0 * r * r)
        }
        CellFunction::ChiSquareCell => Ok(0.0),
        CellFunction::Indicator(_) | CellFunction::CollisionCell | CellFunction::Custom { .. } => {
            // Rate-free cells: use the forward differences directly.
            let h0 = h.eval(0, 1.0);
            let h1 = h.eval(1, 1.0);
            let h2 = h.eval(2, 1.0);
            let h3 = h.eval(3, 1.0);
            let d2 = h2 - 2.0 * h1 + h0;
            let d3 = h3 - 3.0 * h2 + 3.0 * h1 - h0;
            if d2.abs() < 1e-300 {
                return Err(Error::DegenerateStatistic);
            }
            let r = d3 / d2;
            Ok(r * r / 6.0)
        }
    }
}

fn pds_small_lambda_constant(d: f64) -> f64 {
    let num = 3.0_f64.powf(d) - 2.0 * 2.0_f64.powf(d) + 1.0;
    let den = 2.0_f64.powf(d) - 1.0;
    3.0 * num * num / (8.0 * den * den)
}

/// First-order small-λ expansion of the efficiency correlation, 1 − cλ with c
/// from [`small_lambda_constant`].
pub fn rho_small_lambda(h: &CellFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(1.0 - small_lambda_constant(h)? * lambda)
}

/// Large-λ expansion of the efficiency correlation for the power-divergence
/// cell with index d: 1 − (d−1)²/(6λ).
pub fn rho_large_lambda(d: f64, lambda: f64) -> f64 {
    1.0 - (d - 1.0) * (d - 1.0) / (6.0 * lambda)
}

/// Asymptotic standardized mean shift under a local alternative with mean
/// squared perturbation `eps_norm`: √(nλ/2) · eps_norm · ρ(h, λ).
pub fn asymptotic_shift(h: &CellFunction, n: u64, cells: u64, eps_norm: f64) -> Result<f64> {
    asymptotic_shift_with_tol(h, n, cells, eps_norm, DEFAULT_TRUNCATION_TOL)
}

pub fn asymptotic_shift_with_tol(
    h: &CellFunction,
    n: u64,
    cells: u64,
    eps_norm: f64,
    tol: f64,
) -> Result<f64> {
    if n < 2 || cells < 2 {
        return Err(Error::InvalidParameter(
            "need n >= 2 and at least 2 cells".into(),
        ));
    }
    if eps_norm < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "eps_norm must be non-negative, got {eps_norm}"
        )));
    }
    let lambda = n as f64 / cells as f64;
    let ctx = PoissonContext::with_tol(lambda, tol)?;
    let m = moment_summary(h, &ctx)?;
    if m.degenerate {
        return Err(Error::DegenerateStatistic);
    }
    Ok((n as f64 * lambda / 2.0).sqrt() * eps_norm * m.rho)
}

/// Exact mean-shift decomposition of a statistic under one local alternative,
/// with the asymptotic form alongside so callers can measure the gap.
#[derive(Debug, Clone, Copy)]
pub struct ShiftSummary {
    /// Null per-cell mean E₀ h(ξ).
    pub a0: f64,
    /// Alternative per-cell mean N⁻¹ Σ_m E₁ h(ξ_m), ξ_m ~ Poi(n p_m).
    pub a1: f64,
    /// Null projected standard deviation σ(h).
    pub sigma0: f64,
    /// Alternative projected standard deviation (N⁻¹ Σ_m Var₁ g(ξ_m))^{1/2}.
    pub sigma1: f64,
    /// √N (a1 − a0)/σ(h), the exact standardized shift.
    pub kappa_exact: f64,
    /// √(nλ/2)·ε(n)·ρ(h, λ), the first-order prediction.
    pub kappa_asymptotic: f64,
}

/// Compute [`ShiftSummary`] by truncated Poisson sums at each distinct cell
/// rate of the alternative.
pub fn exact_shift(h: &CellFunction, n: u64, alt: &AlternativeSpec) -> Result<ShiftSummary> {
    exact_shift_with_tol(h, n, alt, DEFAULT_TRUNCATION_TOL)
}

pub fn exact_shift_with_tol(
    h: &CellFunction,
    n: u64,
    alt: &AlternativeSpec,
    tol: f64,
) -> Result<ShiftSummary> {
    let cells = alt.cells() as u64;
    let lambda = n as f64 / cells as f64;
    let ctx = PoissonContext::with_tol(lambda, tol)?;
    let null = moment_summary(h, &ctx)?;
    if null.degenerate {
        return Err(Error::DegenerateStatistic);
    }
    let g = |k: u64, _rate: f64| h.eval(k, lambda) - null.mean - null.slope * (k as f64 - lambda);

    // Group equal perturbations; block alternatives have only a few distinct
    // cell rates.
    let mut groups: Vec<(f64, u64)> = Vec::new();
    for &e in alt.eps() {
        let rate = lambda * (1.0 + e);
        if !(rate > 0.0) {
            return Err(Error::InfeasiblePerturbation {
                cell: 0,
                p: (1.0 + e) / cells as f64,
            });
        }
        match groups.iter_mut().find(|(r, _)| *r == rate) {
            Some((_, c)) => *c += 1,
            None => groups.push((rate, 1)),
        }
    }

    let mut a1 = KahanSum::new();
    let mut var1 = KahanSum::new();
    for &(rate, count) in &groups {
        let w = count as f64 / cells as f64;
        let cell_ctx = PoissonContext::with_tol(rate, tol)?;
        let mean_h = expect(|k| h.eval(k, lambda), &cell_ctx)?;
        let mean_g = expect(|k| g(k, rate), &cell_ctx)?;
        let var_g = expect(
            |k| {
                let v = g(k, rate) - mean_g;
                v * v
            },
            &cell_ctx,
        )?;
        a1.add(w * mean_h);
        var1.add(w * var_g);
    }

    let sigma0 = null.sigma2.sqrt();
    let kappa_exact = (cells as f64).sqrt() * (a1.value() - null.mean) / sigma0;
    let kappa_asymptotic = (n as f64 * lambda / 2.0).sqrt() * alt.eps_norm() * null.rho;
    Ok(ShiftSummary {
        a0: null.mean,
        a1: a1.value(),
        sigma0,
        sigma1: var1.value().max(0.0).sqrt(),
        kappa_exact,
        kappa_asymptotic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternatives::{make_profile, AlternativeSpec, Profile};

    fn ctx(lambda: f64) -> PoissonContext {
        PoissonContext::new(lambda).unwrap()
    }

    #[test]
    fn expect_basic_moments() {
        assert!((expect(|k| k as f64, &ctx(3.5)).unwrap() - 3.5).abs() < 1e-10);
        assert!((expect(|k| (k * k) as f64, &ctx(2.0)).unwrap() - 6.0).abs() < 1e-10);
        let p0 = expect(|k| if k == 0 { 1.0 } else { 0.0 }, &ctx(1.0)).unwrap();
        assert!((p0 - (-1.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn expect_rejects_bad_input() {
        assert!(PoissonContext::new(0.0).is_err());
        assert!(PoissonContext::with_tol(1.0, 1e-7).is_err());
        assert!(expect(|k| if k == 7 { f64::NAN } else { 0.0 }, &ctx(1.0)).is_err());
    }

    #[test]
    fn kernel_identities() {
        // E φ = 0, E ξφ = 0, Var φ₂ = 2λ², Var φ₃ = 6λ³, at every scale.
        for lambda in [0.05, 0.5, 1.0, 5.0, 50.0] {
            let c = ctx(lambda);
            let tol = c.truncation_tol();
            let m2 = expect(|k| charlier2(k, lambda), &c).unwrap();
            let x2 = expect(|k| k as f64 * charlier2(k, lambda), &c).unwrap();
            let v2 = expect(|k| charlier2(k, lambda).powi(2), &c).unwrap();
            assert!(m2.abs() <= 10.0 * tol, "E phi2 = {m2} at lambda {lambda}");
            assert!(x2.abs() <= 10.0 * tol * lambda.max(1.0) * 10.0);
            assert!((v2 - 2.0 * lambda * lambda).abs() <= 10.0 * tol * lambda * lambda + 1e-9);

            let m3 = expect(|k| charlier3(k, lambda), &c).unwrap();
            let v3 = expect(|k| charlier3(k, lambda).powi(2), &c).unwrap();
            assert!(m3.abs() <= 10.0 * tol * lambda.max(1.0) * 10.0);
            assert!(
                (v3 - 6.0 * lambda.powi(3)).abs() <= 10.0 * tol * lambda.powi(3) + 1e-9,
                "Var phi3 = {v3} vs {}",
                6.0 * lambda.powi(3)
            );
        }
    }

    #[test]
    fn chi_square_cell_summary() {
        for lambda in [0.1, 1.0, 4.0, 25.0] {
            let m = moment_summary(&CellFunction::ChiSquareCell, &ctx(lambda)).unwrap();
            assert!((m.mean - 1.0).abs() < 1e-9);
            assert!((m.sigma2 - 2.0).abs() < 1e-8);
            assert!((m.rho - 1.0).abs() < 1e-9, "rho = {} at {lambda}", m.rho);
        }
    }

    #[test]
    fn square_cell_is_the_maximizer() {
        let m = moment_summary_fn(|k| (k * k) as f64, &ctx(2.0)).unwrap();
        assert!((m.slope - 5.0).abs() < 1e-9); // 2λ + 1
        assert!((m.sigma2 - 8.0).abs() < 1e-8); // 2λ²
        assert!((m.rho - 1.0).abs() < 1e-10);
    }

    #[test]
    fn empty_cell_indicator_matches_closed_form() {
        // h = I{ξ=0}: every moment has an elementary closed form, which gives
        // an independent route to rho.
        let lambda = 0.1_f64;
        let m = moment_summary(&CellFunction::Indicator(0), &ctx(lambda)).unwrap();
        let el = (-lambda).exp();
        let sigma2 = el * (1.0 - el) - lambda * (-2.0 * lambda).exp();
        let rho = el * lambda / (2.0_f64.sqrt() * sigma2.sqrt());
        assert!((m.sigma2 - sigma2).abs() < 1e-12);
        assert!((m.rho - rho).abs() < 1e-9, "rho {} vs {}", m.rho, rho);
        // leading term 1 − λ/6
        assert!((m.rho - (1.0 - lambda / 6.0)).abs() <= 1e-3);
    }

    #[test]
    fn affine_invariance() {
        let base = CellFunction::LogLikelihood;
        let lambda = 1.3;
        let c = ctx(lambda);
        let m = moment_summary(&base, &c).unwrap();
        let (a, b, cc) = (2.5, -0.7, 3.0);
        let m2 = moment_summary_fn(|k| a * base.eval(k, lambda) + b * k as f64 + cc, &c).unwrap();
        assert!((m2.rho - m.rho).abs() < 1e-10 * m.rho.abs().max(1.0));
        assert!((m2.sigma2 - a * a * m.sigma2).abs() < 1e-10 * (a * a * m.sigma2));
    }

    #[test]
    fn degenerate_affine_cell() {
        let m = moment_summary_fn(|k| 3.0 * k as f64 + 1.0, &ctx(2.0)).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.rho, 0.0);
    }

    #[test]
    fn small_lambda_expansion_values() {
        // pds d=2 reduces to 1/6
        let e = rho_small_lambda(&CellFunction::PowerDivergence(2.0), 0.1).unwrap();
        assert!((e - (1.0 - 0.1 / 6.0)).abs() < 1e-12);
        // log-likelihood constant (3/8)(ln(3/4)/ln 2)²
        let c0 = small_lambda_constant(&CellFunction::LogLikelihood).unwrap();
        let r = (0.75_f64).ln() / 2.0_f64.ln();
        assert!((c0 - 0.375 * r * r).abs() < 1e-15);
        // indicator constants 1/6, 3/8, 3/2
        for (r, want) in [(0, 1.0 / 6.0), (1, 3.0 / 8.0), (2, 1.5)] {
            let c = small_lambda_constant(&CellFunction::Indicator(r)).unwrap();
            assert!((c - want).abs() < 1e-12, "c({r}) = {c}");
        }
        let e = rho_small_lambda(&CellFunction::Indicator(1), 0.2).unwrap();
        assert!((e - 0.925).abs() < 1e-12);
        // collision cell shares the empty-cell constant
        let c = small_lambda_constant(&CellFunction::CollisionCell).unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-12);
        // second difference vanishes: no expansion
        assert!(small_lambda_constant(&CellFunction::Indicator(5)).is_err());
    }

    #[test]
    fn large_lambda_expansion_values() {
        assert_eq!(rho_large_lambda(1.0, 50.0), 1.0);
        assert!((rho_large_lambda(0.0, 100.0) - (1.0 - 1.0 / 600.0)).abs() < 1e-15);
        assert!((rho_large_lambda(-0.5, 25.0) - 0.985).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_shift_examples() {
        let k = asymptotic_shift(&CellFunction::ChiSquareCell, 100, 100, 0.04).unwrap();
        assert!((k - 50.0_f64.sqrt() * 0.04).abs() < 1e-9);
        let z = asymptotic_shift(&CellFunction::LogLikelihood, 100, 100, 0.0).unwrap();
        assert_eq!(z, 0.0);
        // lambda = 100: rho(psi_0) is within O(1/lambda²) of 1 − 1/600
        let k = asymptotic_shift(&CellFunction::LogLikelihood, 10_000, 100, 0.01).unwrap();
        let lead = (10_000.0_f64 * 100.0 / 2.0).sqrt() * 0.01 * (1.0 - 1.0 / 600.0);
        assert!((k - lead).abs() < 2e-4, "kappa = {k}, leading {lead}");
    }

    #[test]
    fn exact_shift_null_alternative() {
        let alt = AlternativeSpec::null(10);
        let s = exact_shift(&CellFunction::LogLikelihood, 20, &alt).unwrap();
        assert_eq!(s.kappa_exact, 0.0);
        assert!((s.sigma1 - s.sigma0).abs() < 1e-12);
        assert!((s.a1 - s.a0).abs() < 1e-14);
    }

    #[test]
    fn exact_shift_two_block_chi_square() {
        // For the chi-square cell the shift is exactly λ·ε(n), so the exact
        // and asymptotic forms agree to rounding.
        let alt = make_profile(Profile::TwoBlock, 50, 0.01).unwrap();
        let s = exact_shift(&CellFunction::ChiSquareCell, 50, &alt).unwrap();
        assert!((s.kappa_asymptotic - 0.05).abs() < 1e-12);
        assert!(
            (s.kappa_exact - s.kappa_asymptotic).abs() < 0.1 * s.kappa_asymptotic,
            "exact {} vs asymptotic {}",
            s.kappa_exact,
            s.kappa_asymptotic
        );
        assert!((s.kappa_exact - 0.05).abs() < 1e-9);
    }

    #[test]
    fn exact_shift_indicator_sign() {
        let alt = make_profile(Profile::TwoBlock, 100, 0.04).unwrap();
        let s = exact_shift(&CellFunction::Indicator(0), 20, &alt).unwrap();
        assert!(s.kappa_exact.is_finite());
        assert_eq!(
            s.kappa_exact.signum(),
            s.kappa_asymptotic.signum(),
            "exact {} vs asymptotic {}",
            s.kappa_exact,
            s.kappa_asymptotic
        );
    }
}
