//! Property tests for the statistic identities, the projection functionals,
//! and the perturbation profiles.

use proptest::prelude::*;

use mgof_core::alternatives::{make_profile, Profile};
use mgof_core::montecarlo::{sample_counts, SeedSpec};
use mgof_core::poisson::{moment_summary_fn, PoissonContext};
use mgof_core::statistics::{
    evaluate, evaluate_pds_barred, CellFunction, Frequencies, TailRule,
};

fn random_frequencies(n: u64, cells: u64, replicate: u64) -> Frequencies {
    let p = vec![1.0 / cells as f64; cells as usize];
    sample_counts(n, &p, &SeedSpec::new(0xfeed, 42), replicate).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pds_forms_agree(n in 4u64..200, cells in 2u64..100, rep in 0u64..1000) {
        let freq = random_frequencies(n, cells, rep);
        for d in [-0.5, 0.3, 1.0, 2.0] {
            let direct = evaluate(&CellFunction::PowerDivergence(d), &freq).unwrap();
            let barred = evaluate_pds_barred(d, &freq).unwrap();
            prop_assert!(rel_err(direct, barred) <= 1e-9, "d={d}: {direct} vs {barred}");
        }
    }

    #[test]
    fn freeman_tukey_closed_form(n in 4u64..200, cells in 2u64..100, rep in 0u64..1000) {
        let freq = random_frequencies(n, cells, rep);
        let ft = evaluate(&CellFunction::FreemanTukey, &freq).unwrap();
        let lambda = freq.lambda();
        let direct: f64 = freq.counts().iter().map(|&k| {
            let d = (k as f64).sqrt() - lambda.sqrt();
            4.0 * d * d
        }).sum();
        prop_assert!(rel_err(ft, direct) <= 1e-10);
    }

    #[test]
    fn collision_identity(n in 4u64..200, cells in 2u64..100, rep in 0u64..1000) {
        let freq = random_frequencies(n, cells, rep);
        let mu0 = evaluate(&CellFunction::Indicator(0), &freq).unwrap();
        let coll = evaluate(&CellFunction::CollisionCell, &freq).unwrap();
        prop_assert!(rel_err(coll, n as f64 - cells as f64 + mu0) <= 1e-12);
    }

    #[test]
    fn pds_nonnegative(n in 4u64..200, cells in 2u64..100, rep in 0u64..1000) {
        let freq = random_frequencies(n, cells, rep);
        let lambda = freq.lambda();
        let at_null = freq.counts().iter().all(|&k| (k as f64 - lambda).abs() < 1e-12);
        for d in [-0.5, 0.3, 1.0, 2.0] {
            let v = evaluate(&CellFunction::PowerDivergence(d), &freq).unwrap();
            prop_assert!(v >= -1e-9 * (1.0 + v.abs()), "d={d}: {v}");
            if at_null {
                prop_assert!(v.abs() <= 1e-9);
            } else {
                prop_assert!(v > 0.0, "d={d}: {v} off the null fit");
            }
        }
    }

    #[test]
    fn pds_continuous_at_zero_index(n in 4u64..120, cells in 2u64..60, rep in 0u64..1000) {
        let freq = random_frequencies(n, cells, rep);
        let near = evaluate(&CellFunction::PowerDivergence(1e-6), &freq).unwrap();
        let loglik = evaluate(&CellFunction::LogLikelihood, &freq).unwrap();
        prop_assert!((near - loglik).abs() <= 1e-5 * (1.0 + loglik.abs()));
    }

    #[test]
    fn profile_norm_and_feasibility(
        cells in 2u64..200,
        target in 1e-8f64..0.05,
        which in 0usize..3,
    ) {
        let profile = [Profile::TwoBlock, Profile::SingleCell, Profile::Cosine][which];
        let spec = make_profile(profile, cells, target).unwrap();
        prop_assert!((spec.eps_norm() - target).abs() <= 1e-12 * target.max(1e-9));
        let mean: f64 = spec.eps().iter().sum::<f64>() / cells as f64;
        prop_assert!(mean.abs() <= 1e-12);
        prop_assert!(spec.eps().iter().all(|e| 1.0 + e > 0.0));
    }

    #[test]
    fn projection_functionals_are_well_behaved(
        values in prop::collection::vec(-5.0f64..5.0, 6..12),
        lambda in 0.05f64..30.0,
    ) {
        let h = CellFunction::Custom { values, tail: TailRule::Constant(0.0) };
        let ctx = PoissonContext::new(lambda).unwrap();
        let m = moment_summary_fn(|k| h.eval(k, lambda), &ctx).unwrap();
        prop_assert!(m.sigma2 >= 0.0);
        prop_assert!(m.sigma2 <= m.var * (1.0 + 1e-9) + 1e-12);
        prop_assert!(m.rho.abs() <= 1.0 + 1e-12);
        if !m.degenerate {
            // affine shifts leave rho alone and scale sigma2 quadratically
            let m2 = moment_summary_fn(|k| 2.0 * h.eval(k, lambda) - 0.3 * k as f64 + 1.0, &ctx).unwrap();
            prop_assert!((m2.rho - m.rho).abs() <= 1e-10 * m.rho.abs().max(1.0));
            prop_assert!((m2.sigma2 - 4.0 * m.sigma2).abs() <= 1e-10 * (4.0 * m.sigma2).max(1e-300));
        }
    }
}
