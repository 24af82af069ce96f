//! Compares the data-parallel hot paths against the sequential fallback.
//!
//! Run twice and diff the groups:
//!
//! ```text
//! cargo bench -p mgof-core -- --save-baseline parallel
//! cargo bench -p mgof-core --no-default-features -- --baseline parallel
//! ```
//!
//! The group names carry the active mode, so a single run is also readable on
//! its own.

use criterion::{criterion_group, criterion_main, Criterion};
use mgof_core::exact;
use mgof_core::montecarlo::{estimate_corr_chi2, estimate_tail, SeedSpec};
use mgof_core::statistics::CellFunction;

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "serial"
    }
}

fn bench_tail(c: &mut Criterion) {
    let seed = SeedSpec::new(17, 1);
    let p = vec![1.0 / 500.0; 500];
    c.bench_function(&format!("tail-estimate-n500-r20k/{}", mode()), |b| {
        b.iter(|| {
            estimate_tail(
                &CellFunction::ChiSquareCell,
                500,
                500,
                &p,
                520.0,
                20_000,
                &seed,
            )
            .unwrap()
        })
    });
}

fn bench_corr(c: &mut Criterion) {
    let seed = SeedSpec::new(17, 2);
    c.bench_function(&format!("corr-chi2-n200-r20k/{}", mode()), |b| {
        b.iter(|| {
            estimate_corr_chi2(&CellFunction::LogLikelihood, 200, 100, 20_000, &seed).unwrap()
        })
    });
}

fn bench_enumeration(c: &mut Criterion) {
    let p = vec![1.0 / 6.0; 6];
    c.bench_function(&format!("enumerate-n30-cells6/{}", mode()), |b| {
        b.iter(|| {
            exact::enumerate(
                &CellFunction::LogLikelihood,
                30,
                6,
                &p,
                exact::DEFAULT_ENUMERATION_BUDGET,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_tail, bench_corr, bench_enumeration);
criterion_main!(benches);
