//! Goodness-of-fit testing for uniformity of a multinomial distribution with
//! a growing number of cells, built around symmetric statistics S = Σ h(η_m).
//!
//! The crate has three layers:
//!
//! * an exact layer — truncated Poisson series ([`poisson`]) and brute-force
//!   enumeration of all multinomial outcomes ([`exact`]) — that serves as the
//!   oracle for everything else;
//! * a Monte Carlo layer ([`montecarlo`]) with reproducible counter-based
//!   seeding for tail probabilities, critical values, power curves, and the
//!   operational sample-size comparison of two tests;
//! * an asymptotic layer ([`iare`]) evaluating the closed-form sample-size
//!   ratio along a regularly varying cell-growth law and the verdict table
//!   for the chi-square test against power-divergence and count statistics.
//!
//! Data-parallel loops run on rayon when the default `parallel` feature is
//! enabled and degrade to sequential loops without it; results are
//! bit-identical either way.

pub mod alternatives;
pub mod error;
pub mod exact;
pub mod growth;
pub mod iare;
pub mod montecarlo;
pub mod poisson;
pub mod statistics;
pub mod util;

pub mod acceptance;

mod par;

pub use error::{Error, Result};

/// Cap the data-parallel thread count for the whole process. Affects speed
/// only: results are bit-identical for any thread count. Call once, before
/// any parallel work; later calls fail. A no-op without the `parallel`
/// feature.
pub fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}
