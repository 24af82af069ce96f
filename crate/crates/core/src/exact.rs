//! Brute-force oracle: the exact finite distribution of a symmetric statistic
//! over all multinomial outcomes, by enumeration of compositions.
//!
//! This is deliberately the slow, obviously-correct path: it anchors the Monte
//! Carlo estimators and the asymptotic formulas at small sample sizes.

use std::io::Write;

use crate::error::{Error, Result};
use crate::par;
use crate::statistics::CellFunction;
use crate::util::KahanSum;

/// Default cap on the number of compositions enumerated.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 5_000_000;

/// Absolute tolerance for merging statistic values into one atom.
const MERGE_TOL: f64 = 1e-12;

/// A critical value paired with its achieved level.
pub type LevelPoint = (f64, f64);

/// A finite distribution as sorted (value, probability) atoms.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    atoms: Vec<(f64, f64)>,
    /// suffix[i] = Σ_{j ≥ i} prob_j, with suffix[len] = 0.
    suffix: Vec<f64>,
}

impl ExactDistribution {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut acc = KahanSum::new();
        let mut anchor = f64::NAN;
        for (v, p) in pairs {
            if !anchor.is_nan() && v - anchor <= MERGE_TOL {
                acc.add(p);
            } else {
                if !anchor.is_nan() {
                    atoms.push((anchor, acc.value()));
                }
                anchor = v;
                acc = KahanSum::new();
                acc.add(p);
            }
        }
        if !anchor.is_nan() {
            atoms.push((anchor, acc.value()));
        }

        let mut suffix = vec![0.0; atoms.len() + 1];
        let mut tail = KahanSum::new();
        for i in (0..atoms.len()).rev() {
            tail.add(atoms[i].1);
            suffix[i] = tail.value();
        }
        Self { atoms, suffix }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Total probability mass (should be 1 up to rounding).
    pub fn total(&self) -> f64 {
        self.suffix.first().copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        let mut s = KahanSum::new();
        for &(v, p) in &self.atoms {
            s.add(v * p);
        }
        s.value()
    }

    /// P{S > t}, strict inequality.
    pub fn tail(&self, t: f64) -> f64 {
        let idx = self.atoms.partition_point(|&(v, _)| v <= t);
        self.suffix[idx]
    }

    /// Smallest atom value t with P{S > t} ≤ alpha, together with the level
    /// actually achieved. Conservative: no randomization.
    pub fn critical(&self, alpha: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        for (i, &(v, _)) in self.atoms.iter().enumerate() {
            let achieved = self.suffix[i + 1];
            if achieved <= alpha {
                return Ok((v, achieved));
            }
        }
        unreachable!("the last atom always achieves level 0")
    }

    /// The conservative critical value together with the next lower atom and
    /// both achieved levels. On a discrete support these bracket the
    /// requested level; callers needing a least-biased match pick between
    /// them.
    pub fn critical_bracket(&self, alpha: f64) -> Result<(LevelPoint, Option<LevelPoint>)> {
        let (t, achieved) = self.critical(alpha)?;
        let idx = self.atoms.partition_point(|&(v, _)| v < t);
        let lower = if idx > 0 {
            Some((self.atoms[idx - 1].0, self.suffix[idx]))
        } else {
            None
        };
        Ok(((t, achieved), lower))
    }

    /// Dump as CSV rows `value,prob` with 15 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "value,prob")?;
        for &(v, p) in &self.atoms {
            writeln!(w, "{v:.14e},{p:.14e}")?;
        }
        Ok(())
    }
}

/// Number of compositions of n into `cells` non-negative parts,
/// C(n + cells − 1, cells − 1), saturating at u128::MAX.
pub fn composition_count(n: u64, cells: u64) -> u128 {
    debug_assert!(cells >= 1);
    let k = (cells - 1).min(n) as u128;
    let top = n as u128 + cells as u128 - 1;
    let mut result: u128 = 1;
    for i in 1..=k {
        // multiply before divide keeps the running value integral
        match result.checked_mul(top - k + i) {
            Some(r) => result = r / i,
            None => return u128::MAX,
        }
    }
    result
}

fn validate_probabilities(p: &[f64], cells: u64) -> Result<()> {
    if p.len() != cells as usize {
        return Err(Error::InvalidParameter(format!(
            "probability vector has {} entries, expected {cells}",
            p.len()
        )));
    }
    for (cell, &pm) in p.iter().enumerate() {
        if !(pm > 0.0) || !pm.is_finite() {
            return Err(Error::InfeasiblePerturbation { cell, p: pm });
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

fn log_factorials(n: u64) -> Vec<f64> {
    let mut lf = vec![0.0; n as usize + 1];
    for k in 1..=n as usize {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

/// Exact distribution of S = Σ h(η_m) for n observations over `cells` cells
/// with probabilities `p`, by full enumeration of compositions. Multinomial
/// weights are accumulated in log space. Fails when the composition count
/// exceeds `budget`.
pub fn enumerate(
    h: &CellFunction,
    n: u64,
    cells: u64,
    p: &[f64],
    budget: u128,
) -> Result<ExactDistribution> {
    h.validate()?;
    if cells < 2 || n == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 1 and at least 2 cells".into(),
        ));
    }
    validate_probabilities(p, cells)?;
    let count = composition_count(n, cells);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }

    let lambda = n as f64 / cells as f64;
    let h_at: Vec<f64> = (0..=n).map(|k| h.eval(k, lambda)).collect();
    let logfact = log_factorials(n);
    let logp: Vec<f64> = p.iter().map(|v| v.ln()).collect();

    // Partition on the first cell; each slice enumerates the rest
    // sequentially. Concatenation in first-coordinate order keeps the result
    // independent of the degree of parallelism.
    let parts: Vec<Vec<(f64, f64)>> = par::map_collect(n as usize + 1, |k1| {
        let k1 = k1 as u64;
        let mut out = Vec::new();
        let head_logw = logfact[n as usize] - logfact[k1 as usize] + k1 as f64 * logp[0];
        let head_s = h_at[k1 as usize];
        walk(
            1,
            n - k1,
            head_logw,
            head_s,
            &h_at,
            &logfact,
            &logp,
            cells as usize,
            &mut out,
        );
        out
    });

    let pairs: Vec<(f64, f64)> = parts.into_iter().flatten().collect();
    Ok(ExactDistribution::from_pairs(pairs))
}

#[allow(clippy::too_many_arguments)]
fn walk(
    cell: usize,
    remaining: u64,
    logw: f64,
    s: f64,
    h_at: &[f64],
    logfact: &[f64],
    logp: &[f64],
    cells: usize,
    out: &mut Vec<(f64, f64)>,
) {
    if cell == cells - 1 {
        let k = remaining as usize;
        let lw = logw - logfact[k] + remaining as f64 * logp[cell];
        out.push((s + h_at[k], lw.exp()));
        return;
    }
    for k in 0..=remaining {
        let lw = logw - logfact[k as usize] + k as f64 * logp[cell];
        walk(
            cell + 1,
            remaining - k,
            lw,
            s + h_at[k as usize],
            h_at,
            logfact,
            logp,
            cells,
            out,
        );
    }
}

/// Exact correlation under the uniform null of two symmetric statistics over
/// the same sample, by two enumeration passes (means, then centered moments).
pub fn joint_correlation(
    h1: &CellFunction,
    h2: &CellFunction,
    n: u64,
    cells: u64,
    budget: u128,
) -> Result<f64> {
    h1.validate()?;
    h2.validate()?;
    if cells < 2 || n == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 1 and at least 2 cells".into(),
        ));
    }
    let count = composition_count(n, cells);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }

    let lambda = n as f64 / cells as f64;
    let t1: Vec<f64> = (0..=n).map(|k| h1.eval(k, lambda)).collect();
    let t2: Vec<f64> = (0..=n).map(|k| h2.eval(k, lambda)).collect();
    let logfact = log_factorials(n);
    let logp = (cells as f64).recip().ln();

    // Pass 1: means.
    let sums: Vec<[f64; 3]> = par::map_collect(n as usize + 1, |k1| {
        let mut acc = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
        walk_pair(k1 as u64, n, cells, &t1, &t2, &logfact, logp, |w, s1, s2| {
            acc[0].add(w);
            acc[1].add(w * s1);
            acc[2].add(w * s2);
        });
        [acc[0].value(), acc[1].value(), acc[2].value()]
    });
    let mut total = KahanSum::new();
    let mut m1 = KahanSum::new();
    let mut m2 = KahanSum::new();
    for s in &sums {
        total.add(s[0]);
        m1.add(s[1]);
        m2.add(s[2]);
    }
    let mean1 = m1.value() / total.value();
    let mean2 = m2.value() / total.value();

    // Pass 2: centered second moments.
    let sums: Vec<[f64; 3]> = par::map_collect(n as usize + 1, |k1| {
        let mut acc = [KahanSum::new(), KahanSum::new(), KahanSum::new()];
        walk_pair(k1 as u64, n, cells, &t1, &t2, &logfact, logp, |w, s1, s2| {
            let d1 = s1 - mean1;
            let d2 = s2 - mean2;
            acc[0].add(w * d1 * d1);
            acc[1].add(w * d2 * d2);
            acc[2].add(w * d1 * d2);
        });
        [acc[0].value(), acc[1].value(), acc[2].value()]
    });
    let mut v1 = KahanSum::new();
    let mut v2 = KahanSum::new();
    let mut cov = KahanSum::new();
    for s in &sums {
        v1.add(s[0]);
        v2.add(s[1]);
        cov.add(s[2]);
    }
    let scale1 = v1.value() / total.value();
    let scale2 = v2.value() / total.value();
    if scale1 <= 1e-24 * (mean1 * mean1).max(1.0) || scale2 <= 1e-24 * (mean2 * mean2).max(1.0) {
        return Err(Error::DegenerateStatistic);
    }
    Ok((cov.value() / total.value() / (scale1.sqrt() * scale2.sqrt())).clamp(-1.0, 1.0))
}

/// Enumerate all compositions with first coordinate `k1`, feeding
/// (weight, S_1, S_2) to the visitor.
#[allow(clippy::too_many_arguments)]
fn walk_pair<F: FnMut(f64, f64, f64)>(
    k1: u64,
    n: u64,
    cells: u64,
    t1: &[f64],
    t2: &[f64],
    logfact: &[f64],
    logp: f64,
    mut visit: F,
) {
    // recursion over remaining cells with a small explicit stack
    fn inner<F: FnMut(f64, f64, f64)>(
        cell: usize,
        remaining: u64,
        logw: f64,
        s1: f64,
        s2: f64,
        t1: &[f64],
        t2: &[f64],
        logfact: &[f64],
        logp: f64,
        cells: usize,
        visit: &mut F,
    ) {
        if cell == cells - 1 {
            let k = remaining as usize;
            let lw = logw - logfact[k] + remaining as f64 * logp;
            visit(lw.exp(), s1 + t1[k], s2 + t2[k]);
            return;
        }
        for k in 0..=remaining {
            let lw = logw - logfact[k as usize] + k as f64 * logp;
            inner(
                cell + 1,
                remaining - k,
                lw,
                s1 + t1[k as usize],
                s2 + t2[k as usize],
                t1,
                t2,
                logfact,
                logp,
                cells,
                visit,
            );
        }
    }
    let head = logfact[n as usize] - logfact[k1 as usize] + k1 as f64 * logp;
    inner(
        1,
        n - k1,
        head,
        t1[k1 as usize],
        t2[k1 as usize],
        t1,
        t2,
        logfact,
        logp,
        cells as usize,
        &mut visit,
    );
}
