//! The experiment drivers behind each subcommand. Every command loads one
//! JSON config, runs its rows, and writes `<out>/<id>.csv` plus
//! `<out>/<id>.json`.

use std::path::Path;

use anyhow::{anyhow, bail};
use serde_json::json;

use mgof_core::acceptance;
use mgof_core::alternatives::make_profile;
use mgof_core::iare::{
    asymptotic_power, closed_form_iare, theorem_verdict, RhoSource, StatDescriptor,
};
use mgof_core::montecarlo::{
    estimate_corr_chi2, estimate_critical, estimate_power, find_kn, normality_diagnostic,
    KnSearchOptions, SeedSpec,
};
use mgof_core::poisson::{
    moment_summary, rho_large_lambda, small_lambda_constant, PoissonContext,
};
use mgof_core::statistics::standardize_params;

use crate::config::{
    load, validate_common, CorrConfig, IareConfig, MomentsConfig, NormalityConfig, PowerConfig,
    StatisticSpec, VerdictConfig, VerifyConfig,
};
use crate::report::{Cell, Report};

pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
}

fn echo<T: serde::Serialize>(config: &T) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

/// Large-lambda expansions only exist for the power-divergence family.
fn pds_index(spec: &StatisticSpec) -> Option<f64> {
    match spec {
        StatisticSpec::Chi2 => Some(1.0),
        StatisticSpec::Loglik => Some(0.0),
        StatisticSpec::FreemanTukey => Some(-0.5),
        StatisticSpec::Pds { d } => Some(*d),
        _ => None,
    }
}

pub fn cmd_moments(path: &Path, out: &Path, ov: &Overrides) -> anyhow::Result<Report> {
    let mut cfg: MomentsConfig = load(path)?;
    let _ = ov;
    if cfg.lambdas.iter().any(|l| !(*l > 0.0)) {
        bail!("lambdas must be positive");
    }
    if !(cfg.truncation_tol > 0.0 && cfg.truncation_tol <= 1e-8) {
        bail!("truncation_tol must lie in (0, 1e-8]");
    }
    cfg.lambdas.sort_by(f64::total_cmp);

    let mut report = Report::new(
        &cfg.id,
        "moments",
        vec![
            "statistic",
            "lambda",
            "mean",
            "var",
            "r_n",
            "sigma2",
            "rho",
            "rho_expansion",
            "residual",
        ],
        echo(&cfg),
        "-".into(),
    );

    for spec in &cfg.statistics {
        let h = spec.to_cell()?;
        for &lambda in &cfg.lambdas {
            let ctx = PoissonContext::with_tol(lambda, cfg.truncation_tol)
                .map_err(|e| anyhow!("{e}"))?;
            let m = moment_summary(&h, &ctx).map_err(|e| anyhow!("{e}"))?;
            // Below lambda = 1/2 compare against the small-rate expansion
            // (which describes the magnitude of the correlation); above it,
            // the power-divergence members have the 1 − (d−1)²/(6λ) form.
            let expansion = if lambda <= 0.5 {
                small_lambda_constant(&h).ok().map(|c| 1.0 - c * lambda)
            } else {
                pds_index(spec).map(|d| rho_large_lambda(d, lambda))
            };
            let residual = expansion.map(|e| (m.rho.abs() - e).abs());
            report.push(vec![
                Cell::Text(h.to_string()),
                Cell::Num(lambda),
                Cell::Num(m.mean),
                Cell::Num(m.var),
                Cell::Num(m.slope),
                Cell::Num(m.sigma2),
                Cell::Num(m.rho),
                expansion.map_or(Cell::Empty, Cell::Num),
                residual.map_or(Cell::Empty, Cell::Num),
            ]);
        }
    }
    report.write(out)?;
    Ok(report)
}

pub fn cmd_power(path: &Path, out: &Path, ov: &Overrides) -> anyhow::Result<Report> {
    let mut cfg: PowerConfig = load(path)?;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(r) = ov.reps {
        cfg.reps = r;
    }
    validate_common(&cfg.n_grid, Some(cfg.reps))?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        bail!("alpha must lie in (0, 1)");
    }
    let growth = cfg.growth.to_law()?;
    let profile = cfg.alternative.profile()?;

    let mut report = Report::new(
        &cfg.id,
        "power",
        vec![
            "statistic",
            "n",
            "cells",
            "lambda",
            "eps_norm",
            "nabla",
            "mc_power",
            "std_err",
            "asymptotic_power",
            "abs_diff",
        ],
        echo(&cfg),
        SeedSpec::new(cfg.seed, 0).to_string(),
    );

    let mut stream = 0u64;
    for spec in &cfg.statistics {
        let h = spec.to_cell()?;
        for &n in &cfg.n_grid {
            stream += 1;
            let cells = growth.cells(n as f64);
            let lambda = n as f64 / cells as f64;
            let eps_norm = cfg.alternative.eps_norm_at(n, cells);
            let alt = make_profile(profile, cells, eps_norm).map_err(|e| anyhow!("{e}"))?;
            let nabla = alt.contiguity_index(n);

            let seed = SeedSpec::new(cfg.seed, stream);
            let u = estimate_critical(&h, n, cells, cfg.alpha, cfg.reps, &seed)
                .map_err(|e| anyhow!("{e}"))?;
            let (center, scale) = standardize_params(&h, n, cells).map_err(|e| anyhow!("{e}"))?;
            let t_raw = center + u * scale;
            let power = estimate_power(
                &h,
                n,
                cells,
                &alt,
                t_raw,
                cfg.reps,
                &SeedSpec::new(cfg.seed, stream + 1_000_000),
            )
            .map_err(|e| anyhow!("{e}"))?;

            let rho = moment_summary(&h, &PoissonContext::new(lambda).map_err(|e| anyhow!("{e}"))?)
                .map_err(|e| anyhow!("{e}"))?
                .rho;
            let predicted = asymptotic_power(nabla, rho, cfg.alpha);
            report.push(vec![
                Cell::Text(h.to_string()),
                Cell::Int(n as i64),
                Cell::Int(cells as i64),
                Cell::Num(lambda),
                Cell::Num(eps_norm),
                Cell::Num(nabla),
                Cell::Num(power.p_hat),
                Cell::Num(power.std_err),
                Cell::Num(predicted),
                Cell::Num((power.p_hat - predicted).abs()),
            ]);
        }
    }
    report.write(out)?;
    Ok(report)
}

pub fn cmd_corr(path: &Path, out: &Path, ov: &Overrides) -> anyhow::Result<Report> {
    let mut cfg: CorrConfig = load(path)?;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(r) = ov.reps {
        cfg.reps = r;
    }
    validate_common(&[], Some(cfg.reps))?;
    let lambda = cfg.n as f64 / cfg.cells as f64;

    let mut report = Report::new(
        &cfg.id,
        "corr",
        vec![
            "statistic",
            "n",
            "cells",
            "lambda",
            "mc_corr",
            "oracle_rho",
            "abs_diff",
            "reps",
        ],
        echo(&cfg),
        SeedSpec::new(cfg.seed, 0).to_string(),
    );
    for (i, spec) in cfg.statistics.iter().enumerate() {
        let h = spec.to_cell()?;
        let mc = estimate_corr_chi2(
            &h,
            cfg.n,
            cfg.cells,
            cfg.reps,
            &SeedSpec::new(cfg.seed, i as u64 + 1),
        )
        .map_err(|e| anyhow!("{e}"))?;
        let rho = moment_summary(&h, &PoissonContext::new(lambda).map_err(|e| anyhow!("{e}"))?)
            .map_err(|e| anyhow!("{e}"))?
            .rho;
        report.push(vec![
            Cell::Text(h.to_string()),
            Cell::Int(cfg.n as i64),
            Cell::Int(cfg.cells as i64),
            Cell::Num(lambda),
            Cell::Num(mc),
            Cell::Num(rho),
            Cell::Num((mc - rho).abs()),
            Cell::Int(cfg.reps as i64),
        ]);
    }
    report.write(out)?;
    Ok(report)
}

pub fn cmd_normality(path: &Path, out: &Path, ov: &Overrides) -> anyhow::Result<Report> {
    let mut cfg: NormalityConfig = load(path)?;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(r) = ov.reps {
        cfg.reps = r;
    }
    validate_common(&[], Some(cfg.reps))?;
    let lambda = cfg.n as f64 / cfg.cells as f64;

    let mut report = Report::new(
        &cfg.id,
        "normality",
        vec![
            "statistic",
            "n",
            "cells",
            "lambda",
            "ks_distance",
            "mean",
            "var",
            "reps",
        ],
        echo(&cfg),
        SeedSpec::new(cfg.seed, 0).to_string(),
    );
    for (i, spec) in cfg.statistics.iter().enumerate() {
        let h = spec.to_cell()?;
        let r = normality_diagnostic(
            &h,
            cfg.n,
            cfg.cells,
            cfg.reps,
            &SeedSpec::new(cfg.seed, i as u64 + 1),
        )
        .map_err(|e| anyhow!("{e}"))?;
        report.push(vec![
            Cell::Text(h.to_string()),
            Cell::Int(cfg.n as i64),
            Cell::Int(cfg.cells as i64),
            Cell::Num(lambda),
            Cell::Num(r.ks_distance),
            Cell::Num(r.mean),
            Cell::Num(r.var),
            Cell::Int(cfg.reps as i64),
        ]);
    }
    report.write(out)?;
    Ok(report)
}

pub fn cmd_iare(path: &Path, out: &Path, ov: &Overrides) -> anyhow::Result<Report> {
    let mut cfg: IareConfig = load(path)?;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let (Some(r), Some(mc)) = (ov.reps, cfg.mc.as_mut()) {
        mc.reps = r;
    }
    validate_common(&cfg.n_grid, cfg.mc.as_ref().map(|m| m.reps))?;
    let growth = cfg.growth.to_law()?;
    let tau = cfg.tau.to_tau()?;
    let fam = cfg.alternative.to_rate_family(growth)?;
    let h = cfg.h.to_cell()?;
    let psi = cfg.psi.to_cell()?;
    let desc = StatDescriptor::from_cell(&psi)
        .ok_or_else(|| anyhow!("custom cells cannot be classified"))?;

    let mut report = Report::new(
        &cfg.id,
        "iare",
        vec![
            "n",
            "e_closed_form",
            "k_n",
            "k_n_over_n",
            "verdict",
            "note",
        ],
        echo(&cfg),
        SeedSpec::new(cfg.seed, 0).to_string(),
    );

    let verdict = theorem_verdict(&desc, &fam);
    report.extra(
        "verdict_detail",
        serde_json::to_value(&verdict).expect("verdict serializes"),
    );

    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let mut note = String::new();
        let e_closed = match closed_form_iare(
            &RhoSource::Statistic(h.clone()),
            &RhoSource::Statistic(psi.clone()),
            &growth,
            &tau,
            n,
        ) {
            Ok(e) => Some(e),
            Err(e) => {
                note = format!("closed form: {e}");
                None
            }
        };
        let mut k_n = None;
        if let Some(mc) = &cfg.mc {
            if mc.enabled {
                let opts = KnSearchOptions {
                    window: mc.window,
                    ..KnSearchOptions::default()
                };
                match find_kn(
                    &h,
                    &psi,
                    mc.z,
                    n,
                    &fam,
                    mc.reps,
                    &SeedSpec::new(cfg.seed, 100 + i as u64),
                    &opts,
                ) {
                    Ok(r) => {
                        if r.saturated {
                            note = "saturated".into();
                        } else if !r.stable {
                            note = "unstable-power".into();
                        }
                        k_n = Some(r.k_n);
                    }
                    Err(e) => note = format!("search: {e}"),
                }
            }
        }
        report.push(vec![
            Cell::Int(n as i64),
            e_closed.map_or(Cell::Empty, Cell::Num),
            k_n.map_or(Cell::Empty, |k| Cell::Int(k as i64)),
            k_n.map_or(Cell::Empty, |k| Cell::Num(k as f64 / n as f64)),
            Cell::Text(verdict.value.to_string()),
            if note.is_empty() {
                Cell::Empty
            } else {
                Cell::Text(note)
            },
        ]);
    }
    report.write(out)?;
    Ok(report)
}

pub fn cmd_verdict(path: &Path, out: &Path, _ov: &Overrides) -> anyhow::Result<Report> {
    let cfg: VerdictConfig = load(path)?;
    let growth = cfg.growth.to_law()?;
    let fam = cfg.alternative.to_rate_family(growth)?;

    let mut report = Report::new(
        &cfg.id,
        "verdict",
        vec!["psi", "q", "growth_c", "profile", "gamma", "verdict", "rule"],
        echo(&cfg),
        "-".into(),
    );
    let mut details = Vec::new();
    for spec in &cfg.psi {
        let psi = spec.to_cell()?;
        let desc = StatDescriptor::from_cell(&psi)
            .ok_or_else(|| anyhow!("custom cells cannot be classified"))?;
        let v = theorem_verdict(&desc, &fam);
        report.push(vec![
            Cell::Text(psi.to_string()),
            Cell::Num(growth.q()),
            Cell::Num(growth.c()),
            Cell::Text(fam.profile.to_string()),
            Cell::Num(fam.gamma),
            Cell::Text(v.value.to_string()),
            Cell::Text(v.rule.clone()),
        ]);
        details.push(serde_json::to_value(&v).expect("verdict serializes"));
    }
    report.extra("verdict_detail", json!(details));
    report.write(out)?;
    Ok(report)
}

/// Largest replicate count pinned by any acceptance criterion; the gate may
/// not be run with less.
const PINNED_VERIFY_REPS: u64 = 200_000;

pub fn cmd_verify(
    path: Option<&Path>,
    out: &Path,
    ov: &Overrides,
) -> anyhow::Result<(Report, bool)> {
    let cfg: VerifyConfig = match path {
        Some(p) => load(p)?,
        None => VerifyConfig {
            id: "verify".into(),
            criteria: None,
            reps: None,
            seed: acceptance::DEFAULT_SEED,
        },
    };
    let reps = ov.reps.or(cfg.reps);
    if let Some(r) = reps {
        if r < PINNED_VERIFY_REPS {
            bail!(
                "acceptance criteria pin their replicate counts (up to {PINNED_VERIFY_REPS}); reps = {r} would weaken the gate"
            );
        }
    }
    if let Some(ids) = &cfg.criteria {
        let known = acceptance::criterion_ids();
        for id in ids {
            if !known.contains(&id.as_str()) {
                bail!("unknown criterion {id:?}; known: {}", known.join(", "));
            }
        }
    }
    let seed = ov.seed.unwrap_or(cfg.seed);

    let outcomes = acceptance::run_all(seed, cfg.criteria.as_deref());
    let mut report = Report::new(
        &cfg.id,
        "verify",
        vec!["criterion", "pass", "seconds", "detail"],
        echo(&cfg),
        SeedSpec::new(seed, 0).to_string(),
    );
    let mut all_pass = true;
    for o in &outcomes {
        println!("{}", o.line());
        all_pass &= o.pass;
        report.push(vec![
            Cell::Text(o.id.to_string()),
            Cell::Text(if o.pass { "pass" } else { "fail" }.into()),
            Cell::Num(o.seconds),
            Cell::Text(o.detail.replace(',', ";")),
        ]);
    }
    report.write(out)?;
    Ok((report, all_pass))
}
