//! Result persistence: per-period CSVs, a summary CSV, and a metadata file
//! carrying the fully resolved configuration.
//!
//! Floats are written in Rust's shortest round-trip form, so re-reading a
//! file reproduces every value exactly and identical runs produce
//! byte-identical files. No timestamps are recorded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AlgorithmKind, ScenarioResult};
use crate::datagen::PoolSpec;
use crate::error::{Error, Result};
use crate::learner::StepSchedule;

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

/// Write one per-period CSV per algorithm, a summary CSV, and a metadata
/// file under `out_dir`. Returns the paths written.
pub fn persist_results(result: &ScenarioResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scenario = sanitize(&result.config.name);
    let mut written = Vec::new();

    for kind in AlgorithmKind::all() {
        let series = result.series_for(kind);
        if series.is_empty() {
            continue;
        }
        let mut out = String::from(
            "replication,period,mean_utility,avg_cum_utility,approval_rate,default_rate\n",
        );
        for run in &series {
            for (idx, p) in run.stats.periods.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    run.replication,
                    idx + 1,
                    p.mean_utility,
                    p.avg_cum_utility,
                    p.approval_rate,
                    p.default_rate
                )
                .expect("string write");
            }
        }
        let path = out_dir.join(format!("{scenario}__{}.csv", kind.name()));
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let mut summary = String::from(
        "scenario,algorithm,replication,converged_utility,normalized_utility,rise_time,\
         post_shift_rise_time,regret_bound\n",
    );
    for run in &result.series {
        let regret = if run.algorithm == AlgorithmKind::Learner {
            fmt_opt(result.regret_bound_at_horizon)
        } else {
            String::new()
        };
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            result.config.name,
            run.algorithm.name(),
            run.replication,
            run.stats.converged_utility,
            fmt_opt(run.normalized_utility),
            run.stats.rise_time,
            run.post_shift_rise_time
                .map_or(String::new(), |v| v.to_string()),
            regret
        )
        .expect("string write");
    }
    let summary_path = out_dir.join(format!("{scenario}__summary.csv"));
    fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))?;
    written.push(summary_path);

    let meta_path = out_dir.join(format!("{scenario}__meta.txt"));
    fs::write(&meta_path, render_metadata(result)).map_err(|e| Error::io(&meta_path, e))?;
    written.push(meta_path);
    Ok(written)
}

fn pool_spec_summary(spec: &PoolSpec) -> String {
    match spec {
        PoolSpec::Individual { n, .. } => format!("individual(n = {n})"),
        PoolSpec::GroupBasic(g) => format!(
            "group_basic(mu = {}, sigma = {}, r = {})",
            g.gain_mean, g.gain_sd, g.interest_rate
        ),
        PoolSpec::GroupAdvanced(g) => format!(
            "group_advanced(n = {}, delta = {}, sigma = {})",
            g.n, g.delta, g.gain_sd
        ),
        PoolSpec::Csv(path) => format!("csv({})", path.display()),
    }
}

fn render_metadata(result: &ScenarioResult) -> String {
    let cfg = &result.config;
    let mut meta = String::new();
    let mut kv = |k: &str, v: String| writeln!(meta, "{k} = {v}").expect("string write");
    kv("scenario", cfg.name.clone());
    kv("pool", cfg.pool_name.clone());
    kv("pool_detail", pool_spec_summary(&cfg.pool_spec));
    kv("pool_size", cfg.pool_size.to_string());
    if let Some((spec, name, period)) = &cfg.shift {
        kv("shift_pool", name.clone());
        kv("shift_pool_detail", pool_spec_summary(spec));
        kv("shift_period", period.to_string());
    }
    kv(
        "algorithms",
        cfg.algorithms
            .iter()
            .map(|a| a.name())
            .collect::<Vec<_>>()
            .join(", "),
    );
    kv("link", cfg.learner.link.name().to_string());
    match cfg.learner.schedule {
        StepSchedule::Constant(alpha) => kv("step", format!("constant:{alpha}")),
        StepSchedule::Theoretic { ratio } => kv("step", format!("theoretic:{ratio}")),
    }
    kv("box_lo", cfg.learner.bounds.lo.to_string());
    kv("box_hi", cfg.learner.bounds.hi.to_string());
    kv(
        "num_candidates",
        cfg.learner.multi_start.num_candidates.to_string(),
    );
    kv("keep_best", cfg.learner.multi_start.keep_best.to_string());
    kv(
        "fresh_random",
        cfg.learner.multi_start.fresh_random.to_string(),
    );
    kv(
        "multi_periods",
        cfg.learner.multi_start.multi_periods.to_string(),
    );
    kv(
        "ranking_window",
        cfg.learner.multi_start.ranking_window.to_string(),
    );
    kv(
        "init_range",
        format!("{}..{}", cfg.learner.init_range.0, cfg.learner.init_range.1),
    );
    kv("interest_rate", cfg.utility.interest_rate.to_string());
    kv("subsidy", cfg.utility.subsidy.to_string());
    kv("T", cfg.t_periods.to_string());
    kv("N_t", cfg.n_t.to_string());
    kv("missing_p", cfg.missing_p.to_string());
    kv("replications", cfg.replications.to_string());
    kv("seed", cfg.seed.to_string());
    kv(
        "logistic_learning_rate",
        cfg.logistic_learning_rate.to_string(),
    );
    if let Some(d) = result.box_diameter {
        kv("regret_box_diameter", d.to_string());
    }
    if let Some(g) = result.gradient_bound {
        kv("regret_gradient_bound", g.to_string());
    }
    if let Some(b) = result.regret_bound_at_horizon {
        kv("regret_bound_at_horizon", b.to_string());
    }
    kv(
        "default_rate_convention",
        "0 when a period has no approvals".to_string(),
    );
    kv(
        "normalization",
        "per replication across the scenario's algorithms; requires the perfect oracle".to_string(),
    );
    meta
}
