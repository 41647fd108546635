//! Experiment scenarios: paired algorithm runs over identical applicant
//! streams, replication orchestration, metrics, and result persistence.

pub mod diagnostics;
pub mod metrics;
mod persist;

pub use diagnostics::{estimate_gradient_bound, regret_bound};
pub use metrics::{
    compute_metrics, converged_utility, normalized_utility, rise_time, PeriodMetrics, SeriesStats,
};
pub use persist::persist_results;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{
    extrapolation_decide, gaussian_fit, logistic_decide, logistic_learn, observed_score,
    perceptron_decide, perceptron_learn, perfect_decide, GaussianFit, LogisticState,
    PerceptronState,
};
use crate::datagen::{build_pool_named, draw_batch, Applicant, ApplicantPool, PoolSpec};
use crate::domain::{Action, LendingRecord, Outcome, UtilityConfig};
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, OnlineLearner};
use crate::numeric::mean;
use crate::seeds::derive_seed;

/// Decision rules the harness can run side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Learner,
    Perfect,
    Extrapolation,
    Perceptron,
    Logistic,
    ApproveAll,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Learner => "learner",
            AlgorithmKind::Perfect => "perfect",
            AlgorithmKind::Extrapolation => "extrapolation",
            AlgorithmKind::Perceptron => "perceptron",
            AlgorithmKind::Logistic => "logistic",
            AlgorithmKind::ApproveAll => "approve_all",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "learner" => Ok(AlgorithmKind::Learner),
            "perfect" => Ok(AlgorithmKind::Perfect),
            "extrapolation" => Ok(AlgorithmKind::Extrapolation),
            "perceptron" => Ok(AlgorithmKind::Perceptron),
            "logistic" => Ok(AlgorithmKind::Logistic),
            "approve_all" => Ok(AlgorithmKind::ApproveAll),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }

    pub fn all() -> [AlgorithmKind; 6] {
        [
            AlgorithmKind::Learner,
            AlgorithmKind::Perfect,
            AlgorithmKind::Extrapolation,
            AlgorithmKind::Perceptron,
            AlgorithmKind::Logistic,
            AlgorithmKind::ApproveAll,
        ]
    }
}

/// A full experiment description.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub pool_name: String,
    pub pool_spec: PoolSpec,
    pub pool_size: usize,
    /// Optional distribution shift: `(spec, name, period)`. From `period` on,
    /// applicants are drawn from the shifted pool; algorithms are not told.
    pub shift: Option<(PoolSpec, String, u32)>,
    pub algorithms: Vec<AlgorithmKind>,
    pub learner: LearnerConfig,
    pub utility: UtilityConfig,
    pub t_periods: u32,
    pub n_t: usize,
    pub missing_p: f64,
    pub replications: u32,
    pub seed: u64,
    /// Learning rate of the logistic baseline.
    pub logistic_learning_rate: f64,
    /// Sample count for the empirical gradient-norm bound in the summary.
    pub gradient_bound_samples: usize,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config(
                "scenario needs at least one algorithm".into(),
            ));
        }
        if self.n_t == 0 {
            return Err(Error::Config("batch size N_t must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.missing_p) {
            return Err(Error::Config(format!(
                "missing probability {} outside [0, 1]",
                self.missing_p
            )));
        }
        if let Some((_, _, period)) = &self.shift {
            if *period >= self.t_periods && self.t_periods > 0 {
                return Err(Error::Config(format!(
                    "shift period {period} must precede the horizon {}",
                    self.t_periods
                )));
            }
        }
        if self.algorithms.contains(&AlgorithmKind::Learner)
            && self.t_periods > 0
            && self.learner.multi_start.multi_periods > self.t_periods
        {
            return Err(Error::Config(format!(
                "multi-start phase ({} periods) cannot outlast the horizon ({})",
                self.learner.multi_start.multi_periods, self.t_periods
            )));
        }
        self.learner.multi_start.validate()?;
        Ok(())
    }
}

/// One algorithm's metrics for one replication.
#[derive(Debug, Clone)]
pub struct AlgoRunSeries {
    pub algorithm: AlgorithmKind,
    pub replication: u32,
    pub stats: SeriesStats,
    /// Converged utility mapped onto [-1, 1] across the replication's
    /// algorithms; present when the set includes the perfect oracle.
    pub normalized_utility: Option<f64>,
    /// Rise time of the post-shift sub-series, when a shift is configured.
    pub post_shift_rise_time: Option<u32>,
    /// Per-period parameters, learner only.
    pub z_trace: Option<Vec<Vec<f64>>>,
}

/// Everything a scenario run produced.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub series: Vec<AlgoRunSeries>,
    /// Box diameter `D` entering the learner's regret diagnostic.
    pub box_diameter: Option<f64>,
    /// Empirical gradient-norm bound `G`.
    pub gradient_bound: Option<f64>,
    /// `3 D G / (2 sqrt(T))` at the scenario horizon.
    pub regret_bound_at_horizon: Option<f64>,
}

impl ScenarioResult {
    pub fn series_for(&self, kind: AlgorithmKind) -> Vec<&AlgoRunSeries> {
        self.series.iter().filter(|s| s.algorithm == kind).collect()
    }
}

/// Run every configured algorithm over `replications` paired applicant
/// streams. Within a replication all algorithms see identical applicants,
/// masks, and outcome rolls; all randomness derives from the scenario seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let pool = Arc::new(build_pool_named(
        &cfg.pool_spec,
        cfg.pool_size,
        derive_seed(cfg.seed, &[0x90]),
        &cfg.pool_name,
    )?);
    if pool.is_empty() {
        return Err(Error::Config(format!("pool '{}' is empty", cfg.pool_name)));
    }
    let shift_pool = match &cfg.shift {
        None => None,
        Some((spec, name, period)) => Some((
            Arc::new(build_pool_named(
                spec,
                cfg.pool_size,
                derive_seed(cfg.seed, &[0x91]),
                name,
            )?),
            *period,
        )),
    };

    let mut series: Vec<AlgoRunSeries> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, &pool, shift_pool.as_ref(), rep))
        .collect::<Result<Vec<Vec<AlgoRunSeries>>>>()?
        .into_iter()
        .flatten()
        .collect();

    attach_normalized_utilities(cfg, &mut series);

    let (box_diameter, gradient_bound, bound_at_horizon) =
        if cfg.algorithms.contains(&AlgorithmKind::Learner) && cfg.t_periods > 0 {
            let d = cfg.learner.bounds.diameter(2 * pool.feature_dim());
            let g = estimate_gradient_bound(
                &pool,
                cfg.learner.link,
                cfg.learner.bounds,
                cfg.learner.init_range,
                &cfg.utility,
                cfg.missing_p,
                cfg.gradient_bound_samples,
                derive_seed(cfg.seed, &[0x92]),
            )?;
            let bound = if g > 0.0 {
                Some(regret_bound(d, g, cfg.t_periods))
            } else {
                None
            };
            (Some(d), Some(g), bound)
        } else {
            (None, None, None)
        };

    Ok(ScenarioResult {
        config: cfg.clone(),
        series,
        box_diameter,
        gradient_bound,
        regret_bound_at_horizon: bound_at_horizon,
    })
}

fn attach_normalized_utilities(cfg: &ScenarioConfig, series: &mut [AlgoRunSeries]) {
    if !cfg.algorithms.contains(&AlgorithmKind::Perfect) {
        return;
    }
    for rep in 0..cfg.replications {
        let of_rep: Vec<usize> = (0..series.len())
            .filter(|&i| series[i].replication == rep)
            .collect();
        let lowest = of_rep
            .iter()
            .map(|&i| series[i].stats.converged_utility)
            .fold(f64::INFINITY, f64::min);
        let perfect = of_rep
            .iter()
            .find(|&&i| series[i].algorithm == AlgorithmKind::Perfect)
            .map(|&i| series[i].stats.converged_utility);
        if let Some(perfect) = perfect {
            for &i in &of_rep {
                series[i].normalized_utility =
                    normalized_utility(series[i].stats.converged_utility, lowest, perfect).ok();
            }
        }
    }
}

/// Shared training/frozen regime of the offline baselines: train through the
/// first ten periods (approving everything in the first), freeze, and
/// re-enter a ten-period training phase whenever the trailing mean utility
/// falls below half of its frozen-phase plateau.
struct OfflineRegime {
    training_started: u32,
    training_until: u32,
    plateau: f64,
    trailing: VecDeque<f64>,
}

const OFFLINE_TRAINING_PERIODS: u32 = 10;

impl OfflineRegime {
    fn new() -> Self {
        OfflineRegime {
            training_started: 1,
            training_until: OFFLINE_TRAINING_PERIODS,
            plateau: f64::NEG_INFINITY,
            trailing: VecDeque::new(),
        }
    }

    fn in_training(&self, t: u32) -> bool {
        t <= self.training_until
    }

    fn approve_all_period(&self, t: u32) -> bool {
        t == self.training_started
    }

    fn after_period(&mut self, t: u32, period_mean_utility: f64) {
        self.trailing.push_back(period_mean_utility);
        while self.trailing.len() > metrics::TRAILING_WINDOW {
            self.trailing.pop_front();
        }
        if self.in_training(t) {
            return;
        }
        let trailing_mean = self.trailing.iter().sum::<f64>() / self.trailing.len() as f64;
        self.plateau = self.plateau.max(trailing_mean);
        if self.plateau > 0.0 && trailing_mean < 0.5 * self.plateau {
            self.training_started = t + 1;
            self.training_until = t + OFFLINE_TRAINING_PERIODS;
            self.plateau = f64::NEG_INFINITY;
        }
    }
}

struct ExtrapolationRunner {
    fit: Option<GaussianFit>,
    pairs: Vec<(f64, f64)>,
    regime: OfflineRegime,
}

struct LogisticRunner {
    state: LogisticState,
    regime: OfflineRegime,
}

enum AlgoRunner {
    Learner(Box<OnlineLearner>),
    Perfect,
    Extrapolation(ExtrapolationRunner),
    Perceptron(PerceptronState),
    Logistic(LogisticRunner),
    ApproveAll,
}

fn init_runner(
    kind: AlgorithmKind,
    cfg: &ScenarioConfig,
    feature_dim: usize,
    rep: u32,
    algo_idx: usize,
) -> Result<AlgoRunner> {
    Ok(match kind {
        AlgorithmKind::Learner => {
            let mut learner_cfg = cfg.learner.clone();
            learner_cfg.seed = derive_seed(cfg.seed, &[0xA0, u64::from(rep), algo_idx as u64]);
            AlgoRunner::Learner(Box::new(OnlineLearner::new(
                feature_dim,
                learner_cfg,
                cfg.utility,
            )?))
        }
        AlgorithmKind::Perfect => AlgoRunner::Perfect,
        AlgorithmKind::Extrapolation => AlgoRunner::Extrapolation(ExtrapolationRunner {
            fit: None,
            pairs: Vec::new(),
            regime: OfflineRegime::new(),
        }),
        AlgorithmKind::Perceptron => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                cfg.seed,
                &[0xA1, u64::from(rep), algo_idx as u64],
            ));
            AlgoRunner::Perceptron(PerceptronState::random_init(feature_dim, &mut rng))
        }
        AlgorithmKind::Logistic => AlgoRunner::Logistic(LogisticRunner {
            state: LogisticState::new(feature_dim, cfg.logistic_learning_rate),
            regime: OfflineRegime::new(),
        }),
        AlgorithmKind::ApproveAll => AlgoRunner::ApproveAll,
    })
}

fn outcome_for(app: &Applicant, action: Action) -> Outcome {
    match action {
        Action::Rejected => Outcome::NotApplicable,
        Action::Approved => {
            if app.realized_return() {
                Outcome::Returned
            } else {
                Outcome::Defaulted
            }
        }
    }
}

fn record_for(
    app: &Applicant,
    action: Action,
    approve_prob: f64,
    utility: &UtilityConfig,
    period: u32,
) -> Result<LendingRecord> {
    LendingRecord::new(
        app.observed.clone(),
        app.group_size,
        approve_prob,
        action,
        outcome_for(app, action),
        utility,
        period,
    )
}

fn run_replication(
    cfg: &ScenarioConfig,
    pool: &Arc<ApplicantPool>,
    shift_pool: Option<&(Arc<ApplicantPool>, u32)>,
    rep: u32,
) -> Result<Vec<AlgoRunSeries>> {
    let feature_dim = pool.feature_dim();
    let mut batch_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0xB0, u64::from(rep)]));
    let mut runners: Vec<AlgoRunner> = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(idx, &kind)| init_runner(kind, cfg, feature_dim, rep, idx))
        .collect::<Result<Vec<_>>>()?;
    let mut streams: Vec<Vec<Vec<LendingRecord>>> =
        vec![Vec::with_capacity(cfg.t_periods as usize); cfg.algorithms.len()];
    let mut z_trace: Vec<Vec<f64>> = Vec::new();

    for t in 1..=cfg.t_periods {
        let active_pool = match shift_pool {
            Some((shifted, period)) if t >= *period => shifted,
            _ => pool,
        };
        let batch = draw_batch(active_pool, cfg.n_t, cfg.missing_p, &mut batch_rng)?;
        for (idx, runner) in runners.iter_mut().enumerate() {
            let records = match runner {
                AlgoRunner::Learner(learner) => {
                    let out = learner.step(&batch, active_pool, cfg.missing_p)?;
                    z_trace.push(out.z_used);
                    out.records
                }
                AlgoRunner::Perfect => batch
                    .iter()
                    .map(|app| {
                        let action = perfect_decide(app.true_return_prob, &cfg.utility);
                        let p = if action == Action::Approved { 1.0 } else { 0.0 };
                        record_for(app, action, p, &cfg.utility, t)
                    })
                    .collect::<Result<Vec<_>>>()?,
                AlgoRunner::ApproveAll => batch
                    .iter()
                    .map(|app| record_for(app, Action::Approved, 1.0, &cfg.utility, t))
                    .collect::<Result<Vec<_>>>()?,
                AlgoRunner::Perceptron(state) => batch
                    .iter()
                    .map(|app| {
                        let action = perceptron_decide(state, &app.observed);
                        let outcome = outcome_for(app, action);
                        if action == Action::Approved {
                            perceptron_learn(state, &app.observed, outcome);
                        }
                        let p = if action == Action::Approved { 1.0 } else { 0.0 };
                        record_for(app, action, p, &cfg.utility, t)
                    })
                    .collect::<Result<Vec<_>>>()?,
                AlgoRunner::Logistic(runner) => {
                    let records = batch
                        .iter()
                        .map(|app| {
                            let action = if runner.regime.approve_all_period(t) {
                                Action::Approved
                            } else {
                                logistic_decide(&runner.state, &app.observed, &cfg.utility)
                            };
                            let outcome = outcome_for(app, action);
                            if action == Action::Approved && runner.regime.in_training(t) {
                                logistic_learn(&mut runner.state, &app.observed, outcome);
                            }
                            let p = if action == Action::Approved { 1.0 } else { 0.0 };
                            record_for(app, action, p, &cfg.utility, t)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let utilities: Vec<f64> = records.iter().map(|r| r.utility).collect();
                    runner.regime.after_period(t, mean(&utilities));
                    records
                }
                AlgoRunner::Extrapolation(runner) => {
                    let records = batch
                        .iter()
                        .map(|app| {
                            let action = if runner.regime.approve_all_period(t) {
                                Action::Approved
                            } else {
                                match &runner.fit {
                                    Some(fit) => {
                                        extrapolation_decide(fit, &app.observed, &cfg.utility)
                                    }
                                    // Still gathering its first fit.
                                    None => Action::Approved,
                                }
                            };
                            // Training targets come from the oracle-side
                            // repayment probability, stored every period so a
                            // retraining phase can refit.
                            if let Some(q) = observed_score(&app.observed) {
                                runner.pairs.push((q, app.true_return_prob));
                            }
                            let p = if action == Action::Approved { 1.0 } else { 0.0 };
                            record_for(app, action, p, &cfg.utility, t)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if runner.regime.in_training(t) {
                        if let Ok(fit) = gaussian_fit(&runner.pairs) {
                            runner.fit = Some(fit);
                        }
                    }
                    let utilities: Vec<f64> = records.iter().map(|r| r.utility).collect();
                    runner.regime.after_period(t, mean(&utilities));
                    records
                }
            };
            streams[idx].push(records);
        }
    }

    cfg.algorithms
        .iter()
        .enumerate()
        .map(|(idx, &kind)| {
            let stats = if cfg.t_periods == 0 {
                SeriesStats::default()
            } else {
                compute_metrics(&streams[idx])?
            };
            let post_shift_rise_time = cfg.shift.as_ref().and_then(|(_, _, period)| {
                let start = (*period - 1) as usize;
                if start >= stats.periods.len() {
                    return None;
                }
                let means: Vec<f64> = stats.periods[start..]
                    .iter()
                    .map(|p| p.mean_utility)
                    .collect();
                Some(rise_time(&means))
            });
            Ok(AlgoRunSeries {
                algorithm: kind,
                replication: rep,
                normalized_utility: None,
                post_shift_rise_time,
                z_trace: if kind == AlgorithmKind::Learner {
                    Some(z_trace.clone())
                } else {
                    None
                },
                stats,
            })
        })
        .collect()
}
