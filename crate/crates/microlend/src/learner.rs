//! Online policy updates: the score-function gradient estimator with a
//! historical-average baseline, step-size schedules, projection onto the box
//! domain, and the period loop with its multi-start scheme.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{draw_batch, Applicant, ApplicantPool};
use crate::domain::{Action, BoxBounds, LendingRecord, Outcome, PolicyParams, UtilityConfig};
use crate::error::{Error, Result};
use crate::numeric::mean;
use crate::policy::{evaluate_policy, policy_derivative, sample_decision, LinkKind};
use crate::seeds::derive_seed;

/// One period's estimate of the expected-utility gradient.
#[derive(Debug, Clone)]
pub struct GradientEstimate {
    values: Vec<f64>,
    batch_size: usize,
}

impl GradientEstimate {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Running average of per-period mean utility; the variance-reduction
/// baseline subtracted inside the gradient estimator.
///
/// Before any period has completed the baseline is zero, so the first
/// period's estimate is the plain score-function estimator.
#[derive(Debug, Clone, Default)]
pub struct BaselineTracker {
    running_sum: f64,
    periods_seen: u32,
}

impl BaselineTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> f64 {
        if self.periods_seen == 0 {
            0.0
        } else {
            self.running_sum / f64::from(self.periods_seen)
        }
    }

    /// Fold one completed period in. Call after the period's gradient has
    /// been taken: a period never enters the baseline used for its own
    /// update.
    pub fn observe_period(&mut self, records: &[LendingRecord]) {
        let utilities: Vec<f64> = records.iter().map(|r| r.utility).collect();
        self.observe_period_mean(mean(&utilities));
    }

    pub fn observe_period_mean(&mut self, period_mean_utility: f64) {
        self.running_sum += period_mean_utility;
        self.periods_seen += 1;
    }

    pub fn periods_seen(&self) -> u32 {
        self.periods_seen
    }
}

/// Step-size schedule: a constant, or the theoretical `ratio / sqrt(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    Theoretic { ratio: f64 },
}

impl StepSchedule {
    pub fn step_size(&self, t: u32) -> Result<f64> {
        if t < 1 {
            return Err(Error::Contract(
                "step size is defined for periods t >= 1".into(),
            ));
        }
        Ok(match *self {
            StepSchedule::Constant(alpha) => alpha,
            StepSchedule::Theoretic { ratio } => ratio / f64::from(t).sqrt(),
        })
    }
}

/// Multi-start scheme: run several candidate parameter vectors for the first
/// `multi_periods` periods, each period keeping the `keep_best` by trailing
/// mean utility and refilling with fresh random candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiStartConfig {
    pub num_candidates: usize,
    pub keep_best: usize,
    pub fresh_random: usize,
    pub multi_periods: u32,
    /// Candidates are ranked by mean utility over this many trailing periods.
    pub ranking_window: usize,
}

impl MultiStartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_candidates == 0 || self.keep_best == 0 {
            return Err(Error::Config(
                "multi-start needs at least one candidate".into(),
            ));
        }
        if self.keep_best + self.fresh_random != self.num_candidates {
            return Err(Error::Config(format!(
                "keep_best ({}) + fresh_random ({}) must equal num_candidates ({})",
                self.keep_best, self.fresh_random, self.num_candidates
            )));
        }
        if self.ranking_window == 0 {
            return Err(Error::Config("ranking window must be positive".into()));
        }
        Ok(())
    }

    /// Single-candidate configuration (multi-start disabled).
    pub fn single() -> Self {
        MultiStartConfig {
            num_candidates: 1,
            keep_best: 1,
            fresh_random: 0,
            multi_periods: 0,
            ranking_window: 5,
        }
    }
}

impl Default for MultiStartConfig {
    fn default() -> Self {
        MultiStartConfig {
            num_candidates: 10,
            keep_best: 5,
            fresh_random: 5,
            multi_periods: 50,
            ranking_window: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub link: LinkKind,
    pub schedule: StepSchedule,
    pub bounds: BoxBounds,
    pub multi_start: MultiStartConfig,
    /// Fresh candidates draw each coordinate uniformly from this range.
    pub init_range: (f64, f64),
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            link: LinkKind::CaseA,
            schedule: StepSchedule::Constant(2.0),
            bounds: BoxBounds::default(),
            multi_start: MultiStartConfig::default(),
            init_range: (0.0, 1.0),
            seed: 0,
        }
    }
}

/// Score-function gradient estimate over one period's records:
///
/// ```text
/// F[k] = (1/N) * sum_i (d pi(s_i, a_i) / d z[k]) / pi(s_i, a_i) * (R_i - baseline)
/// ```
///
/// Every record must carry the approval probability the deciding policy
/// actually used; a record whose own action had probability zero cannot have
/// been sampled and is rejected as corrupt.
pub fn gradient_estimate(
    records: &[LendingRecord],
    z: &PolicyParams,
    kind: LinkKind,
    baseline: f64,
) -> Result<GradientEstimate> {
    let dim = 2 * z.dim();
    let mut values = vec![0.0; dim];
    for record in records {
        let action_prob = record.action_prob();
        if action_prob == 0.0 {
            return Err(Error::DataIntegrity(format!(
                "record stores probability 0 for its own action ({:?})",
                record.action
            )));
        }
        let advantage = record.utility - baseline;
        let grad = policy_derivative(z, &record.features, kind, record.action)?;
        let scale = advantage / action_prob;
        for (v, g) in values.iter_mut().zip(&grad) {
            *v += g * scale;
        }
    }
    if !records.is_empty() {
        let inv_n = 1.0 / records.len() as f64;
        for v in &mut values {
            *v *= inv_n;
        }
    }
    Ok(GradientEstimate {
        values,
        batch_size: records.len(),
    })
}

/// Ascent step followed by Euclidean projection onto the axis-aligned box:
/// per-coordinate clamping.
pub fn update_and_project(
    z: &PolicyParams,
    grad: &GradientEstimate,
    alpha: f64,
    bounds: BoxBounds,
) -> PolicyParams {
    let flat = z.as_flat();
    let updated: Vec<f64> = flat
        .iter()
        .zip(grad.values())
        .map(|(zi, gi)| bounds.clamp(zi + alpha * gi))
        .collect();
    PolicyParams::from_flat(&updated, bounds).expect("clamped coordinates are in the box")
}

struct Candidate {
    z: PolicyParams,
    baseline: BaselineTracker,
    recent: VecDeque<f64>,
    rng: ChaCha8Rng,
}

impl Candidate {
    fn trailing_mean(&self) -> f64 {
        if self.recent.is_empty() {
            f64::NEG_INFINITY
        } else {
            self.recent.iter().sum::<f64>() / self.recent.len() as f64
        }
    }
}

/// What one learning period produced: the incumbent's decisions on the shared
/// batch, and the parameters it used to make them.
#[derive(Debug, Clone)]
pub struct PeriodOutput {
    pub records: Vec<LendingRecord>,
    pub z_used: Vec<f64>,
}

/// The online learner, driven one period at a time by externally supplied
/// batches.
///
/// While the multi-start phase is active, the incumbent (currently best)
/// candidate decides on the supplied shared batch and every other candidate
/// decides on a private batch freshly drawn from the pool, so each
/// candidate's gradient is valid for its own sampled actions and the
/// incumbent's record stream stays paired with the other algorithms in a
/// scenario. After the phase ends only the best candidate continues.
pub struct OnlineLearner {
    cfg: LearnerConfig,
    utility: UtilityConfig,
    n: usize,
    candidates: Vec<Candidate>,
    incumbent: usize,
    period: u32,
    spawned: u64,
}

impl OnlineLearner {
    pub fn new(n: usize, cfg: LearnerConfig, utility: UtilityConfig) -> Result<Self> {
        cfg.multi_start.validate()?;
        if n == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        let mut learner = OnlineLearner {
            cfg,
            utility,
            n,
            candidates: Vec::new(),
            incumbent: 0,
            period: 1,
            spawned: 0,
        };
        for _ in 0..learner.cfg.multi_start.num_candidates {
            let candidate = learner.spawn_candidate();
            learner.candidates.push(candidate);
        }
        Ok(learner)
    }

    fn spawn_candidate(&mut self) -> Candidate {
        let tag = self.spawned;
        self.spawned += 1;
        let mut init = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, &[0x1B, tag]));
        let z =
            PolicyParams::random_uniform(self.n, self.cfg.init_range, self.cfg.bounds, &mut init);
        Candidate {
            z,
            baseline: BaselineTracker::new(),
            recent: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, &[0x1C, tag])),
        }
    }

    /// Parameters the incumbent will use for the next period.
    pub fn current_params(&self) -> &PolicyParams {
        &self.candidates[self.incumbent].z
    }

    pub fn link(&self) -> LinkKind {
        self.cfg.link
    }

    /// Advance one lending period.
    ///
    /// `pool` and `missing_p` are consulted only while the multi-start phase
    /// needs private batches for non-incumbent candidates; private batches
    /// are masked at the same rate as the shared stream.
    pub fn step(
        &mut self,
        shared_batch: &[Applicant],
        pool: &ApplicantPool,
        missing_p: f64,
    ) -> Result<PeriodOutput> {
        let t = self.period;
        let alpha = self.cfg.schedule.step_size(t)?;
        let in_multi_phase = t <= self.cfg.multi_start.multi_periods;
        let z_used = self.candidates[self.incumbent].z.as_flat();

        let mut incumbent_records = Vec::new();
        for idx in 0..self.candidates.len() {
            let is_incumbent = idx == self.incumbent;
            if !is_incumbent && !in_multi_phase {
                continue;
            }
            let private;
            let batch: &[Applicant] = if is_incumbent {
                shared_batch
            } else {
                private = draw_batch(
                    pool,
                    shared_batch.len(),
                    missing_p,
                    &mut self.candidates[idx].rng,
                )?;
                &private
            };
            let records = self.decide_batch(idx, batch, t)?;
            let candidate = &mut self.candidates[idx];
            let grad = gradient_estimate(
                &records,
                &candidate.z,
                self.cfg.link,
                candidate.baseline.current(),
            )?;
            candidate.z = update_and_project(&candidate.z, &grad, alpha, self.cfg.bounds);
            let period_mean = mean(&records.iter().map(|r| r.utility).collect::<Vec<_>>());
            candidate.baseline.observe_period_mean(period_mean);
            candidate.recent.push_back(period_mean);
            while candidate.recent.len() > self.cfg.multi_start.ranking_window {
                candidate.recent.pop_front();
            }
            if is_incumbent {
                incumbent_records = records;
            }
        }

        if in_multi_phase {
            self.rerank_and_refresh(t);
        }
        self.period += 1;
        Ok(PeriodOutput {
            records: incumbent_records,
            z_used,
        })
    }

    fn decide_batch(
        &mut self,
        idx: usize,
        batch: &[Applicant],
        period: u32,
    ) -> Result<Vec<LendingRecord>> {
        let link = self.cfg.link;
        let utility = self.utility;
        let candidate = &mut self.candidates[idx];
        batch
            .iter()
            .map(|app| {
                let eval = evaluate_policy(&candidate.z, &app.observed, link);
                let action = sample_decision(eval.p, &mut candidate.rng)?;
                let outcome = match action {
                    Action::Rejected => Outcome::NotApplicable,
                    Action::Approved => {
                        if app.realized_return() {
                            Outcome::Returned
                        } else {
                            Outcome::Defaulted
                        }
                    }
                };
                LendingRecord::new(
                    app.observed.clone(),
                    app.group_size,
                    eval.p,
                    action,
                    outcome,
                    &utility,
                    period,
                )
            })
            .collect()
    }

    /// Rank by trailing mean utility (stable: earlier slots win ties), keep
    /// the best, refill with fresh random candidates. At the end of the
    /// multi-start phase everything but the single best is dropped.
    fn rerank_and_refresh(&mut self, t: u32) {
        let mut order: Vec<usize> = (0..self.candidates.len()).collect();
        order.sort_by(|&a, &b| {
            self.candidates[b]
                .trailing_mean()
                .partial_cmp(&self.candidates[a].trailing_mean())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let last_multi_period = t == self.cfg.multi_start.multi_periods;
        let keep = if last_multi_period {
            1
        } else {
            self.cfg.multi_start.keep_best
        };
        let mut kept: Vec<Candidate> = Vec::with_capacity(self.cfg.multi_start.num_candidates);
        for &idx in order.iter().take(keep) {
            kept.push(std::mem::replace(
                &mut self.candidates[idx],
                Candidate {
                    z: PolicyParams::zeros(self.n, self.cfg.bounds),
                    baseline: BaselineTracker::new(),
                    recent: VecDeque::new(),
                    rng: ChaCha8Rng::seed_from_u64(0),
                },
            ));
        }
        if !last_multi_period {
            while kept.len() < self.cfg.multi_start.num_candidates {
                kept.push(self.spawn_candidate());
            }
        }
        self.candidates = kept;
        self.incumbent = 0;
    }
}

/// A full learning run: per-period parameters and the incumbent's records.
#[derive(Debug, Clone, Default)]
pub struct LearningTrajectory {
    pub per_period_z: Vec<Vec<f64>>,
    pub records: Vec<Vec<LendingRecord>>,
}

/// Drive the learner for `t_max` periods on batches of `n_t` applicants
/// drawn from `pool`. Deterministic in `cfg.seed`.
pub fn run_learning(
    pool: &ApplicantPool,
    cfg: &LearnerConfig,
    utility: UtilityConfig,
    t_max: u32,
    n_t: usize,
) -> Result<LearningTrajectory> {
    if pool.is_empty() {
        return Err(Error::Config("learning requires a non-empty pool".into()));
    }
    let mut learner = OnlineLearner::new(pool.feature_dim(), cfg.clone(), utility)?;
    let mut batch_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x1D]));
    let mut trajectory = LearningTrajectory::default();
    for _ in 0..t_max {
        let shared = draw_batch(pool, n_t, 0.0, &mut batch_rng)?;
        let output = learner.step(&shared, pool, 0.0)?;
        trajectory.per_period_z.push(output.z_used);
        trajectory.records.push(output.records);
    }
    Ok(trajectory)
}
