//! Applicant-pool construction: synthetic feature distributions, repayment
//! probability families, group-lending gain models, missing-data masking,
//! and batch drawing for the simulation loop.

mod augment;
mod csv;
pub mod registry;

pub use augment::{augment_pool_from_model, fit_logistic_model, LogisticModel};
pub use csv::{export_pool_csv, ingest_csv_pool};

use std::collections::HashMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::FeatureVector;
use crate::error::{Error, Result};
use crate::numeric::sigmoid;
use crate::seeds::derive_seed;

/// Feature values for bounded pools live on this range.
pub const FEATURE_SPAN: f64 = 4.0;

/// Mass of bin `l` (1-based) of the linear-in-`l` binned feature family:
///
/// ```text
/// P_l = a_s + (2 - 2 a_s b_s) / (b_s (b_s - 1)) * (l - 1)
/// ```
///
/// The family sums to one for any `a_s`; validity requires nonnegative mass
/// at both ends.
pub fn feature_pmf(a_s: f64, b_s: usize, l: usize) -> Result<f64> {
    if b_s < 2 {
        return Err(Error::Config(format!(
            "binned distribution needs >= 2 bins, got {b_s}"
        )));
    }
    if l < 1 || l > b_s {
        return Err(Error::Contract(format!("bin index {l} outside 1..={b_s}")));
    }
    let b = b_s as f64;
    let slope = (2.0 - 2.0 * a_s * b) / (b * (b - 1.0));
    let first = a_s;
    let last = a_s + slope * (b - 1.0);
    if first < -1e-15 || last < -1e-15 {
        return Err(Error::Config(format!(
            "binned distribution (a_s = {a_s}, b_s = {b_s}) has negative bin mass"
        )));
    }
    Ok((a_s + slope * (l - 1) as f64).max(0.0))
}

/// Feature distribution family of a pool.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureDist {
    /// Linear-in-bin pmf over `bins` values evenly spanning `[0, 4]`.
    Binned { a_s: f64, bins: usize },
    /// Normal, clamped at zero (features are never negative).
    Gaussian { mean: f64, sd: f64 },
    /// Absolute value of a centred normal.
    AbsGaussian { sd: f64 },
    /// Exponential of a centred normal.
    LogGaussian { sd: f64 },
}

impl FeatureDist {
    fn resolve(&self) -> Result<ResolvedDist> {
        Ok(match *self {
            FeatureDist::Binned { a_s, bins } => {
                let mut cdf = Vec::with_capacity(bins);
                let mut acc = 0.0;
                for l in 1..=bins {
                    acc += feature_pmf(a_s, bins, l)?;
                    cdf.push(acc);
                }
                ResolvedDist::Binned { cdf, bins }
            }
            FeatureDist::Gaussian { mean, sd } => ResolvedDist::Gaussian(normal(mean, sd)?),
            FeatureDist::AbsGaussian { sd } => ResolvedDist::AbsGaussian(normal(0.0, sd)?),
            FeatureDist::LogGaussian { sd } => ResolvedDist::LogGaussian(normal(0.0, sd)?),
        })
    }
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::Config(format!("invalid normal({mean}, {sd}): {e}")))
}

enum ResolvedDist {
    Binned { cdf: Vec<f64>, bins: usize },
    Gaussian(Normal<f64>),
    AbsGaussian(Normal<f64>),
    LogGaussian(Normal<f64>),
}

impl ResolvedDist {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            ResolvedDist::Binned { cdf, bins } => {
                let u: f64 = rng.random();
                let l = match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                    Ok(i) => i + 1,
                    Err(i) => i,
                }
                .min(bins - 1);
                // Bin l (0-based here) maps onto [0, 4] evenly.
                FEATURE_SPAN * l as f64 / (*bins as f64 - 1.0)
            }
            ResolvedDist::Gaussian(n) => n.sample(rng).max(0.0),
            ResolvedDist::AbsGaussian(n) => n.sample(rng).abs(),
            ResolvedDist::LogGaussian(n) => n.sample(rng).exp(),
        }
    }
}

/// Per-feature weight layout of a repayment (or gain) model.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Constant(f64),
    /// Weights drawn i.i.d. normal once, frozen at pool construction.
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// `w_j = intercept + slope * (j - 1)`.
    Ramp {
        intercept: f64,
        slope: f64,
    },
    /// Two ramps: the first over `j <= n/2`, the second over the rest,
    /// each indexed from its own segment start.
    VShape {
        down: (f64, f64),
        up: (f64, f64),
    },
}

impl WeightSpec {
    fn materialize(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
        Ok(match *self {
            WeightSpec::Constant(c) => vec![c; n],
            WeightSpec::Gaussian { mean, sd } => {
                let dist = normal(mean, sd)?;
                (0..n).map(|_| dist.sample(rng)).collect()
            }
            WeightSpec::Ramp { intercept, slope } => {
                (0..n).map(|j| intercept + slope * j as f64).collect()
            }
            WeightSpec::VShape { down, up } => {
                let half = n / 2;
                (0..n)
                    .map(|j| {
                        if j < half {
                            down.0 + down.1 * j as f64
                        } else {
                            up.0 + up.1 * (j - half) as f64
                        }
                    })
                    .collect()
            }
        })
    }
}

/// Map from the weighted feature score `q_B` to a probability.
#[derive(Debug, Clone, PartialEq)]
pub enum PostMap {
    /// `P = scale * q + shift`.
    Linear { scale: f64, shift: f64 },
    /// `P = a2 q^2 + a1 q + a0`.
    Quadratic { a2: f64, a1: f64, a0: f64 },
    /// `P = exp(q) / (1 + exp(q))`.
    Sigmoid,
}

impl PostMap {
    fn apply(&self, q: f64) -> f64 {
        match *self {
            PostMap::Linear { scale, shift } => scale * q + shift,
            PostMap::Quadratic { a2, a1, a0 } => a2 * q * q + a1 * q + a0,
            PostMap::Sigmoid => sigmoid(q),
        }
    }
}

/// Repayment-probability model: `q_B = (1/n) sum_j w[j] s[j] + c`, followed
/// by one of the post maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RepaymentSpec {
    pub weights: WeightSpec,
    pub offset: f64,
    pub post: PostMap,
}

impl RepaymentSpec {
    /// Freeze random weights so the model becomes a pure function.
    pub fn resolve(&self, n: usize, rng: &mut impl Rng) -> Result<ResolvedRepayment> {
        Ok(ResolvedRepayment {
            weights: self.weights.materialize(n, rng)?,
            offset: self.offset,
            post: self.post.clone(),
        })
    }
}

/// A repayment model with frozen weights.
#[derive(Debug, Clone)]
pub struct ResolvedRepayment {
    pub weights: Vec<f64>,
    pub offset: f64,
    pub post: PostMap,
}

impl ResolvedRepayment {
    pub fn score(&self, s: &[f64]) -> f64 {
        let n = self.weights.len() as f64;
        let dot: f64 = self.weights.iter().zip(s).map(|(w, v)| w * v).sum();
        dot / n + self.offset
    }

    /// Return probability of a fully observed feature vector.
    ///
    /// Values escaping `[0, 1]` by more than floating error are a domain
    /// error; tiny excursions are clamped.
    pub fn probability(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.weights.len() {
            return Err(Error::Contract(format!(
                "feature dimension {} does not match model dimension {}",
                s.len(),
                self.weights.len()
            )));
        }
        let p = self.post.apply(self.score(s));
        if !(-1e-12..=1.0 + 1e-12).contains(&p) {
            return Err(Error::Config(format!(
                "repayment probability {p} outside [0, 1] for the configured support"
            )));
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Gain model for group lending: each member's end-of-period holding is
/// `N(mu, sigma^2)`, where `mu` is constant in the basic case and
/// `delta + f(q_B(s))` in the advanced case.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicGroupSpec {
    pub gain_mean: f64,
    pub gain_sd: f64,
    pub interest_rate: f64,
    pub max_group_size: u32,
    pub mc_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvancedGroupSpec {
    pub n: usize,
    pub dist: FeatureDist,
    pub gain: RepaymentSpec,
    pub delta: f64,
    pub gain_sd: f64,
    pub interest_rate: f64,
    pub max_group_size: u32,
    pub mc_samples: usize,
}

/// Generative description of an applicant pool.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolSpec {
    Individual {
        n: usize,
        dist: FeatureDist,
        repay: RepaymentSpec,
    },
    GroupBasic(BasicGroupSpec),
    GroupAdvanced(AdvancedGroupSpec),
    Csv(PathBuf),
}

/// One tabulated applicant: underlying features, true return probability,
/// group size.
#[derive(Debug, Clone)]
pub struct PoolSample {
    pub features: FeatureVector,
    pub true_return_prob: f64,
    pub group_size: u32,
}

/// An immutable population the harness draws applicants from.
#[derive(Debug, Clone)]
pub struct ApplicantPool {
    samples: Vec<PoolSample>,
    spec_name: String,
    seed: u64,
}

impl ApplicantPool {
    pub fn from_samples(samples: Vec<PoolSample>, spec_name: String, seed: u64) -> Self {
        ApplicantPool {
            samples,
            spec_name,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[PoolSample] {
        &self.samples
    }

    pub fn spec_name(&self) -> &str {
        &self.spec_name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.dim())
    }
}

/// Monte-Carlo estimate of the probability that a group of `group_size`
/// members, each holding `max(N(gain_mean, gain_sd^2), 0)`, jointly covers
/// the repayment `group_size * (1 + r)`.
pub fn group_return_probability(
    gain_mean: f64,
    gain_sd: f64,
    interest_rate: f64,
    group_size: u32,
    mc_samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if group_size == 0 {
        return Err(Error::Contract("group size must be positive".into()));
    }
    if mc_samples == 0 {
        return Err(Error::Contract("mc_samples must be positive".into()));
    }
    let gains = normal(gain_mean, gain_sd)?;
    let owed = f64::from(group_size) * (1.0 + interest_rate);
    let mut hits = 0usize;
    for _ in 0..mc_samples {
        let mut held = 0.0;
        for _ in 0..group_size {
            held += gains.sample(rng).max(0.0);
        }
        if held >= owed {
            hits += 1;
        }
    }
    Ok(hits as f64 / mc_samples as f64)
}

/// Build a pool of `size` samples from `spec`, deterministically in `seed`.
pub fn build_pool(spec: &PoolSpec, size: usize, seed: u64) -> Result<ApplicantPool> {
    build_pool_named(spec, size, seed, &spec_label(spec))
}

fn spec_label(spec: &PoolSpec) -> String {
    match spec {
        PoolSpec::Individual { .. } => "individual".to_string(),
        PoolSpec::GroupBasic(_) => "group_basic".to_string(),
        PoolSpec::GroupAdvanced(_) => "group_advanced".to_string(),
        PoolSpec::Csv(path) => format!("csv:{}", path.display()),
    }
}

/// As [`build_pool`] but with an explicit provenance name (the registry uses
/// this to stamp pools with their registry key).
pub fn build_pool_named(
    spec: &PoolSpec,
    size: usize,
    seed: u64,
    name: &str,
) -> Result<ApplicantPool> {
    let samples = match spec {
        PoolSpec::Individual { n, dist, repay } => {
            if *n == 0 {
                return Err(Error::Config("feature dimension must be positive".into()));
            }
            let resolved_dist = dist.resolve()?;
            let mut weights_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x57]));
            let model = repay.resolve(*n, &mut weights_rng)?;
            let mut samples = Vec::with_capacity(size);
            for i in 0..size {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x51, i as u64]));
                let s: Vec<f64> = (0..*n).map(|_| resolved_dist.sample(&mut rng)).collect();
                let p = model.probability(&s)?;
                samples.push(PoolSample {
                    features: FeatureVector::from_full(&s),
                    true_return_prob: p,
                    group_size: 1,
                });
            }
            samples
        }
        PoolSpec::GroupBasic(g) => {
            if g.max_group_size == 0 {
                return Err(Error::Config("max group size must be positive".into()));
            }
            // Return probability depends on size only; tabulate once.
            let mut table = Vec::with_capacity(g.max_group_size as usize);
            for n in 1..=g.max_group_size {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x52, u64::from(n)]));
                table.push(group_return_probability(
                    g.gain_mean,
                    g.gain_sd,
                    g.interest_rate,
                    n,
                    g.mc_samples,
                    &mut rng,
                )?);
            }
            let mut samples = Vec::with_capacity(size);
            for i in 0..size {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x53, i as u64]));
                let group_size = rng.random_range(1..=g.max_group_size);
                samples.push(PoolSample {
                    // Group size is the single accessible feature, rescaled
                    // onto the nominal [0, 4] span like any oversized column.
                    features: FeatureVector::from_full(&[
                        FEATURE_SPAN * f64::from(group_size) / f64::from(g.max_group_size)
                    ]),
                    true_return_prob: table[(group_size - 1) as usize],
                    group_size,
                });
            }
            samples
        }
        PoolSpec::GroupAdvanced(g) => {
            if g.n == 0 || g.max_group_size == 0 {
                return Err(Error::Config(
                    "advanced group spec needs positive dimensions".into(),
                ));
            }
            let resolved_dist = g.dist.resolve()?;
            let mut weights_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x57]));
            let gain_model = g.gain.resolve(g.n, &mut weights_rng)?;
            // The return probability depends on (size, mu); quantize mu and
            // memoize each cell with its own derived stream so results do not
            // depend on encounter order.
            let mut cache: HashMap<(u32, i64), f64> = HashMap::new();
            let mut samples = Vec::with_capacity(size);
            for i in 0..size {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x54, i as u64]));
                let s: Vec<f64> = (0..g.n).map(|_| resolved_dist.sample(&mut rng)).collect();
                let group_size = rng.random_range(1..=g.max_group_size);
                let f_of_s = gain_model.post.apply(gain_model.score(&s));
                let mu = g.delta + f_of_s;
                let key = (group_size, (mu * 256.0).round() as i64);
                let p = match cache.get(&key) {
                    Some(&p) => p,
                    None => {
                        let mu_q = key.1 as f64 / 256.0;
                        let mut mc_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            seed,
                            &[0x55, u64::from(key.0), key.1 as u64],
                        ));
                        let p = group_return_probability(
                            mu_q,
                            g.gain_sd,
                            g.interest_rate,
                            group_size,
                            g.mc_samples,
                            &mut mc_rng,
                        )?;
                        cache.insert(key, p);
                        p
                    }
                };
                samples.push(PoolSample {
                    features: FeatureVector::from_full(&s),
                    true_return_prob: p,
                    group_size,
                });
            }
            samples
        }
        PoolSpec::Csv(path) => return ingest_csv_pool(path),
    };
    Ok(ApplicantPool::from_samples(samples, name.to_string(), seed))
}

/// Independently blank each present entry with probability `p`. The sample's
/// true return probability is untouched.
pub fn mask_missing(features: &FeatureVector, p: f64, rng: &mut impl Rng) -> Result<FeatureVector> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Contract(format!(
            "missing probability {p} outside [0, 1]"
        )));
    }
    let entries = features
        .entries()
        .iter()
        .map(|e| match e {
            Some(v) if rng.random::<f64>() >= p => Some(*v),
            _ => None,
        })
        .collect();
    FeatureVector::new(entries)
}

/// One drawn application as the simulation sees it: masked features plus the
/// oracle-side truth needed to realize outcomes.
#[derive(Debug, Clone)]
pub struct Applicant {
    pub observed: FeatureVector,
    pub true_return_prob: f64,
    pub group_size: u32,
    /// Uniform roll in `[0, 1)`; the loan is returned iff the roll falls
    /// below the true return probability. Sharing the roll across algorithms
    /// pairs their outcome streams.
    pub outcome_roll: f64,
}

impl Applicant {
    pub fn realized_return(&self) -> bool {
        self.outcome_roll < self.true_return_prob
    }
}

/// Draw `count` applicants with replacement, masking each feature entry with
/// probability `missing_p`.
pub fn draw_batch(
    pool: &ApplicantPool,
    count: usize,
    missing_p: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Applicant>> {
    if pool.is_empty() {
        return Err(Error::Config(
            "cannot draw applicants from an empty pool".into(),
        ));
    }
    let mut batch = Vec::with_capacity(count);
    for _ in 0..count {
        let sample = &pool.samples()[rng.random_range(0..pool.len())];
        let observed = mask_missing(&sample.features, missing_p, rng)?;
        batch.push(Applicant {
            observed,
            true_return_prob: sample.true_return_prob,
            group_size: sample.group_size,
            outcome_roll: rng.random(),
        });
    }
    Ok(batch)
}
