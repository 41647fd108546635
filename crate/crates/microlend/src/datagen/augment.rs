//! Logistic augmentation: fit a parametric return-probability model to
//! labelled applications, then resample features and relabel from the model
//! to grow a pool past the original data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::{ApplicantPool, PoolSample};
use crate::domain::FeatureVector;
use crate::error::{Error, Result};
use crate::numeric::sigmoid;
use crate::seeds::derive_seed;

/// Fitted per-feature logistic model `P = sigmoid(sum_k alpha[k] s[k] + beta[k])`,
/// where a missing entry contributes nothing to the sum.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LogisticModel {
    pub fn predict(&self, features: &FeatureVector) -> f64 {
        let mut x = 0.0;
        for (k, entry) in features.entries().iter().enumerate() {
            if let Some(v) = entry {
                x += self.alpha[k] * v + self.beta[k];
            }
        }
        sigmoid(x)
    }
}

/// Maximize the log-likelihood of `(features, returned)` pairs by batch
/// gradient ascent with step 0.1 on the mean gradient, stopping at mean
/// gradient norm 1e-6 or 10^4 iterations.
pub fn fit_logistic_model(data: &[(FeatureVector, bool)]) -> Result<LogisticModel> {
    if data.is_empty() {
        return Err(Error::DegenerateFit("no training data".into()));
    }
    let positives = data.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateFit(
            "single-class data: need both returned and defaulted examples".into(),
        ));
    }
    let n = data[0].0.dim();
    let mut model = LogisticModel {
        alpha: vec![0.0; n],
        beta: vec![0.0; n],
    };
    let m = data.len() as f64;
    let step = 0.1;
    for _ in 0..10_000 {
        let mut grad_alpha = vec![0.0; n];
        let mut grad_beta = vec![0.0; n];
        for (features, returned) in data {
            let p = model.predict(features);
            let residual = f64::from(*returned as u8) - p;
            for (k, entry) in features.entries().iter().enumerate() {
                if let Some(v) = entry {
                    grad_alpha[k] += residual * v;
                    grad_beta[k] += residual;
                }
            }
        }
        let mut norm_sq = 0.0;
        for k in 0..n {
            grad_alpha[k] /= m;
            grad_beta[k] /= m;
            norm_sq += grad_alpha[k] * grad_alpha[k] + grad_beta[k] * grad_beta[k];
            model.alpha[k] += step * grad_alpha[k];
            model.beta[k] += step * grad_beta[k];
        }
        if norm_sq.sqrt() <= 1e-6 {
            break;
        }
    }
    Ok(model)
}

/// Resample feature rows uniformly with replacement and label each with the
/// model's return probability.
pub fn augment_pool_from_model(
    rows: &[FeatureVector],
    model: &LogisticModel,
    size: usize,
    seed: u64,
) -> Result<ApplicantPool> {
    if rows.is_empty() {
        return Err(Error::Config(
            "cannot augment from an empty feature set".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x46]));
    let samples = (0..size)
        .map(|_| {
            let features = rows[rng.random_range(0..rows.len())].clone();
            let p = model.predict(&features);
            PoolSample {
                features,
                true_return_prob: p,
                group_size: 1,
            }
        })
        .collect();
    Ok(ApplicantPool::from_samples(
        samples,
        "augmented".into(),
        seed,
    ))
}
