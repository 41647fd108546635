//! Comparison decision rules: the perfect oracle, Gaussian repayment
//! extrapolation, a perceptron, and online logistic regression.
//!
//! Only `perfect_decide` and the extrapolation's training targets ever see a
//! true return probability; the other baselines receive masked features and
//! observed outcomes alone.

use rand::Rng;

use crate::domain::{Action, FeatureVector, Outcome, UtilityConfig};
use crate::error::{Error, Result};
use crate::numeric::sigmoid;

/// Approve exactly when the known return probability covers the break-even
/// threshold `(1 - e) / (1 + r)`.
pub fn perfect_decide(p_return: f64, cfg: &UtilityConfig) -> Action {
    if p_return >= cfg.approval_threshold() {
        Action::Approved
    } else {
        Action::Rejected
    }
}

/// Mean of the available feature entries, the scalar input of the
/// extrapolation model. `None` when every entry is missing.
pub fn observed_score(features: &FeatureVector) -> Option<f64> {
    let available = features.available_indices();
    if available.is_empty() {
        return None;
    }
    let sum: f64 = available
        .indices()
        .iter()
        .map(|&j| features.entry(j).unwrap())
        .sum();
    Some(sum / available.len() as f64)
}

/// First-order Gaussian repayment model `p = a * exp(-((q - b) / c)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianFit {
    pub fn predict(&self, q: f64) -> f64 {
        let u = (q - self.center) / self.width;
        self.amplitude * (-u * u).exp()
    }

    /// Prediction clamped into `[0, 1]`, as used at decision time.
    pub fn predict_clamped(&self, q: f64) -> f64 {
        self.predict(q).clamp(0.0, 1.0)
    }

    fn sse(&self, samples: &[(f64, f64)]) -> f64 {
        samples
            .iter()
            .map(|&(q, p)| {
                let r = self.predict(q) - p;
                r * r
            })
            .sum()
    }
}

/// Least-squares fit of the Gaussian model by multi-start Gauss-Newton.
///
/// Sixteen starts on a grid over the data range (four centers crossed with
/// four widths, the widest far beyond the data so flat profiles are
/// reachable); each start runs damped Gauss-Newton with step backtracking, so
/// the residual never increases within one start. The lowest-residual start
/// wins. The width's sign is unidentifiable; it is reported positive.
pub fn gaussian_fit(samples: &[(f64, f64)]) -> Result<GaussianFit> {
    if samples.len() < 3 {
        return Err(Error::Contract(format!(
            "gaussian fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let q_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let q_max = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let range = q_max - q_min;
    if range.is_nan() || range <= 0.0 {
        return Err(Error::DegenerateFit(
            "all observed scores identical; no curve to fit".into(),
        ));
    }
    let p_max = samples.iter().map(|s| s.1).fold(0.0f64, f64::max).max(1e-3);

    let mut best: Option<(f64, GaussianFit)> = None;
    for bi in 0..4 {
        for &width_factor in &[0.25, 0.75, 2.0, 8.0] {
            let start = GaussianFit {
                amplitude: p_max,
                center: q_min + range * (0.125 + 0.25 * bi as f64),
                width: range * width_factor,
            };
            let refined = gauss_newton(start, samples);
            let sse = refined.sse(samples);
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, refined));
            }
        }
    }
    let (_, mut fit) = best.expect("at least one start ran");
    fit.width = fit.width.abs();
    Ok(fit)
}

fn gauss_newton(mut fit: GaussianFit, samples: &[(f64, f64)]) -> GaussianFit {
    let mut sse = fit.sse(samples);
    for _ in 0..100 {
        // Normal equations J^T J d = -J^T r for the 3 parameters, with a
        // small ridge so near-flat Jacobians stay solvable.
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for &(q, p) in samples {
            let u = (q - fit.center) / fit.width;
            let e = (-u * u).exp();
            let r = fit.amplitude * e - p;
            let j = [
                e,
                fit.amplitude * e * 2.0 * u / fit.width,
                fit.amplitude * e * 2.0 * u * u / fit.width,
            ];
            for a in 0..3 {
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
                jtr[a] += j[a] * r;
            }
        }
        let ridge = 1e-10 * (1.0 + jtj[0][0].max(jtj[1][1]).max(jtj[2][2]));
        for (a, row) in jtj.iter_mut().enumerate() {
            row[a] += ridge;
        }
        let Some(delta) = solve3(jtj, [-jtr[0], -jtr[1], -jtr[2]]) else {
            break;
        };

        // Backtrack until the residual does not increase.
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..24 {
            let trial = GaussianFit {
                amplitude: fit.amplitude + scale * delta[0],
                center: fit.center + scale * delta[1],
                width: fit.width + scale * delta[2],
            };
            if trial.width.abs() > 1e-12 && trial.width.is_finite() {
                let trial_sse = trial.sse(samples);
                if trial_sse <= sse {
                    let gain = sse - trial_sse;
                    fit = trial;
                    sse = trial_sse;
                    improved = true;
                    if gain < 1e-14 {
                        return fit;
                    }
                    break;
                }
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    fit
}

#[allow(clippy::needless_range_loop)]
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = rhs[i];
    }
    for col in 0..3 {
        let pivot =
            (col..3).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Threshold rule on the extrapolated repayment probability. An applicant
/// with every entry missing is rejected: there is no score to extrapolate
/// from.
pub fn extrapolation_decide(
    fit: &GaussianFit,
    features: &FeatureVector,
    cfg: &UtilityConfig,
) -> Action {
    match observed_score(features) {
        None => Action::Rejected,
        Some(q) => {
            if fit.predict_clamped(q) >= cfg.approval_threshold() {
                Action::Approved
            } else {
                Action::Rejected
            }
        }
    }
}

/// Perceptron weights and bias. Missing entries are read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronState {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PerceptronState {
    pub fn zeros(n: usize) -> Self {
        PerceptronState {
            weights: vec![0.0; n],
            bias: 0.0,
        }
    }

    /// Uniform random nonnegative weights; lets the rule start approving on
    /// nonnegative features instead of freezing at reject-all.
    pub fn random_init(n: usize, rng: &mut impl Rng) -> Self {
        PerceptronState {
            weights: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            bias: 0.0,
        }
    }
}

pub fn perceptron_activation(state: &PerceptronState, features: &FeatureVector) -> f64 {
    let filled = features.zero_filled();
    state
        .weights
        .iter()
        .zip(&filled)
        .map(|(w, s)| w * s)
        .sum::<f64>()
        + state.bias
}

/// Approve on strictly positive activation.
pub fn perceptron_decide(state: &PerceptronState, features: &FeatureVector) -> Action {
    if perceptron_activation(state, features) > 0.0 {
        Action::Approved
    } else {
        Action::Rejected
    }
}

/// Mistake-driven update after an approved application's outcome is
/// observed: a default (label -1) contradicts the approval and moves the
/// weights; a repayment confirms it. Rejected applications produce no label
/// and must not be fed back.
pub fn perceptron_learn(state: &mut PerceptronState, features: &FeatureVector, outcome: Outcome) {
    let label = match outcome {
        Outcome::Returned => 1.0,
        Outcome::Defaulted => -1.0,
        Outcome::NotApplicable => return,
    };
    if label < 0.0 {
        let filled = features.zero_filled();
        for (w, s) in state.weights.iter_mut().zip(&filled) {
            *w += label * s;
        }
        state.bias += label;
    }
}

/// Online logistic regression over zero-filled features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticState {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub learning_rate: f64,
}

impl LogisticState {
    pub fn new(n: usize, learning_rate: f64) -> Self {
        LogisticState {
            weights: vec![0.0; n],
            bias: 0.0,
            learning_rate,
        }
    }
}

pub fn logistic_predict(state: &LogisticState, features: &FeatureVector) -> f64 {
    let filled = features.zero_filled();
    let x = state
        .weights
        .iter()
        .zip(&filled)
        .map(|(w, s)| w * s)
        .sum::<f64>()
        + state.bias;
    sigmoid(x)
}

/// Approve when the predicted return probability covers the break-even
/// threshold.
pub fn logistic_decide(
    state: &LogisticState,
    features: &FeatureVector,
    cfg: &UtilityConfig,
) -> Action {
    if logistic_predict(state, features) >= cfg.approval_threshold() {
        Action::Approved
    } else {
        Action::Rejected
    }
}

/// One log-loss gradient step on an approved application's observed outcome.
pub fn logistic_learn(state: &mut LogisticState, features: &FeatureVector, outcome: Outcome) {
    let y = match outcome {
        Outcome::Returned => 1.0,
        Outcome::Defaulted => 0.0,
        Outcome::NotApplicable => return,
    };
    let p = logistic_predict(state, features);
    let step = state.learning_rate * (y - p);
    let filled = features.zero_filled();
    for (w, s) in state.weights.iter_mut().zip(&filled) {
        *w += step * s;
    }
    state.bias += step;
}
