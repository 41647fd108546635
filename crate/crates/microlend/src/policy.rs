//! Stochastic approval policy: preference score, concave link functions with
//! their derivatives, policy-gradient components, and decision sampling.
//!
//! The preference score averages weighted contributions of the *present*
//! feature entries only,
//!
//! ```text
//! q = (1/n) * sum_{j in U(s)} (phi[j] * s[j] + eps[j])
//! ```
//!
//! and the approval probability is `p = L(q)` for a concave, strictly
//! increasing link `L` on `[0, inf)`. Both the weighted value and the offset
//! sit inside the averaged sum, so `q` stays bounded no matter how many
//! entries are present, and a present-but-zero entry is still distinguishable
//! from a missing one through its offset.

use rand::Rng;

use crate::domain::{Action, FeatureVector, PolicyParams};
use crate::error::{Error, Result};

/// Link function selection.
///
/// `CaseA` is `L(q) = 1 - exp(-q)`; `CaseB` is
/// `L(q) = 2 exp(q) / (1 + exp(q)) - 1`, evaluated as `tanh(q/2)` for
/// stability at large `q`. Both map `[0, inf)` into `[0, 1)` and are concave
/// and strictly increasing there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    CaseA,
    CaseB,
}

impl LinkKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::CaseA => "case_a",
            LinkKind::CaseB => "case_b",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "case_a" | "a" => Ok(LinkKind::CaseA),
            "case_b" | "b" => Ok(LinkKind::CaseB),
            other => Err(Error::Config(format!("unknown link kind '{other}'"))),
        }
    }
}

/// `L(q)` for `q >= 0`.
pub fn link_value(kind: LinkKind, q: f64) -> Result<f64> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::Contract(format!("link domain is q >= 0, got {q}")));
    }
    Ok(match kind {
        LinkKind::CaseA => 1.0 - (-q).exp(),
        LinkKind::CaseB => (q / 2.0).tanh(),
    })
}

/// `dL/dq` for `q >= 0`; strictly positive.
pub fn link_derivative(kind: LinkKind, q: f64) -> Result<f64> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::Contract(format!("link domain is q >= 0, got {q}")));
    }
    Ok(match kind {
        LinkKind::CaseA => (-q).exp(),
        LinkKind::CaseB => {
            let t = (q / 2.0).tanh();
            0.5 * (1.0 - t * t)
        }
    })
}

/// Preference score of an applicant under parameters `z`.
///
/// An empty index set yields `q = 0`.
pub fn preference_q(z: &PolicyParams, features: &FeatureVector) -> f64 {
    let n = z.dim();
    debug_assert_eq!(n, features.dim(), "parameter/feature dimension mismatch");
    let mut sum = 0.0;
    for (j, entry) in features.entries().iter().enumerate() {
        if let Some(value) = entry {
            sum += z.phi()[j] * value + z.eps()[j];
        }
    }
    sum / n as f64
}

/// The factor `g(s, k)` multiplying the link derivative in coordinate `k` of
/// the policy gradient: the feature value for present phi-slots, `1` for
/// present eps-slots, `0` wherever the entry is missing.
///
/// `k` is 1-based in `1..=2n`.
pub fn feature_gradient(features: &FeatureVector, k: usize) -> Result<f64> {
    let n = features.dim();
    if k < 1 || k > 2 * n {
        return Err(Error::Contract(format!(
            "gradient coordinate {k} outside 1..={}",
            2 * n
        )));
    }
    let j = if k <= n { k } else { k - n };
    Ok(match features.entry(j) {
        None => 0.0,
        Some(value) => {
            if k <= n {
                value
            } else {
                1.0
            }
        }
    })
}

/// Gradient of the probability the policy assigns to `action`, with respect
/// to every coordinate of `z`.
///
/// For approval the component is `(1/n) * g(s, k) * L'(q)`; for rejection the
/// negation, since the two probabilities sum to one. The `1/n` is the chain
/// rule factor from the averaged preference score.
pub fn policy_derivative(
    z: &PolicyParams,
    features: &FeatureVector,
    kind: LinkKind,
    action: Action,
) -> Result<Vec<f64>> {
    let n = z.dim();
    let q = preference_q(z, features);
    let slope = link_derivative(kind, q)? / n as f64;
    let sign = match action {
        Action::Approved => 1.0,
        Action::Rejected => -1.0,
    };
    let mut grad = vec![0.0; 2 * n];
    for (j, entry) in features.entries().iter().enumerate() {
        if let Some(value) = entry {
            grad[j] = sign * value * slope;
            grad[n + j] = sign * slope;
        }
    }
    Ok(grad)
}

/// Preference score, approval probability and approval-probability gradient
/// for one applicant.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub q: f64,
    pub p: f64,
    pub grad_p: Vec<f64>,
}

/// Evaluate the policy on an applicant. Infallible for in-domain parameters:
/// nonnegative coordinates guarantee `q >= 0`.
pub fn evaluate_policy(
    z: &PolicyParams,
    features: &FeatureVector,
    kind: LinkKind,
) -> PolicyEvaluation {
    let q = preference_q(z, features);
    let p = link_value(kind, q).expect("q >= 0 by construction");
    let grad_p =
        policy_derivative(z, features, kind, Action::Approved).expect("in-domain evaluation");
    PolicyEvaluation { q, p, grad_p }
}

/// Sample an approve/reject decision with approval probability `p`.
pub fn sample_decision(p: f64, rng: &mut impl Rng) -> Result<Action> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Contract(format!(
            "approval probability {p} outside [0, 1]"
        )));
    }
    // random() is in [0, 1): p = 1 always approves, p = 0 never does.
    Ok(if rng.random::<f64>() < p {
        Action::Approved
    } else {
        Action::Rejected
    })
}
