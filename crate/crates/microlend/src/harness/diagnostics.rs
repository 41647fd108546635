//! Regret diagnostics: the closed-form average-gap bound and an empirical
//! bound on the gradient norm.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{draw_batch, ApplicantPool};
use crate::domain::{BoxBounds, LendingRecord, Outcome, PolicyParams, UtilityConfig};
use crate::error::Result;
use crate::learner::gradient_estimate;
use crate::policy::{evaluate_policy, sample_decision, LinkKind};
use crate::seeds::derive_seed;

/// Average-optimality-gap bound under the theoretical step size:
/// `3 D G / (2 sqrt(T))`.
pub fn regret_bound(d: f64, g: f64, t: u32) -> f64 {
    1.5 * d * g / f64::from(t).sqrt()
}

/// Empirical bound `G` on the gradient norm: the maximum norm of
/// single-record estimates, inflated by 1.5. Parameters alternate between a
/// uniform draw over the box and a uniform draw over `init_range`, so the
/// bound covers both where trajectories start and where they can be
/// projected to.
#[allow(clippy::too_many_arguments)]
pub fn estimate_gradient_bound(
    pool: &ApplicantPool,
    link: LinkKind,
    bounds: BoxBounds,
    init_range: (f64, f64),
    utility: &UtilityConfig,
    missing_p: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = pool.feature_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xD1]));
    let mut max_norm: f64 = 0.0;
    for i in 0..samples {
        let range = if i % 2 == 0 {
            (bounds.lo, bounds.hi)
        } else {
            init_range
        };
        let z = PolicyParams::random_uniform(n, range, bounds, &mut rng);
        let app = draw_batch(pool, 1, missing_p, &mut rng)?.remove(0);
        let eval = evaluate_policy(&z, &app.observed, link);
        let action = sample_decision(eval.p, &mut rng)?;
        let outcome = match action {
            crate::domain::Action::Rejected => Outcome::NotApplicable,
            crate::domain::Action::Approved => {
                if app.realized_return() {
                    Outcome::Returned
                } else {
                    Outcome::Defaulted
                }
            }
        };
        let record = LendingRecord::new(
            app.observed.clone(),
            app.group_size,
            eval.p,
            action,
            outcome,
            utility,
            1,
        )?;
        let grad = gradient_estimate(&[record], &z, link, 0.0)?;
        max_norm = max_norm.max(grad.norm());
    }
    Ok(1.5 * max_norm)
}
