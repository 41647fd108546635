//! Shared domain types: feature vectors with missing entries, policy
//! parameters on a box domain, and the lending utility.
//!
//! Feature indices are 1-based in every public interface; storage is 0-based
//! internally. A missing entry is a distinguished `None`, never the value
//! `0.0`: a zero-valued feature still contributes its offset weight to the
//! preference score, a missing one contributes nothing.

use crate::error::{Error, Result};

/// Applicant feature vector of fixed dimension; entries may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn new(entries: Vec<Option<f64>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Contract(
                "feature vector must have dimension >= 1".into(),
            ));
        }
        Ok(FeatureVector { entries })
    }

    /// Build a fully observed vector.
    pub fn from_full(values: &[f64]) -> Self {
        FeatureVector {
            entries: values.iter().map(|&v| Some(v)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Entry at 1-based index `j`, or `None` when missing.
    pub fn entry(&self, j: usize) -> Option<f64> {
        self.entries[j - 1]
    }

    pub fn entries(&self) -> &[Option<f64>] {
        &self.entries
    }

    /// Index set of non-missing entries (1-based, ascending).
    pub fn available_indices(&self) -> IndexSet {
        IndexSet {
            indices: self
                .entries
                .iter()
                .enumerate()
                .filter_map(|(i, e)| e.map(|_| i + 1))
                .collect(),
        }
    }

    pub fn is_fully_observed(&self) -> bool {
        self.entries.iter().all(|e| e.is_some())
    }

    /// Present values with missing entries substituted by zero, as used by
    /// the perceptron and logistic baselines.
    pub fn zero_filled(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.unwrap_or(0.0)).collect()
    }
}

/// Ordered set of 1-based feature indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }
}

/// Axis-aligned box bounds applied to every policy coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    pub lo: f64,
    pub hi: f64,
}

impl BoxBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("invalid box bounds [{lo}, {hi}]")));
        }
        if lo < 0.0 {
            // Both link functions are defined on nonnegative preferences only.
            return Err(Error::Config(format!(
                "box lower bound must be >= 0, got {lo}"
            )));
        }
        Ok(BoxBounds { lo, hi })
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Euclidean diameter of the box in `dim` dimensions.
    pub fn diameter(&self, dim: usize) -> f64 {
        self.width() * (dim as f64).sqrt()
    }
}

impl Default for BoxBounds {
    fn default() -> Self {
        BoxBounds { lo: 0.0, hi: 10.0 }
    }
}

/// Policy parameter vector `[phi; eps]` of length `2n` on a box domain.
///
/// `phi[j]` weights the value of feature `j`; `eps[j]` is the offset credited
/// whenever feature `j` is present at all.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    phi: Vec<f64>,
    eps: Vec<f64>,
    bounds: BoxBounds,
}

impl PolicyParams {
    pub fn new(phi: Vec<f64>, eps: Vec<f64>, bounds: BoxBounds) -> Result<Self> {
        if phi.is_empty() || phi.len() != eps.len() {
            return Err(Error::Contract(format!(
                "phi and eps must be non-empty and of equal length (got {} and {})",
                phi.len(),
                eps.len()
            )));
        }
        for &v in phi.iter().chain(eps.iter()) {
            if !v.is_finite() || !(bounds.lo..=bounds.hi).contains(&v) {
                return Err(Error::Contract(format!(
                    "coordinate {v} outside box [{}, {}]",
                    bounds.lo, bounds.hi
                )));
            }
        }
        Ok(PolicyParams { phi, eps, bounds })
    }

    pub fn zeros(n: usize, bounds: BoxBounds) -> Self {
        PolicyParams {
            phi: vec![bounds.clamp(0.0); n],
            eps: vec![bounds.clamp(0.0); n],
            bounds,
        }
    }

    /// Draw each coordinate uniformly from `range`, clamped into the box.
    pub fn random_uniform(
        n: usize,
        range: (f64, f64),
        bounds: BoxBounds,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let mut draw = |_: usize| bounds.clamp(rng.random_range(range.0..=range.1));
        let phi: Vec<f64> = (0..n).map(&mut draw).collect();
        let eps: Vec<f64> = (0..n).map(&mut draw).collect();
        PolicyParams { phi, eps, bounds }
    }

    /// Feature dimension `n` (the parameter vector has length `2n`).
    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn bounds(&self) -> BoxBounds {
        self.bounds
    }

    /// Coordinate `k` of `z = [phi; eps]`, 1-based, `k` in `1..=2n`.
    pub fn coord(&self, k: usize) -> f64 {
        let n = self.dim();
        assert!(
            k >= 1 && k <= 2 * n,
            "coordinate index {k} out of 1..={}",
            2 * n
        );
        if k <= n {
            self.phi[k - 1]
        } else {
            self.eps[k - n - 1]
        }
    }

    /// Flattened `[phi..., eps...]` copy.
    pub fn as_flat(&self) -> Vec<f64> {
        let mut flat = self.phi.clone();
        flat.extend_from_slice(&self.eps);
        flat
    }

    pub fn from_flat(flat: &[f64], bounds: BoxBounds) -> Result<Self> {
        if flat.len() < 2 || !flat.len().is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "flat parameter vector must have even positive length, got {}",
                flat.len()
            )));
        }
        let n = flat.len() / 2;
        PolicyParams::new(flat[..n].to_vec(), flat[n..].to_vec(), bounds)
    }
}

/// Interest rate and per-unit subsidy entering the utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityConfig {
    pub interest_rate: f64,
    pub subsidy: f64,
}

impl UtilityConfig {
    pub fn new(interest_rate: f64, subsidy: f64) -> Result<Self> {
        if !(interest_rate.is_finite() && interest_rate > 0.0) {
            return Err(Error::Config(format!(
                "interest rate must be > 0, got {interest_rate}"
            )));
        }
        if !(subsidy.is_finite() && subsidy >= 0.0) {
            return Err(Error::Config(format!(
                "subsidy must be >= 0, got {subsidy}"
            )));
        }
        Ok(UtilityConfig {
            interest_rate,
            subsidy,
        })
    }

    /// Return probability above which approving has nonnegative expected
    /// utility: `(1 - e) / (1 + r)`.
    pub fn approval_threshold(&self) -> f64 {
        (1.0 - self.subsidy) / (1.0 + self.interest_rate)
    }
}

impl Default for UtilityConfig {
    fn default() -> Self {
        UtilityConfig {
            interest_rate: 0.35,
            subsidy: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Approved,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Returned,
    Defaulted,
    NotApplicable,
}

/// Utility of one application: `n(r+e)` on repayment, `n(-1+e)` on default,
/// zero on rejection, where `n` is the group size.
pub fn compute_utility(
    group_size: u32,
    action: Action,
    outcome: Outcome,
    cfg: &UtilityConfig,
) -> Result<f64> {
    let n = f64::from(group_size);
    match (action, outcome) {
        (Action::Approved, Outcome::Returned) => Ok(n * (cfg.interest_rate + cfg.subsidy)),
        (Action::Approved, Outcome::Defaulted) => Ok(n * (-1.0 + cfg.subsidy)),
        (Action::Rejected, Outcome::NotApplicable) => Ok(0.0),
        (a, o) => Err(Error::Contract(format!(
            "inconsistent action/outcome pair: {a:?}/{o:?}"
        ))),
    }
}

/// One application's per-period tuple.
#[derive(Debug, Clone)]
pub struct LendingRecord {
    pub features: FeatureVector,
    pub group_size: u32,
    /// Approval probability the deciding policy assigned to this applicant.
    pub approve_prob: f64,
    pub action: Action,
    pub outcome: Outcome,
    pub utility: f64,
    pub period: u32,
}

impl LendingRecord {
    pub fn new(
        features: FeatureVector,
        group_size: u32,
        approve_prob: f64,
        action: Action,
        outcome: Outcome,
        cfg: &UtilityConfig,
        period: u32,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&approve_prob) {
            return Err(Error::Contract(format!(
                "approve_prob must lie in [0, 1], got {approve_prob}"
            )));
        }
        let utility = compute_utility(group_size, action, outcome, cfg)?;
        Ok(LendingRecord {
            features,
            group_size,
            approve_prob,
            action,
            outcome,
            utility,
            period,
        })
    }

    /// Probability the deciding policy assigned to the action it actually
    /// took.
    pub fn action_prob(&self) -> f64 {
        match self.action {
            Action::Approved => self.approve_prob,
            Action::Rejected => 1.0 - self.approve_prob,
        }
    }
}
