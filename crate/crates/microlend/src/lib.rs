//! An online-learning engine and experiment harness for microfinance
//! loan-approval policies.
//!
//! The policy approves an application with probability `L(q)`, where `q`
//! averages weighted contributions of the applicant's *present* feature
//! entries and `L` is a concave link. Parameters are learned by projected
//! stochastic gradient ascent on expected utility, estimated from lending
//! outcomes alone via a score-function estimator with a historical-average
//! baseline. Missing entries simply drop out of the score, so the policy
//! needs no imputation.
//!
//! The crate ships:
//!
//! * [`domain`] — feature vectors with missing entries, policy parameters on
//!   a box, the lending utility;
//! * [`policy`] — preference score, link functions, policy gradient,
//!   decision sampling;
//! * [`learner`] — the gradient estimator, step schedules, projection, and
//!   the period loop with its multi-start scheme;
//! * [`datagen`] — synthetic applicant pools (`type1`..`type30`), group
//!   lending gain models, CSV ingestion, logistic augmentation, missing-data
//!   masking;
//! * [`baselines`] — perfect oracle, Gaussian repayment extrapolation,
//!   perceptron, online logistic regression;
//! * [`harness`] — paired scenario runs, metrics, regret diagnostics, CSV
//!   persistence;
//! * [`config`] — the flat `key = value` scenario files the CLI consumes.

pub mod baselines;
pub mod config;
pub mod datagen;
pub mod domain;
pub mod error;
pub mod harness;
pub mod learner;
pub mod numeric;
pub mod policy;
pub mod seeds;

pub use error::{Error, Result};
