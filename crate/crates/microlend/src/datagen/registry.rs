//! Named registry of the synthetic distribution families.
//!
//! Individual-lending pools `type1`..`type30` pair a feature distribution
//! with a repayment model:
//!
//! * `type1`..`type18`: bounded binned features with `a_s` in
//!   {0, 0.005, 0.01} (columns) crossed with six repayment rows — linear
//!   `q/4`, quadratic `-q^2/16 + q/2`, and sigmoids with weights 2, 2.5, 3,
//!   and `N(2, 4^2)` around offset -4.
//! * `type19`..`type26`: mirrored (downward-sloping) feature densities with
//!   `a_s` in {0.02, 0.015} crossed with four negative-weight rows.
//! * `type27`..`type30`: unbounded feature distributions (normal,
//!   absolute-normal, log-normal) with index-ramped weights.
//!
//! Group-lending pools are `group_basic` and `group_advanced_type1`..`_18`,
//! the latter reusing rows of the first grid as the expected-gain shape
//! `mu(s) = delta + f(q_B)` with `delta = 0.5 + r`.

use std::path::PathBuf;

use super::{
    AdvancedGroupSpec, BasicGroupSpec, FeatureDist, PoolSpec, PostMap, RepaymentSpec, WeightSpec,
};
use crate::error::{Error, Result};

/// Feature dimension used by all registry pools.
pub const REGISTRY_FEATURE_DIM: usize = 100;
/// Bin count of the bounded feature distributions.
pub const REGISTRY_BINS: usize = 100;
/// Interest rate the group-lending gain models are centred around.
pub const GROUP_INTEREST_RATE: f64 = 0.35;
/// Basic-case expected gain, `1 + 1.2 r`.
pub const GROUP_BASIC_GAIN_MEAN: f64 = 1.42;
/// Gain standard deviation for both group cases.
pub const GROUP_GAIN_SD: f64 = 0.5;
/// Group sizes are uniform on `1..=100`.
pub const GROUP_MAX_SIZE: u32 = 100;

const BASE_COLUMNS: [f64; 3] = [0.0, 0.005, 0.01];
// Mirrored columns: downward-sloping densities from 0.02 to 0 and from
// 0.015 to 0.005 (the same linear family, continued past the uniform point).
const FLIP_COLUMNS: [f64; 2] = [0.02, 0.015];

fn base_row(row: usize) -> RepaymentSpec {
    match row {
        1 => RepaymentSpec {
            weights: WeightSpec::Constant(1.0),
            offset: 0.0,
            post: PostMap::Linear {
                scale: 0.25,
                shift: 0.0,
            },
        },
        2 => RepaymentSpec {
            weights: WeightSpec::Constant(1.0),
            offset: 0.0,
            post: PostMap::Quadratic {
                a2: -1.0 / 16.0,
                a1: 0.5,
                a0: 0.0,
            },
        },
        3 => RepaymentSpec {
            weights: WeightSpec::Constant(2.0),
            offset: -4.0,
            post: PostMap::Sigmoid,
        },
        4 => RepaymentSpec {
            weights: WeightSpec::Constant(2.5),
            offset: -4.0,
            post: PostMap::Sigmoid,
        },
        5 => RepaymentSpec {
            weights: WeightSpec::Constant(3.0),
            offset: -4.0,
            post: PostMap::Sigmoid,
        },
        6 => RepaymentSpec {
            weights: WeightSpec::Gaussian { mean: 2.0, sd: 4.0 },
            offset: -4.0,
            post: PostMap::Sigmoid,
        },
        _ => unreachable!("base rows are 1..=6"),
    }
}

fn flip_row(row: usize) -> RepaymentSpec {
    match row {
        1 => RepaymentSpec {
            weights: WeightSpec::Constant(-1.0),
            offset: 0.0,
            post: PostMap::Linear {
                scale: 0.25,
                shift: 1.0,
            },
        },
        2 => RepaymentSpec {
            weights: WeightSpec::Constant(-2.0),
            offset: 0.0,
            post: PostMap::Quadratic {
                a2: -1.0 / 128.0,
                a1: 1.0 / 16.0,
                a0: 1.0,
            },
        },
        3 => RepaymentSpec {
            weights: WeightSpec::Constant(-3.0),
            offset: 7.0,
            post: PostMap::Sigmoid,
        },
        4 => RepaymentSpec {
            weights: WeightSpec::Gaussian {
                mean: -3.0,
                sd: 4.0,
            },
            offset: 7.0,
            post: PostMap::Sigmoid,
        },
        _ => unreachable!("flip rows are 1..=4"),
    }
}

fn unbounded(index: usize) -> (FeatureDist, RepaymentSpec) {
    let n = REGISTRY_FEATURE_DIM as f64;
    match index {
        27 => (
            FeatureDist::Gaussian {
                mean: 2.0,
                sd: 0.25,
            },
            RepaymentSpec {
                weights: WeightSpec::Ramp {
                    intercept: 0.0,
                    slope: 5.0 / (n - 1.0),
                },
                offset: -4.0,
                post: PostMap::Sigmoid,
            },
        ),
        28 => (
            FeatureDist::Gaussian { mean: 6.0, sd: 1.0 },
            RepaymentSpec {
                weights: WeightSpec::VShape {
                    down: (1.5, -7.0 / 495.0),
                    up: (0.1, 7.0 / 495.0),
                },
                offset: -4.0,
                post: PostMap::Sigmoid,
            },
        ),
        29 => (
            FeatureDist::AbsGaussian { sd: 1.0 },
            RepaymentSpec {
                weights: WeightSpec::Ramp {
                    intercept: 20.0,
                    slope: -25.0 / (n - 1.0),
                },
                offset: -4.0,
                post: PostMap::Sigmoid,
            },
        ),
        30 => (
            FeatureDist::LogGaussian { sd: 0.25 },
            RepaymentSpec {
                weights: WeightSpec::Ramp {
                    intercept: 0.0,
                    slope: 10.0 / (n - 1.0),
                },
                offset: -4.0,
                post: PostMap::Sigmoid,
            },
        ),
        _ => unreachable!("unbounded types are 27..=30"),
    }
}

fn individual_type(index: usize) -> Result<PoolSpec> {
    let (dist, repay) = match index {
        1..=18 => {
            let row = (index - 1) / 3 + 1;
            let col = (index - 1) % 3;
            (
                FeatureDist::Binned {
                    a_s: BASE_COLUMNS[col],
                    bins: REGISTRY_BINS,
                },
                base_row(row),
            )
        }
        19..=26 => {
            let row = (index - 19) / 2 + 1;
            let col = (index - 19) % 2;
            (
                FeatureDist::Binned {
                    a_s: FLIP_COLUMNS[col],
                    bins: REGISTRY_BINS,
                },
                flip_row(row),
            )
        }
        27..=30 => unbounded(index),
        _ => {
            return Err(Error::Config(format!(
                "distribution type {index} outside 1..=30"
            )))
        }
    };
    Ok(PoolSpec::Individual {
        n: REGISTRY_FEATURE_DIM,
        dist,
        repay,
    })
}

fn advanced_group_type(index: usize) -> Result<PoolSpec> {
    if !(1..=18).contains(&index) {
        return Err(Error::Config(format!(
            "group_advanced_type{index} outside group_advanced_type1..=18"
        )));
    }
    let row = (index - 1) / 3 + 1;
    let col = (index - 1) % 3;
    Ok(PoolSpec::GroupAdvanced(AdvancedGroupSpec {
        n: REGISTRY_FEATURE_DIM,
        dist: FeatureDist::Binned {
            a_s: BASE_COLUMNS[col],
            bins: REGISTRY_BINS,
        },
        gain: base_row(row),
        delta: 0.5 + GROUP_INTEREST_RATE,
        gain_sd: GROUP_GAIN_SD,
        interest_rate: GROUP_INTEREST_RATE,
        max_group_size: GROUP_MAX_SIZE,
        mc_samples: 4_000,
    }))
}

/// Look up a pool spec by registry name: `typeK`, `group_basic`,
/// `group_advanced_typeK`, or `csv:<path>`.
pub fn pool_spec_by_name(name: &str) -> Result<PoolSpec> {
    let name = name.trim();
    if let Some(path) = name.strip_prefix("csv:") {
        return Ok(PoolSpec::Csv(PathBuf::from(path)));
    }
    if name == "group_basic" {
        return Ok(PoolSpec::GroupBasic(BasicGroupSpec {
            gain_mean: GROUP_BASIC_GAIN_MEAN,
            gain_sd: GROUP_GAIN_SD,
            interest_rate: GROUP_INTEREST_RATE,
            max_group_size: GROUP_MAX_SIZE,
            mc_samples: 10_000,
        }));
    }
    if let Some(rest) = name.strip_prefix("group_advanced_type") {
        let index: usize = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad advanced group type '{name}'")))?;
        return advanced_group_type(index);
    }
    if let Some(rest) = name.strip_prefix("type") {
        let index: usize = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad distribution type '{name}'")))?;
        return individual_type(index);
    }
    Err(Error::Config(format!(
        "unknown pool spec '{name}' (expected type1..type30, group_basic, \
         group_advanced_type1..18, or csv:<path>)"
    )))
}
