//! Flat `key = value` configuration files with `[section]` headers.
//!
//! Unknown sections or keys are errors that name the offender and its line,
//! so a typo never silently falls back to a default. `#` starts a comment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::datagen::registry::pool_spec_by_name;
use crate::domain::{BoxBounds, UtilityConfig};
use crate::error::{Error, Result};
use crate::harness::{AlgorithmKind, ScenarioConfig};
use crate::learner::{LearnerConfig, MultiStartConfig, StepSchedule};
use crate::policy::LinkKind;

/// Scale profile: `quick` runs desk-sized pools and replication counts,
/// `paper` restores the full-size study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Quick,
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "quick" => Ok(Profile::Quick),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (quick or paper)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Quick => "quick",
            Profile::Paper => "paper",
        }
    }

    pub fn default_pool_size(self) -> usize {
        match self {
            Profile::Quick => 100_000,
            Profile::Paper => 1_000_000,
        }
    }

    pub fn default_replications(self) -> u32 {
        match self {
            Profile::Quick => 10,
            Profile::Paper => 50,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed file: section name -> key -> entry.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_string(),
                    row: line_no,
                    column: "-".into(),
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            let section = current.clone().ok_or_else(|| Error::Parse {
                path: path.to_string(),
                row: line_no,
                column: key.trim().to_string(),
                message: "key before any [section] header".into(),
            })?;
            let prior = sections.entry(section).or_default().insert(
                key.trim().to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line: line_no,
                },
            );
            if prior.is_some() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    row: line_no,
                    column: key.trim().to_string(),
                    message: "duplicate key".into(),
                });
            }
        }
        Ok(ConfigFile {
            path: path.to_string(),
            sections,
        })
    }

    fn reader(&self, section: &str) -> SectionReader<'_> {
        SectionReader {
            path: &self.path,
            entries: self.sections.get(section),
            consumed: Vec::new(),
            section: section.to_string(),
        }
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn ensure_only_sections(&self, allowed: &[&str]) -> Result<()> {
        for name in self.sections.keys() {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown section '[{name}]' in {} (expected one of: {})",
                    self.path,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

struct SectionReader<'a> {
    path: &'a str,
    section: String,
    entries: Option<&'a BTreeMap<String, Entry>>,
    consumed: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.consumed.push(key.to_string());
        self.entries
            .and_then(|e| e.get(key))
            .map(|e| e.value.as_str())
    }

    fn parse_value<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                let line = self
                    .entries
                    .and_then(|e| e.get(key))
                    .map(|e| e.line)
                    .unwrap_or(0);
                Error::Parse {
                    path: self.path.to_string(),
                    row: line,
                    column: key.to_string(),
                    message: format!("cannot parse '{v}'"),
                }
            }),
        }
    }

    fn get_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_value(key)?.unwrap_or(default))
    }

    fn require(&mut self, key: &str) -> Result<&'a str> {
        self.raw(key).ok_or_else(|| {
            Error::Config(format!(
                "missing required key '{key}' in section [{}] of {}",
                self.section, self.path
            ))
        })
    }

    fn list(&mut self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }

    fn finish(self) -> Result<()> {
        if let Some(entries) = self.entries {
            for (key, entry) in entries {
                if !self.consumed.contains(key) {
                    return Err(Error::Config(format!(
                        "unknown key '{key}' in section [{}] of {} (line {})",
                        self.section, self.path, entry.line
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_step(s: &str) -> Result<StepSchedule> {
    let (kind, value) = s.split_once(':').ok_or_else(|| {
        Error::Config(format!(
            "step must be 'constant:<alpha>' or 'theoretic:<ratio>', got '{s}'"
        ))
    })?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad step value in '{s}'")))?;
    if value <= 0.0 {
        return Err(Error::Config(format!(
            "step value must be positive, got {value}"
        )));
    }
    match kind.trim() {
        "constant" => Ok(StepSchedule::Constant(value)),
        "theoretic" => Ok(StepSchedule::Theoretic { ratio: value }),
        other => Err(Error::Config(format!("unknown step kind '{other}'"))),
    }
}

/// A parsed sweep request: the parameter to vary and its values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    MissingP(Vec<f64>),
    Subsidy(Vec<f64>),
    StepRatio(Vec<f64>),
    StepConstant(Vec<f64>),
    Pool(Vec<String>),
}

impl SweepSpec {
    /// Expand the base scenario into one configured scenario per value.
    pub fn expand(&self, base: &ScenarioConfig) -> Result<Vec<ScenarioConfig>> {
        let mut out = Vec::new();
        match self {
            SweepSpec::MissingP(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    cfg.missing_p = v;
                    cfg.name = format!("{}__missing_p_{v}", base.name);
                    out.push(cfg);
                }
            }
            SweepSpec::Subsidy(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    cfg.utility = UtilityConfig::new(base.utility.interest_rate, v)?;
                    cfg.name = format!("{}__subsidy_{v}", base.name);
                    out.push(cfg);
                }
            }
            SweepSpec::StepRatio(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    cfg.learner.schedule = StepSchedule::Theoretic { ratio: v };
                    cfg.name = format!("{}__step_ratio_{v}", base.name);
                    out.push(cfg);
                }
            }
            SweepSpec::StepConstant(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    cfg.learner.schedule = StepSchedule::Constant(v);
                    cfg.name = format!("{}__step_constant_{v}", base.name);
                    out.push(cfg);
                }
            }
            SweepSpec::Pool(names) => {
                for name in names {
                    let mut cfg = base.clone();
                    cfg.pool_spec = pool_spec_by_name(name)?;
                    cfg.pool_name = name.clone();
                    cfg.name = format!("{}__pool_{name}", base.name);
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }
}

/// Pool-building request for the `pool` command.
#[derive(Debug, Clone)]
pub struct PoolRequest {
    pub spec_name: String,
    pub size: usize,
    pub seed: u64,
}

/// Input directories for the `report` command.
#[derive(Debug, Clone)]
pub struct ReportRequest {
    pub inputs: Vec<PathBuf>,
}

fn parse_f64_list(values: &[String], what: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad {what} value '{v}'")))
        })
        .collect()
}

/// Read the scenario (and optional sweep) from a config file.
pub fn load_scenario(
    file: &ConfigFile,
    profile: Profile,
    seed_override: Option<u64>,
) -> Result<(ScenarioConfig, Option<SweepSpec>)> {
    file.ensure_only_sections(&["scenario", "learner", "baselines", "utility", "sweep"])?;

    let mut utility_sec = file.reader("utility");
    let interest_rate = utility_sec.get_or("interest_rate", 0.35)?;
    let subsidy = utility_sec.get_or("subsidy", 0.0)?;
    utility_sec.finish()?;
    let utility = UtilityConfig::new(interest_rate, subsidy)?;

    let mut learner_sec = file.reader("learner");
    let link = match learner_sec.raw("link") {
        None => LinkKind::CaseA,
        Some(v) => LinkKind::parse(v)?,
    };
    let schedule = match learner_sec.raw("step") {
        None => StepSchedule::Constant(2.0),
        Some(v) => parse_step(v)?,
    };
    let bounds = BoxBounds::new(
        learner_sec.get_or("box_lo", 0.0)?,
        learner_sec.get_or("box_hi", 10.0)?,
    )?;
    let num_candidates = learner_sec.get_or("num_candidates", 10usize)?;
    let keep_best = learner_sec.get_or("keep_best", 5usize)?;
    let multi_start = MultiStartConfig {
        num_candidates,
        keep_best,
        fresh_random: num_candidates.saturating_sub(keep_best),
        multi_periods: learner_sec.get_or("multi_periods", 50u32)?,
        ranking_window: learner_sec.get_or("ranking_window", 5usize)?,
    };
    let init_range = (
        learner_sec.get_or("init_lo", 0.0)?,
        learner_sec.get_or("init_hi", 1.0)?,
    );
    learner_sec.finish()?;

    let mut baselines_sec = file.reader("baselines");
    let logistic_learning_rate = baselines_sec.get_or("logistic_learning_rate", 0.1)?;
    baselines_sec.finish()?;

    let mut scenario_sec = file.reader("scenario");
    let pool_name = scenario_sec.require("pool")?.to_string();
    let pool_spec = pool_spec_by_name(&pool_name)?;
    let name = scenario_sec
        .raw("name")
        .map(str::to_string)
        .unwrap_or_else(|| format!("scenario_{pool_name}"));
    let pool_size = scenario_sec.get_or("pool_size", profile.default_pool_size())?;
    let shift_pool = scenario_sec.raw("shift_pool").map(str::to_string);
    let shift_period: Option<u32> = scenario_sec.parse_value("shift_period")?;
    let shift = match (shift_pool, shift_period) {
        (None, None) => None,
        (Some(name), Some(period)) => Some((pool_spec_by_name(&name)?, name, period)),
        _ => {
            return Err(Error::Config(
                "shift_pool and shift_period must be given together".into(),
            ))
        }
    };
    let algorithms = match scenario_sec.list("algorithms") {
        None => vec![
            AlgorithmKind::Learner,
            AlgorithmKind::Perfect,
            AlgorithmKind::Extrapolation,
            AlgorithmKind::Perceptron,
            AlgorithmKind::Logistic,
        ],
        Some(names) => names
            .iter()
            .map(|n| AlgorithmKind::parse(n))
            .collect::<Result<Vec<_>>>()?,
    };
    let t_periods = scenario_sec.get_or("T", 500u32)?;
    let n_t = scenario_sec.get_or("N_t", 10usize)?;
    let missing_p = scenario_sec.get_or("missing_p", 0.0)?;
    let replications = scenario_sec.get_or("replications", profile.default_replications())?;
    let seed = scenario_sec.get_or("seed", 0u64)?;
    let gradient_bound_samples = scenario_sec.get_or("gradient_bound_samples", 10_000usize)?;
    scenario_sec.finish()?;

    let cfg = ScenarioConfig {
        name,
        pool_name,
        pool_spec,
        pool_size,
        shift,
        algorithms,
        learner: LearnerConfig {
            link,
            schedule,
            bounds,
            multi_start,
            init_range,
            seed: seed_override.unwrap_or(seed),
        },
        utility,
        t_periods,
        n_t,
        missing_p,
        replications,
        seed: seed_override.unwrap_or(seed),
        logistic_learning_rate,
        gradient_bound_samples,
    };
    cfg.validate()?;

    let sweep = if file.has_section("sweep") {
        let mut sweep_sec = file.reader("sweep");
        let parameter = sweep_sec.require("parameter")?.to_string();
        let values = sweep_sec
            .list("values")
            .ok_or_else(|| Error::Config("sweep section needs a 'values' list".into()))?;
        sweep_sec.finish()?;
        Some(match parameter.as_str() {
            "missing_p" => SweepSpec::MissingP(parse_f64_list(&values, "missing_p")?),
            "subsidy" => SweepSpec::Subsidy(parse_f64_list(&values, "subsidy")?),
            "step_ratio" => SweepSpec::StepRatio(parse_f64_list(&values, "step_ratio")?),
            "step_constant" => SweepSpec::StepConstant(parse_f64_list(&values, "step_constant")?),
            "pool" => SweepSpec::Pool(values),
            other => return Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        })
    } else {
        None
    };

    Ok((cfg, sweep))
}

/// Read the `[pool]` section for the `pool` command.
pub fn load_pool_request(
    file: &ConfigFile,
    profile: Profile,
    seed_override: Option<u64>,
) -> Result<PoolRequest> {
    file.ensure_only_sections(&["pool"])?;
    let mut sec = file.reader("pool");
    let spec_name = sec.require("spec")?.to_string();
    let size = sec.get_or("size", profile.default_pool_size())?;
    let seed = sec.get_or("seed", 0u64)?;
    sec.finish()?;
    pool_spec_by_name(&spec_name)?;
    Ok(PoolRequest {
        spec_name,
        size,
        seed: seed_override.unwrap_or(seed),
    })
}

/// Read the `[report]` section for the `report` command.
pub fn load_report_request(file: &ConfigFile) -> Result<ReportRequest> {
    file.ensure_only_sections(&["report"])?;
    let mut sec = file.reader("report");
    let inputs = sec
        .list("inputs")
        .ok_or_else(|| Error::Config("report section needs an 'inputs' list".into()))?
        .into_iter()
        .map(PathBuf::from)
        .collect();
    sec.finish()?;
    Ok(ReportRequest { inputs })
}
