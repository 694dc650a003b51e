//! Line-oriented `key = value` experiment configuration.
//!
//! `#` starts a comment, blank lines are ignored, keys may appear once.
//! Problems — malformed lines, unknown keys, type or range errors, missing
//! required keys — are all collected and reported together, so one edit
//! round fixes everything.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::models::QueueingParams;
use crate::time::Duration;
use crate::trace::TraceLevel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    problems: Vec<String>,
}

impl ConfigError {
    pub fn problems(&self) -> &[String] {
        &self.problems
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error")?;
        if self.problems.len() > 1 {
            write!(f, "s")?;
        }
        write!(f, ":")?;
        for problem in &self.problems {
            write!(f, "\n  - {problem}")?;
        }
        Ok(())
    }
}

/// Which model to run, with its parameters. Delays and police spans are
/// plain numbers here; they become [`Duration`]s when the model is built.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    TrafficLight {
        delay_green: f64,
        delay_yellow: f64,
        delay_red: f64,
        /// `(work, rest)` — wire in a policeman interrupting the light.
        police: Option<(f64, f64)>,
    },
    Queueing(QueueingParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Simulation horizon. `+∞` (the default for the queueing system) runs
    /// until every model passivates; the traffic light cycles forever, so
    /// it requires a finite horizon.
    pub t_end: Duration,
    pub out_csv: PathBuf,
    pub trace: TraceLevel,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut problems = Vec::new();
    let mut pairs: BTreeMap<&str, &str> = BTreeMap::new();

    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            problems.push(format!(
                "line {}: expected `key = value`, got '{line}'",
                index + 1
            ));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            problems.push(format!(
                "line {}: empty key or value in '{line}'",
                index + 1
            ));
            continue;
        }
        if pairs.insert(key, value).is_some() {
            problems.push(format!("line {}: duplicate key '{key}'", index + 1));
        }
    }

    let mut reader = Reader {
        pairs,
        problems,
        used: Vec::new(),
    };
    let config = extract(&mut reader);

    let unused: Vec<String> = reader
        .pairs
        .keys()
        .filter(|k| !reader.used.contains(&k.to_string()))
        .map(|k| k.to_string())
        .collect();
    for key in unused {
        reader
            .problems
            .push(match KNOWN_KEYS.contains(&key.as_str()) {
                true => format!("key '{key}' does not apply to this model"),
                false => format!("unknown key '{key}'"),
            });
    }

    match (config, reader.problems.is_empty()) {
        (Some(config), true) => Ok(config),
        _ => Err(ConfigError {
            problems: reader.problems,
        }),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "model",
    "delay_green",
    "delay_yellow",
    "delay_red",
    "police_work",
    "police_rest",
    "n_processors",
    "gen_rate",
    "size_dist",
    "speeds",
    "min_times",
    "n_jobs",
    "seed",
    "t_end",
    "out_csv",
    "trace",
];

struct Reader<'t> {
    pairs: BTreeMap<&'t str, &'t str>,
    problems: Vec<String>,
    used: Vec<String>,
}

impl<'t> Reader<'t> {
    fn take(&mut self, key: &str) -> Option<&'t str> {
        self.used.push(key.to_string());
        self.pairs.get(key).copied()
    }

    fn require(&mut self, key: &str) -> Option<&'t str> {
        let value = self.take(key);
        if value.is_none() {
            self.problems.push(format!("missing required key '{key}'"));
        }
        value
    }

    fn problem(&mut self, text: impl Into<String>) {
        self.problems.push(text.into());
    }

    /// Parses and range-checks; pushes a problem and returns None on failure.
    fn number(
        &mut self,
        key: &str,
        value: &str,
        check: impl Fn(f64) -> bool,
        want: &str,
    ) -> Option<f64> {
        match value.parse::<f64>() {
            Ok(number) if check(number) => Some(number),
            Ok(number) => {
                self.problem(format!("key '{key}': {number} must be {want}"));
                None
            }
            Err(_) => {
                self.problem(format!("key '{key}': '{value}' is not a number"));
                None
            }
        }
    }

    fn integer(
        &mut self,
        key: &str,
        value: &str,
        check: impl Fn(u64) -> bool,
        want: &str,
    ) -> Option<u64> {
        match value.parse::<u64>() {
            Ok(number) if check(number) => Some(number),
            Ok(number) => {
                self.problem(format!("key '{key}': {number} must be {want}"));
                None
            }
            Err(_) => {
                self.problem(format!(
                    "key '{key}': '{value}' is not a non-negative integer"
                ));
                None
            }
        }
    }

    /// Comma-separated positive-length list; a single value broadcasts to
    /// `n` entries, otherwise the length must equal `n`. `n` is `None` when
    /// `n_processors` itself was bad — items still get parsed and checked.
    fn per_processor(
        &mut self,
        key: &str,
        n: Option<usize>,
        check: impl Fn(f64) -> bool,
        want: &str,
    ) -> Option<Vec<f64>> {
        let value = self.require(key)?;
        let mut list = Vec::new();
        for item in value.split(',') {
            list.push(self.number(key, item.trim(), &check, want)?);
        }
        let n = n?;
        if list.len() == 1 {
            return Some(vec![list[0]; n]);
        }
        if list.len() != n {
            self.problem(format!(
                "key '{key}': {} values for {n} processors (give one value or exactly {n})",
                list.len()
            ));
            return None;
        }
        Some(list)
    }
}

fn extract(reader: &mut Reader<'_>) -> Option<ExperimentConfig> {
    let model_kind = reader.require("model")?.to_string();

    let finite_positive = |v: f64| v.is_finite() && v > 0.0;
    let model = match model_kind.as_str() {
        "trafficlight" => {
            let mut delay = |key: &str| {
                let value = reader.require(key)?.to_string();
                reader.number(
                    key,
                    &value,
                    |v| v.is_finite() && v >= 0.0,
                    "a finite non-negative number",
                )
            };
            let delays = (
                delay("delay_green"),
                delay("delay_yellow"),
                delay("delay_red"),
            );

            let police_work = reader.take("police_work").map(str::to_string);
            let police_rest = reader.take("police_rest").map(str::to_string);
            let police = match (police_work, police_rest) {
                (Some(work), Some(rest)) => {
                    let work = reader.number(
                        "police_work",
                        &work,
                        finite_positive,
                        "a finite positive number",
                    );
                    let rest = reader.number(
                        "police_rest",
                        &rest,
                        finite_positive,
                        "a finite positive number",
                    );
                    match (work, rest) {
                        (Some(work), Some(rest)) => Some(Some((work, rest))),
                        _ => None,
                    }
                }
                (None, None) => Some(None),
                _ => {
                    reader.problem("police_work and police_rest must be given together");
                    None
                }
            };

            match (delays, police) {
                ((Some(delay_green), Some(delay_yellow), Some(delay_red)), Some(police)) => {
                    Some(ModelConfig::TrafficLight {
                        delay_green,
                        delay_yellow,
                        delay_red,
                        police,
                    })
                }
                _ => None,
            }
        }
        "queueing" => extract_queueing(reader).map(ModelConfig::Queueing),
        other => {
            reader.problem(format!(
                "key 'model': '{other}' is neither 'trafficlight' nor 'queueing'"
            ));
            None
        }
    };

    let t_end = match reader.take("t_end") {
        None | Some("inf") => Some(Duration::INFINITY),
        Some(value) => {
            let value = value.to_string();
            reader
                .number(
                    "t_end",
                    &value,
                    |v| v.is_finite() && v > 0.0,
                    "a positive number or 'inf'",
                )
                .map(Duration::new)
        }
    };
    // The light cycles forever; without a horizon the run would never end.
    // Keyed on the model *name* so the problem is reported even when other
    // trafficlight keys are also broken.
    if model_kind == "trafficlight" && t_end.is_some_and(|end| end.is_infinite()) {
        reader.problem("model = trafficlight requires a finite t_end");
    }

    let out_csv = reader.require("out_csv").map(PathBuf::from);

    let trace = match reader.take("trace") {
        None | Some("off") => Some(TraceLevel::Off),
        Some("events") => Some(TraceLevel::Events),
        Some("full") => Some(TraceLevel::Full),
        Some(other) => {
            reader.problem(format!(
                "key 'trace': '{other}' is not off, events, or full"
            ));
            None
        }
    };

    match (model, t_end, out_csv, trace) {
        (Some(model), Some(t_end), Some(out_csv), Some(trace)) => Some(ExperimentConfig {
            model,
            t_end,
            out_csv,
            trace,
        }),
        _ => None,
    }
}

fn extract_queueing(reader: &mut Reader<'_>) -> Option<QueueingParams> {
    // Every key is examined even after earlier ones fail, so a broken file
    // reports all of its problems in one pass.
    let n_processors = reader.require("n_processors").and_then(|v| {
        reader.integer(
            "n_processors",
            v,
            |v| (1..=64).contains(&v),
            "between 1 and 64",
        )
    });
    let gen_rate = reader.require("gen_rate").and_then(|v| {
        reader.number(
            "gen_rate",
            v,
            |v| v.is_finite() && v > 0.0,
            "a finite positive number",
        )
    });
    let size_dist = reader
        .require("size_dist")
        .and_then(|v| parse_uniform(reader, v));
    let n_jobs = reader
        .require("n_jobs")
        .and_then(|v| reader.integer("n_jobs", v, |v| v >= 1, "at least 1"));
    let seed = reader
        .require("seed")
        .and_then(|v| reader.integer("seed", v, |_| true, ""));

    let n = n_processors.map(|v| v as usize);
    let speeds = reader.per_processor(
        "speeds",
        n,
        |v| v.is_finite() && v > 0.0,
        "a finite positive number",
    );
    let min_times = reader.per_processor(
        "min_times",
        n,
        |v| v.is_finite() && v >= 0.0,
        "a finite non-negative number",
    );

    Some(QueueingParams {
        n_processors: n?,
        gen_rate: gen_rate?,
        size_lo: size_dist?.0,
        size_hi: size_dist?.1,
        speeds: speeds?,
        min_times: min_times?,
        n_jobs: n_jobs?,
        seed: seed?,
    })
}

/// `uniform(lo, hi)` with `0 < lo ≤ hi`, both finite.
fn parse_uniform(reader: &mut Reader<'_>, value: &str) -> Option<(f64, f64)> {
    let inner = value
        .strip_prefix("uniform(")
        .and_then(|rest| rest.strip_suffix(')'));
    let parsed = inner.and_then(|inner| {
        let (lo, hi) = inner.split_once(',')?;
        Some((
            lo.trim().parse::<f64>().ok()?,
            hi.trim().parse::<f64>().ok()?,
        ))
    });
    match parsed {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi => {
            Some((lo, hi))
        }
        Some((lo, hi)) => {
            reader.problem(format!(
                "key 'size_dist': bounds ({lo}, {hi}) must satisfy 0 < lo <= hi"
            ));
            None
        }
        None => {
            reader.problem(format!(
                "key 'size_dist': '{value}' is not of the form uniform(lo, hi)"
            ));
            None
        }
    }
}
