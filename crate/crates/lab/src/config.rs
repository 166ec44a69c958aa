//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key must be known; expectations
//! use `expect.<metric> = [op] value` with `op` one of `== != <= >= < >` (default
//! `==`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ergolab_core::{CenterMode, Sampler, System};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default(), key.as_ref().map(|k| format!("key `{k}`: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Expansivity,
    Entropy,
    StableClass,
    Scrambled,
    Wandering,
    Recurrence,
    Lyapunov,
    DenjoySuite,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Expansivity,
        Experiment::Entropy,
        Experiment::StableClass,
        Experiment::Scrambled,
        Experiment::Wandering,
        Experiment::Recurrence,
        Experiment::Lyapunov,
        Experiment::DenjoySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Expansivity => "expansivity",
            Experiment::Entropy => "entropy",
            Experiment::StableClass => "stable-class",
            Experiment::Scrambled => "scrambled",
            Experiment::Wandering => "wandering",
            Experiment::Recurrence => "recurrence",
            Experiment::Lyapunov => "lyapunov",
            Experiment::DenjoySuite => "denjoy-suite",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorMode {
    Random,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Op {
    fn symbol(self) -> &'static str {
        match self {
            Op::Eq => "==",
            Op::Ne => "!=",
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::Lt => "<",
            Op::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpectValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ExpectValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectValue::Number(v) => write!(f, "{v}"),
            ExpectValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub metric: String,
    pub op: Op,
    pub value: ExpectValue,
}

impl Expectation {
    fn parse(metric: &str, text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (op, rest) = [
            ("==", Op::Eq),
            ("!=", Op::Ne),
            ("<=", Op::Le),
            (">=", Op::Ge),
            ("<", Op::Lt),
            (">", Op::Gt),
        ]
        .into_iter()
        .find_map(|(sym, op)| text.strip_prefix(sym).map(|r| (op, r.trim())))
        .unwrap_or((Op::Eq, text));
        if rest.is_empty() {
            return Err("expectation needs a value".into());
        }
        let value = match rest.parse::<f64>() {
            Ok(v) => ExpectValue::Number(v),
            Err(_) if matches!(op, Op::Eq | Op::Ne) => ExpectValue::Text(rest.to_string()),
            Err(_) => {
                return Err(format!(
                    "ordering `{}` needs a number, got `{rest}`",
                    op.symbol()
                ))
            }
        };
        Ok(Self {
            metric: metric.to_string(),
            op,
            value,
        })
    }

    /// Compares against a metric value; text matches text, numbers compare numerically.
    pub fn holds(&self, actual: &serde_json::Value) -> bool {
        match (&self.value, actual) {
            (ExpectValue::Text(want), serde_json::Value::String(got)) => match self.op {
                Op::Eq => want == got,
                Op::Ne => want != got,
                _ => false,
            },
            (ExpectValue::Number(want), serde_json::Value::Number(got)) => {
                let got = got.as_f64().unwrap_or(f64::NAN);
                let want = *want;
                match self.op {
                    Op::Eq => got == want,
                    Op::Ne => got != want,
                    Op::Le => got <= want,
                    Op::Ge => got >= want,
                    Op::Lt => got < want,
                    Op::Gt => got > want,
                }
            }
            _ => false,
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            Op::Eq => write!(f, "{}", self.value),
            op => write!(f, "{} {}", op.symbol(), self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub system: Option<System>,
    pub measure: Option<Sampler<f64>>,
    pub cloud_file: Option<PathBuf>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub delta: Option<f64>,
    pub centers: Option<usize>,
    pub n_max: Option<usize>,
    pub threshold: Option<f64>,
    pub rate_floor: Option<f64>,
    pub fit_window: Option<(usize, usize)>,
    pub center_mode: Option<CenterMode>,
    pub epsilons: Option<Vec<f64>>,
    pub n_range: Option<(usize, usize)>,
    pub grid: Option<usize>,
    pub horizon: Option<usize>,
    pub tol: Option<f64>,
    pub anchors: Option<usize>,
    pub anchor_mode: Option<AnchorMode>,
    pub key_tol: Option<f64>,
    pub burn_in: Option<usize>,
    pub pairs: Option<usize>,
    pub candidates: Option<usize>,
    pub liminf_tol: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub epsilon: Option<f64>,
    pub radius: Option<f64>,
    pub points: Option<Vec<f64>>,
    pub expect: Vec<Expectation>,
}

/// Keys in canonical (serialization) order.
pub const KEYS: &[&str] = &[
    "experiment",
    "system",
    "measure",
    "cloud_file",
    "seed",
    "samples",
    "output_dir",
    "delta",
    "centers",
    "n_max",
    "threshold",
    "rate_floor",
    "fit_window",
    "center_mode",
    "epsilons",
    "n_range",
    "grid",
    "horizon",
    "tol",
    "anchors",
    "anchor_mode",
    "key_tol",
    "burn_in",
    "pairs",
    "candidates",
    "liminf_tol",
    "interval",
    "epsilon",
    "radius",
    "points",
];

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err(format!("`{s}` must be positive")),
        Err(_) => Err(format!("`{s}` is not a number")),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        Ok(_) => Err(format!("`{s}` must be positive")),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

fn list<V>(s: &str, item: fn(&str) -> Result<V, String>) -> Result<Vec<V>, String> {
    s.split(',').map(|t| item(t.trim())).collect()
}

fn pair<V: Copy>(s: &str, item: fn(&str) -> Result<V, String>) -> Result<(V, V), String> {
    match list(s, item)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("`{s}` must be two comma-separated values")),
    }
}

fn unit_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("`{s}` is not a number in [0, 1]")),
    }
}

fn join<V: fmt::Display>(items: &[V]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            system: None,
            measure: None,
            cloud_file: None,
            seed: 0,
            samples: None,
            output_dir: None,
            delta: None,
            centers: None,
            n_max: None,
            threshold: None,
            rate_floor: None,
            fit_window: None,
            center_mode: None,
            epsilons: None,
            n_range: None,
            grid: None,
            horizon: None,
            tol: None,
            anchors: None,
            anchor_mode: None,
            key_tol: None,
            burn_in: None,
            pairs: None,
            candidates: None,
            liminf_tol: None,
            interval: None,
            epsilon: None,
            radius: None,
            points: None,
            expect: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                line: Some(line_no),
                key: None,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if entries.iter().any(|(_, k, _)| k == key) {
                return Err(ConfigError::at(Some(line_no), key, "duplicate key"));
            }
            entries.push((line_no, key.to_string(), value.trim().to_string()));
        }
        let (line, _, value) = entries
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .ok_or_else(|| ConfigError::at(None, "experiment", "missing required key"))?;
        let experiment = value
            .parse()
            .map_err(|m| ConfigError::at(Some(*line), "experiment", m))?;
        let mut config = Self::new(experiment);
        for (line, key, value) in &entries {
            if key != "experiment" {
                config
                    .set(key, value)
                    .map_err(|m| ConfigError::at(Some(*line), key, m))?;
            }
        }
        Ok(config)
    }

    /// Sets one key from its text form, with the same rules as the file parser.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        if let Some(metric) = key.strip_prefix("expect.") {
            if metric.is_empty() {
                return Err("expectation needs a metric name".into());
            }
            self.expect.retain(|e| e.metric != metric);
            self.expect.push(Expectation::parse(metric, v)?);
            return Ok(());
        }
        match key {
            "experiment" => self.experiment = v.parse()?,
            "system" => self.system = Some(System::parse(v).map_err(|e| e.to_string())?),
            "measure" => self.measure = Some(Sampler::parse(v).map_err(|e| e.to_string())?),
            "cloud_file" => self.cloud_file = Some(PathBuf::from(v)),
            "seed" => self.seed = v.parse().map_err(|_| format!("`{v}` is not a seed"))?,
            "samples" => self.samples = Some(positive_usize(v)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            "delta" => self.delta = Some(positive_f64(v)?),
            "centers" => self.centers = Some(positive_usize(v)?),
            "n_max" => self.n_max = Some(positive_usize(v)?),
            "threshold" => self.threshold = Some(positive_f64(v)?),
            "rate_floor" => self.rate_floor = Some(positive_f64(v)?),
            "fit_window" => self.fit_window = Some(pair(v, positive_usize)?),
            "center_mode" => {
                self.center_mode = Some(v.parse().map_err(|e: ergolab_core::Error| e.to_string())?)
            }
            "epsilons" => self.epsilons = Some(list(v, positive_f64)?),
            "n_range" => self.n_range = Some(pair(v, positive_usize)?),
            "grid" => self.grid = Some(positive_usize(v)?),
            "horizon" => self.horizon = Some(positive_usize(v)?),
            "tol" => self.tol = Some(positive_f64(v)?),
            "anchors" => self.anchors = Some(positive_usize(v)?),
            "anchor_mode" => {
                self.anchor_mode = Some(match v {
                    "random" => AnchorMode::Random,
                    "grid" => AnchorMode::Grid,
                    _ => return Err(format!("unknown anchor mode `{v}`")),
                })
            }
            "key_tol" => self.key_tol = Some(positive_f64(v)?),
            "burn_in" => {
                self.burn_in = Some(
                    v.parse()
                        .map_err(|_| format!("`{v}` is not a step count"))?,
                )
            }
            "pairs" => self.pairs = Some(positive_usize(v)?),
            "candidates" => self.candidates = Some(positive_usize(v)?),
            "liminf_tol" => self.liminf_tol = Some(positive_f64(v)?),
            "interval" => self.interval = Some(pair(v, unit_f64)?),
            "epsilon" => self.epsilon = Some(positive_f64(v)?),
            "radius" => self.radius = Some(positive_f64(v)?),
            "points" => self.points = Some(list(v, unit_f64)?),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Canonical text form of one key, `None` when unset.
    pub fn get(&self, key: &str) -> Option<String> {
        match key {
            "experiment" => Some(self.experiment.name().to_string()),
            "system" => self.system.as_ref().map(ToString::to_string),
            "measure" => self.measure.as_ref().map(ToString::to_string),
            "cloud_file" => self.cloud_file.as_ref().map(|p| p.display().to_string()),
            "seed" => Some(self.seed.to_string()),
            "samples" => self.samples.map(|v| v.to_string()),
            "output_dir" => self.output_dir.as_ref().map(|p| p.display().to_string()),
            "delta" => self.delta.map(|v| v.to_string()),
            "centers" => self.centers.map(|v| v.to_string()),
            "n_max" => self.n_max.map(|v| v.to_string()),
            "threshold" => self.threshold.map(|v| v.to_string()),
            "rate_floor" => self.rate_floor.map(|v| v.to_string()),
            "fit_window" => self.fit_window.map(|(a, b)| format!("{a}, {b}")),
            "center_mode" => self.center_mode.map(|v| v.to_string()),
            "epsilons" => self.epsilons.as_deref().map(join),
            "n_range" => self.n_range.map(|(a, b)| format!("{a}, {b}")),
            "grid" => self.grid.map(|v| v.to_string()),
            "horizon" => self.horizon.map(|v| v.to_string()),
            "tol" => self.tol.map(|v| v.to_string()),
            "anchors" => self.anchors.map(|v| v.to_string()),
            "anchor_mode" => self.anchor_mode.map(|m| match m {
                AnchorMode::Random => "random".to_string(),
                AnchorMode::Grid => "grid".to_string(),
            }),
            "key_tol" => self.key_tol.map(|v| v.to_string()),
            "burn_in" => self.burn_in.map(|v| v.to_string()),
            "pairs" => self.pairs.map(|v| v.to_string()),
            "candidates" => self.candidates.map(|v| v.to_string()),
            "liminf_tol" => self.liminf_tol.map(|v| v.to_string()),
            "interval" => self.interval.map(|(a, b)| format!("{a}, {b}")),
            "epsilon" => self.epsilon.map(|v| v.to_string()),
            "radius" => self.radius.map(|v| v.to_string()),
            "points" => self.points.as_deref().map(join),
            _ => None,
        }
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in KEYS {
            if let Some(v) = self.get(key) {
                writeln!(f, "{key} = {v}")?;
            }
        }
        for e in &self.expect {
            writeln!(f, "expect.{} = {e}", e.metric)?;
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_names_experiment() {
        let err = ExperimentConfig::parse("").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("experiment"));
        assert!(err.to_string().contains("experiment"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = ExperimentConfig::parse("experiment = entropy\n\nbogus = 3\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert_eq!(err.key.as_deref(), Some("bogus"));
    }

    #[test]
    fn nonpositive_knob_rejected() {
        let err = ExperimentConfig::parse("experiment = expansivity\ndelta = -0.1").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("delta"));
        assert!(ExperimentConfig::parse("experiment = expansivity\ncenters = 0").is_err());
        assert!(ExperimentConfig::parse("experiment = nope").is_err());
        assert!(ExperimentConfig::parse("experiment = entropy\nexperiment = entropy").is_err());
        assert!(ExperimentConfig::parse("experiment = entropy\nexpect.h = <= big").is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = "# tent\nexperiment=expansivity\nsystem = tent\nmeasure=lebesgue\nseed=42\n\
                    delta=0.05\nfit_window = 4,12\nepsilons=0.2,0.1\nexpect.verdict = expansive\n\
                    expect.decay_rate_median = >= 0.6\n";
        let once = ExperimentConfig::parse(text).unwrap().to_string();
        let twice = ExperimentConfig::parse(&once).unwrap().to_string();
        assert_eq!(once, twice);
        assert!(once.contains("expect.decay_rate_median = >= 0.6"));
    }

    #[test]
    fn expectations_compare() {
        let e = Expectation::parse("h", "<= 0.05").unwrap();
        assert!(e.holds(&serde_json::json!(0.01)));
        assert!(!e.holds(&serde_json::json!(0.1)));
        assert!(!e.holds(&serde_json::json!("0.01")));
        let v = Expectation::parse("verdict", "expansive").unwrap();
        assert!(v.holds(&serde_json::json!("expansive")));
        assert!(!v.holds(&serde_json::json!("not-expansive")));
    }
}
