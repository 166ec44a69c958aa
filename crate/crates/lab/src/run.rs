//! Experiment dispatch, artifact writing and expectation checks.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ergolab_core::rng::{stream, Purpose};
use ergolab_core::{
    expansivity_report, greedy_scrambled_set, lyapunov_violation_density, recurrence_fraction,
    sample_measure, scrambled_pair_stats, set_mass, stable_classes, topological_entropy_estimate,
    wandering_interval_verdict, CenterMode, ExpansivityParams, Measure, Sampler, StableClassProbe,
    System, VERSION,
};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{AnchorMode, Experiment, ExperimentConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] ergolab_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
}

type Result<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub metric: String,
    pub expected: String,
    pub actual: Option<Value>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub experiment: String,
    pub version: String,
    pub config: String,
    pub metrics: BTreeMap<String, Value>,
    pub files: Vec<String>,
    pub expectations: Vec<Outcome>,
    /// Kept out of `bundle.json` so reruns are byte-identical.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.expectations.iter().all(|o| o.passed)
    }

    /// One line per failed expectation.
    pub fn diff(&self) -> Vec<String> {
        self.expectations
            .iter()
            .filter(|o| !o.passed)
            .map(|o| {
                let actual = o
                    .actual
                    .as_ref()
                    .map_or("<missing>".to_string(), Value::to_string);
                format!("expect.{}: wanted {}, got {actual}", o.metric, o.expected)
            })
            .collect()
    }
}

struct Sink {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Sink {
    fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|source| RunError::Io {
                path: d.to_path_buf(),
                source,
            })?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let io = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w)?;
        w.flush().map_err(io)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w).map_err(|source| RunError::Io {
                path: name.into(),
                source,
            })
        })
    }
}

type Metrics = BTreeMap<String, Value>;

fn default_system(config: &ExperimentConfig) -> System {
    match (&config.system, config.experiment) {
        (Some(s), _) => s.clone(),
        (None, Experiment::DenjoySuite) => System::parse("denjoy").expect("default denjoy spec"),
        (None, _) => System::tent(),
    }
}

fn cloud(config: &ExperimentConfig, system: &System) -> Result<Measure> {
    if let Some(path) = &config.cloud_file {
        let f = File::open(path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        return Ok(Measure::read_csv(f, system.space())?);
    }
    let sampler = config
        .measure
        .clone()
        .unwrap_or(if system.denjoy_model().is_some() {
            Sampler::DenjoyPushforward
        } else {
            Sampler::Lebesgue
        });
    Ok(sample_measure(
        &sampler,
        system,
        config.samples.unwrap_or(100_000),
        config.seed,
    )?)
}

fn uniform_points(seed: u64, purpose: Purpose, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| stream(seed, purpose, i as u64).random::<f64>())
        .collect()
}

fn run_expansivity(
    system: &System,
    measure: &Measure,
    params: ExpansivityParams<f64>,
    prefix: &str,
    sink: &mut Sink,
    metrics: &mut Metrics,
) -> Result<()> {
    let report = expansivity_report(system, measure, &params)?;
    sink.json(&format!("{prefix}report.json"), &report.summary())?;
    sink.write(&format!("{prefix}curves.csv"), |w| {
        Ok(report.write_curves_csv(w)?)
    })?;
    let masses = report
        .curves
        .iter()
        .flat_map(|c| c.masses.iter().map(|m| m.value));
    let (lo, hi) = masses.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    metrics.insert(
        format!("{prefix}verdict"),
        json!(report.verdict.to_string()),
    );
    metrics.insert(
        format!("{prefix}x_delta_fraction"),
        json!(report.x_delta_fraction),
    );
    metrics.insert(
        format!("{prefix}decay_rate_median"),
        json!(report.decay_rate_median),
    );
    metrics.insert(format!("{prefix}mass_min"), json!(lo));
    metrics.insert(format!("{prefix}mass_max"), json!(hi));
    Ok(())
}

fn expansivity_params(
    config: &ExperimentConfig,
    delta: f64,
    n_max: usize,
    rate_floor: f64,
) -> ExpansivityParams<f64> {
    let mut p = ExpansivityParams::new(config.delta.unwrap_or(delta));
    p.centers = config.centers.unwrap_or(p.centers);
    p.n_max = config.n_max.unwrap_or(n_max);
    p.threshold = config.threshold.unwrap_or(p.threshold);
    p.rate_floor = config.rate_floor.unwrap_or(rate_floor);
    p.fit_window = config.fit_window;
    p.center_mode = config.center_mode.unwrap_or(CenterMode::Measure);
    p.seed = config.seed;
    p
}

fn run_entropy(
    config: &ExperimentConfig,
    system: &System,
    n_range: (usize, usize),
    prefix: &str,
    sink: &mut Sink,
    metrics: &mut Metrics,
) -> Result<()> {
    let epsilons = config.epsilons.clone().unwrap_or_else(|| vec![0.2, 0.1]);
    let estimate = topological_entropy_estimate(
        system,
        &epsilons,
        config.n_range.unwrap_or(n_range),
        config.grid.unwrap_or(ergolab_core::entropy::DEFAULT_GRID),
    )?;
    sink.write(&format!("{prefix}entropy.csv"), |w| {
        Ok(estimate.write_csv(w)?)
    })?;
    sink.json(&format!("{prefix}entropy.json"), &estimate.summary())?;
    metrics.insert(
        format!("{prefix}h_top_estimate"),
        json!(estimate.h_top_estimate),
    );
    metrics.insert(
        format!("{prefix}slope_per_epsilon"),
        json!(estimate.slope_per_epsilon),
    );
    Ok(())
}

fn run_wandering(
    system: &System,
    interval: (f64, f64),
    horizon: usize,
    prefix: &str,
    sink: &mut Sink,
    metrics: &mut Metrics,
) -> Result<()> {
    let v = wandering_interval_verdict(system, interval, horizon)?;
    sink.json(&format!("{prefix}wandering.json"), &v.summary())?;
    metrics.insert(format!("{prefix}verdict"), json!(v.verdict.to_string()));
    metrics.insert(format!("{prefix}pairs_checked"), json!(v.pairs_checked));
    metrics.insert(
        format!("{prefix}first_collision"),
        v.first_collision
            .map_or(Value::Null, |(m, n)| json!([m, n])),
    );
    Ok(())
}

#[derive(Serialize)]
struct StableSummary {
    anchors: usize,
    horizon: usize,
    tol: f64,
    key_tol: f64,
    max_mass: f64,
    classes: Vec<f64>,
    class_sizes: Vec<usize>,
    unconverged: usize,
}

fn dispatch(config: &ExperimentConfig, sink: &mut Sink, metrics: &mut Metrics) -> Result<()> {
    let system = default_system(config);
    match config.experiment {
        Experiment::Expansivity => {
            let measure = cloud(config, &system)?;
            let params = expansivity_params(config, 0.05, 14, 0.05);
            run_expansivity(&system, &measure, params, "", sink, metrics)
        }
        Experiment::Entropy => run_entropy(config, &system, (1, 12), "", sink, metrics),
        Experiment::StableClass => {
            let measure = cloud(config, &system)?;
            let count = config.anchors.unwrap_or(20);
            let anchors = match config.anchor_mode.unwrap_or(AnchorMode::Random) {
                AnchorMode::Random => uniform_points(config.seed, Purpose::Anchors, count),
                AnchorMode::Grid => (0..count).map(|k| k as f64 / count as f64).collect(),
            };
            let horizon = config.horizon.unwrap_or(200);
            let tol = config.tol.unwrap_or(1e-3);
            let key_tol = config.key_tol.unwrap_or(1e-6);
            let probe = StableClassProbe::new(&system, &measure, horizon)?;
            let estimates = anchors
                .iter()
                .map(|&a| probe.mass_for(a, tol))
                .collect::<ergolab_core::Result<Vec<_>>>()?;
            let partition = stable_classes(&system, &anchors, horizon, key_tol)?;
            sink.write("stable.csv", |w| {
                let mut out = String::from("anchor,mass,std_err\n");
                for e in &estimates {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        e.anchor, e.mass.value, e.mass.standard_error
                    ));
                }
                w.write_all(out.as_bytes()).map_err(|source| RunError::Io {
                    path: "stable.csv".into(),
                    source,
                })
            })?;
            let summary = StableSummary {
                anchors: count,
                horizon,
                tol,
                key_tol,
                max_mass: estimates.iter().map(|e| e.mass.value).fold(0.0, f64::max),
                classes: partition.classes.iter().map(|(k, _)| *k).collect(),
                class_sizes: partition.classes.iter().map(|(_, m)| m.len()).collect(),
                unconverged: partition.unconverged.len(),
            };
            sink.json("stable.json", &summary)?;
            metrics.insert("max_mass".into(), json!(summary.max_mass));
            metrics.insert("classes".into(), json!(summary.classes.len()));
            metrics.insert("unconverged".into(), json!(summary.unconverged));
            Ok(())
        }
        Experiment::Scrambled => {
            let horizon = config.horizon.unwrap_or(5000);
            let burn_in = config.burn_in.unwrap_or(0);
            let delta = config.delta.unwrap_or(0.25);
            let liminf_tol = config.liminf_tol.unwrap_or(0.01);
            let pairs = config.pairs.unwrap_or(100);
            let ends = uniform_points(config.seed, Purpose::Pairs, 2 * pairs);
            let stats = ends
                .chunks(2)
                .map(|p| scrambled_pair_stats(&system, p[0], p[1], horizon, burn_in))
                .collect::<ergolab_core::Result<Vec<_>>>()?;
            let scrambled = stats
                .iter()
                .filter(|s| s.is_scrambled(delta, liminf_tol))
                .count();
            let candidates = uniform_points(
                config.seed,
                Purpose::Candidates,
                config.candidates.unwrap_or(200),
            );
            let set =
                greedy_scrambled_set(&system, &candidates, delta, horizon, burn_in, liminf_tol)?;
            sink.write("scrambled.csv", |w| {
                Ok(ergolab_core::structure::write_scrambled_csv(w, &stats)?)
            })?;
            metrics.insert(
                "scrambled_fraction".into(),
                json!(scrambled as f64 / pairs as f64),
            );
            metrics.insert("greedy_size".into(), json!(set.len()));
            Ok(())
        }
        Experiment::Wandering => {
            let interval = config
                .interval
                .ok_or_else(|| RunError::Config("wandering needs an `interval`".into()))?;
            run_wandering(
                &system,
                interval,
                config.horizon.unwrap_or(50),
                "",
                sink,
                metrics,
            )
        }
        Experiment::Recurrence => {
            let measure = cloud(config, &system)?;
            let f = recurrence_fraction(
                &system,
                &measure,
                config.horizon.unwrap_or(500),
                config.tol.unwrap_or(1e-3),
            )?;
            sink.json("recurrence.json", &json!({ "recurrence_fraction": f }))?;
            metrics.insert("recurrence_fraction".into(), json!(f));
            Ok(())
        }
        Experiment::Lyapunov => {
            let samples = match &config.points {
                Some(p) => p.clone(),
                None => cloud(config, &system)?.points().to_vec(),
            };
            let d = lyapunov_violation_density(
                &system,
                &samples,
                config.epsilon.unwrap_or(0.1),
                config.radius.unwrap_or(1e-3),
                config.horizon.unwrap_or(500),
            )?;
            sink.json("lyapunov.json", &json!({ "violation_density": d }))?;
            metrics.insert("violation_density".into(), json!(d));
            Ok(())
        }
        Experiment::DenjoySuite => {
            let model = system
                .denjoy_model()
                .ok_or_else(|| RunError::Config("denjoy-suite needs a denjoy system".into()))?;
            let measure = cloud(config, &system)?;
            let l0 = model.biggest_gap();
            let params = expansivity_params(config, l0 / 4.0, 3000, 1e-4);
            run_expansivity(&system, &measure, params, "expansivity.", sink, metrics)?;
            run_entropy(config, &system, (10, 60), "entropy.", sink, metrics)?;
            let gap = model.gap(0).expect("central gap exists");
            run_wandering(
                &system,
                gap,
                config.horizon.unwrap_or(50),
                "wandering.",
                sink,
                metrics,
            )?;
            let interior = set_mass(&measure, |x| x > gap.0 && x < gap.1);
            metrics.insert("gap_mass".into(), json!(interior.value));
            Ok(())
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    let start = Instant::now();
    let mut sink = Sink::new(config.output_dir.as_deref())?;
    let mut metrics = Metrics::new();
    dispatch(config, &mut sink, &mut metrics)?;
    let expectations = config
        .expect
        .iter()
        .map(|e| {
            let actual = metrics.get(&e.metric).cloned();
            Outcome {
                metric: e.metric.clone(),
                expected: e.to_string(),
                passed: actual.as_ref().is_some_and(|a| e.holds(a)),
                actual,
            }
        })
        .collect();
    let mut bundle = ReportBundle {
        experiment: config.experiment.name().to_string(),
        version: VERSION.to_string(),
        config: config.to_string(),
        metrics,
        files: Vec::new(),
        expectations,
        wall_clock: Duration::ZERO,
    };
    bundle.files = sink.files.clone();
    sink.json("bundle.json", &bundle)?;
    bundle.files = sink.files;
    bundle.wall_clock = start.elapsed();
    Ok(bundle)
}
