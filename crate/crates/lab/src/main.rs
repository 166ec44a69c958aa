use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ergolab::{run_experiment, Experiment, ExperimentConfig};
use ergolab_core::{orbit, System};

#[derive(Parser)]
#[command(
    name = "ergolab",
    version,
    about = "Numerical experiments on expansive measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a `key = value` config file.
    Run {
        config: PathBuf,
    },
    /// Catalog operations.
    Systems {
        #[command(subcommand)]
        action: SystemsAction,
    },
    /// Print an orbit, one point per line.
    Orbit {
        #[arg(long)]
        system: String,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        n: usize,
    },
    Expansivity(Knobs),
    Entropy(Knobs),
    Scrambled(Knobs),
    Stable(Knobs),
    Wandering(Knobs),
    Recurrence(Knobs),
    Lyapunov(Knobs),
}

#[derive(Subcommand)]
enum SystemsAction {
    List,
}

/// Every flag maps onto the config key of the same name.
#[derive(Args)]
struct Knobs {
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long = "out")]
    output_dir: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    centers: Option<String>,
    #[arg(long = "nmax")]
    n_max: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    rate_floor: Option<String>,
    #[arg(long)]
    fit_window: Option<String>,
    #[arg(long)]
    center_mode: Option<String>,
    #[arg(long)]
    epsilons: Option<String>,
    #[arg(long)]
    n_range: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    anchors: Option<String>,
    #[arg(long)]
    anchor_mode: Option<String>,
    #[arg(long)]
    key_tol: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long)]
    liminf_tol: Option<String>,
    #[arg(long)]
    interval: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    points: Option<String>,
    /// `metric=value` expectations, e.g. `--expect verdict=expansive`.
    #[arg(long)]
    expect: Vec<String>,
}

impl Knobs {
    fn into_config(self, experiment: Experiment) -> Result<ExperimentConfig, String> {
        let mut config = ExperimentConfig::new(experiment);
        let pairs = [
            ("system", self.system),
            ("measure", self.measure),
            ("seed", self.seed),
            ("samples", self.samples),
            ("output_dir", self.output_dir),
            ("delta", self.delta),
            ("centers", self.centers),
            ("n_max", self.n_max),
            ("threshold", self.threshold),
            ("rate_floor", self.rate_floor),
            ("fit_window", self.fit_window),
            ("center_mode", self.center_mode),
            ("epsilons", self.epsilons),
            ("n_range", self.n_range),
            ("grid", self.grid),
            ("horizon", self.horizon),
            ("tol", self.tol),
            ("anchors", self.anchors),
            ("anchor_mode", self.anchor_mode),
            ("key_tol", self.key_tol),
            ("burn_in", self.burn_in),
            ("pairs", self.pairs),
            ("candidates", self.candidates),
            ("liminf_tol", self.liminf_tol),
            ("interval", self.interval),
            ("epsilon", self.epsilon),
            ("radius", self.radius),
            ("points", self.points),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, &v).map_err(|m| format!("--{key}: {m}"))?;
            }
        }
        for e in self.expect {
            let (metric, value) = e
                .split_once('=')
                .ok_or_else(|| format!("--expect `{e}` must be metric=value"))?;
            config.set(&format!("expect.{metric}"), value)?;
        }
        Ok(config)
    }
}

fn execute(config: ExperimentConfig) -> ExitCode {
    match run_experiment(&config) {
        Ok(bundle) => {
            for (k, v) in &bundle.metrics {
                println!("{k} = {v}");
            }
            eprintln!("finished in {:.2?}", bundle.wall_clock);
            let diff = bundle.diff();
            if diff.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("expectation mismatch:");
                for line in diff {
                    eprintln!("  {line}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("ERGOLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // the global pool can only be built once; a second call is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let (experiment, knobs) = match cli.command {
        Command::Run { config } => {
            let text = match fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            return match ExperimentConfig::parse(&text) {
                Ok(c) => execute(c),
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    ExitCode::from(2)
                }
            };
        }
        Command::Systems {
            action: SystemsAction::List,
        } => {
            for name in [
                "tent",
                "doubling",
                "logistic",
                "rotation",
                "denjoy",
                "north-south",
                "identity",
            ] {
                match System::parse(name) {
                    Ok(s) => println!("{s}"),
                    Err(e) => println!("{name}: {e}"),
                }
            }
            println!("family=piecewise-linear breakpoints=x:y,...");
            return ExitCode::SUCCESS;
        }
        Command::Orbit { system, x0, n } => {
            let result = System::parse(&system).and_then(|s| orbit(&s, x0, n));
            return match result {
                Ok(o) => {
                    for p in &o.points {
                        println!("{p}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Expansivity(k) => (Experiment::Expansivity, k),
        Command::Entropy(k) => (Experiment::Entropy, k),
        Command::Scrambled(k) => (Experiment::Scrambled, k),
        Command::Stable(k) => (Experiment::StableClass, k),
        Command::Wandering(k) => (Experiment::Wandering, k),
        Command::Recurrence(k) => (Experiment::Recurrence, k),
        Command::Lyapunov(k) => (Experiment::Lyapunov, k),
    };
    match knobs.into_config(experiment) {
        Ok(c) => execute(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
