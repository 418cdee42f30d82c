use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use saddlekit::ode::{ContinuousState, OdeKind, OdeSystem};
use saddlekit::solvers::{self, SolverState, StepSchedule};
use saddlekit::{Algorithm, Vector};

use saddlekit_cli::config::{self, ExperimentSpec, Outputs, ProblemConfig};
use saddlekit_cli::error::CliError;
use saddlekit_cli::{csvio, runner};

#[derive(Parser)]
#[command(
    name = "saddlekit",
    version,
    about = "Primal-dual saddle-point experiments: runs, sweeps, and discretization checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment from a JSON config and write its artifacts.
    Run { config: PathBuf },
    /// Run the config once per value of one schedule parameter; each point
    /// writes into its own subdirectory.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the bilinear orbit demonstration without a config file.
    Counterexample {
        #[arg(long, default_value = "arrow-hurwicz")]
        algorithm: String,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 6)]
        steps: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Step the extrapolated iteration and its implicit-Euler model side by
    /// side and report how far they drift apart.
    OdeCompare {
        config: PathBuf,
        #[arg(long)]
        trajectory_csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    S,
    Tau,
    Sigma,
}

impl SweepParam {
    fn label(self) -> &'static str {
        match self {
            SweepParam::S => "s",
            SweepParam::Tau => "tau",
            SweepParam::Sigma => "sigma",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.cmd) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { config } => run(&config),
        Cmd::Sweep {
            config,
            param,
            values,
        } => sweep(&config, param, &values),
        Cmd::Counterexample {
            algorithm,
            s,
            steps,
            csv,
            svg,
        } => counterexample(&algorithm, s, steps, csv, svg),
        Cmd::OdeCompare {
            config,
            trajectory_csv,
        } => ode_compare(&config, trajectory_csv.as_deref()),
    }
}

fn load_spec(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = fs::read_to_string(path)?;
    let mut spec = config::parse_config(&text)?;
    config::apply_env_overrides(&mut spec)?;
    Ok(spec)
}

fn run(path: &Path) -> Result<(), CliError> {
    let spec = load_spec(path)?;
    let outcome = runner::execute(&spec)?;
    runner::write_artifacts(&spec, &outcome)?;
    println!("{}", runner::summary_line(&spec, &outcome));
    Ok(())
}

fn override_schedule(
    base: StepSchedule,
    param: SweepParam,
    value: f64,
) -> Result<StepSchedule, CliError> {
    match (param, base) {
        (SweepParam::S, _) => Ok(StepSchedule::Single { s: value }),
        (SweepParam::Tau, StepSchedule::Pair { sigma, .. }) => {
            Ok(StepSchedule::Pair { tau: value, sigma })
        }
        (SweepParam::Sigma, StepSchedule::Pair { tau, .. }) => {
            Ok(StepSchedule::Pair { tau, sigma: value })
        }
        (param, StepSchedule::Single { .. }) => Err(CliError::Config(format!(
            "sweeping {} needs a tau/sigma schedule in the config",
            param.label()
        ))),
    }
}

/// Routes one output path into the sweep point's subdirectory, so parallel
/// points never share a file.
fn point_path(base: &Path, point: &str) -> PathBuf {
    match base.file_name() {
        Some(name) => base.with_file_name(point).join(name),
        None => base.join(point),
    }
}

fn sweep(path: &Path, param: SweepParam, values: &[f64]) -> Result<(), CliError> {
    let base = load_spec(path)?;
    let mut results: Vec<Option<Result<String, CliError>>> = Vec::new();
    results.resize_with(values.len(), || None);
    std::thread::scope(|scope| {
        for (slot, &value) in results.iter_mut().zip(values) {
            let base = &base;
            scope.spawn(move || {
                *slot = Some(sweep_point(base, param, value));
            });
        }
    });
    for (result, &value) in results.into_iter().zip(values) {
        let line = result
            .expect("every sweep thread fills its slot")
            .map_err(|e| e.with_context(format!("sweep point {}={value}", param.label())))?;
        println!("{line}");
    }
    Ok(())
}

fn sweep_point(base: &ExperimentSpec, param: SweepParam, value: f64) -> Result<String, CliError> {
    let point = format!("{}={value}", param.label());
    let mut spec = base.clone();
    spec.schedule = override_schedule(base.schedule, param, value)?;
    spec.outputs = Outputs {
        csv: base.outputs.csv.as_deref().map(|p| point_path(p, &point)),
        json: base.outputs.json.as_deref().map(|p| point_path(p, &point)),
        svg: base.outputs.svg.as_deref().map(|p| point_path(p, &point)),
    };
    let outcome = runner::execute(&spec)?;
    runner::write_artifacts(&spec, &outcome)?;
    Ok(format!(
        "{point}: {}",
        runner::summary_line(&spec, &outcome)
    ))
}

fn counterexample(
    algorithm: &str,
    s: f64,
    steps: usize,
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
) -> Result<(), CliError> {
    let algorithm = Algorithm::from_str(algorithm)?;
    let spec = ExperimentSpec {
        problem: ProblemConfig::Counterexample,
        algorithm,
        schedule: StepSchedule::Single { s },
        x0: Vector::new(vec![0.0]).expect("1-d start"),
        y0: Vector::new(vec![1.0]).expect("1-d start"),
        iterations: steps,
        diagnostics: config::DiagnosticsMode::All,
        outputs: Outputs {
            csv,
            json: None,
            svg,
        },
        seed: 0,
        // The orbit exists because this iteration ignores the step bound;
        // waive it up front so every s is demonstrable.
        demonstration: algorithm == Algorithm::ArrowHurwicz,
        plot: None,
    };
    let outcome = runner::execute(&spec)?;
    runner::write_artifacts(&spec, &outcome)?;
    println!("{}", runner::summary_line(&spec, &outcome));
    Ok(())
}

fn ode_compare(path: &Path, trajectory_csv: Option<&Path>) -> Result<(), CliError> {
    let spec = load_spec(path)?;
    let problem = spec.problem.build()?;
    runner::check_dimensions(&spec, &problem)?;
    solvers::validate_schedule(&problem, &spec.schedule, false)?;
    let (dt, kind) = match spec.schedule {
        StepSchedule::Single { s } => (s, OdeKind::HighRes { s }),
        StepSchedule::Pair { tau, sigma } => {
            ((tau * sigma).sqrt(), OdeKind::GeneralHighRes { tau, sigma })
        }
    };
    let system = OdeSystem::new(&problem, kind)?;
    let mut discrete = SolverState::initial(spec.x0.clone(), spec.y0.clone());
    let mut continuous = ContinuousState {
        t: 0.0,
        x: spec.x0.clone(),
        y: spec.y0.clone(),
    };
    let mut states = vec![continuous.clone()];
    let mut max_dev = 0.0f64;
    for _ in 0..spec.iterations {
        discrete = match spec.schedule {
            StepSchedule::Single { s } => solvers::pdhg_step(&problem, &discrete, s)?,
            StepSchedule::Pair { tau, sigma } => {
                solvers::general_pdhg_step(&problem, &discrete, tau, sigma)?
            }
        };
        continuous = system.implicit_euler_step(&continuous, dt)?;
        let dev = discrete
            .x
            .iter()
            .zip(continuous.x.iter())
            .chain(discrete.y.iter().zip(continuous.y.iter()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_dev = max_dev.max(dev);
        states.push(continuous.clone());
    }
    if let Some(out) = trajectory_csv {
        runner::write_atomic(out, &csvio::trajectory_csv(&states))?;
    }
    println!(
        "{} steps at dt={dt:.6e}; max deviation: {max_dev:.3e}",
        spec.iterations
    );
    Ok(())
}
