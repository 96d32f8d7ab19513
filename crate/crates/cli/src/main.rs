mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use complab::parallel::with_jobs;
use complab::{BlochState, Execution};

use crate::commands::Output;
use crate::config::{parse_triple, ModelSpec, Options, ScenarioConfig};
use crate::error::{exit, CliError};

const EXIT_CODES: &str = "\
Exit codes:
  0  classical-consistent (satisfied or boundary), or command succeeded
  1  input error, including an unmeasured observable (inversion impossible)
  2  inadmissible measurement model (some POVM element is not positive)
  3  violation of the classical inequalities
  4  internal consistency failure";

#[derive(Parser)]
#[command(name = "complab", version, about = "Complementarity inequalities for noisy joint qubit measurements", after_help = EXIT_CODES)]
struct Cli {
    /// Worker threads for sweeps, scans and sampling.
    #[arg(long, global = true, env = "COMPLAB_JOBS")]
    jobs: Option<usize>,

    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the classical inequalities for one scenario (exit 3 on violation).
    Check(ScenarioArgs),
    /// Invert the observed statistics and compare with the moment reconstruction.
    Invert(ScenarioArgs),
    /// Sweep the interferometer angles over [0, π/2]² and emit CSV.
    YoungSweep {
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0,0,0")]
        state: [f64; 3],
        #[arg(long, default_value_t = 19)]
        theta_steps: usize,
        #[arg(long, default_value_t = 19)]
        phi_steps: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the factorized-kernel regions of the (γ_X, γ_Z) plane.
    Regions {
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        /// Directory receiving regions_grid.csv and regions_boundary.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Construct an admissible measurement that the given state violates.
    Search {
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        state: [f64; 3],
    },
    /// Sample a finite run and estimate the margins with error bars
    /// (exit 3 on a confident violation).
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of draws.
        #[arg(long = "n", default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// JSON scenario file; replaces all scenario flags.
    #[arg(long, conflicts_with_all = ["state", "gammas", "theta", "phi"])]
    config: Option<PathBuf>,

    /// Bloch vector "s_x,s_y,s_z".
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    state: Option<[f64; 3]>,

    /// Noise factors "gamma_x,gamma_z,gamma_xz".
    #[arg(long, value_parser = parse_triple, conflicts_with_all = ["theta", "phi"])]
    gammas: Option<[f64; 3]>,

    /// Correlation direction n for --gammas.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0,1,0")]
    direction: [f64; 3],

    /// Interferometer path-marking angle.
    #[arg(long, requires = "phi", allow_hyphen_values = true)]
    theta: Option<f64>,

    /// Interferometer polarizer angle.
    #[arg(long, requires = "theta", allow_hyphen_values = true)]
    phi: Option<f64>,

    /// Angles are in degrees rather than radians.
    #[arg(long)]
    degrees: bool,

    #[arg(long, default_value_t = complab::classical::VERDICT_TOLERANCE)]
    verdict_tolerance: f64,

    /// z-score needed for a confident simulated verdict.
    #[arg(long, default_value_t = complab::sampling::DEFAULT_CONFIDENCE_SIGMA)]
    confidence_sigma: f64,

    /// Print the resolved scenario as JSON and exit.
    #[arg(long)]
    emit_config: bool,
}

impl ScenarioArgs {
    fn config(&self) -> Result<ScenarioConfig, CliError> {
        if let Some(path) = &self.config {
            return ScenarioConfig::from_file(path);
        }
        let state = self
            .state
            .ok_or_else(|| CliError::Input("--state or --config is required".into()))?;
        let model = match (self.gammas, self.theta, self.phi) {
            (Some([gamma_x, gamma_z, gamma_xz]), None, None) => ModelSpec::Explicit {
                gamma_x,
                gamma_z,
                gamma_xz,
                n: self.direction,
            },
            (None, Some(theta), Some(phi)) => ModelSpec::Young { theta, phi },
            _ => return Err(CliError::Input("give either --gammas or --theta with --phi".into())),
        };
        Ok(ScenarioConfig {
            state,
            model,
            options: Options {
                verdict_tolerance: self.verdict_tolerance,
                confidence_sigma: self.confidence_sigma,
                degrees: self.degrees,
            },
        })
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn run_scenario(
    args: &ScenarioArgs,
    f: impl FnOnce(&config::Scenario) -> Result<Output, CliError>,
) -> Result<i32, CliError> {
    let cfg = args.config()?;
    if args.emit_config {
        println!("{}", cfg.to_json());
        return Ok(exit::OK);
    }
    let out = f(&cfg.resolve()?)?;
    print_json(&out.json);
    Ok(out.code)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Check(args) => run_scenario(&args, commands::check),
        Command::Invert(args) => run_scenario(&args, commands::invert),
        Command::Simulate { scenario, samples, seed } => {
            run_scenario(&scenario, |sc| commands::simulate(sc, samples, seed, exec))
        }
        Command::Search { state } => {
            let [x, y, z] = state;
            let out = commands::search(&BlochState::new(x, y, z)?)?;
            print_json(&out.json);
            Ok(out.code)
        }
        Command::YoungSweep {
            state,
            theta_steps,
            phi_steps,
            out,
        } => {
            let [x, y, z] = state;
            let s = BlochState::new(x, y, z)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)?;
                    commands::young_sweep_csv(&s, theta_steps, phi_steps, exec, file)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    commands::young_sweep_csv(&s, theta_steps, phi_steps, exec, &mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(exit::OK)
        }
        Command::Regions { resolution, out } => {
            let o = commands::regions(resolution, exec, &out)?;
            print_json(&o.json);
            Ok(o.code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    let code = with_jobs(jobs, || match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if let CliError::Inadmissible(report) = &e {
                print_json(&serde_json::json!({ "error": "inadmissible", "povm": report }));
            }
            eprintln!("error: {e}");
            e.code()
        }
    });
    ExitCode::from(code as u8)
}
