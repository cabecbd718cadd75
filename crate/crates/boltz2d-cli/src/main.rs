use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use boltz2d::particles::CouplingParameter;
use boltz2d_cli::config::RunConfig;
use boltz2d_cli::{experiments, CliError, CliResult};

/// Monte Carlo kinetics for the 2D homogeneous Boltzmann equation with
/// non-cutoff hard potentials: simulation, coupled-level convergence,
/// tangent-flow diagnostics, Fourier spectra, and exponent analysis.
#[derive(Parser, Debug)]
#[command(name = "boltz2d", version, about)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Velocity exponent gamma in (0,1).
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Angular singularity exponent nu in (0,1/2).
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Inverse-power-law index (s > 5); derives gamma and nu.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Exponential-moment exponent delta in (gamma v nu, 1).
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Mollifier log-exponent eta0 in (1/delta, 1/(gamma v nu)).
    #[arg(long, global = true)]
    eta0: Option<f64>,
    /// Mollifier truncation scale.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Angular cutoff zeta in (0,1).
    #[arg(long, global = true)]
    zeta: Option<f64>,
    /// Particle count N.
    #[arg(long = "n-particles", global = true)]
    n_particles: Option<usize>,
    /// Replica count R.
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Time horizon T.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// one-sided | symmetric.
    #[arg(long = "collision-style", global = true)]
    collision_style: Option<String>,
    /// Initial law: gaussian | two-point | uniform-disk.
    #[arg(long = "initial-law", global = true)]
    initial_law: Option<String>,
    /// Initial energy for the Gaussian law.
    #[arg(long, global = true)]
    e0: Option<f64>,
    /// Output directory.
    #[arg(long = "out", global = true)]
    output_dir: Option<String>,
    /// Snapshot times, comma separated.
    #[arg(long = "output-times", global = true, value_delimiter = ',')]
    output_times: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exponent calculus: a, q, thresholds, bootstrap schedule.
    Analyze {
        /// Build a bootstrap schedule reaching this decay order (< q).
        #[arg(long = "target-q")]
        target_q: Option<f64>,
    },
    /// Event-driven particle run: snapshots plus conservation report.
    Simulate {
        /// Also write the per-event log of replica 0.
        #[arg(long = "event-log")]
        event_log: bool,
    },
    /// Coupled-level convergence study in zeta or epsilon.
    Couple {
        /// zeta | epsilon.
        #[arg(long, default_value = "zeta")]
        parameter: String,
        /// Strictly decreasing levels, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Gap moment order in (nu, 1].
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Tangent-flow and covariance diagnostics over replicas, or over the
    /// chains of a recorded run when fed its artifacts.
    Malliavin {
        /// Event-log CSV of a recorded run (requires --snapshots).
        #[arg(long, requires = "snapshots")]
        events: Option<PathBuf>,
        /// Snapshot CSV with t = 0 rows of the same run.
        #[arg(long, requires = "events")]
        snapshots: Option<PathBuf>,
    },
    /// Empirical characteristic-function decay profile.
    Spectrum {
        /// Number of radii on the log grid.
        #[arg(long = "n-radii", default_value_t = 24)]
        n_radii: usize,
        /// Largest |xi|; default sized against the Monte Carlo noise floor.
        #[arg(long = "xi-max")]
        xi_max: Option<f64>,
    },
    /// Sign-structure table for the collision drift integral.
    DriftCheck {
        /// Moment exponent kappa in (nu, 1).
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
    },
}

fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.gamma {
        cfg.kernel.gamma = v;
        cfg.kernel.s = None;
    }
    if let Some(v) = o.nu {
        cfg.kernel.nu = v;
        cfg.kernel.s = None;
    }
    if let Some(v) = o.s {
        cfg.kernel.s = Some(v);
    }
    if let Some(v) = o.delta {
        cfg.kernel.delta = Some(v);
    }
    if let Some(v) = o.eta0 {
        cfg.kernel.eta0 = Some(v);
    }
    if let Some(v) = o.epsilon {
        cfg.mollifier.epsilon = v;
    }
    if let Some(v) = o.zeta {
        cfg.simulation.zeta = v;
    }
    if let Some(v) = o.n_particles {
        cfg.simulation.n_particles = v;
    }
    if let Some(v) = o.replicas {
        cfg.run.replicas = v;
    }
    if let Some(v) = o.horizon {
        cfg.simulation.horizon = v;
    }
    if let Some(v) = o.seed {
        cfg.simulation.seed = v;
    }
    if let Some(v) = &o.collision_style {
        cfg.simulation.collision_style = v.clone();
    }
    if let Some(v) = &o.initial_law {
        cfg.simulation.initial_law.kind = v.clone();
    }
    if let Some(v) = o.e0 {
        cfg.simulation.initial_law.e0 = v;
    }
    if let Some(v) = &o.output_dir {
        cfg.run.output_dir = v.clone();
    }
    if let Some(v) = &o.output_times {
        cfg.run.output_times = v.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(());
    }
    let cfg = resolve_config(cli)?;
    let Some(command) = &cli.command else {
        return Err(CliError::Config(
            "no subcommand given (try analyze, simulate, couple, malliavin, spectrum, drift-check)"
                .into(),
        ));
    };
    match command {
        Command::Analyze { target_q } => {
            let path = experiments::write_analyze(&cfg, *target_q)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Simulate { event_log } => {
            let arts = experiments::run_simulate(&cfg, *event_log)?;
            eprintln!("wrote {}", arts.snapshots_csv.display());
            eprintln!("wrote {}", arts.conservation_json.display());
            if let Some(p) = arts.events_csv {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Couple { parameter, levels, beta } => {
            let parameter = match parameter.as_str() {
                "zeta" => CouplingParameter::Zeta,
                "epsilon" => CouplingParameter::Epsilon,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown coupling parameter '{other}' (zeta | epsilon)"
                    )))
                }
            };
            let default_levels = match parameter {
                CouplingParameter::Zeta => vec![0.2, 0.1, 0.05, 0.025],
                CouplingParameter::Epsilon => vec![0.08, 0.04, 0.02, 0.01],
            };
            let levels = levels.clone().unwrap_or(default_levels);
            let arts = experiments::run_couple(&cfg, parameter, &levels, *beta)?;
            eprintln!("wrote {}", arts.rates_csv.display());
            eprintln!("wrote {}", arts.fit_json.display());
            eprintln!("fitted slope {:.4}", arts.report.slope);
        }
        Command::Malliavin { events, snapshots } => {
            let arts = match (events, snapshots) {
                (Some(ev), Some(snap)) => {
                    experiments::run_malliavin_from_artifacts(&cfg, snap, ev)?
                }
                _ => experiments::run_malliavin(&cfg)?,
            };
            eprintln!("wrote {}", arts.diagnostics_json.display());
        }
        Command::Spectrum { n_radii, xi_max } => {
            let arts = experiments::run_spectrum(&cfg, *n_radii, *xi_max)?;
            eprintln!("wrote {}", arts.spectrum_csv.display());
        }
        Command::DriftCheck { kappa } => {
            let arts = experiments::run_drift_check(&cfg, *kappa)?;
            eprintln!("wrote {}", arts.table_csv.display());
            eprintln!(
                "fitted C_kappa {:.4}, sign violations {}",
                arts.fitted_c_kappa, arts.sign_violations
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
