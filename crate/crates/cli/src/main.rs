use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fracpop::harness::converge::converge_output;
use fracpop::harness::moments::{mass_escape_output, moment_output};
use fracpop::harness::qv::qv_output;
use fracpop::harness::report::{load_json, ExperimentOutput};
use fracpop::harness::runs::{
    masscontrol_output, mild_output, pde_output, sde_output, simulate_output, verify_kernel_output,
};
use fracpop::harness::{MassControlConfig, MildCheckConfig, PdeConfig, SimulateConfig, VerifyKernelConfig};
use fracpop::pde::{PdeRun, StoredPdeRun};

#[derive(Parser)]
#[command(name = "fracpop", version, about = "Heavy-tailed mutation population models and their scaling limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV, the JSON report and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// File name stem; defaults to the command name.
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicas of the particle system.
    Simulate {
        #[command(flatten)]
        io: Io,
        /// Final time.
        #[arg(long)]
        horizon: Option<f64>,
        /// Comma-separated output times.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rescaled mutation operator against the fractional limit over a K list.
    VerifyKernel {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<u64>>,
        /// Dictionary entry to test.
        #[arg(long)]
        function: Option<String>,
    },
    /// Bounds on the fractional Laplacian of the mass-control cutoffs.
    MasscontrolBounds {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u32>,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        stem: Option<String>,
    },
    /// Solve the nonlocal PDE; also stores the run for `mild-check`.
    Pde {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Simulate the trait SDE driven by a truncated stable process.
    Sde {
        #[command(flatten)]
        io: Io,
    },
    /// Compare a stored PDE run with the mild form built on the SDE.
    MildCheck {
        #[command(flatten)]
        io: Io,
    },
    /// Convergence to the deterministic limit over a K list.
    Converge {
        #[command(flatten)]
        io: Io,
    },
    /// Martingale and bracket checks in the superprocess regime.
    QvCheck {
        #[command(flatten)]
        io: Io,
    },
    /// Uniform moment bounds on the total mass.
    Moments {
        #[command(flatten)]
        io: Io,
    },
    /// Mass escaping to large traits.
    MassEscape {
        #[command(flatten)]
        io: Io,
    },
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    load_json(path).with_context(|| format!("reading config {}", path.display()))
}

fn emit(out: ExperimentOutput, dir: &Path, stem: Option<String>, default: &str) -> Result<bool> {
    let stem = stem.unwrap_or_else(|| default.to_string());
    let paths = out.write(dir, &stem)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    let verdict = out
        .report
        .get("verdict")
        .and_then(|v| v.get("detail"))
        .and_then(|d| d.as_str());
    match verdict {
        Some(d) => println!("{}: {d}", if out.passed { "PASS" } else { "FAIL" }),
        None => println!("{}", if out.passed { "PASS" } else { "FAIL" }),
    }
    Ok(out.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            io,
            horizon,
            times,
            replicas,
            seed,
        } => {
            let mut c: SimulateConfig = load(&io.config)?;
            if let Some(h) = horizon {
                c.horizon = h;
            }
            if let Some(t) = times {
                c.output_times = t;
            }
            if let Some(r) = replicas {
                c.replicas = r;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            emit(simulate_output(&c)?, &io.out, io.stem, "simulate")
        }
        Command::VerifyKernel { io, k_list, function } => {
            let mut c: VerifyKernelConfig = load(&io.config)?;
            if let Some(k) = k_list {
                c.k_list = k;
            }
            if let Some(f) = function {
                c.function = f;
            }
            emit(verify_kernel_output(&c)?, &io.out, io.stem, "verify-kernel")
        }
        Command::MasscontrolBounds {
            n_list,
            alpha,
            points,
            out,
            stem,
        } => {
            let c = MassControlConfig {
                n_list,
                alpha,
                n_points: points,
                quad: Default::default(),
            };
            emit(masscontrol_output(&c)?, &out, stem, "masscontrol-bounds")
        }
        Command::Pde { io, horizon, dt } => {
            let mut c: PdeConfig = load(&io.config)?;
            if let Some(h) = horizon {
                c.horizon = h;
            }
            if let Some(d) = dt {
                c.dt = d;
            }
            emit(pde_output(&c)?, &io.out, io.stem, "pde")
        }
        Command::Sde { io } => emit(sde_output(&load(&io.config)?)?, &io.out, io.stem, "sde"),
        Command::MildCheck { io } => {
            let c: MildCheckConfig = load(&io.config)?;
            let base = io.config.parent().unwrap_or(Path::new("."));
            let stored: StoredPdeRun = load(&base.join(&c.run))?;
            let run = PdeRun::from_stored(stored)?;
            emit(mild_output(&c, &run)?, &io.out, io.stem, "mild-check")
        }
        Command::Converge { io } => emit(converge_output(&load(&io.config)?)?, &io.out, io.stem, "converge"),
        Command::QvCheck { io } => emit(qv_output(&load(&io.config)?)?, &io.out, io.stem, "qv-check"),
        Command::Moments { io } => emit(moment_output(&load(&io.config)?)?, &io.out, io.stem, "moments"),
        Command::MassEscape { io } => {
            emit(mass_escape_output(&load(&io.config)?)?, &io.out, io.stem, "mass-escape")
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
