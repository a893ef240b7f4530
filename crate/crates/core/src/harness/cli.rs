//! `hawkes-risk` command line.
//!
//! Every subcommand reads one JSON config, computes everything in memory
//! and only then writes its files into the output directory, so a failed
//! run leaves no partial outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{bound_set, BoundInputs, BoundSet};
use crate::error::{Error, Result};
use crate::simulate::{write_trajectories, StepPath};

use super::config::{Built, ExperimentConfig};
use super::{run_convergence, run_single, verify_bounds, workers_from_env, CoupleRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hawkes-risk",
    version,
    about = "Coupled continuous/discrete Hawkes risk simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long, short)]
    config: PathBuf,
    /// Override the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `output_dir` of the config, else `.`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one continuous path: atoms.csv, trajectories.csv, simulate.json.
    Simulate(Common),
    /// Continuous path and discrete traces on shared atoms: atoms.csv,
    /// trajectories.csv, couple.csv, couple.json.
    Couple(Common),
    /// Monte Carlo error along the ladder: convergence.csv,
    /// convergence_fit.csv, convergence.json.
    Convergence(Common),
    /// Bound constants per step: bounds.json (also printed).
    Bounds(Common),
    /// Bound-verification suite: verify.csv, verify.json.
    Verify(Common),
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parameter(_)
        | Error::Json(_)
        | Error::DivergingKernel(_)
        | Error::InfiniteVariation(_)
        | Error::UnsupportedMoment(_) => EXIT_CONFIG,
        Error::Unstable { .. } => EXIT_UNSTABLE,
        Error::RunawayIntensity(_) | Error::LogDomain(_) | Error::Io(_) | Error::Csv(_) => {
            EXIT_RUNTIME
        }
    }
}

/// Run the CLI on `argv` (including the program name) and return the
/// process exit code. Messages go to standard error.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hawkes-risk: {e}");
            exit_code(&e)
        }
    }
}

/// A file to write once every computation succeeded.
struct Output {
    name: &'static str,
    bytes: Vec<u8>,
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, dir))
}

fn write_all(dir: &Path, outputs: &[Output]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for o in outputs {
        fs::write(dir.join(o.name), &o.bytes)?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    let (common, kind) = match &command {
        Command::Simulate(c) => (c, "simulate"),
        Command::Couple(c) => (c, "couple"),
        Command::Convergence(c) => (c, "convergence"),
        Command::Bounds(c) => (c, "bounds"),
        Command::Verify(c) => (c, "verify"),
    };
    let (cfg, dir) = load(common)?;
    let built = cfg.build()?;
    let workers = workers_from_env()?;
    let outputs = match kind {
        "simulate" => single(&cfg, &built, &[], "simulate")?,
        "couple" => single(&cfg, &built, &cfg.deltas, "couple")?,
        "convergence" => {
            let rep = run_convergence(&cfg, workers)?;
            let mut csv = Vec::new();
            rep.write_csv(&mut csv)?;
            let mut fit = Vec::new();
            rep.write_fit_csv(&mut fit)?;
            vec![
                Output {
                    name: "convergence.csv",
                    bytes: csv,
                },
                Output {
                    name: "convergence_fit.csv",
                    bytes: fit,
                },
                Output {
                    name: "convergence.json",
                    bytes: json_bytes(&rep)?,
                },
            ]
        }
        "bounds" => {
            let sets = bounds(&cfg, &built)?;
            let bytes = json_bytes(&sets)?;
            print!("{}", String::from_utf8_lossy(&bytes));
            vec![Output {
                name: "bounds.json",
                bytes,
            }]
        }
        "verify" => {
            let rep = verify_bounds(&cfg, workers)?;
            let mut csv = Vec::new();
            rep.write_csv(&mut csv)?;
            vec![
                Output {
                    name: "verify.csv",
                    bytes: csv,
                },
                Output {
                    name: "verify.json",
                    bytes: json_bytes(&rep)?,
                },
            ]
        }
        _ => unreachable!(),
    };
    write_all(&dir, &outputs)
}

fn bounds(cfg: &ExperimentConfig, built: &Built) -> Result<Vec<BoundSet>> {
    cfg.deltas
        .iter()
        .map(|&step| {
            bound_set(&BoundInputs {
                kernel: &built.kernel,
                psi: &built.psi,
                marks: &built.marks,
                step,
                horizon: built.horizon,
                eta: cfg.eta,
                p: cfg.p,
                allow_unstable: cfg.allow_unstable,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Summary<'a> {
    trial: u64,
    seed: u64,
    horizon: f64,
    eta: f64,
    events: usize,
    terminal_risk: f64,
    atoms: usize,
    ceiling: f64,
    rescans: usize,
    rows: &'a [CoupleRow],
}

/// `simulate` (empty ladder) and `couple`.
fn single(
    cfg: &ExperimentConfig,
    built: &Built,
    deltas: &[f64],
    name: &'static str,
) -> Result<Vec<Output>> {
    let run = run_single(cfg, built, deltas, cfg.trial)?;
    let mut atoms = Vec::new();
    run.atoms.write_csv(&mut atoms)?;
    let named = run.trajectories()?;
    let refs: Vec<(&str, &StepPath)> = named.iter().map(|(k, p)| (k.as_str(), p)).collect();
    let mut traj = Vec::new();
    write_trajectories(&refs, &mut traj)?;
    let summary = Summary {
        trial: cfg.trial,
        seed: cfg.seed,
        horizon: cfg.horizon,
        eta: cfg.eta,
        events: run.continuous.count(),
        terminal_risk: run.continuous.terminal_risk(),
        atoms: run.atoms.len(),
        ceiling: run.atoms.ceiling(),
        rescans: run.continuous.rescans,
        rows: &run.rows,
    };
    let mut out = vec![
        Output {
            name: "atoms.csv",
            bytes: atoms,
        },
        Output {
            name: "trajectories.csv",
            bytes: traj,
        },
    ];
    if name == "couple" {
        let mut table = Vec::new();
        run.write_couple_csv(&mut table)?;
        out.push(Output {
            name: "couple.csv",
            bytes: table,
        });
        out.push(Output {
            name: "couple.json",
            bytes: json_bytes(&summary)?,
        });
    } else {
        out.push(Output {
            name: "simulate.json",
            bytes: json_bytes(&summary)?,
        });
    }
    Ok(out)
}
