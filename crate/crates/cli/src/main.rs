//! `ghzlhv`: joint-distribution checks for GHZ correlations and the
//! detector-inefficiency model behind the corrected conditional correlation.
//!
//! Exit codes: 0 success or feasible, 1 infeasible, 2 input or domain error.

mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ghzlhv", version, about, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check E(A), E(B), E(C), E(ABC) against the four inequalities and the
    /// exact feasibility oracle.
    Check(CheckArgs),
    /// Build the symmetric joint distribution for P(a)=P(b)=P(c)=p, P(ABC=1)=q.
    ConstructJoint(ConstructArgs),
    /// Corrected conditional correlation, its sigma and separation from 0.5.
    Correlation(CorrelationArgs),
    /// Grid of correlations over (gamma, d) written as CSV.
    Sweep(SweepArgs),
    /// Seeded Monte Carlo run compared with the analytic model.
    Simulate(SimulateArgs),
    /// GHZ expectation and outcome distribution for a setting such as XYY.
    Quantum(QuantumArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(allow_negative_numbers = true)]
    e_a: f64,
    #[arg(allow_negative_numbers = true)]
    e_b: f64,
    #[arg(allow_negative_numbers = true)]
    e_c: f64,
    #[arg(allow_negative_numbers = true)]
    e_abc: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Approx,
    Exact,
}

#[derive(Args, Debug)]
struct CorrelationArgs {
    /// Detector efficiency.
    #[arg(long, default_value_t = 0.5)]
    d: f64,
    /// Dark-count probability per window. Defaults to dark-rate x window.
    #[arg(long, conflicts_with = "dark_rate")]
    gamma: Option<f64>,
    /// Dark counts per second.
    #[arg(long, default_value_t = 300.0)]
    dark_rate: f64,
    /// Coincidence window in seconds.
    #[arg(long, default_value_t = 2e-9)]
    window: f64,
    /// P(pair) / P(two pairs).
    #[arg(long, default_value_t = 1e10)]
    ratio: f64,
    /// Observed non-GHZ:GHZ counts, e.g. 1:12; replaces the detector model.
    #[arg(long, conflicts_with_all = ["gamma", "e"])]
    ratio_counts: Option<String>,
    /// Use this correlation directly.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "gamma")]
    e: Option<f64>,
    /// Ideal GHZ conditional correlation.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    e_ghz: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Approx)]
    mode: ModeArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 1e-8)]
    gamma_min: f64,
    #[arg(long, default_value_t = 1e-5)]
    gamma_max: f64,
    /// Log-spaced.
    #[arg(long, default_value_t = 31)]
    gamma_steps: usize,
    #[arg(long, default_value_t = 0.05)]
    d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    d_max: f64,
    /// Linearly spaced.
    #[arg(long, default_value_t = 20)]
    d_steps: usize,
    #[arg(long, default_value_t = 1e10)]
    ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    e_ghz: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Approx)]
    mode: ModeArg,
    /// Also print, per d, the gamma at which E equals this target.
    #[arg(long)]
    contour: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    /// key=value file using the flag names below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Probability of single-pair creation.
    #[arg(long)]
    pair: Option<f64>,
    /// Probability of two-pair creation.
    #[arg(long)]
    twopair: Option<f64>,
    /// P(pair)/P(two pairs), instead of --pair/--twopair.
    #[arg(long, conflicts_with_all = ["pair", "twopair"])]
    ratio: Option<f64>,
    /// Defaults to the quantum expectation for the setting.
    #[arg(long, allow_negative_numbers = true)]
    e_ghz: Option<f64>,
    #[arg(long)]
    setting: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; required.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chunk_size: Option<u64>,
    /// Worker threads; does not affect results.
    #[arg(long)]
    workers: Option<usize>,
    /// Ten comma-separated weights over TD1,TD2,TD3,D1D2,D1D3,D2D3,D1D1,D2D2,D3D3,TT.
    #[arg(long)]
    arrival_weights: Option<String>,
    /// Write one JSON record per trial to this path.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct QuantumArgs {
    setting: String,
    #[arg(long)]
    json: bool,
}

/// Successful command result mapped onto the exit-code contract.
pub enum Status {
    Ok,
    Infeasible,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => commands::check(a.e_a, a.e_b, a.e_c, a.e_abc, a.json),
        Command::ConstructJoint(a) => commands::construct_joint(a.p, a.q, a.json),
        Command::Correlation(a) => commands::correlation(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Quantum(a) => commands::quantum(&a.setting, a.json),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Infeasible) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
