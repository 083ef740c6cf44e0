//! `pretime` — settling-time bounds, exact settling times, gain-ratio
//! sweeps, reproduction runs, and the closed-form-vs-quadrature oracle
//! suite, all on the fixed-time stable system class
//! `dx/dt = -(alpha|x|^p + beta|x|^q)^k sign(x)`, `k p < 1 < k q`.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};


#[derive(Parser)]
#[command(name = "pretime", version, about, disable_help_subcommand = true)]
struct Cli {
    /// Quadrature tolerance used by every subcommand that integrates.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory (defaults to $PRETIME_OUT, then ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct PlantArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, allow_negative_numbers = true)]
    p: f64,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, allow_negative_numbers = true)]
    k: f64,
    /// Prescribed settling-time bound; applies the gamma/T_c gain.
    #[arg(long = "t-c", allow_negative_numbers = true)]
    t_c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds: least upper bound gamma, classical estimate,
    /// conservatism ratio.
    Bounds(PlantArgs),
    /// Exact settling time T(x0) by quadrature.
    Settle {
        #[command(flatten)]
        plant: PlantArgs,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
    },
    /// Classical-bound sweep against the gain ratio rho (alpha = rho,
    /// beta = 1/rho).
    SweepRho {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 3.0)]
        q: f64,
        #[arg(long, default_value_t = 1.5)]
        k: f64,
        #[arg(long = "t-c", default_value_t = 1.0)]
        t_c: f64,
        #[arg(long, default_value_t = 1e-2)]
        rho_min: f64,
        #[arg(long, default_value_t = 1e2)]
        rho_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Run the experiment described by a config file.
    Simulate { config: PathBuf },
    /// Run a built-in reproduction preset.
    Reproduce {
        #[arg(value_parser = ["fig1", "fig2", "fig3", "fig4"])]
        preset: String,
    },
    /// Cross-check every closed form against the quadrature oracle and
    /// print the documented formula discrepancies.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os("PRETIME_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let result = match cli.command {
        Command::Bounds(plant) => commands::cmd_bounds(&plant, cli.tol),
        Command::Settle { plant, x0 } => commands::cmd_settle(&plant, x0, cli.tol),
        Command::SweepRho { p, q, k, t_c, rho_min, rho_max, points } => {
            commands::cmd_sweep_rho(p, q, k, t_c, rho_min, rho_max, points, &out_dir)
        }
        Command::Simulate { config } => commands::cmd_simulate(&config, &out_dir, cli.tol),
        Command::Reproduce { preset } => commands::cmd_reproduce(&preset, &out_dir, cli.tol),
        Command::Verify => verify::cmd_verify(cli.tol),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
