//! `pdfi`: simulate, solve, verify and plot discrete parabolic control problems.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parabolic_dfi::cli::{
    cmd_oracle, cmd_plot, cmd_simulate, cmd_solve, cmd_verify, resolve_out_dir, Config, Overrides, VerifyInputs,
};
use parabolic_dfi::error::Result;

#[derive(Parser)]
#[command(name = "pdfi", version, about = "Optimal control of discrete parabolic differential inclusions")]
struct Cli {
    /// Output directory (default: $PDFI_OUT_DIR or the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Sets every certificate tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for sufficiency sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March the scheme for a given control and write state.csv.
    Simulate {
        problem: PathBuf,
        /// Control CSV (zero control when omitted).
        #[arg(long)]
        control: Option<PathBuf>,
    },
    /// Solve with the method configured in the problem file.
    Solve { problem: PathBuf },
    /// Check an optimality certificate.
    Verify {
        problem: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        adjoint: PathBuf,
        #[arg(long)]
        multiplier: Option<PathBuf>,
        #[arg(long)]
        control: Option<PathBuf>,
        /// Random controls compared against the candidate (0 disables).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render time slices of a field CSV as SVG heatmaps.
    Plot {
        field: PathBuf,
        #[arg(long = "t-index", required = true)]
        t_index: Vec<usize>,
        /// Zero-based component.
        #[arg(long, default_value_t = 0)]
        component: usize,
    },
    /// Exhaustive search over the control alphabet.
    Oracle { problem: PathBuf },
}

fn load(path: &PathBuf, o: &Overrides) -> Result<Config> {
    let mut c = Config::load(path)?;
    c.apply(o)?;
    Ok(c)
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let o = Overrides { tol: cli.tol, seed: cli.seed, max_iters: cli.max_iters };
    let dir = resolve_out_dir(cli.out_dir);
    match cli.command {
        Command::Simulate { problem, control } => cmd_simulate(&load(&problem, &o)?, control.as_deref(), &dir, out),
        Command::Solve { problem } => cmd_solve(&load(&problem, &o)?, &dir, out),
        Command::Verify { problem, state, adjoint, multiplier, control, samples } => {
            let mut c = load(&problem, &o)?;
            if let Some(n) = samples {
                c.sampling.samples = n;
            }
            cmd_verify(&c, &VerifyInputs { state, adjoint, multiplier, control }, &dir, out)
        }
        Command::Plot { field, t_index, component } => cmd_plot(&field, &t_index, component, &dir, out),
        Command::Oracle { problem } => cmd_oracle(&load(&problem, &o)?, &dir, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
