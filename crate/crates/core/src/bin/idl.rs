use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idl_core::harness::{self, emit, sweep, Preset, SweepGrid, TrialConfig};
use idl_core::Error;

const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "idl", version, about = "Line-follower learning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and write its artifacts.
    Run {
        /// Trial config JSON; the flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        reflex_only: bool,
    },
    /// Run every (eta, seed) cell of a grid plus its reflex-only baseline.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run the cells one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Check internal gradients and updates against finite differences.
    Gradcheck {
        #[arg(long, default_value = "sim16")]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::LostLine { .. } => ExitCode::from(2),
        Error::Numeric { .. } | Error::Signal { .. } => ExitCode::from(3),
        Error::Io { .. } => ExitCode::FAILURE,
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn run_trial(
    config: Option<PathBuf>,
    preset: Option<Preset>,
    eta: Option<f64>,
    seed: Option<u64>,
    steps: Option<usize>,
    out: PathBuf,
    reflex_only: bool,
) -> Result<ExitCode, Error> {
    let mut cfg = match config {
        Some(path) => TrialConfig::load(path)?,
        None => TrialConfig::default(),
    };
    if let Some(p) = preset {
        cfg.preset = p;
    }
    if let Some(e) = eta {
        cfg.eta = e;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = steps {
        cfg.n_steps = n;
    }
    if reflex_only {
        cfg.reflex_only = true;
    }
    cfg.validate()?;
    let log = harness::run_with_reflex_baseline(&cfg)?;
    emit(&log, &out)?;
    let success = log
        .success_step
        .map_or_else(|| "none".to_string(), |s| s.to_string());
    println!(
        "rms {:.6} mean_abs {:.6} success_step {} status {:?} -> {}",
        log.rms_error,
        log.mean_abs_error,
        success,
        log.status,
        out.display()
    );
    Ok(ExitCode::from(log.status.exit_code() as u8))
}

fn run_sweep(grid: PathBuf, out: PathBuf, sequential: bool) -> Result<ExitCode, Error> {
    let grid = SweepGrid::load(grid)?;
    let exec = if sequential {
        sweep::Execution::Sequential
    } else {
        sweep::Execution::Parallel
    };
    let summary = sweep::run_grid(&grid, exec)?;
    emit::emit_sweep(&summary, &out)?;
    println!("reflex: median rms {:.6}", summary.reflex.rms.median);
    for g in &summary.groups {
        let success = g
            .success_step_median
            .map_or_else(|| "none".to_string(), |s| format!("{s}"));
        println!(
            "eta {:e}: median rms {:.6} (q1 {:.6}, q3 {:.6}), median success step {}, aborted {}",
            g.eta, g.rms.median, g.rms.q1, g.rms.q3, success, g.n_aborted
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn run_gradcheck(preset: Preset, seed: u64) -> Result<ExitCode, Error> {
    let report = harness::gradcheck(preset, seed)?;
    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!(
        "internal gradients: max relative error {:.3e} [{}]",
        report.gradient_error,
        verdict(report.gradient_ok())
    );
    println!(
        "update direction:   max relative error {:.3e} [{}]",
        report.update_error,
        verdict(report.update_ok())
    );
    println!(
        "error propagation:  max relative error {:.3e} [{}]",
        report.propagation_error,
        verdict(report.propagation_ok())
    );
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            preset,
            eta,
            seed,
            steps,
            out,
            reflex_only,
        } => run_trial(config, preset, eta, seed, steps, out, reflex_only),
        Command::Sweep {
            grid,
            out,
            sequential,
        } => run_sweep(grid, out, sequential),
        Command::Gradcheck { preset, seed } => run_gradcheck(preset, seed),
    };
    result.unwrap_or_else(|e| exit_for(&e))
}
