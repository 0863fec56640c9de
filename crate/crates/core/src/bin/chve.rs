use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chve_core::driver::config::ConfigSpec;
use chve_core::driver::io::{energy_report, read_diagnostics};
use chve_core::driver::{run_simulation, Termination};
use chve_core::verification::{run_suite, stokes_mms, Suite};
use chve_core::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "chve", version, about = "Phase-field viscoelastic flow solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a config file.
    Run {
        config: PathBuf,
        /// Overrides `[output] dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `[initial] seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Stops after this many accepted steps.
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Run a verification suite and print a pass/fail table.
    Verify {
        #[arg(default_value = "all", value_parser = Suite::NAMES)]
        suite: String,
    },
    /// Stokes manufactured-solution convergence table.
    StokesMms {
        /// Grid sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128])]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
    },
    /// Summarize a diagnostics CSV written by `run`.
    EnergyReport { csv: PathBuf },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUNTIME })
}

fn run(config: PathBuf, output_dir: Option<PathBuf>, seed: Option<u64>, max_steps: Option<u64>) -> ExitCode {
    let mut spec = match ConfigSpec::from_file(&config) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = output_dir {
        spec.output.dir = dir;
    }
    if let Some(seed) = seed {
        spec.initial.seed = seed;
    }
    if max_steps.is_some() {
        spec.time.max_steps = max_steps;
    }
    let summary = match run_simulation(&spec) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    println!("steps          {}", summary.steps);
    println!("rejected       {}", summary.rejected);
    println!("final t        {:.6e}", summary.final_t);
    println!("final energy   {:.10e}", summary.final_energy);
    println!("final mass     {:.10e}", summary.final_mass);
    println!("wall time      {:.2} s", summary.wall_time);
    match summary.termination {
        Termination::Completed => println!("termination    completed"),
        Termination::MaxSteps => println!("termination    max steps reached"),
        Termination::Failed(msg) => {
            println!("termination    failed: {msg}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    ExitCode::SUCCESS
}

fn verify(suite: &str) -> ExitCode {
    let suite: Suite = suite.parse().expect("clap restricts the suite names");
    let outcomes = run_suite(suite);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} checks, {} failed", outcomes.len(), failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_RUNTIME)
    }
}

fn mms(levels: &[usize], nu: f64) -> ExitCode {
    let report = match stokes_mms(levels, nu) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("{:>6} {:>14} {:>8} {:>14} {:>8} {:>10}", "n", "|v - v*|", "order", "|q - q*|", "order", "max div");
    for (k, row) in report.rows.iter().enumerate() {
        let order = |o: &[f64]| if k == 0 { "-".to_string() } else { format!("{:.3}", o[k - 1]) };
        println!(
            "{:>6} {:>14.6e} {:>8} {:>14.6e} {:>8} {:>10.2e}",
            row.n,
            row.velocity_l2,
            order(&report.velocity_orders),
            row.pressure_l2,
            order(&report.pressure_orders),
            row.div_max
        );
    }
    ExitCode::SUCCESS
}

fn report(csv: PathBuf) -> ExitCode {
    let rows = match read_diagnostics(&csv) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let Some(r) = energy_report(&rows) else {
        eprintln!("error: {} has no data rows", csv.display());
        return ExitCode::from(EXIT_VALIDATION);
    };
    println!("rows                 {}", r.rows);
    println!("initial energy       {:.10e}", r.e_initial);
    println!("final energy         {:.10e}", r.e_final);
    println!("energy increases     {} (largest {:.3e})", r.increases, r.max_increase);
    println!("mass drift           {:.3e}", r.mass_drift);
    println!("max div residual     {:.3e}", r.max_div);
    println!("mean |budget|        {:.3e}", r.mean_abs_budget);
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output_dir, seed, max_steps } => run(config, output_dir, seed, max_steps),
        Command::Verify { suite } => verify(&suite),
        Command::StokesMms { levels, nu } => mms(&levels, nu),
        Command::EnergyReport { csv } => report(csv),
    }
}
