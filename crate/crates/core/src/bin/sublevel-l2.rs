use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sublevel_l2::cli::{execute, threads_from_env, JobKind, Overrides, SUMMARY_FILE};

#[derive(Parser)]
#[command(name = "sublevel-l2", version, about = "Minimal L2 integrals on sublevel sets of toric weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monomial masses over sublevel regions.
    Mass(Args),
    /// Minimal L2 extensions on a t grid.
    Minimize(Args),
    /// The curve G(t) with its lower-bound, concavity and slope checks.
    Gcurve(Args),
    /// Jumping numbers, effectiveness, Bergman and lower-bound checks.
    Lct(Args),
    /// The (u, s) ODE pair and the mollified cutoff family.
    Ode(Args),
    /// Every job of a manifest.
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Job or manifest file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the manifest's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every job's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every job's sample count.
    #[arg(long)]
    samples: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Mass(a) => (Some(JobKind::Mass), a),
        Command::Minimize(a) => (Some(JobKind::Minimize), a),
        Command::Gcurve(a) => (Some(JobKind::Gcurve), a),
        Command::Lct(a) => (Some(JobKind::Lct), a),
        Command::Ode(a) => (Some(JobKind::Ode), a),
        Command::Verify(a) => (None, a),
    };
    match threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ov = Overrides {
        seed: args.seed,
        samples: args.samples,
    };
    match execute(kind, &args.config, args.out.as_deref(), ov) {
        Ok(summary) => {
            let total: usize = summary.outcomes.iter().map(|o| o.reports.len()).sum();
            let failed = summary.failed_checks();
            for (job, check) in &failed {
                println!("FAILED {job}: {check}");
            }
            println!(
                "{} jobs, {total} checks, {} failed; summary in {}",
                summary.outcomes.len(),
                failed.len(),
                summary.out_dir.join(SUMMARY_FILE).display()
            );
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
