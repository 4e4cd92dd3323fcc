//! Thin command-line front end over the `asgan` library. All logic lives in
//! the library; this binary parses arguments, loads configs, and maps
//! failures to exit codes:
//! 0 success, 1 io/internal, 2 config error, 3 numeric collapse,
//! 4 check failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use asgan::runner::{self, ConfigFile, RunnerError, TheorySection};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_COLLAPSE: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "asgan",
    about = "GAN training with symmetric adversarial training of the discriminator",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one experiment (all seeds) from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides config and ASGAN_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Run only this seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the config's sweep section: one run per axis value, shared seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate the robust-objective expansion on a trained discriminator.
    TheoryCheck {
        #[arg(long)]
        config: PathBuf,
        /// Discriminator checkpoint; overrides theory.checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Norm order: inf, 2, or both.
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check autodiff gradients of the default networks against central
    /// finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a table for a run or sweep output directory.
    Report { dir: PathBuf },
}

fn exit_for(err: &RunnerError) -> u8 {
    match err {
        RunnerError::Config(_) => EXIT_CONFIG,
        _ => EXIT_IO,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cmd(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn run_cmd(cmd: Cmd) -> Result<u8, RunnerError> {
    match cmd {
        Cmd::Train {
            config,
            out,
            workers,
            seed,
        } => {
            let file = ConfigFile::load(&config)?;
            let mut exp = file.resolve(out)?;
            if let Some(w) = workers {
                exp.workers = w.max(1);
            }
            if let Some(s) = seed {
                exp.seeds = vec![s];
            }
            let summary = runner::run(&exp)?;
            println!(
                "{} seeds -> {} ({} collapsed)",
                summary.per_seed.len(),
                exp.out_dir.display(),
                summary.collapsed_seeds
            );
            if let Some(m) = &summary.median_final {
                println!(
                    "median final: mmd2 {:.6} frechet2d {:.6} coverage {:?} adv_acc {:.3}",
                    m.mmd2, m.frechet2d, m.mode_coverage, m.adv_accuracy
                );
            }
            Ok(if summary.collapsed_seeds > 0 {
                EXIT_COLLAPSE
            } else {
                0
            })
        }
        Cmd::Sweep {
            config,
            out,
            workers,
        } => {
            let file = ConfigFile::load(&config)?;
            let section = file
                .sweep
                .clone()
                .ok_or_else(|| RunnerError::Config("config has no [sweep] section".into()))?;
            let mut exp = file.resolve(out)?;
            if let Some(w) = workers {
                exp.workers = w.max(1);
            }
            let summary = runner::sweep(&exp, &section)?;
            println!(
                "sweep over {} ({} values) -> {}",
                summary.axis,
                summary.rows.len(),
                exp.out_dir.display()
            );
            print!("{}", runner::report(&exp.out_dir)?);
            Ok(0)
        }
        Cmd::TheoryCheck {
            config,
            checkpoint,
            p,
            out,
        } => {
            let file = ConfigFile::load(&config)?;
            let mut section = file.theory.clone().unwrap_or_else(TheorySection::default);
            if let Some(p) = p {
                section.p = p;
            }
            let ckpt = checkpoint
                .or_else(|| section.checkpoint.as_ref().map(PathBuf::from))
                .ok_or_else(|| {
                    RunnerError::Config(
                        "no checkpoint: set theory.checkpoint or --checkpoint".into(),
                    )
                })?;
            let out_path = out.unwrap_or_else(|| {
                ckpt.parent()
                    .unwrap_or_else(|| std::path::Path::new("."))
                    .join("expansion.json")
            });
            let reports = runner::theory_check(&file.dataset, &section, &ckpt, &out_path)?;
            for r in &reports {
                println!(
                    "p = {:>3} (q = {}): residuals {:?} ratios {:?}",
                    r.p, r.q, r.residual, r.residual_ratio
                );
            }
            println!("wrote {}", out_path.display());
            Ok(0)
        }
        Cmd::Gradcheck { seed } => {
            let outcome = runner::run_gradcheck(seed)?;
            for (name, report) in &outcome.reports {
                println!("{name}: max rel error {:.3e}", report.max_rel_error);
                for b in &report.blocks {
                    println!(
                        "  layer {} {:<6} max rel error {:.3e}",
                        b.layer,
                        format!("{:?}", b.kind).to_lowercase(),
                        b.max_rel_error
                    );
                }
            }
            if outcome.pass {
                println!("PASS (threshold {:.0e})", outcome.threshold);
                Ok(0)
            } else {
                println!("FAIL (threshold {:.0e})", outcome.threshold);
                Ok(EXIT_CHECK_FAILED)
            }
        }
        Cmd::Report { dir } => {
            print!("{}", runner::report(&dir)?);
            Ok(0)
        }
    }
}
