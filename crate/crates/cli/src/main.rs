use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lumaswitch_cli::commands::{cmd_eval, cmd_segment, cmd_stream, cmd_train, TrainArgs};
use lumaswitch_cli::config::{RunConfig, RunFlags, CONFIG_ENV};
use lumaswitch_cli::CliError;

/// Skin-region segmentation with per-image color-space switching.
#[derive(Debug, Parser)]
#[command(name = "lumaswitch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment one or more PPM images.
    Segment {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Process a directory of PPM frames in name order.
    Stream {
        dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Pause between frames, in microseconds.
        #[arg(long, default_value_t = 0)]
        delay_us: u64,
    },
    /// Train the color-space selector from a labeled manifest.
    Train {
        manifest: PathBuf,
        /// Where to write the model JSON.
        #[arg(long)]
        model: PathBuf,
        /// Loss trace CSV; defaults to `<model>.loss.csv`.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        hidden: usize,
    },
    /// Confusion matrix of a trained model on a labeled manifest.
    Eval {
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// ann, maxconnected or sigmaconnect.
    #[arg(long)]
    strategy: Option<String>,
    /// Trained selector model (required for ann).
    #[arg(long)]
    model: Option<PathBuf>,
    /// `key = value` file with filter ranges and run options.
    #[arg(long, env = CONFIG_ENV)]
    filter_config: Option<PathBuf>,
    /// Votes needed by sigmaconnect: 1 (union), 2 (majority) or 3.
    #[arg(long, allow_negative_numbers = true)]
    vote_threshold: Option<i64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Append JSON lines here instead of printing them.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        RunConfig::resolve(RunFlags {
            strategy: self.strategy,
            model: self.model,
            filter_config: self.filter_config,
            vote_threshold: self.vote_threshold,
            out_dir: self.out_dir,
            report: self.report,
        })
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Segment { inputs, run } => {
            let status = cmd_segment(run.resolve()?, &inputs)?;
            Ok(if status.failed > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Stream { dir, run, delay_us } => {
            let status = cmd_stream(run.resolve()?, &dir, Duration::from_micros(delay_us))?;
            Ok(if status.failed > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Train {
            manifest,
            model,
            loss_csv,
            learning_rate,
            epochs,
            seed,
            hidden,
        } => {
            if !(learning_rate.is_finite() && learning_rate > 0.0) {
                return Err(CliError::Usage(format!(
                    "learning rate must be positive, got {learning_rate}"
                )));
            }
            if hidden == 0 {
                return Err(CliError::Usage("--hidden must be at least 1".into()));
            }
            let summary = cmd_train(&TrainArgs {
                manifest,
                model_out: model.clone(),
                loss_csv,
                learning_rate,
                epochs,
                seed,
                hidden,
            })?;
            println!(
                "trained on {} images: loss {:.6} -> {:.6}, training accuracy {:.2}%",
                summary.examples,
                summary.initial_loss,
                summary.final_loss,
                100.0 * summary.accuracy
            );
            println!("model: {}", model.display());
            println!("loss trace: {}", summary.loss_csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            manifest,
            model,
            report,
        } => {
            let result = cmd_eval(&model, &manifest)?;
            let json = serde_json::to_string_pretty(&result).context("serializing report")?;
            match report {
                Some(path) => {
                    print!("{}", result.table());
                    std::fs::write(&path, json + "\n")
                        .with_context(|| format!("cannot write {}", path.display()))?;
                }
                None => {
                    let mut out = io::stdout().lock();
                    write!(out, "{}", result.table()).context("stdout")?;
                    writeln!(out, "{json}").context("stdout")?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
