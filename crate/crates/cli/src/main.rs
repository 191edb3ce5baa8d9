use std::path::PathBuf;
use std::process::ExitCode;

use adeffect_core::evaluation::TaskKind;
use adeffect_cli::{cmd_analyze, cmd_clean, cmd_features, cmd_train_eval, report, synth, Config, Outcome};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(version, about = "Ad-effectiveness pipeline: clean, extract features, analyse, train and evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Binary,
    Four,
    Five,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate annotations and balance effectiveness classes
    Clean {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write one feature file per video
    Features {
        #[arg(long)]
        config: PathBuf,
    },
    /// Correlation, reliability and extreme-video reports
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train the 25 classifiers and the ensemble, report test accuracies
    TrainEval {
        #[arg(long)]
        config: PathBuf,
        /// Task to run; repeat for several. Defaults to all three.
        #[arg(long, value_enum)]
        task: Vec<Task>,
        /// Comma-separated seeds overriding the config.
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
    },
    /// Generate a synthetic project with a planted signal
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 193)]
        videos_per_class: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Clean { config } => cmd_clean(&Config::load(&config)?),
        Command::Features { config } => cmd_features(&Config::load(&config)?),
        Command::Analyze { config } => cmd_analyze(&Config::load(&config)?),
        Command::TrainEval { config, task, seed_list } => {
            let mut config = Config::load(&config)?;
            if let Some(seeds) = seed_list {
                config.seeds = seeds;
                config.validate()?;
            }
            let tasks: Vec<_> = if task.is_empty() {
                TaskKind::ALL.to_vec()
            } else {
                task.iter()
                    .map(|t| match t {
                        Task::Binary => TaskKind::Binary,
                        Task::Four => TaskKind::FourWay,
                        Task::Five => TaskKind::FiveWay,
                    })
                    .collect()
            };
            let reports = cmd_train_eval(&config, &tasks)?;
            print!("{}", report::format_table(&reports));
            Ok(Outcome::default())
        }
        Command::Synth { out, videos_per_class, seed } => {
            let spec = synth::SynthSpec {
                videos_per_class,
                seed,
                ..synth::SynthSpec::default()
            };
            let path = synth::generate_project(&out, &spec)?;
            println!("{}", path.display());
            Ok(Outcome::default())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            for issue in &outcome.errors {
                eprintln!("error: {}: {}", issue.video_id, issue.message);
            }
            if !outcome.warnings.is_empty() {
                eprintln!("{} warning(s); see the command's summary file", outcome.warnings.len());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
