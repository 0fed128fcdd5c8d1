use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use funlm::harness::{self, RunConfig, TrainConfig};
use funlm::optim::LossConfig;
use funlm::{BasicType, Error, Lexicon, Model};

#[derive(Parser)]
#[command(
    name = "funlm",
    version,
    about = "Functorial language models over pregroup grammars"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List the parses of a sentence.
    Parse {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(required = true)]
        sentence: Vec<String>,
    },
    /// Train encoding matrices on a masked-sentence corpus.
    Train {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 5e-2)]
        lr: f64,
        #[arg(long, default_value_t = 1e-1)]
        l1: f64,
        #[arg(long, default_value_t = 5e-2)]
        l2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override a basic type's dimension, e.g. `--dim n=5`.
        #[arg(long = "dim", value_parser = parse_dim)]
        dims: Vec<(BasicType, usize)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a masked-sentence corpus.
    Eval {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
    /// Predict the missing word of one line such as `cat ? fish (eats)`.
    Predict {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        line: String,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
    },
}

fn parse_dim(s: &str) -> Result<(BasicType, usize), String> {
    let (name, dim) = s.split_once('=').ok_or("expected <type>=<dim>")?;
    let base = BasicType::new(name).map_err(|e| e.to_string())?;
    let dim: usize = dim.parse().map_err(|e| format!("{e}"))?;
    if dim == 0 {
        return Err("dimension must be positive".into());
    }
    Ok((base, dim))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Parse { lexicon, sentence } => {
            let lexicon = Lexicon::load(lexicon)?;
            let words: Vec<&str> = sentence.iter().flat_map(|s| s.split_whitespace()).collect();
            let unknown: Vec<&str> = words
                .iter()
                .copied()
                .filter(|w| lexicon.entries(w).is_err())
                .collect();
            if !unknown.is_empty() {
                for w in &unknown {
                    eprintln!("unknown word `{w}`");
                }
                return Err(Error::UnknownWord(unknown.join(", ")));
            }
            print!("{}", harness::parse_listing(&words, &lexicon)?);
        }
        Command::Train {
            lexicon,
            train,
            epochs,
            lr,
            l1,
            l2,
            seed,
            dims,
            out,
        } => {
            let cfg = RunConfig {
                lexicon,
                train,
                dims,
                out,
                train_cfg: TrainConfig {
                    seed,
                    epochs,
                    lr,
                    loss: LossConfig {
                        l1_weight: l1,
                        l2_weight: l2,
                    },
                },
            };
            let start = Instant::now();
            let outcome = harness::train(&cfg)?;
            eprintln!(
                "trained {} epochs in {:.1}s",
                epochs,
                start.elapsed().as_secs_f64()
            );
            println!("final loss: {:.6}", outcome.final_loss);
            println!("checkpoint: {}", cfg.out.display());
        }
        Command::Eval {
            lexicon,
            model,
            test,
            top_k,
            report,
        } => {
            let lexicon = Lexicon::load(lexicon)?;
            let model = Model::load(model)?;
            let corpus = harness::load_corpus(test, &lexicon)?;
            let report_data = harness::evaluate(&model, &corpus, top_k)?;
            match report {
                ReportFormat::Text => print!("{}", report_data.to_text()),
                ReportFormat::Json => print!("{}", report_data.to_json()?),
            }
        }
        Command::Predict {
            lexicon,
            model,
            line,
            top_k,
        } => {
            let lexicon = Lexicon::load(lexicon)?;
            let model = Model::load(model)?;
            print!("{}", harness::predict_line(&model, &line, &lexicon, top_k)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
