mod commands;
mod provenance;

use std::path::PathBuf;

use biastrace::corpus::{LoadOptions, RecordSeparator};
use biastrace::glove::Hyperparams;
use biastrace::metrics::StdDev;
use biastrace::synth;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Trace embedding bias back to the documents of the training corpus.
#[derive(Parser, Debug)]
#[command(name = "biastrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count words and write the vocabulary.
    Vocab(commands::VocabArgs),
    /// Extract the harmonic co-occurrence matrix.
    Cooc(commands::CoocArgs),
    /// Train GloVe on a co-occurrence matrix.
    Train(commands::TrainArgs),
    /// WEAT effect size of one or more models.
    Weat(commands::WeatArgs),
    /// Per-document differential bias.
    Scan(commands::ScanArgs),
    /// Build perturbation sets from a scan.
    Perturb(commands::PerturbArgs),
    /// Approximate differential bias of perturbation sets.
    Approx(commands::ApproxArgs),
    /// Retrain without a perturbation set to get its ground truth.
    Validate(commands::ValidateArgs),
    /// Compare approximations with ground truth.
    Report(commands::ReportArgs),
    /// Derivative of bias with respect to each co-occurrence.
    Gradient(commands::GradientArgs),
    /// Top-1 analogy accuracy.
    Analogy(commands::AnalogyArgs),
    /// Write the synthetic desk corpus.
    Synth(commands::SynthArgs),
    /// Run the whole validation protocol in one go.
    Protocol(commands::ProtocolArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CorpusArgs {
    /// Corpus text file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// How documents are delimited.
    #[arg(long, default_value = "blank-line")]
    pub separator: RecordSeparator,
    /// Drop documents with fewer tokens.
    #[arg(long, default_value_t = 1)]
    pub min_len: usize,
    /// Drop documents with more tokens.
    #[arg(long)]
    pub max_len: Option<usize>,
}

impl CorpusArgs {
    pub fn options(&self) -> LoadOptions {
        LoadOptions {
            min_len: self.min_len,
            max_len: self.max_len.unwrap_or(usize::MAX),
            separator: self.separator,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Defaults for real corpora.
    Standard,
    /// Settings tuned for the synthetic desk corpus.
    Desk,
}

/// Training settings; unset values come from the preset.
#[derive(Args, Debug, Clone, Serialize)]
pub struct HyperArgs {
    #[arg(long, value_enum, default_value = "standard")]
    pub preset: Preset,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Context window the co-occurrences use.
    #[arg(long)]
    pub window: Option<usize>,
}

impl HyperArgs {
    pub fn resolve(&self, seed: u64) -> Hyperparams {
        let base = match self.preset {
            Preset::Standard => Hyperparams::default(),
            Preset::Desk => synth::desk_hyperparams(),
        };
        Hyperparams {
            dim: self.dim.unwrap_or(base.dim),
            epochs: self.epochs.unwrap_or(base.epochs),
            x_max: self.x_max.unwrap_or(base.x_max),
            alpha: self.alpha.unwrap_or(base.alpha),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            window: self.window.unwrap_or(base.window),
            seed,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StdDevArg {
    Sample,
    Population,
}

impl From<StdDevArg> for StdDev {
    fn from(s: StdDevArg) -> Self {
        match s {
            StdDevArg::Sample => StdDev::Sample,
            StdDevArg::Population => StdDev::Population,
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Vocab(a) => commands::vocab(a),
        Command::Cooc(a) => commands::cooc(a),
        Command::Train(a) => commands::train(a),
        Command::Weat(a) => commands::weat(a),
        Command::Scan(a) => commands::scan(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::Approx(a) => commands::approx(a),
        Command::Validate(a) => commands::validate(a),
        Command::Report(a) => commands::report(a),
        Command::Gradient(a) => commands::gradient(a),
        Command::Analogy(a) => commands::analogy(a),
        Command::Synth(a) => commands::synth(a),
        Command::Protocol(a) => commands::protocol(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
