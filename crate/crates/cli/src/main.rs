//! `socialkc`: the SocialIQA tagging, labelling, training and analysis pipeline.

mod commands;
mod config;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use socialkc::analysis::TagKind;
use socialkc::qa::AugmentationMode;

#[derive(Parser, Debug)]
#[command(name = "socialkc", version, about = "Relation tags and knowledge categories for SocialIQA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Directory holding the SocialIQA splits and category annotations.
    #[arg(long, env = "SOCIALKC_DATA")]
    pub data: Option<PathBuf>,
    /// Output directory; replaced atomically when the command succeeds.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with `seed`, `mode`, `qa`, `classifier` and `grid` entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainFlags {
    /// `tiny`, a model directory, or a name under $SOCIALKC_MODELS.
    #[arg(long)]
    pub encoder: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub max_length: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct QaFlags {
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub gradient_accumulation: Option<usize>,
    /// Accept hyperparameters outside the search grid.
    #[arg(long)]
    pub allow_off_grid: bool,
    /// `default` searches the full grid; `single` trains the configured point only.
    #[arg(long, value_enum)]
    pub grid: Option<GridChoice>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridChoice {
    Default,
    Single,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Relation,
    Category,
}

impl From<Which> for TagKind {
    fn from(w: Which) -> Self {
        match w {
            Which::Relation => TagKind::Relation,
            Which::Category => TagKind::Category,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tag every question with its relation type.
    Tag {
        /// Split to read from the data root.
        #[arg(long, default_value = "dev", conflicts_with = "input")]
        split: String,
        /// SocialIQA JSONL file to tag instead of a split under the data root.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Sidecar label file for `--input`.
        #[arg(long, requires = "input")]
        labels: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fine-tune the knowledge-category classifier on annotated examples.
    TrainClassifier {
        #[arg(long)]
        train_annotations: Option<PathBuf>,
        #[arg(long)]
        dev_annotations: Option<PathBuf>,
        /// SocialIQA file the training annotations refer to.
        #[arg(long)]
        train_data: Option<PathBuf>,
        /// SocialIQA file the dev annotations refer to.
        #[arg(long)]
        dev_data: Option<PathBuf>,
        #[command(flatten)]
        flags: TrainFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Add predicted categories to a tagged file.
    Label {
        /// Directory written by `train-classifier` (its `model` subdirectory or the run itself).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Human annotations that take precedence over predictions.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Grid-search a QA model over tagged train/dev files.
    TrainQa {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        mode: Option<AugmentationMode>,
        #[command(flatten)]
        flags: QaFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Score a trained QA model and write an official-format prediction file.
    Eval {
        /// Directory written by `train-qa` (its `best` subdirectory or the run itself).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mode: Option<AugmentationMode>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare evaluation results: accuracy, per-group error rates, significance.
    Analyze {
        /// Result files written by `eval` or `train-qa`.
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        /// Tagged file supplying the relation of each example.
        #[arg(long)]
        tagged: Option<PathBuf>,
        /// Category annotations for the evaluated split.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Replace one kind of tag with random draws, then train and evaluate.
    Ablate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        flags: QaFlags,
        #[command(flatten)]
        common: Common,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Tag { split, input, labels, common } => commands::tag(&common, &split, input, labels),
        Command::TrainClassifier {
            train_annotations,
            dev_annotations,
            train_data,
            dev_data,
            flags,
            common,
        } => commands::train_classifier(
            &common,
            commands::ClassifierInputs {
                train_annotations,
                dev_annotations,
                train_data,
                dev_data,
            },
            &flags,
        ),
        Command::Label { model, input, annotations, common } => {
            commands::label(&common, &model, &input, annotations.as_deref())
        }
        Command::TrainQa { train, dev, mode, flags, common } => {
            commands::train_qa(&common, &train, &dev, mode, &flags)
        }
        Command::Eval { model, input, mode, common } => commands::eval(&common, &model, &input, mode),
        Command::Analyze { results, tagged, annotations, common } => {
            commands::analyze(&common, &results, tagged.as_deref(), annotations.as_deref())
        }
        Command::Ablate { train, dev, which, flags, common } => {
            commands::ablate(&common, &train, &dev, which.into(), &flags)
        }
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
