//! Argument parsing and dispatch. Exit status: 0 on success, 1 for usage
//! and input errors, 2 for internal failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patchnmt_core::dataset::{Bucket, MutationKind, NamePool, DEFAULT_ID_CAP};
use patchnmt_core::eval::default_beam_schedule;
use patchnmt_core::miner::MinerConfig;
use serde_json::{json, Map, Value};

use crate::formats;
use crate::pipeline::{self, is_user_error, ConfigLayers, OutputFormat, UserContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "patchnmt", version, about = "Learn bug-fixing patches from mined code changes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Walk git repositories or directory corpora for bug-fixing file pairs.
    #[command(long_about = "Walk git repositories (first-parent history, merges skipped) or directory \
corpora laid out as <id>/buggy/<path> and <id>/fixed/<path>.\n\n\
Output directory: pairs.tsv with one tab-separated record per file pair \
(repo_id, commit_id, path, buggy_blob_ref, fixed_blob_ref; backslash escapes for tab, newline, \
carriage return and backslash), blobs/<sha256> holding file contents, and manifest.")]
    Mine(MineArgs),
    /// Generate a synthetic directory corpus by mutating template methods.
    #[command(long_about = "Generate a directory corpus (<id>/buggy/Synth.java, <id>/fixed/Synth.java) \
from method templates, one injected mutation per entry. Feed it to `mine`.")]
    Synth(SynthArgs),
    /// Mine idioms: the most frequent identifiers and literals plus a built-in list.
    #[command(long_about = "Count identifier and literal lexemes over every method of a mine \
directory and keep the most frequent fraction, together with the built-in idiom list.\n\n\
Output: one lexeme per line, sorted, plus <out>.manifest.")]
    Idioms(IdiomsArgs),
    /// Extract and abstract changed methods from mined file pairs.
    #[command(long_about = "Pair the methods of every mined file pair, keep the changed ones, \
abstract them with the idiom list and compute edit actions.\n\n\
Output directory: candidates.jsonl (one JSON object per method pair: provenance, buggy and \
fixed abstracted lines, actions, mapping, or an error) and manifest.")]
    Extract(ExtractArgs),
    /// Build a filtered, deduplicated, split dataset bundle.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train a model on a bundle.
    #[command(long_about = "Train an encoder-decoder on the train split, validating on the valid split.\n\n\
Configuration precedence: flags, then --config (a JSON object with any ModelConfig fields), \
then built-in defaults. The effective config is printed at startup.\n\n\
Output directory: model.json (format, version, config, vocabulary and its sha256, named \
tensors with rows, cols and row-major data), history.json (per-checkpoint losses) and manifest.")]
    Train(TrainArgs),
    /// Train every config of a grid and keep the best.
    #[command(long_about = "Train every entry of --grid (a JSON array of partial configs; the \
built-in ten-architecture grid when omitted) from the same seed and keep the one with the \
lowest validation loss.\n\nOutput directory: model.json, grid.json and manifest.")]
    Gridsearch(GridArgs),
    /// Generate candidate patches for one buggy method.
    #[command(long_about = "Abstract the method in --input, beam-decode --beam candidates and map \
them back to source.\n\n--format text prints each candidate with its rank and log probability; \
--format jsonl prints one object per candidate with rank, score, complete, abstracted tokens, \
and either source or unmappable_id.")]
    Predict(PredictCmd),
    /// Evaluate a model on a bundle split over a schedule of beam widths.
    #[command(long_about = "Decode every pair of a bundle split at each beam width.\n\n\
Output: a CSV with columns beam, perfect_count, total, perfect_rate, syntactic_correct_rate, \
operation_coverage, theoretical_bug_coverage, mean_time_per_bug, mean_time_per_patch \
(timing columns empty unless --timing), <out>.manifest, and a table on stdout.")]
    Evaluate(EvaluateCmd),
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Git repositories or directory corpora.
    #[arg(long, num_args = 1.., required = true)]
    roots: Vec<PathBuf>,
    #[arg(long, default_value = ".java")]
    ext: String,
    /// Skip commits touching more source files than this.
    #[arg(long, default_value_t = 5)]
    max_files: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Names {
    Primary,
    HeldOut,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    /// Comma-separated mutation kinds, or "all".
    #[arg(long, default_value = "all")]
    mutations: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "primary")]
    names: Names,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct IdiomsArgs {
    /// A mine output directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Fraction of distinct lexemes to keep, strictly between 0 and 1.
    #[arg(long, default_value_t = 0.01)]
    top: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// A mine output directory.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    idioms: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum DatasetCommand {
    /// Filter, bucket, deduplicate and split 80/10/10.
    #[command(long_about = "Filter candidates, keep one length bucket, drop duplicate pairs and \
split 80/10/10 with --seed. --in is an extract directory (its idioms must be the same file as \
--idioms) or a mine directory, extracted on the fly.\n\n\
Bundle directory: {train,valid,test}.{buggy,fixed} (one space-separated abstracted method per \
line, aligned), {split}.provenance, vocab.txt (one token per line, ids by position), \
mappings/<split>/<line>.tsv (ID<TAB>escaped lexeme), actions/<split>/<line>.tsv \
(KIND<TAB>node<TAB>context[<TAB>extra]) and manifest.")]
    Build(DatasetArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BucketArg {
    Small,
    Medium,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    #[arg(long, value_enum, default_value = "small")]
    bucket: BucketArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Highest ID index allowed per category.
    #[arg(long, default_value_t = DEFAULT_ID_CAP)]
    cap: u32,
    #[arg(long)]
    idioms: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CellArg {
    Lstm,
    Gru,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttentionArg {
    Additive,
    Multiplicative,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

/// Overrides for individual config fields.
#[derive(Args, Debug, Default)]
struct ModelFlags {
    #[arg(long, value_enum)]
    cell: Option<CellArg>,
    #[arg(long, value_enum)]
    attention: Option<AttentionArg>,
    #[arg(long)]
    encoder_layers: Option<usize>,
    #[arg(long)]
    decoder_layers: Option<usize>,
    #[arg(long)]
    units: Option<usize>,
    #[arg(long)]
    embedding: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
}

impl ModelFlags {
    fn to_map(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("cell_kind", self.cell.map(|c| json!(format!("{c:?}").to_lowercase())));
        put("attention", self.attention.map(|a| json!(format!("{a:?}").to_lowercase())));
        put("encoder_layers", self.encoder_layers.map(|x| json!(x)));
        put("decoder_layers", self.decoder_layers.map(|x| json!(x)));
        put("hidden_units", self.units.map(|x| json!(x)));
        put("embedding_dim", self.embedding.map(|x| json!(x)));
        put("max_epochs", self.epochs.map(|x| json!(x)));
        put("max_steps", self.max_steps.map(|x| json!(x)));
        put("batch_size", self.batch_size.map(|x| json!(x)));
        put("optimizer", self.optimizer.map(|o| json!(format!("{o:?}").to_lowercase())));
        put("learning_rate", self.lr.map(|x| json!(x)));
        put("lr_decay", self.lr_decay.map(|x| json!(x)));
        put("grad_clip", self.grad_clip.map(|x| json!(x)));
        put("patience", self.patience.map(|x| json!(x)));
        m
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// JSON object with ModelConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: ModelFlags,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// JSON array of partial configs.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: ModelFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Jsonl,
}

#[derive(Args, Debug)]
struct PredictCmd {
    /// model.json or the directory holding it.
    #[arg(long)]
    model: PathBuf,
    /// File holding one method.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 50)]
    beam: usize,
    #[arg(long)]
    idioms: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Longest candidate, in tokens; defaults to twice the input plus 10.
    #[arg(long)]
    max_len: Option<usize>,
    /// Print abstracted candidates without mapping them back.
    #[arg(long)]
    mapping_free: bool,
    /// Rank by log probability per token.
    #[arg(long)]
    length_normalize: bool,
}

#[derive(Args, Debug)]
struct EvaluateCmd {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    bundle: PathBuf,
    /// Comma-separated beam widths; defaults to 1,5,10,...,50.
    #[arg(long)]
    beams: Option<String>,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    length_normalize: bool,
    /// Fill the timing columns (wall clock; not reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_mutations(s: &str) -> anyhow::Result<Vec<MutationKind>> {
    if s == "all" {
        return Ok(MutationKind::ALL.to_vec());
    }
    s.split(',').map(|k| k.trim().parse::<MutationKind>().map_err(|e| anyhow::anyhow!("{e}"))).collect::<anyhow::Result<_>>().user()
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match cmd {
        Command::Mine(a) => {
            pipeline::mine(&pipeline::MineOptions {
                roots: a.roots,
                miner: MinerConfig {
                    extension: a.ext,
                    max_changed_files: a.max_files,
                },
                out: a.out,
            })?;
        }
        Command::Synth(a) => {
            pipeline::synth(&pipeline::SynthOptions {
                pairs: a.pairs,
                mutations: parse_mutations(&a.mutations)?,
                seed: a.seed,
                names: match a.names {
                    Names::Primary => NamePool::Primary,
                    Names::HeldOut => NamePool::HeldOut,
                },
                out: a.out,
            })?;
        }
        Command::Idioms(a) => {
            pipeline::idioms(&pipeline::IdiomsOptions {
                input: a.input,
                top_fraction: a.top,
                out: a.out,
            })?;
        }
        Command::Extract(a) => {
            pipeline::extract(&pipeline::ExtractOptions {
                input: a.input,
                idioms: a.idioms,
                out: a.out,
            })?;
        }
        Command::Dataset(DatasetCommand::Build(a)) => {
            pipeline::dataset_build(&pipeline::DatasetOptions {
                input: a.input,
                idioms: a.idioms,
                bucket: match a.bucket {
                    BucketArg::Small => Bucket::Small,
                    BucketArg::Medium => Bucket::Medium,
                },
                seed: a.seed,
                id_cap: a.cap,
                out: a.out,
            })?;
        }
        Command::Train(a) => {
            pipeline::train_model(&pipeline::TrainOptions {
                bundle: a.bundle,
                layers: ConfigLayers {
                    file: a.config,
                    flags: a.flags.to_map(),
                },
                seed: a.seed,
                out: a.out,
            })?;
        }
        Command::Gridsearch(a) => {
            pipeline::gridsearch(&pipeline::GridOptions {
                bundle: a.bundle,
                grid: a.grid,
                flags: a.flags.to_map(),
                seed: a.seed,
                out: a.out,
            })?;
        }
        Command::Predict(a) => {
            let format = match a.format {
                FormatArg::Text => OutputFormat::Text,
                FormatArg::Jsonl => OutputFormat::Jsonl,
            };
            let patches = pipeline::predict(&pipeline::PredictArgs {
                model: a.model,
                input: a.input,
                idioms: a.idioms,
                beam: a.beam,
                max_len: a.max_len,
                mapping_free: a.mapping_free,
                length_normalize: a.length_normalize,
                format,
            })?;
            out.write_all(pipeline::render_patches(&patches, format).as_bytes())?;
        }
        Command::Evaluate(a) => {
            let report = pipeline::evaluate_model(&pipeline::EvaluateArgs {
                model: a.model,
                bundle: a.bundle,
                split: a.split,
                beams: match a.beams {
                    Some(b) => pipeline::parse_beams(&b).map_err(anyhow::Error::msg).user()?,
                    None => default_beam_schedule(),
                },
                max_len: a.max_len,
                length_normalize: a.length_normalize,
                timing: a.timing,
                out: a.out,
            })?;
            out.write_all(formats::report_table(&report).as_bytes())?;
        }
    }
    Ok(())
}

/// Line-oriented log records on stderr: `LEVEL target: message`.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, r| writeln!(buf, "{} {}: {}", r.level(), r.target(), r.args()))
        .try_init();
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status. Regular output goes to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) if is_user_error(&e) => {
            eprintln!("error: {e:#}");
            EXIT_USER
        }
        Err(e) => {
            eprintln!("internal error: {e:#}");
            EXIT_INTERNAL
        }
    }
}
