//! One function per subcommand. Each reads its inputs, runs the core
//! step, and writes its outputs plus a manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use log::{info, warn};
use patchnmt_core::dataset::{
    bucket, dedup_and_split, extract_candidates, filter_pair, generate_synthetic_samples, Bucket, Candidate,
    FilterStats, MutationKind, NamePool, SyntheticConfig, Verdict,
};
use patchnmt_core::decode::{predict_patches, BeamOptions, Patch, PredictOptions};
use patchnmt_core::eval::{evaluate, EvalOptions, EvalReport, TestPair};
use patchnmt_core::lexabs::{base_idioms, mine_idioms, pretty_print, tokenize, IdiomSet};
use patchnmt_core::miner::MinerConfig;
use patchnmt_core::seq2seq::{encode_split, grid_search, default_grid, select_best, train, ModelConfig, Seq2SeqModel, TrainError};
use patchnmt_core::treediff::parse_method_decls;
use serde_json::{json, Map, Value};

use crate::formats::{self, CheckpointFile, LoadedBundle};
use crate::manifest::{sha256_file, sha256_hex, write_json, Manifest};
use crate::walk::walk_repositories;

/// Marks an error caused by the invocation (bad flags, missing or
/// malformed inputs) rather than by the tool itself.
#[derive(Debug, Clone, Copy)]
pub struct UserError;

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid input")
    }
}

pub trait UserContext<T> {
    fn user(self) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> UserContext<T> for std::result::Result<T, E> {
    fn user(self) -> Result<T> {
        self.map_err(|e| e.into().context(UserError))
    }
}

pub fn is_user_error(e: &anyhow::Error) -> bool {
    e.downcast_ref::<UserError>().is_some()
}

fn user_err(msg: impl fmt::Display) -> anyhow::Error {
    anyhow!("{msg}").context(UserError)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

// ---- synth

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub pairs: usize,
    pub mutations: Vec<MutationKind>,
    pub seed: u64,
    pub names: NamePool,
    pub out: PathBuf,
}

pub const SYNTH_FILE: &str = "Synth.java";

/// Writes a directory corpus, one entry per pair, each method wrapped in a
/// class so the miner sees ordinary source files.
pub fn synth(o: &SynthOptions) -> Result<usize> {
    let cfg = SyntheticConfig {
        names: o.names,
        ..SyntheticConfig::new(o.pairs, &o.mutations, o.seed)
    };
    let samples = generate_synthetic_samples(&cfg).user()?;
    create_dir(&o.out)?;
    for (i, s) in samples.iter().enumerate() {
        let entry = o.out.join(format!("{i:06}"));
        for (side, src) in [("buggy", &s.buggy_source), ("fixed", &s.fixed_source)] {
            let dir = entry.join(side);
            create_dir(&dir)?;
            fs::write(dir.join(SYNTH_FILE), format!("class Synth {{\n{src}\n}}\n"))?;
        }
    }
    let mut kinds = std::collections::BTreeMap::new();
    for s in &samples {
        *kinds.entry(s.kind.name()).or_insert(0usize) += 1;
    }
    Manifest::new(
        "synth",
        json!({
            "pairs": o.pairs,
            "mutations": o.mutations.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "names": match o.names { NamePool::Primary => "primary", NamePool::HeldOut => "held-out" },
            "max_tokens": cfg.max_tokens,
        }),
    )
    .seed("synth", o.seed)
    .summary(json!({ "entries": samples.len(), "kinds": kinds }))
    .write_dir(&o.out)?;
    info!("synth entries={}", samples.len());
    Ok(samples.len())
}

// ---- mine

#[derive(Clone, Debug)]
pub struct MineOptions {
    pub roots: Vec<PathBuf>,
    pub miner: MinerConfig,
    pub out: PathBuf,
}

pub fn mine(o: &MineOptions) -> Result<usize> {
    if o.roots.is_empty() {
        return Err(user_err("mine needs at least one root"));
    }
    if !o.miner.extension.starts_with('.') || o.miner.max_changed_files == 0 {
        return Err(user_err("--ext must start with '.' and --max-files must be positive"));
    }
    for r in &o.roots {
        if !r.is_dir() {
            return Err(user_err(format!("root {} is not a directory", r.display())));
        }
    }
    let (pairs, stats) = walk_repositories(&o.roots, &o.miner);
    create_dir(&o.out)?;
    formats::write_mined(&o.out, &pairs)?;
    Manifest::new("mine", json!({ "extension": o.miner.extension, "max_changed_files": o.miner.max_changed_files }))
        .summary(json!({ "stats": stats, "pairs_sha256": sha256_file(&o.out.join(formats::PAIRS_FILE))? }))
        .write_dir(&o.out)?;
    info!(
        "mine roots={} commits={} bug_fix_commits={} file_pairs={}",
        stats.roots, stats.commits, stats.bug_fix_commits, stats.file_pairs
    );
    Ok(pairs.len())
}

// ---- idioms

#[derive(Clone, Debug)]
pub struct IdiomsOptions {
    pub input: PathBuf,
    pub top_fraction: f64,
    pub out: PathBuf,
}

/// Mines idioms from both versions of every mined file.
pub fn idioms(o: &IdiomsOptions) -> Result<usize> {
    let pairs = formats::read_mined(&o.input).user()?;
    let mut methods = Vec::new();
    let mut unparsed = 0usize;
    for p in &pairs {
        for src in [&p.buggy_source, &p.fixed_source] {
            match tokenize(src).map_err(|e| e.to_string()).and_then(|t| parse_method_decls(&t).map_err(|e| e.to_string())) {
                Ok(decls) => methods.extend(decls.into_iter().map(|d| d.tokens)),
                Err(_) => unparsed += 1,
            }
        }
    }
    let set = mine_idioms(methods.iter().map(Vec::as_slice), o.top_fraction, &base_idioms()).user()?;
    formats::write_idioms(&o.out, &set)?;
    Manifest::new("idioms", json!({ "top_fraction": o.top_fraction, "base": "builtin" }))
        .input("mined", sha256_file(&o.input.join(formats::PAIRS_FILE))?)
        .summary(json!({ "methods": methods.len(), "unparsed_files": unparsed, "idioms": set.len() }))
        .write_beside(&o.out)?;
    info!("idioms methods={} idioms={}", methods.len(), set.len());
    Ok(set.len())
}

// ---- extract

#[derive(Clone, Debug)]
pub struct ExtractOptions {
    pub input: PathBuf,
    pub idioms: PathBuf,
    pub out: PathBuf,
}

fn extract_all(pairs: &[patchnmt_core::miner::FilePair], idioms: &IdiomSet) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        if i > 0 && i % 1000 == 0 {
            info!("progress file_pairs={i} candidates={}", out.len());
        }
        out.extend(extract_candidates(p, idioms));
    }
    out
}

pub fn extract(o: &ExtractOptions) -> Result<usize> {
    let pairs = formats::read_mined(&o.input).user()?;
    let idioms = formats::read_idioms(&o.idioms).user()?;
    let candidates = extract_all(&pairs, &idioms);
    create_dir(&o.out)?;
    formats::write_candidates(&o.out.join(formats::CANDIDATES_FILE), &candidates)?;
    let failed = candidates.iter().filter(|c| c.content.is_err()).count();
    Manifest::new("extract", json!({}))
        .input("mined", sha256_file(&o.input.join(formats::PAIRS_FILE))?)
        .input("idioms", sha256_file(&o.idioms)?)
        .summary(json!({ "file_pairs": pairs.len(), "candidates": candidates.len(), "failed": failed }))
        .write_dir(&o.out)?;
    info!("extract file_pairs={} candidates={} failed={failed}", pairs.len(), candidates.len());
    Ok(candidates.len())
}

// ---- dataset build

#[derive(Clone, Debug)]
pub struct DatasetOptions {
    pub input: PathBuf,
    pub idioms: PathBuf,
    pub bucket: Bucket,
    pub seed: u64,
    pub id_cap: u32,
    pub out: PathBuf,
}

/// `input` is either an extract directory (its idioms must match) or a
/// mine directory, which is extracted on the fly.
pub fn dataset_build(o: &DatasetOptions) -> Result<usize> {
    if o.bucket == Bucket::Oversize {
        return Err(user_err("bucket must be small or medium"));
    }
    let idioms_sha = sha256_file(&o.idioms).user()?;
    let (candidates, input_sha) = if o.input.join(formats::CANDIDATES_FILE).is_file() {
        let m = Manifest::read_dir(&o.input).user()?;
        if m.inputs.get("idioms") != Some(&idioms_sha) {
            return Err(user_err(format!(
                "{} was extracted with a different idioms file than {}",
                o.input.display(),
                o.idioms.display()
            )));
        }
        let path = o.input.join(formats::CANDIDATES_FILE);
        (formats::read_candidates(&path).user()?, sha256_file(&path)?)
    } else {
        let pairs = formats::read_mined(&o.input).user()?;
        let idioms = formats::read_idioms(&o.idioms).user()?;
        (extract_all(&pairs, &idioms), sha256_file(&o.input.join(formats::PAIRS_FILE))?)
    };
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for (i, c) in candidates.into_iter().enumerate() {
        if i > 0 && i % 1000 == 0 {
            info!("progress candidates={i} accepted={}", stats.accepted);
        }
        let verdict = filter_pair(&c, o.id_cap);
        stats.record(verdict);
        if verdict != Verdict::Accept {
            continue;
        }
        let pair = c.into_pair().expect("accepted candidates have content");
        let b = bucket(&pair);
        stats.record_bucket(b);
        if b == o.bucket {
            kept.push(pair);
        }
    }
    let bundle = dedup_and_split(kept, o.bucket, o.seed).user()?;
    create_dir(&o.out)?;
    formats::write_bundle(&o.out, &bundle)?;
    let rejected: Map<String, Value> = stats.rejected.iter().map(|(r, n)| (r.name().to_string(), json!(n))).collect();
    let buckets: Map<String, Value> = stats.buckets.iter().map(|(b, n)| (b.name().to_string(), json!(n))).collect();
    Manifest::new("dataset", json!({ "bucket": o.bucket.name(), "id_cap": o.id_cap }))
        .seed("split", o.seed)
        .input("candidates", input_sha)
        .input("idioms", idioms_sha)
        .summary(json!({
            "candidates": stats.candidates,
            "accepted": stats.accepted,
            "rejected": rejected,
            "buckets": buckets,
            "duplicates": bundle.duplicates,
            "train": bundle.train.len(),
            "valid": bundle.validation.len(),
            "test": bundle.test.len(),
            "vocabulary": bundle.vocabulary.len(),
        }))
        .write_dir(&o.out)?;
    info!(
        "dataset accepted={} train={} valid={} test={} vocabulary={}",
        stats.accepted,
        bundle.train.len(),
        bundle.validation.len(),
        bundle.test.len(),
        bundle.vocabulary.len()
    );
    Ok(bundle.train.len() + bundle.validation.len() + bundle.test.len())
}

// ---- model configuration

/// Layers of configuration, lowest precedence first: built-in defaults,
/// then a JSON file, then command-line flags.
#[derive(Clone, Debug, Default)]
pub struct ConfigLayers {
    pub file: Option<PathBuf>,
    pub flags: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub config: ModelConfig,
    /// Field name to "default", "file", "flag" or "bundle".
    pub sources: std::collections::BTreeMap<String, &'static str>,
}

impl ResolvedConfig {
    pub fn describe(&self) -> String {
        let v = serde_json::to_value(&self.config).expect("config serializes");
        let mut s = String::from("effective config:\n");
        for (k, val) in v.as_object().expect("config is an object") {
            s.push_str(&format!("  {k} = {val} ({})\n", self.sources.get(k).copied().unwrap_or("default")));
        }
        s
    }
}

fn overlay(base: &mut Map<String, Value>, layer: &Map<String, Value>, origin: &str) -> Result<()> {
    for (k, v) in layer {
        if !base.contains_key(k) {
            return Err(user_err(format!("unknown config field {k:?} in {origin}")));
        }
        base.insert(k.clone(), v.clone());
    }
    Ok(())
}

fn resolve_one(file_layer: Option<&Map<String, Value>>, flags: &Map<String, Value>, vocabulary_size: usize) -> Result<ResolvedConfig> {
    let Value::Object(mut merged) = serde_json::to_value(ModelConfig::default())? else {
        unreachable!("config is an object")
    };
    let mut sources = std::collections::BTreeMap::new();
    if let Some(layer) = file_layer {
        overlay(&mut merged, layer, "config file")?;
        for k in layer.keys() {
            sources.insert(k.clone(), "file");
        }
    }
    overlay(&mut merged, flags, "flags")?;
    for k in flags.keys() {
        sources.insert(k.clone(), "flag");
    }
    let mut config: ModelConfig = serde_json::from_value(Value::Object(merged)).user()?;
    if config.vocabulary_size == 0 {
        config.vocabulary_size = vocabulary_size;
        sources.insert("vocabulary_size".into(), "bundle");
    } else if config.vocabulary_size != vocabulary_size {
        return Err(user_err(format!(
            "config vocabulary_size {} does not match the bundle's {vocabulary_size}",
            config.vocabulary_size
        )));
    }
    config.validate().user()?;
    Ok(ResolvedConfig { config, sources })
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).user()?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).user()
}

pub fn resolve_config(layers: &ConfigLayers, vocabulary_size: usize) -> Result<ResolvedConfig> {
    let file = match &layers.file {
        Some(p) => match read_json(p)? {
            Value::Object(m) => Some(m),
            _ => return Err(user_err(format!("{} must hold a JSON object", p.display()))),
        },
        None => None,
    };
    resolve_one(file.as_ref(), &layers.flags, vocabulary_size)
}

/// A grid file is a JSON array of partial configs. Without one, the
/// built-in ten-architecture grid is used. Flags apply to every entry.
pub fn resolve_grid(grid: Option<&Path>, flags: &Map<String, Value>, vocabulary_size: usize) -> Result<Vec<ResolvedConfig>> {
    let entries: Vec<Map<String, Value>> = match grid {
        Some(p) => match read_json(p)? {
            Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    Value::Object(m) => Ok(m),
                    _ => Err(user_err("grid entries must be JSON objects")),
                })
                .collect::<Result<_>>()?,
            _ => return Err(user_err(format!("{} must hold a JSON array", p.display()))),
        },
        None => default_grid(vocabulary_size)
            .into_iter()
            .map(|c| match serde_json::to_value(c) {
                Ok(Value::Object(m)) => m,
                _ => unreachable!("config is an object"),
            })
            .collect(),
    };
    if entries.is_empty() {
        return Err(user_err("grid is empty"));
    }
    entries.iter().map(|e| resolve_one(Some(e), flags, vocabulary_size)).collect()
}

// ---- train / gridsearch

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub bundle: PathBuf,
    pub layers: ConfigLayers,
    pub seed: u64,
    pub out: PathBuf,
}

fn train_error(e: TrainError) -> anyhow::Error {
    match e {
        TrainError::NonFinite { .. } | TrainError::EmptyTrainingSet | TrainError::EmptyValidationSet => {
            anyhow::Error::from(e).context(UserError)
        }
        other => other.into(),
    }
}

fn bundle_inputs(bundle: &Path) -> Result<String> {
    let m = Manifest::read_dir(bundle).user()?;
    Ok(sha256_hex(serde_json::to_string(&m)?.as_bytes()))
}

fn load_for_training(bundle: &Path) -> Result<(LoadedBundle, Vec<patchnmt_core::seq2seq::EncodedPair>, Vec<patchnmt_core::seq2seq::EncodedPair>)> {
    let b = formats::read_bundle(bundle).user()?;
    let to_pairs = |xs: &[formats::StoredPair]| -> Vec<patchnmt_core::dataset::BugFixPair> {
        xs.iter()
            .map(|p| patchnmt_core::dataset::BugFixPair {
                buggy: p.buggy.clone(),
                fixed: p.fixed.clone(),
                actions: Vec::new(),
                mapping: p.mapping.clone(),
                provenance: p.provenance.clone(),
            })
            .collect()
    };
    let train = encode_split(&to_pairs(&b.train), &b.vocabulary).user()?;
    let valid = encode_split(&to_pairs(&b.valid), &b.vocabulary).user()?;
    Ok((b, train, valid))
}

fn log_epoch(prefix: &str, r: &patchnmt_core::seq2seq::EpochReport) {
    info!(
        "{prefix}epoch={} step={} train_loss={:.6} valid_loss={:.6} lr={} improved={}",
        r.epoch, r.step, r.train_loss, r.validation_loss, r.learning_rate, r.improved
    );
}

pub fn train_model(o: &TrainOptions) -> Result<CheckpointFile> {
    let (bundle, train_set, valid_set) = load_for_training(&o.bundle)?;
    let resolved = resolve_config(&o.layers, bundle.vocabulary.len())?;
    eprint!("{}", resolved.describe());
    let mut model = Seq2SeqModel::<f32>::new(resolved.config.clone(), o.seed).user()?;
    info!("train parameters={} pairs={} valid={}", model.parameter_count(), train_set.len(), valid_set.len());
    let cps = train(&mut model, &train_set, &valid_set, o.seed, &mut |r| log_epoch("", r)).map_err(train_error)?;
    let best = select_best(&cps).map_err(train_error)?;
    let file = CheckpointFile::new(&resolved.config, &bundle.vocabulary, best)?;
    create_dir(&o.out)?;
    formats::write_checkpoint(&o.out.join(formats::MODEL_FILE), &file)?;
    write_json(&o.out.join(formats::HISTORY_FILE), &formats::history(&cps))?;
    Manifest::new("train", serde_json::to_value(&resolved.config)?)
        .seed("train", o.seed)
        .input("bundle_manifest", bundle_inputs(&o.bundle)?)
        .summary(json!({
            "best_epoch": best.epoch,
            "best_validation_loss": best.validation_loss,
            "checkpoints": cps.len(),
        }))
        .write_dir(&o.out)?;
    info!("train best_epoch={} best_valid_loss={:.6}", best.epoch, best.validation_loss);
    Ok(file)
}

#[derive(Clone, Debug)]
pub struct GridOptions {
    pub bundle: PathBuf,
    pub grid: Option<PathBuf>,
    pub flags: Map<String, Value>,
    pub seed: u64,
    pub out: PathBuf,
}

pub const GRID_FILE: &str = "grid.json";

pub fn gridsearch(o: &GridOptions) -> Result<CheckpointFile> {
    let (bundle, train_set, valid_set) = load_for_training(&o.bundle)?;
    let resolved = resolve_grid(o.grid.as_deref(), &o.flags, bundle.vocabulary.len())?;
    let configs: Vec<ModelConfig> = resolved.iter().map(|r| r.config.clone()).collect();
    for (i, c) in configs.iter().enumerate() {
        eprintln!("grid[{i}]: {c}");
    }
    let result = grid_search::<f32>(&configs, &train_set, &valid_set, o.seed, &mut |i, r| log_epoch(&format!("config={i} "), r))
        .map_err(train_error)?;
    let file = CheckpointFile::new(&result.config, &bundle.vocabulary, &result.checkpoint)?;
    create_dir(&o.out)?;
    formats::write_checkpoint(&o.out.join(formats::MODEL_FILE), &file)?;
    let winner = configs.iter().position(|c| *c == result.config).expect("winner comes from the grid");
    let table: Vec<Value> = configs
        .iter()
        .zip(&result.losses)
        .map(|(c, l)| json!({ "config": c, "best_validation_loss": l }))
        .collect();
    write_json(&o.out.join(GRID_FILE), &json!({ "winner": winner, "results": table }))?;
    Manifest::new("gridsearch", serde_json::to_value(&configs)?)
        .seed("train", o.seed)
        .input("bundle_manifest", bundle_inputs(&o.bundle)?)
        .summary(json!({ "winner": winner, "best_validation_loss": result.checkpoint.validation_loss }))
        .write_dir(&o.out)?;
    info!("gridsearch winner={winner} config={} valid_loss={:.6}", result.config, result.checkpoint.validation_loss);
    Ok(file)
}

// ---- predict

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Jsonl,
}

#[derive(Clone, Debug)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub idioms: PathBuf,
    pub beam: usize,
    pub max_len: Option<usize>,
    pub mapping_free: bool,
    pub length_normalize: bool,
    pub format: OutputFormat,
}

pub fn load_model(path: &Path) -> Result<(CheckpointFile, Seq2SeqModel<f32>, patchnmt_core::dataset::Vocabulary)> {
    let cp = formats::read_checkpoint(path).user()?;
    let vocab = cp.vocabulary().user()?;
    let model = cp.model().user()?;
    Ok((cp, model, vocab))
}

pub fn patch_json(p: &Patch) -> Value {
    let mut v = json!({
        "rank": p.rank,
        "score": p.score,
        "complete": p.complete,
        "abstracted": p.abstracted.tokens,
    });
    match &p.source {
        Some(Ok(src)) => v["source"] = json!(src),
        Some(Err(e)) => v["unmappable_id"] = json!(e.0.to_string()),
        None => {}
    }
    v
}

pub fn render_patches(patches: &[Patch], format: OutputFormat) -> String {
    let mut s = String::new();
    for p in patches {
        match format {
            OutputFormat::Jsonl => {
                s.push_str(&patch_json(p).to_string());
                s.push('\n');
            }
            OutputFormat::Text => {
                let tag = if p.complete { "" } else { " truncated" };
                s.push_str(&format!("#{} score={:.6}{tag}\n", p.rank, p.score));
                match &p.source {
                    Some(Ok(src)) => s.push_str(src),
                    Some(Err(e)) => s.push_str(&format!("<unmappable id {}>", e.0)),
                    None => s.push_str(&pretty_print(&p.abstracted.tokens)),
                }
                s.push_str("\n\n");
            }
        }
    }
    s
}

pub fn predict(a: &PredictArgs) -> Result<Vec<Patch>> {
    if a.beam == 0 {
        return Err(user_err("--beam must be positive"));
    }
    let (_, model, vocab) = load_model(&a.model)?;
    let idioms = formats::read_idioms(&a.idioms).user()?;
    let source = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display())).user()?;
    let opts = PredictOptions {
        beam: a.beam,
        max_len: a.max_len,
        mapping_free: a.mapping_free,
        beam_options: BeamOptions {
            length_normalize: a.length_normalize,
        },
    };
    predict_patches(&model, &vocab, &idioms, &source, &opts).user()
}

// ---- evaluate

#[derive(Clone, Debug)]
pub struct EvaluateArgs {
    pub model: PathBuf,
    pub bundle: PathBuf,
    pub split: String,
    pub beams: Vec<usize>,
    pub max_len: Option<usize>,
    pub length_normalize: bool,
    pub timing: bool,
    pub out: PathBuf,
}

pub fn evaluate_model(a: &EvaluateArgs) -> Result<EvalReport> {
    let (cp, model, vocab) = load_model(&a.model)?;
    let bundle = formats::read_bundle(&a.bundle).user()?;
    if formats::vocabulary_sha256(&bundle.vocabulary) != cp.vocabulary_sha256 {
        warn!("bundle vocabulary differs from the model's; out-of-vocabulary pairs count as untranslatable");
    }
    let pairs: Vec<TestPair> = bundle.split(&a.split).user()?.iter().map(|p| p.test_pair()).collect();
    if pairs.is_empty() {
        return Err(user_err(format!("split {} is empty", a.split)));
    }
    let opts = EvalOptions {
        beams: a.beams.clone(),
        max_len: a.max_len,
        beam_options: BeamOptions {
            length_normalize: a.length_normalize,
        },
    };
    let start = Instant::now();
    let clock = move || start.elapsed().as_secs_f64();
    let clock_ref: Option<&dyn Fn() -> f64> = if a.timing { Some(&clock) } else { None };
    let report = evaluate(&model, &vocab, &pairs, &opts, clock_ref).user()?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(&a.out, formats::report_csv(&report)).with_context(|| format!("writing {}", a.out.display()))?;
    Manifest::new(
        "evaluate",
        json!({
            "split": a.split,
            "beams": a.beams,
            "max_len": a.max_len,
            "length_normalize": a.length_normalize,
            "timing": a.timing,
        }),
    )
    .input("model", sha256_file(&formats_model_path(&a.model))?)
    .input("bundle_manifest", bundle_inputs(&a.bundle)?)
    .summary(json!({ "pairs": pairs.len(), "untranslatable": report.untranslatable }))
    .write_beside(&a.out)?;
    Ok(report)
}

fn formats_model_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(formats::MODEL_FILE)
    } else {
        p.to_path_buf()
    }
}

pub fn parse_beams(s: &str) -> std::result::Result<Vec<usize>, String> {
    let beams: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("bad beam width {x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if beams.is_empty() || beams.contains(&0) {
        return Err("beam widths must be positive".into());
    }
    Ok(beams)
}
