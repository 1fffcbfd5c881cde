//! On-disk formats for every artifact the pipeline produces.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use patchnmt_core::dataset::{BugFixPair, Candidate, CandidateContent, DatasetBundle, Provenance, Vocabulary};
use patchnmt_core::eval::{EvalReport, TestPair};
use patchnmt_core::lexabs::{AbstractId, AbstractedMethod, IdMapping, IdiomSet};
use patchnmt_core::miner::FilePair;
use patchnmt_core::seq2seq::{Checkpoint, ModelConfig, Seq2SeqModel};
use patchnmt_core::treediff::{EditAction, Operation};
use serde::{Deserialize, Serialize};

use crate::escape::{escape, unescape};
use crate::manifest::{sha256_hex, write_json};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

// ---- mined file pairs: pairs.tsv + blobs/<sha256>

pub const PAIRS_FILE: &str = "pairs.tsv";
pub const BLOBS_DIR: &str = "blobs";

pub fn write_mined(dir: &Path, pairs: &[FilePair]) -> Result<()> {
    let blobs = dir.join(BLOBS_DIR);
    fs::create_dir_all(&blobs)?;
    let mut tsv = String::new();
    for p in pairs {
        let mut refs = Vec::new();
        for content in [&p.buggy_source, &p.fixed_source] {
            let h = sha256_hex(content.as_bytes());
            let path = blobs.join(&h);
            if !path.exists() {
                write(&path, content)?;
            }
            refs.push(h);
        }
        let fields = [&p.repo_id, &p.commit_id, &p.path, &refs[0], &refs[1]];
        let line: Vec<String> = fields.iter().map(|f| escape(f)).collect();
        tsv.push_str(&line.join("\t"));
        tsv.push('\n');
    }
    write(&dir.join(PAIRS_FILE), &tsv)
}

pub fn read_mined(dir: &Path) -> Result<Vec<FilePair>> {
    let text = read(&dir.join(PAIRS_FILE))?;
    let blobs = dir.join(BLOBS_DIR);
    let mut cache: BTreeMap<String, String> = BTreeMap::new();
    let mut blob = |h: &str| -> Result<String> {
        if !(h.len() == 64 && h.bytes().all(|b| b.is_ascii_hexdigit())) {
            bail!("bad blob reference {h:?}");
        }
        if let Some(s) = cache.get(h) {
            return Ok(s.clone());
        }
        let s = read(&blobs.join(h))?;
        cache.insert(h.to_string(), s.clone());
        Ok(s)
    };
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            bail!("{}:{}: expected 5 fields, found {}", PAIRS_FILE, n + 1, f.len());
        }
        let u = |s: &str| unescape(s).map_err(|e| anyhow!("{}:{}: {e}", PAIRS_FILE, n + 1));
        out.push(FilePair {
            repo_id: u(f[0])?,
            commit_id: u(f[1])?,
            path: u(f[2])?,
            buggy_source: blob(f[3])?,
            fixed_source: blob(f[4])?,
        });
    }
    Ok(out)
}

// ---- idioms: one lexeme per line, sorted

pub fn write_idioms(path: &Path, idioms: &IdiomSet) -> Result<()> {
    let mut lines: Vec<&str> = idioms.iter().collect();
    lines.sort_unstable();
    let mut text = lines.join("\n");
    text.push('\n');
    write(path, &text)
}

pub fn read_idioms(path: &Path) -> Result<IdiomSet> {
    let text = read(path)?;
    IdiomSet::new(text.lines().filter(|l| !l.is_empty()).map(str::to_string))
        .with_context(|| format!("parsing idioms {}", path.display()))
}

// ---- mappings: ID<TAB>escaped lexeme

pub fn mapping_to_text(m: &IdMapping) -> String {
    let mut s = String::new();
    for (id, lexeme) in m.iter() {
        let _ = writeln!(s, "{id}\t{}", escape(lexeme));
    }
    s
}

pub fn mapping_from_text(text: &str) -> Result<IdMapping> {
    let mut m = IdMapping::new();
    for (n, line) in text.lines().enumerate() {
        let (id, lexeme) = line.split_once('\t').ok_or_else(|| anyhow!("mapping line {}: missing tab", n + 1))?;
        let id = AbstractId::parse(id).ok_or_else(|| anyhow!("mapping line {}: bad id {id:?}", n + 1))?;
        m.insert(id, unescape(lexeme).map_err(|e| anyhow!("mapping line {}: {e}", n + 1))?)
            .map_err(|e| anyhow!("mapping line {}: {e}", n + 1))?;
    }
    Ok(m)
}

// ---- actions: one EditAction::to_line per line

pub fn actions_to_text(actions: &[EditAction]) -> String {
    let mut s = String::new();
    for a in actions {
        s.push_str(&a.to_line());
        s.push('\n');
    }
    s
}

pub fn operations_from_text(text: &str) -> Result<Vec<Operation>> {
    text.lines()
        .enumerate()
        .map(|(n, l)| Operation::from_line(l).map_err(|e| anyhow!("action line {}: {e}", n + 1)))
        .collect()
}

// ---- extracted candidates: candidates.jsonl

pub const CANDIDATES_FILE: &str = "candidates.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub buggy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixed: Option<String>,
    #[serde(default)]
    pub actions: Vec<EditAction>,
    #[serde(default)]
    pub mapping: Vec<(String, String)>,
}

impl From<&Candidate> for CandidateRecord {
    fn from(c: &Candidate) -> Self {
        match &c.content {
            Ok(x) => CandidateRecord {
                provenance: c.provenance.clone(),
                error: None,
                buggy: Some(x.buggy.to_string()),
                fixed: Some(x.fixed.to_string()),
                actions: x.actions.clone(),
                mapping: x.mapping.iter().map(|(id, l)| (id.to_string(), l.to_string())).collect(),
            },
            Err(e) => CandidateRecord {
                provenance: c.provenance.clone(),
                error: Some(e.clone()),
                buggy: None,
                fixed: None,
                actions: Vec::new(),
                mapping: Vec::new(),
            },
        }
    }
}

impl CandidateRecord {
    pub fn into_candidate(self) -> Result<Candidate> {
        let content = match (self.error, self.buggy, self.fixed) {
            (Some(e), _, _) => Err(e),
            (None, Some(b), Some(f)) => {
                let mut mapping = IdMapping::new();
                for (id, lexeme) in self.mapping {
                    let id = AbstractId::parse(&id).ok_or_else(|| anyhow!("bad id {id:?}"))?;
                    mapping.insert(id, lexeme)?;
                }
                Ok(CandidateContent {
                    buggy: AbstractedMethod::from_line(&b),
                    fixed: AbstractedMethod::from_line(&f),
                    actions: self.actions,
                    mapping,
                })
            }
            _ => bail!("candidate record needs either error or both methods"),
        };
        Ok(Candidate {
            provenance: self.provenance,
            content,
        })
    }
}

pub fn write_candidates(path: &Path, candidates: &[Candidate]) -> Result<()> {
    let mut s = String::new();
    for c in candidates {
        s.push_str(&serde_json::to_string(&CandidateRecord::from(c))?);
        s.push('\n');
    }
    write(path, &s)
}

pub fn read_candidates(path: &Path) -> Result<Vec<Candidate>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .map(|(n, l)| {
            let r: CandidateRecord = serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), n + 1))?;
            r.into_candidate()
        })
        .collect()
}

// ---- dataset bundle

pub const SPLITS: [&str; 3] = ["train", "valid", "test"];
pub const VOCAB_FILE: &str = "vocab.txt";

fn provenance_line(p: &Provenance) -> String {
    [&p.repo_id, &p.commit_id, &p.path, &p.method].map(|f| escape(f)).join("\t")
}

fn provenance_from_line(line: &str) -> Result<Provenance> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 4 {
        bail!("provenance line needs 4 fields: {line:?}");
    }
    let u = |s: &str| unescape(s).map_err(|e| anyhow!(e));
    Ok(Provenance {
        repo_id: u(f[0])?,
        commit_id: u(f[1])?,
        path: u(f[2])?,
        method: u(f[3])?,
    })
}

fn split_pairs<'a>(b: &'a DatasetBundle, split: &str) -> &'a [BugFixPair] {
    match split {
        "train" => &b.train,
        "valid" => &b.validation,
        _ => &b.test,
    }
}

pub fn pair_file(dir: &Path, kind: &str, split: &str, index: usize) -> PathBuf {
    dir.join(kind).join(split).join(format!("{index:06}.tsv"))
}

/// Writes the split files, vocabulary, per-pair mappings and actions, and
/// provenance. The manifest is written separately by the caller.
pub fn write_bundle(dir: &Path, b: &DatasetBundle) -> Result<()> {
    fs::create_dir_all(dir)?;
    for split in SPLITS {
        let pairs = split_pairs(b, split);
        let mut buggy = String::new();
        let mut fixed = String::new();
        let mut prov = String::new();
        for (i, p) in pairs.iter().enumerate() {
            let _ = writeln!(buggy, "{}", p.buggy);
            let _ = writeln!(fixed, "{}", p.fixed);
            let _ = writeln!(prov, "{}", provenance_line(&p.provenance));
            write(&pair_file(dir, "mappings", split, i), &mapping_to_text(&p.mapping))?;
            write(&pair_file(dir, "actions", split, i), &actions_to_text(&p.actions))?;
        }
        write(&dir.join(format!("{split}.buggy")), &buggy)?;
        write(&dir.join(format!("{split}.fixed")), &fixed)?;
        write(&dir.join(format!("{split}.provenance")), &prov)?;
    }
    let mut vocab = b.vocabulary.tokens().join("\n");
    vocab.push('\n');
    write(&dir.join(VOCAB_FILE), &vocab)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoredPair {
    pub buggy: AbstractedMethod,
    pub fixed: AbstractedMethod,
    pub operations: Vec<Operation>,
    pub mapping: IdMapping,
    pub provenance: Provenance,
}

impl StoredPair {
    pub fn test_pair(&self) -> TestPair {
        TestPair {
            buggy: self.buggy.clone(),
            fixed: self.fixed.clone(),
            operations: self.operations.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedBundle {
    pub vocabulary: Vocabulary,
    pub train: Vec<StoredPair>,
    pub valid: Vec<StoredPair>,
    pub test: Vec<StoredPair>,
}

impl LoadedBundle {
    pub fn split(&self, name: &str) -> Result<&[StoredPair]> {
        match name {
            "train" => Ok(&self.train),
            "valid" => Ok(&self.valid),
            "test" => Ok(&self.test),
            _ => bail!("unknown split {name:?}; expected train, valid or test"),
        }
    }
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = read(path)?;
    Vocabulary::from_tokens(text.lines().map(str::to_string).collect()).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_bundle(dir: &Path) -> Result<LoadedBundle> {
    let vocabulary = read_vocabulary(&dir.join(VOCAB_FILE))?;
    let mut splits = Vec::new();
    for split in SPLITS {
        let buggy = read(&dir.join(format!("{split}.buggy")))?;
        let fixed = read(&dir.join(format!("{split}.fixed")))?;
        let prov = read(&dir.join(format!("{split}.provenance")))?;
        let (b, f, p): (Vec<&str>, Vec<&str>, Vec<&str>) =
            (buggy.lines().collect(), fixed.lines().collect(), prov.lines().collect());
        if b.len() != f.len() || b.len() != p.len() {
            bail!("{split}: .buggy, .fixed and .provenance have different line counts");
        }
        let mut pairs = Vec::with_capacity(b.len());
        for i in 0..b.len() {
            pairs.push(StoredPair {
                buggy: AbstractedMethod::from_line(b[i]),
                fixed: AbstractedMethod::from_line(f[i]),
                operations: operations_from_text(&read(&pair_file(dir, "actions", split, i))?)?,
                mapping: mapping_from_text(&read(&pair_file(dir, "mappings", split, i))?)?,
                provenance: provenance_from_line(p[i])?,
            });
        }
        splits.push(pairs);
    }
    let test = splits.pop().expect("three splits");
    let valid = splits.pop().expect("three splits");
    let train = splits.pop().expect("three splits");
    Ok(LoadedBundle {
        vocabulary,
        train,
        valid,
        test,
    })
}

// ---- model checkpoint

pub const CHECKPOINT_FORMAT: &str = "patchnmt-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const MODEL_FILE: &str = "model.json";
pub const HISTORY_FILE: &str = "history.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub vocabulary_sha256: String,
    pub vocabulary: Vec<String>,
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub tensors: Vec<Tensor>,
}

pub fn vocabulary_sha256(v: &Vocabulary) -> String {
    sha256_hex(v.tokens().join("\n").as_bytes())
}

impl CheckpointFile {
    pub fn new(config: &ModelConfig, vocabulary: &Vocabulary, cp: &Checkpoint) -> Result<CheckpointFile> {
        let params = cp.parameters.as_ref().ok_or_else(|| anyhow!("checkpoint of epoch {} has no parameters", cp.epoch))?;
        let model = Seq2SeqModel::<f64>::from_parameters(config.clone(), params.clone())?;
        let tensors = model
            .parameter_groups()
            .iter()
            .map(|g| Tensor {
                name: g.name.clone(),
                rows: g.rows,
                cols: g.cols,
                data: params[g.offset..g.offset + g.len()].to_vec(),
            })
            .collect();
        Ok(CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            vocabulary_sha256: vocabulary_sha256(vocabulary),
            vocabulary: vocabulary.tokens().to_vec(),
            epoch: cp.epoch,
            step: cp.step,
            train_loss: cp.train_loss,
            validation_loss: cp.validation_loss,
            tensors,
        })
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        let v = Vocabulary::from_tokens(self.vocabulary.clone())?;
        if vocabulary_sha256(&v) != self.vocabulary_sha256 {
            bail!("checkpoint vocabulary does not match its recorded hash");
        }
        Ok(v)
    }

    /// Rebuilds the model, checking every tensor's name and shape against
    /// the layout the config implies.
    pub fn model(&self) -> Result<Seq2SeqModel<f32>> {
        let zero = Seq2SeqModel::<f64>::zeros(self.config.clone())?;
        let groups = zero.parameter_groups();
        if groups.len() != self.tensors.len() {
            bail!("checkpoint has {} tensors, config implies {}", self.tensors.len(), groups.len());
        }
        let mut params = Vec::with_capacity(zero.parameter_count());
        for (g, t) in groups.iter().zip(&self.tensors) {
            if g.name != t.name || g.rows != t.rows || g.cols != t.cols || t.data.len() != g.len() {
                bail!("tensor {} ({}x{}) does not match expected {} ({}x{})", t.name, t.rows, t.cols, g.name, g.rows, g.cols);
            }
            params.extend(t.data.iter().map(|&x| x as f32));
        }
        Ok(Seq2SeqModel::from_parameters(self.config.clone(), params)?)
    }
}

pub fn write_checkpoint(path: &Path, cp: &CheckpointFile) -> Result<()> {
    write_json(path, cp)
}

/// Accepts the checkpoint file itself or a directory containing it.
pub fn read_checkpoint(path: &Path) -> Result<CheckpointFile> {
    let file = if path.is_dir() { path.join(MODEL_FILE) } else { path.to_path_buf() };
    let text = read(&file)?;
    let cp: CheckpointFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
    if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
        bail!("{} is not a version {CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} file", file.display());
    }
    Ok(cp)
}

/// Loss history without parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub learning_rate: f64,
}

pub fn history(cps: &[Checkpoint]) -> Vec<HistoryEntry> {
    cps.iter()
        .map(|c| HistoryEntry {
            epoch: c.epoch,
            step: c.step,
            train_loss: c.train_loss,
            validation_loss: c.validation_loss,
            learning_rate: c.learning_rate,
        })
        .collect()
}

// ---- evaluation report

pub const REPORT_COLUMNS: [&str; 9] = [
    "beam",
    "perfect_count",
    "total",
    "perfect_rate",
    "syntactic_correct_rate",
    "operation_coverage",
    "theoretical_bug_coverage",
    "mean_time_per_bug",
    "mean_time_per_patch",
];

pub fn report_csv(r: &EvalReport) -> String {
    let mut s = REPORT_COLUMNS.join(",");
    s.push('\n');
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            row.beam,
            row.perfect_count,
            row.total,
            row.perfect_rate,
            row.syntactic_correct_rate,
            row.operation_coverage,
            row.theoretical_bug_coverage,
            opt(row.mean_time_per_bug),
            opt(row.mean_time_per_patch)
        );
    }
    s
}

pub fn report_table(r: &EvalReport) -> String {
    let mut s = format!(
        "{:>5} {:>12} {:>9} {:>9} {:>9} {:>9} {:>10}\n",
        "beam", "perfect", "rate%", "syntax%", "ops%", "bugcov%", "s/bug"
    );
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:>5} {:>12} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>10}",
            row.beam,
            format!("{}/{}", row.perfect_count, row.total),
            100.0 * row.perfect_rate,
            100.0 * row.syntactic_correct_rate,
            100.0 * row.operation_coverage,
            100.0 * row.theoretical_bug_coverage,
            row.mean_time_per_bug.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into())
        );
    }
    if r.untranslatable > 0 {
        let _ = writeln!(s, "untranslatable pairs: {}", r.untranslatable);
    }
    s
}
