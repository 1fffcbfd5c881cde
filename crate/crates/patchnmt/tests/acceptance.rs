//! Acceptance criteria 1 to 10. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line, captured or not.
//!
//! `ACCEPTANCE_ONLY=3,7` restricts the run to the listed criteria.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use patchnmt::cli;
use patchnmt::formats;
use patchnmt::pipeline;
use patchnmt_core::dataset::{
    bucket, dedup_and_split, filter_pair, generate_synthetic_corpus, generate_synthetic_samples, BugFixPair, Bucket,
    Candidate, CandidateContent, MutationKind, NamePool, Provenance, RejectReason, SyntheticConfig, Verdict, Vocabulary,
};
use patchnmt_core::decode::{beam_decode, default_max_len, greedy_decode, BeamOptions, StepModel};
use patchnmt_core::eval::{evaluate, is_syntactically_valid, rate, syntactic_correctness, EvalOptions, EvalReport, TestPair};
use patchnmt_core::lexabs::{
    abstract_method, base_idioms, concretize, tokenize, AbstractId, AbstractedMethod, IdCategory, IdMapping, UnmappableId,
};
use patchnmt_core::miner::MinerConfig;
use patchnmt_core::seq2seq::gradcheck::check_gradients;
use patchnmt_core::seq2seq::{
    encode_split, select_best, train, weighted_average, AttentionKind, CellKind, ModelConfig, Seq2SeqModel,
};
use patchnmt_core::treediff::{apply, diff, parse_single_method, AstNode, EditAction, EditOp, NodeType};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and budgets. Changing any of these changes what "pass" means.
const ROUND_TRIP_MIN_METHODS: usize = 500;
const ROUND_TRIP_BUDGET_S: f64 = 10.0;
const DIFF_CORPUS: usize = 1000;
const GRAD_MAX_REL_ERR: f64 = 1e-4;
const GRAD_SEEDS: u64 = 5;
// Central-difference step. Smaller steps drown gradients near 1e-6 in the
// rounding noise of an O(10) loss; 1e-4 keeps truncation error well below it.
const GRAD_EPS: f64 = 1e-4;
const GRAD_COORDS_PER_GROUP: usize = 12;
const GRAD_BUDGET_S: f64 = 60.0;
const NORM_STEPS: usize = 10_000;
const NORM_TOL: f64 = 1e-6;
const CONTEXT_TOL: f64 = 1e-9;
const GREEDY_MODELS: u64 = 100;
const RESCORE_TOL: f64 = 1e-6;
const E2E_PAIRS: usize = 2000;
const E2E_SEED: u64 = 7;
const E2E_UNITS: usize = 64;
const E2E_EPOCHS: usize = 16;
const E2E_TRAIN_MIN: f64 = 0.95;
const E2E_HELD_OUT_MIN: f64 = 0.60;
const E2E_HELD_OUT_PAIRS: usize = 300;
const E2E_BUDGET_S: f64 = 30.0 * 60.0;
const REPORTED_RATE_PERCENT: f64 = 9.22;

struct Check {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Check> {
    Ok(Check {
        pass,
        detail: detail.into(),
    })
}

/// What criterion 8 leaves behind for criterion 9.
struct Trained {
    model: Seq2SeqModel<f32>,
    vocabulary: Vocabulary,
    test: Vec<TestPair>,
    reports: Vec<EvalReport>,
    /// Correct predictions (equal to the fixed side) with their mappings.
    perfect: Vec<(AbstractedMethod, IdMapping)>,
}

static TRAINED: Mutex<Option<Trained>> = Mutex::new(None);

fn lexemes(src: &str) -> Result<Vec<String>> {
    Ok(tokenize(src)?.into_iter().map(|t| t.lexeme).collect())
}

// ---- 1

fn round_trip() -> Result<Check> {
    let mut corpus: Vec<String> = [
        "@Override public String toString() { /* note */ return name + \"x\" + 'c' + 1.5f; }",
        "int f(int a) { // tail\n if (a > 0) { return a; } return -1; }",
        "void g(List<String> xs) { for (String s : xs) { System.out.println(s); } }",
        "static long h(long n) { return n <= 1L ? 1L : n * h(n - 1L); }",
        "private <T> T first(T[] items) { return items.length == 0 ? null : items[0]; }",
    ]
    .map(String::from)
    .to_vec();
    for s in generate_synthetic_samples(&SyntheticConfig::new(300, &MutationKind::ALL, 11))? {
        corpus.push(s.buggy_source);
        corpus.push(s.fixed_source);
    }
    let idioms = base_idioms();
    let start = Instant::now();
    let mut failures = 0;
    for m in &corpus {
        let tokens = tokenize(m)?;
        let mut mapping = IdMapping::new();
        let abs = abstract_method(&tokens, &idioms, &mut mapping);
        let back = concretize(&abs, &mapping).map_err(|e| anyhow!("{e}"))?;
        if lexemes(&back)? != lexemes(m)? {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        corpus.len() >= ROUND_TRIP_MIN_METHODS && failures == 0 && secs < ROUND_TRIP_BUDGET_S,
        format!("{} methods, {failures} mismatches, {secs:.2}s (budget {ROUND_TRIP_BUDGET_S}s)", corpus.len()),
    )
}

// ---- 2

fn build_bundle_on_disk(root: &Path, pairs: usize, seed: u64) -> Result<PathBuf> {
    pipeline::synth(&pipeline::SynthOptions {
        pairs,
        mutations: MutationKind::ALL.to_vec(),
        seed,
        names: NamePool::Primary,
        out: root.join("corpus"),
    })?;
    pipeline::mine(&pipeline::MineOptions {
        roots: vec![root.join("corpus")],
        miner: MinerConfig::default(),
        out: root.join("mined"),
    })?;
    formats::write_idioms(&root.join("idioms.txt"), &base_idioms())?;
    pipeline::dataset_build(&pipeline::DatasetOptions {
        input: root.join("mined"),
        idioms: root.join("idioms.txt"),
        bucket: Bucket::Small,
        seed,
        id_cap: patchnmt_core::dataset::DEFAULT_ID_CAP,
        out: root.join("bundle"),
    })?;
    Ok(root.join("bundle"))
}

fn ids(m: &AbstractedMethod) -> BTreeSet<AbstractId> {
    m.tokens.iter().filter_map(|t| AbstractId::parse(t)).collect()
}

fn mapping_closure() -> Result<Check> {
    let tmp = tempfile::tempdir()?;
    let bundle = formats::read_bundle(&build_bundle_on_disk(tmp.path(), 300, 5)?)?;
    let all: Vec<&formats::StoredPair> = bundle.train.iter().chain(&bundle.valid).chain(&bundle.test).collect();
    let mut problems = Vec::new();
    let mut probes = 0usize;
    for p in &all {
        let shared: BTreeSet<AbstractId> = ids(&p.fixed).intersection(&ids(&p.buggy)).copied().collect();
        if let Some(id) = shared.iter().find(|id| !p.mapping.contains(id)) {
            problems.push(format!("{id} shared but unmapped"));
        }
        if let Err(e) = concretize(&p.fixed, &p.mapping) {
            problems.push(format!("fixed side raised {e}"));
        }
        // One absent ID per category must be reported as exactly that ID.
        for cat in IdCategory::ALL {
            let used = p.mapping.iter().filter(|(id, _)| id.category == cat).count() as u32;
            let absent = AbstractId::new(cat, used + 1);
            let mut probe = p.fixed.clone();
            probe.tokens.push(absent.to_string());
            probes += 1;
            if concretize(&probe, &p.mapping) != Err(UnmappableId(absent)) {
                problems.push(format!("probe {absent} not reported"));
            }
        }
    }
    // The directed case: a prediction that calls a method the buggy code never named.
    let mut m = IdMapping::new();
    for (i, name) in ["getValue", "setValue", "reset", "size0", "load"].iter().enumerate() {
        m.insert(AbstractId::new(IdCategory::Method, i as u32 + 1), name.to_string())?;
    }
    let pred = AbstractedMethod::from_line("METHOD_6 ( )");
    let method6 = AbstractId::parse("METHOD_6").expect("well formed");
    let directed_missing = concretize(&pred, &m) == Err(UnmappableId(method6));
    m.insert(method6, "flush".into())?;
    let directed_present = concretize(&pred, &m).as_deref() == Ok("flush()");
    let pass = !all.is_empty() && problems.is_empty() && directed_missing && directed_present;
    verdict(
        pass,
        format!(
            "{} pairs, {probes} absent-ID probes, METHOD_6 missing->{directed_missing} present->{directed_present}, {} problems{}",
            all.len(),
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

// ---- 3

/// Structural equality written out independently of `AstNode`'s own.
fn same_tree(a: &AstNode, b: &AstNode) -> bool {
    a.node_type == b.node_type
        && a.label == b.label
        && a.children.len() == b.children.len()
        && a.children.iter().zip(&b.children).all(|(x, y)| same_tree(x, y))
}

fn diff_soundness() -> Result<Check> {
    let samples = generate_synthetic_samples(&SyntheticConfig::new(DIFF_CORPUS, &MutationKind::ALL, 13))?;
    let parse = |s: &str| -> Result<AstNode> { Ok(parse_single_method(&tokenize(s)?)?.ast) };
    let (mut unsound, mut nonempty_self) = (0, 0);
    for s in &samples {
        let (b, f) = (parse(&s.buggy_source)?, parse(&s.fixed_source)?);
        match apply(&b, &diff(&b, &f)) {
            Ok(t) if same_tree(&t, &f) => {}
            _ => unsound += 1,
        }
        nonempty_self += usize::from(!diff(&b, &b).is_empty()) + usize::from(!diff(&f, &f).is_empty());
    }
    verdict(
        samples.len() == DIFF_CORPUS && unsound == 0 && nonempty_self == 0,
        format!("{} pairs, {unsound} unsound, {nonempty_self} non-empty self diffs", samples.len()),
    )
}

// ---- 4

fn dummy_action() -> EditAction {
    EditAction {
        node_type: NodeType::Literal,
        context_type: NodeType::Block,
        op: EditOp::Update {
            node: 1,
            new_label: "1".into(),
        },
    }
}

fn candidate(buggy: &str, fixed: &str, actions: usize) -> Candidate {
    Candidate {
        provenance: Provenance::default(),
        content: Ok(CandidateContent {
            buggy: AbstractedMethod::from_line(buggy),
            fixed: AbstractedMethod::from_line(fixed),
            actions: vec![dummy_action(); actions],
            mapping: IdMapping::new(),
        }),
    }
}

fn pair_of(buggy: Vec<String>, fixed: Vec<String>) -> BugFixPair {
    BugFixPair {
        buggy: AbstractedMethod::new(buggy),
        fixed: AbstractedMethod::new(fixed),
        actions: Vec::new(),
        mapping: IdMapping::new(),
        provenance: Provenance::default(),
    }
}

fn filter_bucket_split() -> Result<Check> {
    // A runner counts cases across runs, so each property gets its own.
    let runner = || {
        TestRunner::new(PropConfig {
            cases: 256,
            failure_persistence: None,
            ..PropConfig::default()
        })
    };
    let mut failed = Vec::new();
    let cases = std::cell::Cell::new(0usize);
    let record = |failed: &mut Vec<String>, name: &str, r: std::result::Result<(), String>| {
        if let Err(e) = r {
            failed.push(format!("{name}: {e}"));
        }
    };

    record(
        &mut failed,
        "action count",
        runner().run(&(1usize..400), |n| {
            cases.set(cases.get() + 1);
            let v = filter_pair(&candidate("return VAR_1 ;", "return VAR_2 ;", n), 10);
            if n > 100 {
                prop_assert_eq!(v, Verdict::Reject(RejectReason::TooManyActions));
            } else {
                prop_assert_eq!(v, Verdict::Accept);
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    record(
        &mut failed,
        "identical",
        runner().run(&(prop::collection::vec(prop::sample::select(vec!["return", "VAR_1", ";", "+", "0"]), 1..40), 0usize..50), |(toks, n)| {
            cases.set(cases.get() + 1);
            let line = toks.join(" ");
            prop_assert_eq!(
                filter_pair(&candidate(&line, &line, n), 10),
                Verdict::Reject(RejectReason::IdenticalAfterAbstraction)
            );
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );

    // Exact boundary lengths, both on the longer side and the shorter side.
    let toks = |n: usize| vec!["x".to_string(); n];
    let expected = [(50, Bucket::Small), (51, Bucket::Medium), (100, Bucket::Medium), (101, Bucket::Oversize)];
    for (len, want) in expected {
        for (b, f) in [(len, 1), (1, len), (len, len)] {
            let got = bucket(&pair_of(toks(b), toks(f)));
            if got != want {
                failed.push(format!("lengths ({b},{f}) -> {got:?}, want {want:?}"));
            }
        }
    }

    record(
        &mut failed,
        "split",
        runner().run(&(10usize..1500, 0usize..200, any::<u64>()), |(n, dups, seed)| {
            cases.set(cases.get() + 1);
            let mut pairs: Vec<BugFixPair> =
                (0..n).map(|i| pair_of(vec!["b".into(), i.to_string()], vec!["f".into(), i.to_string()])).collect();
            for j in 0..dups {
                let i = j * 7 % n;
                pairs.push(pair_of(vec!["b".into(), i.to_string()], vec!["f".into(), i.to_string()]));
            }
            let b = dedup_and_split(pairs, Bucket::Small, seed).expect("at least ten unique pairs");
            let near = |got: usize, frac: f64| (got as f64 - frac * n as f64).abs() <= 1.0;
            prop_assert!(near(b.train.len(), 0.8) && near(b.validation.len(), 0.1) && near(b.test.len(), 0.1));
            prop_assert_eq!(b.train.len() + b.validation.len() + b.test.len(), n);
            let keys: BTreeSet<(String, String)> = b.all().map(|p| (p.buggy.to_string(), p.fixed.to_string())).collect();
            prop_assert_eq!(keys.len(), n);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            format!(
                "{} generated cases: action cap, identical pairs, 80/10/10 within one pair, no duplicates; boundaries 50/51/100/101 exact",
                cases.get()
            )
        } else {
            failed.join("; ")
        },
    )
}

// ---- 5

fn random_tokens(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(3..vocab as u32)).collect()
}

fn small_config(cell: CellKind, attention: AttentionKind, vocab: usize, layers: usize, units: usize, emb: usize) -> ModelConfig {
    ModelConfig {
        cell_kind: cell,
        attention,
        encoder_layers: layers,
        decoder_layers: layers,
        hidden_units: units,
        embedding_dim: emb,
        vocabulary_size: vocab,
        ..ModelConfig::default()
    }
}

fn gradient_check() -> Result<Check> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    let mut groups = BTreeSet::new();
    let mut unchecked = Vec::new();
    for cell in [CellKind::Lstm, CellKind::Gru] {
        for att in [AttentionKind::Additive, AttentionKind::Multiplicative] {
            for seed in 0..GRAD_SEEDS {
                let cfg = ModelConfig {
                    init_scale: 0.5,
                    ..small_config(cell, att, 8, 2, 4, 3)
                };
                let model = Seq2SeqModel::<f64>::new(cfg, seed)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let batch: Vec<(Vec<u32>, Vec<u32>)> = (0..2)
                    .map(|_| {
                        let (n, m) = (rng.gen_range(2..6), rng.gen_range(1..5));
                        (random_tokens(&mut rng, 8, n), random_tokens(&mut rng, 8, m))
                    })
                    .collect();
                for g in check_gradients(&model, &batch, GRAD_EPS, GRAD_COORDS_PER_GROUP, seed)? {
                    if g.checked == 0 {
                        unchecked.push(g.name.clone());
                    }
                    if g.max_rel_error > worst {
                        worst = g.max_rel_error;
                        worst_name = format!("{:?}/{:?}/seed {seed}/{}", cell, att, g.name);
                    }
                    groups.insert(format!("{cell:?}:{}", g.name));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let covers = |s: &str| groups.iter().any(|g| g.contains(s));
    let coverage = ["Lstm:encoder", "Gru:encoder", "Lstm:decoder", "Gru:decoder", "attention", "output", "bridge", "embedding"]
        .iter()
        .all(|s| covers(s));
    verdict(
        worst < GRAD_MAX_REL_ERR && unchecked.is_empty() && coverage && secs < GRAD_BUDGET_S,
        format!(
            "{} groups over 2 cells x 2 attentions x {GRAD_SEEDS} seeds, max rel err {worst:.2e} at {worst_name} (limit {GRAD_MAX_REL_ERR:e}), {secs:.1}s",
            groups.len()
        ),
    )
}

// ---- 6

fn normalization() -> Result<Check> {
    let mut steps = 0usize;
    let mut worst_probs = 0.0f64;
    let mut worst_attention = 0.0f64;
    let mut worst_context = 0.0f64;
    let mut seed = 0u64;
    while steps < NORM_STEPS {
        let cell = if seed % 2 == 0 { CellKind::Lstm } else { CellKind::Gru };
        let att = if seed % 4 < 2 { AttentionKind::Additive } else { AttentionKind::Multiplicative };
        let cfg = ModelConfig {
            init_scale: 1.5,
            ..small_config(cell, att, 11, 1 + (seed % 3 == 0) as usize, 6, 5)
        };
        let model = Seq2SeqModel::<f64>::new(cfg, 1000 + seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        seed += 1;
        for _ in 0..10 {
            let n = rng.gen_range(1..15);
            let enc = model.encode(&random_tokens(&mut rng, 11, n))?;
            let mut state = model.initial_state(&enc);
            let mut prev = Vocabulary::SOS_ID;
            for _ in 0..20 {
                let out = model.decode_step(&state, prev, &enc)?;
                worst_probs = worst_probs.max((out.probs.iter().sum::<f64>() - 1.0).abs());
                worst_attention = worst_attention.max((out.attention.iter().sum::<f64>() - 1.0).abs());
                for (d, c) in out.context.iter().enumerate() {
                    let want: f64 = out.attention.iter().zip(&enc.states).map(|(a, s)| a * s[d]).sum();
                    worst_context = worst_context.max((want - c).abs());
                }
                steps += 1;
                prev = rng.gen_range(0..11);
                state = out.state;
            }
        }
    }
    // Crafted weights.
    let xs: Vec<Vec<f64>> = vec![vec![1.0, -2.0, 0.5], vec![4.0, 0.25, -1.0], vec![-3.0, 8.0, 2.0]];
    let mut crafted = true;
    for i in 0..3 {
        let mut w = vec![0.0; 3];
        w[i] = 1.0;
        crafted &= weighted_average(&w, &xs, 3) == xs[i];
    }
    let uniform = weighted_average(&[1.0 / 3.0; 3], &xs, 3);
    let mean = [2.0 / 3.0, 6.25 / 3.0, 1.5 / 3.0];
    crafted &= uniform.iter().zip(mean).all(|(a, b)| (a - b).abs() < 1e-12);
    verdict(
        worst_probs < NORM_TOL && worst_attention < NORM_TOL && worst_context < CONTEXT_TOL && crafted,
        format!(
            "{steps} steps on {seed} models: |sum p - 1| <= {worst_probs:.1e}, |sum a - 1| <= {worst_attention:.1e}, context err {worst_context:.1e}, one-hot/uniform {}",
            if crafted { "exact" } else { "WRONG" }
        ),
    )
}

// ---- 7

/// Log probabilities drawn from a seeded table keyed by (depth, previous
/// token); the state is the depth.
struct TableModel {
    vocab: usize,
    table: Vec<Vec<f64>>,
}

impl TableModel {
    fn new(vocab: usize, max_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = (0..(max_len + 1) * vocab)
            .map(|_| {
                let w: Vec<f64> = (0..vocab).map(|_| rng.gen_range(0.05..1.0f64).powi(3)).collect();
                let z: f64 = w.iter().sum();
                w.iter().map(|x| (x / z).ln()).collect()
            })
            .collect();
        TableModel { vocab, table }
    }
}

impl StepModel for TableModel {
    type State = usize;

    fn vocabulary_size(&self) -> usize {
        self.vocab
    }

    fn start(&self) -> usize {
        0
    }

    fn step(&self, depth: &usize, prev: u32) -> (Vec<f64>, usize) {
        (self.table[depth * self.vocab + prev as usize].clone(), depth + 1)
    }
}

/// Every sequence the search could return: EOS-terminated ones no longer
/// than `max_len` steps, plus the unterminated ones of exactly `max_len`
/// tokens. Sorted by score descending, then tokens (EOS included) ascending.
fn enumerate<M: StepModel>(m: &M, max_len: usize) -> Vec<(Vec<u32>, f64, bool)> {
    fn go<M: StepModel>(m: &M, st: &M::State, prefix: &mut Vec<u32>, lp: f64, left: usize, out: &mut Vec<(Vec<u32>, f64, bool)>) {
        if left == 0 {
            out.push((prefix.clone(), lp, false));
            return;
        }
        let prev = prefix.last().copied().unwrap_or(Vocabulary::SOS_ID);
        let (probs, next) = m.step(st, prev);
        for t in 0..m.vocabulary_size() as u32 {
            if t == Vocabulary::EOS_ID {
                out.push((prefix.clone(), lp + probs[t as usize], true));
            } else {
                prefix.push(t);
                go(m, &next, prefix, lp + probs[t as usize], left - 1, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(m, &m.start(), &mut Vec::new(), 0.0, max_len, &mut out);
    let key = |s: &(Vec<u32>, f64, bool)| {
        let mut k = s.0.clone();
        if s.2 {
            k.push(Vocabulary::EOS_ID);
        }
        k
    };
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| key(a).cmp(&key(b))));
    out
}

fn matches_enumeration<M: StepModel>(m: &M, max_len: usize) -> Result<bool> {
    let all = enumerate(m, max_len);
    let got = beam_decode(m, all.len(), max_len, BeamOptions::default())?;
    if got.pruned || got.candidates.len() != all.len() {
        return Ok(false);
    }
    Ok(got
        .candidates
        .iter()
        .zip(&all)
        .all(|(c, e)| c.tokens == e.0 && c.complete == e.2 && (c.log_prob - e.1).abs() < 1e-9))
}

/// Teacher-forced log probability through the raw decoder step.
fn teacher_forced(model: &Seq2SeqModel<f64>, input: &[u32], tokens: &[u32], complete: bool) -> Result<f64> {
    let enc = model.encode(input)?;
    let mut state = model.initial_state(&enc);
    let mut prev = Vocabulary::SOS_ID;
    let mut total = 0.0;
    for &t in tokens.iter().chain(complete.then_some(&Vocabulary::EOS_ID)) {
        let out = model.decode_step(&state, prev, &enc)?;
        total += out.log_probs[t as usize];
        state = out.state;
        prev = t;
    }
    Ok(total)
}

fn beam_correctness() -> Result<Check> {
    // (a)
    let mut greedy_mismatch = 0;
    for seed in 0..GREEDY_MODELS {
        let cell = if seed % 2 == 0 { CellKind::Lstm } else { CellKind::Gru };
        let cfg = ModelConfig {
            init_scale: 1.0,
            ..small_config(cell, AttentionKind::Additive, 10, 1, 6, 4)
        };
        let model = Seq2SeqModel::<f32>::new(cfg, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 500);
        let n = rng.gen_range(1..9);
        let st = model.stepper(&random_tokens(&mut rng, 10, n))?;
        let beam = beam_decode(&st, 1, default_max_len(n), BeamOptions::default())?;
        if beam.candidates[0].tokens != greedy_decode(&st, default_max_len(n)) {
            greedy_mismatch += 1;
        }
    }
    // (b)
    let mut enum_cases = 0;
    let mut enum_mismatch = 0;
    for seed in 0..20u64 {
        for max_len in 1..=5 {
            enum_cases += 1;
            enum_mismatch += usize::from(!matches_enumeration(&TableModel::new(5, max_len, seed), max_len)?);
        }
    }
    for seed in 0..6u64 {
        let model = Seq2SeqModel::<f64>::new(
            ModelConfig {
                init_scale: 1.0,
                ..small_config(CellKind::Lstm, AttentionKind::Additive, 5, 1, 4, 3)
            },
            seed,
        )?;
        let st = model.stepper(&[3, 4, 3])?;
        for max_len in [3, 4] {
            enum_cases += 1;
            enum_mismatch += usize::from(!matches_enumeration(&st, max_len)?);
        }
    }
    // (c)
    let mut worst = 0.0f64;
    let mut scored = 0;
    for seed in 0..30u64 {
        let model = Seq2SeqModel::<f64>::new(
            ModelConfig {
                init_scale: 1.0,
                ..small_config(CellKind::Gru, AttentionKind::Multiplicative, 12, 1, 6, 5)
            },
            seed,
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 900);
        let n = rng.gen_range(1..8);
        let input = random_tokens(&mut rng, 12, n);
        let st = model.stepper(&input)?;
        for c in beam_decode(&st, 5, default_max_len(n), BeamOptions::default())?.candidates {
            worst = worst.max((teacher_forced(&model, &input, &c.tokens, c.complete)? - c.log_prob).abs());
            scored += 1;
        }
    }
    verdict(
        greedy_mismatch == 0 && enum_mismatch == 0 && worst < RESCORE_TOL,
        format!(
            "k=1 vs greedy {greedy_mismatch}/{GREEDY_MODELS} differ; enumeration {enum_mismatch}/{enum_cases} differ; rescoring {scored} candidates, max err {worst:.1e}"
        ),
    )
}

// ---- 8

fn test_pairs(pairs: &[BugFixPair]) -> Vec<TestPair> {
    pairs.iter().map(TestPair::from).collect()
}

fn perfect_of(report: &EvalReport, pairs: &[BugFixPair]) -> Vec<(AbstractedMethod, IdMapping)> {
    report.perfect_pairs[0].iter().map(|&i| (pairs[i].fixed.clone(), pairs[i].mapping.clone())).collect()
}

fn end_to_end() -> Result<Check> {
    let start = Instant::now();
    let corpus = generate_synthetic_corpus(E2E_PAIRS, &MutationKind::ALL, E2E_SEED)?;
    let bundle = dedup_and_split(corpus, Bucket::Small, E2E_SEED)?;
    let vocab = bundle.vocabulary.clone();
    let cfg = ModelConfig {
        max_epochs: E2E_EPOCHS,
        ..ModelConfig::tiny(vocab.len(), E2E_UNITS)
    };
    let train_set = encode_split(&bundle.train, &vocab)?;
    let valid_set = encode_split(&bundle.validation, &vocab)?;
    let mut model = Seq2SeqModel::<f32>::new(cfg.clone(), E2E_SEED)?;
    let cps = train(&mut model, &train_set, &valid_set, E2E_SEED, &mut |r| {
        eprintln!("  [8] epoch {:>2} train {:.4} valid {:.4} lr {}", r.epoch, r.train_loss, r.validation_loss, r.learning_rate)
    })?;
    let best = select_best(&cps)?;
    let params = best.parameters.as_ref().context("best checkpoint keeps its parameters")?;
    let model = Seq2SeqModel::<f32>::from_parameters(cfg, params.iter().map(|&x| x as f32).collect())?;

    let opts = |k: usize| EvalOptions {
        beams: vec![k],
        max_len: None,
        beam_options: BeamOptions::default(),
    };
    let train_report = evaluate(&model, &vocab, &test_pairs(&bundle.train), &opts(5), None)?;

    let seen: BTreeSet<(String, String)> = bundle.all().map(|p| (p.buggy.to_string(), p.fixed.to_string())).collect();
    let held_cfg = SyntheticConfig {
        names: NamePool::HeldOut,
        ..SyntheticConfig::new(E2E_HELD_OUT_PAIRS, &MutationKind::ALL, 99)
    };
    let held: Vec<BugFixPair> = generate_synthetic_samples(&held_cfg)?
        .into_iter()
        .map(|s| s.pair)
        .filter(|p| !seen.contains(&(p.buggy.to_string(), p.fixed.to_string())))
        .collect();
    let held_report = evaluate(&model, &vocab, &test_pairs(&held), &opts(10), None)?;
    let secs = start.elapsed().as_secs_f64();

    let train_rate = train_report.rows[0].perfect_rate;
    let held_rate = held_report.rows[0].perfect_rate;
    let mut perfect = perfect_of(&train_report, &bundle.train);
    perfect.extend(perfect_of(&held_report, &held));
    *TRAINED.lock().expect("not poisoned") = Some(Trained {
        model,
        vocabulary: vocab,
        test: test_pairs(&bundle.test),
        reports: vec![train_report, held_report],
        perfect,
    });
    verdict(
        train_rate >= E2E_TRAIN_MIN && held_rate >= E2E_HELD_OUT_MIN && secs < E2E_BUDGET_S,
        format!(
            "train@5 {:.2}% (min {:.0}%), held-out@10 {:.2}% over {} pairs (min {:.0}%), best epoch {} valid loss {:.4}, {secs:.0}s",
            100.0 * train_rate,
            100.0 * E2E_TRAIN_MIN,
            100.0 * held_rate,
            held.len(),
            100.0 * E2E_HELD_OUT_MIN,
            best.epoch,
            best.validation_loss
        ),
    )
}

// ---- 9

fn metric_definitions() -> Result<Check> {
    let reported = 100.0 * rate(538, 5835);
    let arithmetic = format!("{reported:.2}") == format!("{REPORTED_RATE_PERCENT:.2}");
    let guard = TRAINED.lock().expect("not poisoned");
    let Some(t) = guard.as_ref() else {
        bail!("needs the model trained by criterion 8");
    };
    let schedule = EvalOptions {
        beams: vec![1, 5, 10, 25, 50],
        max_len: None,
        beam_options: BeamOptions::default(),
    };
    let test_report = evaluate(&t.model, &t.vocabulary, &t.test, &schedule, None)?;
    let rows = t.reports.iter().chain([&test_report]).flat_map(|r| &r.rows);
    let coverage_ok = rows.clone().all(|r| r.theoretical_bug_coverage >= r.perfect_rate);
    let predictions: Vec<AbstractedMethod> = t.perfect.iter().map(|(m, _)| m.clone()).collect();
    let syntax = syntactic_correctness(&predictions);
    // Independent of the placeholder substitution: concretize with the
    // pair's real mapping and parse.
    let parses = t
        .perfect
        .iter()
        .filter(|(m, map)| {
            concretize(m, map)
                .ok()
                .and_then(|s| tokenize(&s).ok())
                .is_some_and(|toks| parse_single_method(&toks).is_ok())
        })
        .count();
    let placeholder_agrees = predictions.iter().all(is_syntactically_valid);
    verdict(
        arithmetic && coverage_ok && !predictions.is_empty() && syntax == 1.0 && parses == predictions.len() && placeholder_agrees,
        format!(
            "rate(538, 5835) = {reported:.4}%; bug coverage >= perfect on {} rows; syntactic {:.2}% over {} perfect predictions ({parses} parse with real names); test split perfect@50 {:.2}%",
            rows.count(),
            100.0 * syntax,
            predictions.len(),
            100.0 * test_report.rows.last().expect("five rows").perfect_rate
        ),
    )
}

// ---- 10

fn run_cli(args: &[&str]) -> Result<String> {
    let mut out = Vec::new();
    let mut argv = vec!["patchnmt"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out);
    if code != cli::EXIT_OK {
        bail!("`{}` exited with {code}", args.join(" "));
    }
    Ok(String::from_utf8(out)?)
}

fn pipeline_once(root: &Path) -> Result<String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    run_cli(&["synth", "--pairs", "240", "--seed", "21", "--out", &p("corpus")])?;
    run_cli(&["mine", "--roots", &p("corpus"), "--ext", ".java", "--max-files", "5", "--out", &p("mined")])?;
    run_cli(&["idioms", "--in", &p("mined"), "--top", "0.05", "--out", &p("idioms.txt")])?;
    run_cli(&["extract", "--in", &p("mined"), "--idioms", &p("idioms.txt"), "--out", &p("extracted")])?;
    run_cli(&[
        "dataset", "build", "--bucket", "small", "--seed", "42", "--cap", "10", "--idioms", &p("idioms.txt"), "--in",
        &p("extracted"), "--out", &p("bundle"),
    ])?;
    run_cli(&[
        "train", "--bundle", &p("bundle"), "--seed", "42", "--units", "16", "--embedding", "16", "--decoder-layers", "1",
        "--epochs", "3", "--out", &p("model"),
    ])?;
    run_cli(&["evaluate", "--model", &p("model"), "--bundle", &p("bundle"), "--beams", "1,5", "--out", &p("report.csv")])
}

fn files_under(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root)?.to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Result<Check> {
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let table_a = pipeline_once(a.path())?;
    let table_b = pipeline_once(b.path())?;
    let (fa, fb) = (files_under(a.path())?, files_under(b.path())?);
    let mut differing = Vec::new();
    for f in &fa {
        if fs::read(a.path().join(f))? != fs::read(b.path().join(f)).unwrap_or_default() {
            differing.push(f.display().to_string());
        }
    }
    let required = ["bundle/train.buggy", "bundle/vocab.txt", "model/history.json", "model/model.json", "report.csv"];
    let has_required = required.iter().all(|r| fa.iter().any(|f| f == Path::new(r)));
    let report = fs::read_to_string(a.path().join("report.csv"))?;
    let coverage_ok = report.lines().skip(1).all(|l| {
        let c: Vec<f64> = l.split(',').take(7).map(|x| x.parse().unwrap_or(f64::NAN)).collect();
        c.len() == 7 && c[6] >= c[3]
    });
    verdict(
        fa == fb && differing.is_empty() && has_required && table_a == table_b && report.lines().count() == 3 && coverage_ok,
        format!(
            "{} files compared across two runs, {} differ{}",
            fa.len(),
            differing.len(),
            differing.first().map(|d| format!(" (first: {d})")).unwrap_or_default()
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Result<Check>); 10] = [
        (1, "abstraction round trip", round_trip),
        (2, "mapping closure", mapping_closure),
        (3, "diff soundness", diff_soundness),
        (4, "filter/bucket conformance", filter_bucket_split),
        (5, "gradient check", gradient_check),
        (6, "normalization", normalization),
        (7, "beam correctness", beam_correctness),
        (8, "end-to-end learning", end_to_end),
        (9, "metric definitions", metric_definitions),
        (10, "determinism", determinism),
    ];
    let only: Option<BTreeSet<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failures = 0;
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(c)) => c,
            Ok(Err(e)) => Check {
                pass: false,
                detail: format!("error: {e:#}"),
            },
            Err(_) => Check {
                pass: false,
                detail: "panicked".into(),
            },
        };
        failures += usize::from(!outcome.pass);
        println!(
            "criterion {n:>2} {} {name}: {} [{:.1}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
