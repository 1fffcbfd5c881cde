//! Test-set metrics: perfect predictions per beam width, syntactic
//! correctness of candidates, edit-operation coverage and timing.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dataset::{BugFixPair, Vocabulary};
use crate::decode::{beam_decode, default_max_len, BeamOptions, DecodeError};
use crate::lexabs::{placeholder_lexeme, pretty_print, substitute, tokenize, AbstractedMethod};
use crate::seq2seq::{ModelError, Seq2SeqModel};
use crate::treediff::{parse_single_method, EditAction, Operation};

/// `count / total`, 0 for an empty total.
pub fn rate(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// True iff some candidate equals `fixed` token for token.
pub fn is_perfect(candidates: &[AbstractedMethod], fixed: &AbstractedMethod) -> bool {
    candidates.iter().any(|c| c == fixed)
}

/// Fills every ID with a placeholder lexeme, then lexes and parses the
/// result as a single method.
pub fn is_syntactically_valid(candidate: &AbstractedMethod) -> bool {
    let Ok(lexemes) = substitute(candidate, |id| Some(placeholder_lexeme(id))) else {
        return false;
    };
    let Ok(tokens) = tokenize(&pretty_print(&lexemes)) else {
        return false;
    };
    parse_single_method(&tokens).is_ok()
}

pub fn syntactic_correctness(candidates: &[AbstractedMethod]) -> f64 {
    rate(candidates.iter().filter(|c| is_syntactically_valid(c)).count(), candidates.len())
}

/// What evaluation needs from a test pair: both abstracted methods and
/// the operations of its edit script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestPair {
    pub buggy: AbstractedMethod,
    pub fixed: AbstractedMethod,
    pub operations: Vec<Operation>,
}

impl From<&BugFixPair> for TestPair {
    fn from(p: &BugFixPair) -> Self {
        TestPair {
            buggy: p.buggy.clone(),
            fixed: p.fixed.clone(),
            operations: p.actions.iter().map(EditAction::operation).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperationSets {
    /// Operations appearing in perfectly predicted fixes.
    pub learned: BTreeSet<Operation>,
    /// Operations appearing anywhere in the test set.
    pub overall: BTreeSet<Operation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coverage {
    pub sets: OperationSets,
    /// `|learned| / |overall|`.
    pub operation_coverage: f64,
    /// Share of pairs whose operations all lie in `learned`.
    pub theoretical_bug_coverage: f64,
}

/// `perfect` holds the operations of perfectly fixed pairs, `all` those
/// of every test pair.
pub fn operation_coverage(perfect: &[&[Operation]], all: &[&[Operation]]) -> Coverage {
    let learned: BTreeSet<Operation> = perfect.iter().flat_map(|a| a.iter().copied()).collect();
    let overall: BTreeSet<Operation> = all.iter().flat_map(|a| a.iter().copied()).collect();
    let covered = all.iter().filter(|a| a.iter().all(|x| learned.contains(x))).count();
    Coverage {
        operation_coverage: rate(learned.len(), overall.len()),
        theoretical_bug_coverage: rate(covered, all.len()),
        sets: OperationSets { learned, overall },
    }
}

/// Perfect counts for each width in `ks`, reading the top-k prefix of one
/// ranked candidate list per pair.
pub fn prefix_counts(ranked: &[Vec<AbstractedMethod>], fixed: &[&AbstractedMethod], ks: &[usize]) -> Vec<usize> {
    ks.iter()
        .map(|&k| {
            ranked
                .iter()
                .zip(fixed)
                .filter(|(c, f)| is_perfect(&c[..k.min(c.len())], f))
                .count()
        })
        .collect()
}

/// Widths 1, 5, 10, ..., 50.
pub fn default_beam_schedule() -> Vec<usize> {
    core::iter::once(1).chain((1..=10).map(|i| 5 * i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub beam: usize,
    pub perfect_count: usize,
    pub total: usize,
    pub perfect_rate: f64,
    pub syntactic_correct_rate: f64,
    pub operation_coverage: f64,
    pub theoretical_bug_coverage: f64,
    /// Seconds; present only when a clock was supplied.
    pub mean_time_per_bug: Option<f64>,
    pub mean_time_per_patch: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Pairs containing tokens outside the model vocabulary. They count
    /// towards every total but can never be fixed.
    pub untranslatable: usize,
    /// Indices of perfectly fixed test pairs, one list per row.
    pub perfect_pairs: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("beam schedule is empty")]
    EmptySchedule,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model expects {model} tokens but the vocabulary has {vocabulary}")]
    VocabularyMismatch { model: usize, vocabulary: usize },
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub beams: Vec<usize>,
    pub max_len: Option<usize>,
    pub beam_options: BeamOptions,
}

/// Decodes every test pair independently at each width in the schedule
/// and computes one report row per width. `clock`, when given, returns
/// seconds and enables the timing columns.
pub fn evaluate<F: Float>(
    model: &Seq2SeqModel<F>,
    vocabulary: &Vocabulary,
    test: &[TestPair],
    options: &EvalOptions,
    clock: Option<&dyn Fn() -> f64>,
) -> Result<EvalReport, EvalError> {
    if options.beams.is_empty() {
        return Err(EvalError::EmptySchedule);
    }
    if options.beams.contains(&0) {
        return Err(DecodeError::ZeroBeam.into());
    }
    if model.vocabulary_size() != vocabulary.len() {
        return Err(EvalError::VocabularyMismatch {
            model: model.vocabulary_size(),
            vocabulary: vocabulary.len(),
        });
    }
    let encoded: Vec<Option<Vec<u32>>> = test.iter().map(|p| vocabulary.encode(&p.buggy).ok()).collect();
    let fixed_ok: Vec<bool> = test.iter().map(|p| vocabulary.encode(&p.fixed).is_ok()).collect();
    let untranslatable = encoded
        .iter()
        .zip(&fixed_ok)
        .filter(|(e, f)| e.is_none() || !**f)
        .count();
    let all_ops: Vec<&[Operation]> = test.iter().map(|p| p.operations.as_slice()).collect();
    let mut rows = Vec::new();
    let mut perfect_pairs = Vec::new();
    for &k in &options.beams {
        let mut perfect = Vec::new();
        let mut generated: Vec<AbstractedMethod> = Vec::new();
        let mut seconds = 0.0;
        let mut decoded = 0usize;
        for (i, (p, ids)) in test.iter().zip(&encoded).enumerate() {
            let Some(ids) = ids else { continue };
            let max_len = options.max_len.unwrap_or_else(|| default_max_len(ids.len()));
            let t0 = clock.map(|c| c());
            let stepper = model.stepper(ids)?;
            let out = beam_decode(&stepper, k, max_len, options.beam_options)?;
            if let (Some(c), Some(t0)) = (clock, t0) {
                seconds += c() - t0;
            }
            decoded += 1;
            let cands: Vec<AbstractedMethod> = out.candidates.iter().map(|c| vocabulary.decode(&c.tokens)).collect();
            if fixed_ok[i] && is_perfect(&cands, &p.fixed) {
                perfect.push(i);
            }
            generated.extend(cands);
        }
        let perfect_ops: Vec<&[Operation]> = perfect.iter().map(|&i| test[i].operations.as_slice()).collect();
        let cov = operation_coverage(&perfect_ops, &all_ops);
        let timed = clock.is_some();
        rows.push(EvalRow {
            beam: k,
            perfect_count: perfect.len(),
            total: test.len(),
            perfect_rate: rate(perfect.len(), test.len()),
            syntactic_correct_rate: syntactic_correctness(&generated),
            operation_coverage: cov.operation_coverage,
            theoretical_bug_coverage: cov.theoretical_bug_coverage,
            mean_time_per_bug: timed.then(|| seconds / decoded.max(1) as f64),
            mean_time_per_patch: timed.then(|| seconds / generated.len().max(1) as f64),
        });
        perfect_pairs.push(perfect);
    }
    Ok(EvalReport {
        rows,
        untranslatable,
        perfect_pairs,
    })
}

/// Evaluation on a test set mined elsewhere and abstracted with the same
/// idioms; tokens the model never saw make a pair untranslatable rather
/// than failing the run.
pub fn external_eval<F: Float>(
    model: &Seq2SeqModel<F>,
    vocabulary: &Vocabulary,
    external_test: &[TestPair],
    options: &EvalOptions,
    clock: Option<&dyn Fn() -> f64>,
) -> Result<EvalReport, EvalError> {
    evaluate(model, vocabulary, external_test, options, clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treediff::{EditOp, NodeType};
    use alloc::vec;

    fn act(kind: u8, nt: NodeType, ctx: NodeType) -> Operation {
        let op = match kind {
            0 => EditOp::Update {
                node: 0,
                new_label: "x".into(),
            },
            _ => EditOp::Delete { node: 0 },
        };
        EditAction {
            node_type: nt,
            context_type: ctx,
            op,
        }
        .operation()
    }

    #[test]
    fn rates() {
        assert!((rate(538, 5835) * 100.0 - 9.22).abs() < 0.005);
        assert_eq!(rate(0, 10), 0.0);
        assert_eq!(rate(0, 0), 0.0);
        let f = AbstractedMethod::from_line("void METHOD_1 ( ) { }");
        let near = AbstractedMethod::from_line("void METHOD_2 ( ) { }");
        assert!(!is_perfect(&[near.clone()], &f));
        assert!(is_perfect(&[near, f.clone()], &f));
    }

    #[test]
    fn syntax() {
        let ok = AbstractedMethod::from_line("int METHOD_1 ( TYPE_1 VAR_1 ) { return VAR_1 . METHOD_2 ( STRING_1 , INT_1 ) ; }");
        let bad = AbstractedMethod::from_line("int METHOD_1 ( ) { return 0 ; } }");
        assert!(is_syntactically_valid(&ok));
        assert!(!is_syntactically_valid(&bad));
        assert_eq!(syntactic_correctness(&[ok, bad]), 0.5);
    }

    #[test]
    fn coverage() {
        use NodeType::*;
        let a = [act(0, Literal, Return)];
        let b = [act(0, Literal, Return), act(1, Invocation, Block)];
        let c = [act(1, If, Block)];
        let all: [&[Operation]; 3] = [&a, &b, &c];
        let cov = operation_coverage(&[&a], &all);
        assert_eq!(cov.sets.overall.len(), 3);
        assert!((cov.operation_coverage - 1.0 / 3.0).abs() < 1e-12);
        assert!((cov.theoretical_bug_coverage - 1.0 / 3.0).abs() < 1e-12);
        assert!(cov.sets.learned.is_subset(&cov.sets.overall));
        let full = operation_coverage(&all, &all);
        assert_eq!((full.operation_coverage, full.theoretical_bug_coverage), (1.0, 1.0));
        let none = operation_coverage(&[], &[]);
        assert_eq!(none.operation_coverage, 0.0);
    }

    #[test]
    fn prefix_counts_are_monotone() {
        let m = |s: &str| AbstractedMethod::from_line(s);
        let ranked = vec![vec![m("a"), m("b"), m("c")], vec![m("x"), m("y")], vec![m("q")]];
        let fixed = [m("c"), m("x"), m("z")];
        let refs: Vec<&AbstractedMethod> = fixed.iter().collect();
        assert_eq!(prefix_counts(&ranked, &refs, &[1, 2, 3, 50]), vec![1, 1, 2, 2]);
        assert_eq!(default_beam_schedule(), vec![1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
    }
}
