//! Greedy and beam-search decoding, and the buggy-method-to-patches
//! pipeline built on them.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::dataset::{OutOfVocabulary, Vocabulary};
use crate::lexabs::{abstract_method, concretize, tokenize, AbstractedMethod, IdMapping, IdiomSet, LexError, UnmappableId};
use crate::seq2seq::{DecoderState, ModelError, Seq2SeqModel, Stepper};

/// Anything that emits a next-token log distribution from a state.
pub trait StepModel {
    type State: Clone;
    fn vocabulary_size(&self) -> usize;
    fn start(&self) -> Self::State;
    /// Log probabilities over the whole vocabulary, and the next state.
    fn step(&self, state: &Self::State, prev: u32) -> (Vec<f64>, Self::State);
}

impl<F: Float> StepModel for Stepper<'_, F> {
    type State = DecoderState<F>;

    fn vocabulary_size(&self) -> usize {
        Stepper::vocabulary_size(self)
    }

    fn start(&self) -> DecoderState<F> {
        Stepper::start(self).clone()
    }

    fn step(&self, state: &DecoderState<F>, prev: u32) -> (Vec<f64>, DecoderState<F>) {
        let out = Stepper::step(self, state, prev);
        (out.log_probs, out.state)
    }
}

/// Output budget for an input of `n` tokens.
pub fn default_max_len(n: usize) -> usize {
    2 * n + 10
}

/// Highest entry, lowest index among equals.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Picks the most likely token at each step until EOS or `max_len` steps.
/// The returned tokens exclude EOS.
pub fn greedy_decode<M: StepModel>(model: &M, max_len: usize) -> Vec<u32> {
    let mut state = model.start();
    let mut prev = Vocabulary::SOS_ID;
    let mut out = Vec::new();
    for _ in 0..max_len {
        let (lp, next) = model.step(&state, prev);
        let t = argmax(&lp) as u32;
        if t == Vocabulary::EOS_ID {
            break;
        }
        out.push(t);
        state = next;
        prev = t;
    }
    out
}

#[derive(Clone, Debug)]
pub struct Hypothesis<S> {
    pub tokens: Vec<u32>,
    pub log_prob: f64,
    pub state: S,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSequence {
    /// Tokens without the trailing EOS.
    pub tokens: Vec<u32>,
    pub log_prob: f64,
    /// False when the hypothesis ran out of steps before emitting EOS.
    pub complete: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BeamOutput {
    /// Best first.
    pub candidates: Vec<ScoredSequence>,
    /// True when some expansion was dropped for lack of room in the beam.
    pub pruned: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("beam width must be at least 1")]
    ZeroBeam,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BeamOptions {
    /// Rank the final candidates by log probability per emitted token
    /// (EOS included) instead of the raw sum.
    pub length_normalize: bool,
}

/// Ranking key: score descending, then token sequence (with EOS for
/// finished hypotheses) ascending.
fn rank(a_score: f64, a: (&[u32], bool), b_score: f64, b: (&[u32], bool)) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| {
        let ea = a.0.iter().copied().chain(a.1.then_some(Vocabulary::EOS_ID));
        let eb = b.0.iter().copied().chain(b.1.then_some(Vocabulary::EOS_ID));
        ea.cmp(eb)
    })
}

/// Beam search over the full vocabulary. Finished hypotheses stay in the
/// beam and compete with live ones on raw log probability; the search
/// stops when every hypothesis has emitted EOS or after `max_len` steps.
/// Hypotheses still live at that point are returned as incomplete.
pub fn beam_decode<M: StepModel>(model: &M, k: usize, max_len: usize, options: BeamOptions) -> Result<BeamOutput, DecodeError> {
    if k == 0 {
        return Err(DecodeError::ZeroBeam);
    }
    let mut beam = alloc::vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        state: model.start(),
        complete: false,
    }];
    let mut pruned = false;
    for _ in 0..max_len {
        if beam.iter().all(|h| h.complete) {
            break;
        }
        // (score, parent, token) with token None for a carried-over finished hypothesis
        let mut cands: Vec<(f64, usize, Option<u32>)> = Vec::new();
        let mut next_states = Vec::with_capacity(beam.len());
        for (i, h) in beam.iter().enumerate() {
            if h.complete {
                cands.push((h.log_prob, i, None));
                next_states.push(None);
                continue;
            }
            let prev = h.tokens.last().copied().unwrap_or(Vocabulary::SOS_ID);
            let (lp, st) = model.step(&h.state, prev);
            next_states.push(Some(st));
            // no more than k expansions of one parent can survive
            let mut order: Vec<u32> = (0..lp.len() as u32).collect();
            order.sort_by(|&a, &b| lp[b as usize].total_cmp(&lp[a as usize]).then(a.cmp(&b)));
            if order.len() > k {
                pruned = true;
                order.truncate(k);
            }
            for t in order {
                cands.push((h.log_prob + lp[t as usize], i, Some(t)));
            }
        }
        let key = |c: &(f64, usize, Option<u32>)| {
            let h = &beam[c.1];
            match c.2 {
                None => (h.tokens.clone(), true),
                Some(t) if t == Vocabulary::EOS_ID => (h.tokens.clone(), true),
                Some(t) => {
                    let mut v = h.tokens.clone();
                    v.push(t);
                    (v, false)
                }
            }
        };
        let mut keyed: Vec<(f64, usize, Option<u32>, (Vec<u32>, bool))> =
            cands.iter().map(|c| (c.0, c.1, c.2, key(c))).collect();
        keyed.sort_by(|a, b| rank(a.0, (&a.3 .0, a.3 .1), b.0, (&b.3 .0, b.3 .1)));
        if keyed.len() > k {
            pruned = true;
            keyed.truncate(k);
        }
        beam = keyed
            .into_iter()
            .map(|(score, parent, tok, (tokens, complete))| {
                let state = match (tok, &next_states[parent]) {
                    (Some(_), Some(st)) => st.clone(),
                    _ => beam[parent].state.clone(),
                };
                Hypothesis {
                    tokens,
                    log_prob: score,
                    state,
                    complete,
                }
            })
            .collect();
    }
    let mut candidates: Vec<ScoredSequence> = beam
        .into_iter()
        .map(|h| ScoredSequence {
            tokens: h.tokens,
            log_prob: h.log_prob,
            complete: h.complete,
        })
        .collect();
    let score = |c: &ScoredSequence| {
        if options.length_normalize {
            c.log_prob / (c.tokens.len() + usize::from(c.complete)).max(1) as f64
        } else {
            c.log_prob
        }
    };
    candidates.sort_by(|a, b| rank(score(a), (&a.tokens, a.complete), score(b), (&b.tokens, b.complete)));
    let mut seen = alloc::collections::BTreeSet::new();
    candidates.retain(|c| seen.insert(c.tokens.clone()));
    Ok(BeamOutput { candidates, pruned })
}

/// Log probability of emitting `tokens` then EOS under teacher forcing.
pub fn rescore<M: StepModel>(model: &M, tokens: &[u32], complete: bool) -> f64 {
    let mut state = model.start();
    let mut prev = Vocabulary::SOS_ID;
    let mut total = 0.0;
    let tail = complete.then_some(Vocabulary::EOS_ID);
    for t in tokens.iter().copied().chain(tail) {
        let (lp, next) = model.step(&state, prev);
        total += lp[t as usize];
        state = next;
        prev = t;
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub rank: usize,
    pub score: f64,
    pub complete: bool,
    pub abstracted: AbstractedMethod,
    /// Concretized source, absent in mapping-free mode.
    pub source: Option<Result<String, UnmappableId>>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Vocabulary(#[from] OutOfVocabulary),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("input contains no tokens")]
    Empty,
}

#[derive(Clone, Copy, Debug)]
pub struct PredictOptions {
    pub beam: usize,
    /// Overrides [`default_max_len`].
    pub max_len: Option<usize>,
    /// Skip concretization and return abstracted candidates only.
    pub mapping_free: bool,
    pub beam_options: BeamOptions,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            beam: 50,
            max_len: None,
            mapping_free: false,
            beam_options: BeamOptions::default(),
        }
    }
}

/// Abstracts `buggy_source` with a fresh mapping, beam-decodes it and maps
/// each candidate back to source. Candidates using IDs the input never
/// bound come back as [`UnmappableId`].
pub fn predict_patches<F: Float>(
    model: &Seq2SeqModel<F>,
    vocabulary: &Vocabulary,
    idioms: &IdiomSet,
    buggy_source: &str,
    options: &PredictOptions,
) -> Result<Vec<Patch>, PredictError> {
    let tokens = tokenize(buggy_source)?;
    if tokens.is_empty() {
        return Err(PredictError::Empty);
    }
    let mut mapping = IdMapping::new();
    let abstracted = abstract_method(&tokens, idioms, &mut mapping);
    let ids = vocabulary.encode(&abstracted)?;
    let stepper = model.stepper(&ids)?;
    let max_len = options.max_len.unwrap_or_else(|| default_max_len(ids.len()));
    let out = beam_decode(&stepper, options.beam, max_len, options.beam_options)?;
    Ok(out
        .candidates
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let abstracted = vocabulary.decode(&c.tokens);
            let source = (!options.mapping_free).then(|| concretize(&abstracted, &mapping));
            Patch {
                rank: i + 1,
                score: c.log_prob,
                complete: c.complete,
                abstracted,
                source,
            }
        })
        .collect())
}
