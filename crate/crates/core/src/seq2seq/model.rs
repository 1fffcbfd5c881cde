use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cell::{self, CellIdx, CellState, Slot, StepCache};
use super::config::{AttentionKind, CellKind, ConfigError, ModelConfig};
use super::linalg::{add_assign, axpy, cast, dot, gemv_acc, gemv_t_acc, log_softmax_f64, outer_acc, softmax_f64};
use crate::dataset::Vocabulary;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("input sequence is empty")]
    EmptyInput,
    #[error("token index {token} is out of range for a vocabulary of {vocabulary_size}")]
    TokenOutOfRange { token: u32, vocabulary_size: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("parameter {0} is not finite")]
    NonFinite(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A named parameter tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ParamGroup {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
enum AttIdx {
    Additive { wk: Slot, wq: Slot, b: Slot, v: Slot },
    Multiplicative { w: Slot },
}

#[derive(Clone, Debug)]
struct Layout {
    groups: Vec<ParamGroup>,
    embedding: Slot,
    encoder: Vec<[CellIdx; 2]>,
    init: Vec<(Slot, Slot)>,
    decoder: Vec<CellIdx>,
    attention: AttIdx,
    out_w: Slot,
    out_b: Slot,
    total: usize,
}

struct Builder {
    groups: Vec<ParamGroup>,
    total: usize,
}

impl Builder {
    fn add(&mut self, name: String, rows: usize, cols: usize) -> Slot {
        let s = Slot {
            offset: self.total,
            rows,
            cols,
        };
        self.groups.push(ParamGroup {
            name,
            offset: self.total,
            rows,
            cols,
        });
        self.total += rows * cols;
        s
    }

    fn cell(&mut self, prefix: &str, kind: CellKind, input: usize, hidden: usize) -> CellIdx {
        let g = CellIdx::gates(kind) * hidden;
        let wx = self.add(format!("{prefix}.w_x"), g, input);
        let wh = self.add(format!("{prefix}.w_h"), g, hidden);
        let (b, bh) = match kind {
            CellKind::Lstm => (self.add(format!("{prefix}.b"), 1, g), None),
            CellKind::Gru => (
                self.add(format!("{prefix}.b_x"), 1, g),
                Some(self.add(format!("{prefix}.b_h"), 1, g)),
            ),
        };
        CellIdx {
            kind,
            input,
            hidden,
            wx,
            wh,
            b,
            bh,
        }
    }
}

impl Layout {
    fn new(cfg: &ModelConfig) -> Layout {
        let mut b = Builder {
            groups: Vec::new(),
            total: 0,
        };
        let (h, e, v) = (cfg.hidden_units, cfg.embedding_dim, cfg.vocabulary_size);
        let kind = cfg.cell_kind;
        let embedding = b.add(String::from("embedding"), v, e);
        let encoder = (0..cfg.encoder_layers)
            .map(|l| {
                let input = if l == 0 { e } else { 2 * h };
                [
                    b.cell(&format!("encoder.{l}.fwd"), kind, input, h),
                    b.cell(&format!("encoder.{l}.bwd"), kind, input, h),
                ]
            })
            .collect();
        let decoder = (0..cfg.decoder_layers)
            .map(|l| {
                let input = if l == 0 { e + 2 * h } else { h };
                b.cell(&format!("decoder.{l}"), kind, input, h)
            })
            .collect();
        let init = (0..cfg.decoder_layers)
            .map(|l| (b.add(format!("bridge.{l}.w"), h, 2 * h), b.add(format!("bridge.{l}.b"), 1, h)))
            .collect();
        let attention = match cfg.attention {
            AttentionKind::Additive => AttIdx::Additive {
                wk: b.add(String::from("attention.w_key"), h, 2 * h),
                wq: b.add(String::from("attention.w_query"), h, h),
                b: b.add(String::from("attention.b"), 1, h),
                v: b.add(String::from("attention.v"), 1, h),
            },
            AttentionKind::Multiplicative => AttIdx::Multiplicative {
                w: b.add(String::from("attention.w"), h, 2 * h),
            },
        };
        let out_w = b.add(String::from("output.w"), v, 3 * h);
        let out_b = b.add(String::from("output.b"), 1, v);
        Layout {
            groups: b.groups,
            embedding,
            encoder,
            init,
            decoder,
            attention,
            out_w,
            out_b,
            total: b.total,
        }
    }
}

/// Top-layer encoder outputs `h_j = [fwd_j; bwd_j]`, one per input
/// position, plus the attention keys derived from them.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderStates<F> {
    pub states: Vec<Vec<F>>,
    keys: Vec<Vec<F>>,
}

impl<F> EncoderStates<F> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Per-layer recurrent state of the decoder, and the previous attention
/// context that is fed into the next step.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState<F> {
    pub layers: Vec<CellState<F>>,
    pub context: Vec<F>,
}

#[derive(Clone, Debug)]
pub struct StepOutput<F> {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub attention: Vec<f64>,
    pub context: Vec<F>,
    pub state: DecoderState<F>,
}

struct Attended<F> {
    weights: Vec<F>,
    weights64: Vec<f64>,
    context: Vec<F>,
    /// Additive scoring only: `tanh(key_j + query)` row per position.
    hidden: Vec<Vec<F>>,
}

struct DecCache<F> {
    prev: u32,
    cells: Vec<StepCache<F>>,
    att: Attended<F>,
    s: Vec<F>,
    o: Vec<F>,
}

struct Bridge<F> {
    z: Vec<F>,
    h0: Vec<Vec<F>>,
}

#[derive(Clone, Debug)]
pub struct Seq2SeqModel<F> {
    config: ModelConfig,
    layout: Layout,
    params: Vec<F>,
}

impl<F: PartialEq> PartialEq for Seq2SeqModel<F> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.params == other.params
    }
}

impl<F: Float> Seq2SeqModel<F> {
    /// Parameters drawn uniformly from `[-init_scale, init_scale]`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let total = layout.total;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = config.init_scale;
        let params = (0..total)
            .map(|_| if s > 0.0 { cast(rng.gen_range(-s..=s)) } else { F::zero() })
            .collect();
        Ok(Seq2SeqModel { config, layout, params })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let params = vec![F::zero(); layout.total];
        Ok(Seq2SeqModel { config, layout, params })
    }

    pub fn from_parameters(config: ModelConfig, params: Vec<F>) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(ModelError::ParameterCount {
                expected: layout.total,
                got: params.len(),
            });
        }
        for g in &layout.groups {
            if params[g.offset..g.offset + g.len()].iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite(g.name.clone()));
            }
        }
        Ok(Seq2SeqModel { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[F] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.layout.total
    }

    pub fn parameter_groups(&self) -> &[ParamGroup] {
        &self.layout.groups
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.params.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// The same model at another precision.
    pub fn cast<G: Float>(&self) -> Seq2SeqModel<G> {
        Seq2SeqModel {
            config: self.config.clone(),
            layout: self.layout.clone(),
            params: self.params.iter().map(|x| cast(x.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.config.vocabulary_size
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<(), ModelError> {
        let v = self.config.vocabulary_size;
        match tokens.iter().find(|&&t| t as usize >= v) {
            Some(&token) => Err(ModelError::TokenOutOfRange {
                token,
                vocabulary_size: v,
            }),
            None => Ok(()),
        }
    }

    fn embed(&self, layout: &Layout, token: u32) -> &[F] {
        let e = self.config.embedding_dim;
        let off = layout.embedding.offset + token as usize * e;
        &self.params[off..off + e]
    }

    fn encode_inner(&self, layout: &Layout, input: &[u32]) -> (EncoderStates<F>, Vec<[Vec<StepCache<F>>; 2]>) {
        let n = input.len();
        let h = self.config.hidden_units;
        let kind = self.config.cell_kind;
        let p = &self.params;
        let mut xs: Vec<Vec<F>> = input.iter().map(|&t| self.embed(layout, t).to_vec()).collect();
        let mut caches = Vec::with_capacity(layout.encoder.len());
        for cells in &layout.encoder {
            let mut out = vec![vec![F::zero(); 2 * h]; n];
            let mut fwd = Vec::with_capacity(n);
            let mut st = CellState::zeros(kind, h);
            for j in 0..n {
                let (next, cache) = cell::forward(p, &cells[0], &xs[j], &st);
                out[j][..h].copy_from_slice(&next.h);
                fwd.push(cache);
                st = next;
            }
            let mut bwd: Vec<Option<StepCache<F>>> = (0..n).map(|_| None).collect();
            let mut st = CellState::zeros(kind, h);
            for j in (0..n).rev() {
                let (next, cache) = cell::forward(p, &cells[1], &xs[j], &st);
                out[j][h..].copy_from_slice(&next.h);
                bwd[j] = Some(cache);
                st = next;
            }
            caches.push([fwd, bwd.into_iter().map(|c| c.expect("filled")).collect()]);
            xs = out;
        }
        let keys = xs
            .iter()
            .map(|hj| {
                let w = match &layout.attention {
                    AttIdx::Additive { wk, .. } => wk,
                    AttIdx::Multiplicative { w } => w,
                };
                let mut k = vec![F::zero(); h];
                gemv_acc(&mut k, w.of(p), hj);
                k
            })
            .collect();
        (EncoderStates { states: xs, keys }, caches)
    }

    /// Runs the bidirectional encoder over `input`.
    pub fn encode(&self, input: &[u32]) -> Result<EncoderStates<F>, ModelError> {
        if input.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        self.check_tokens(input)?;
        Ok(self.encode_inner(&self.layout, input).0)
    }

    fn bridge(&self, layout: &Layout, enc: &EncoderStates<F>) -> (DecoderState<F>, Bridge<F>) {
        let h = self.config.hidden_units;
        let n = enc.states.len();
        let mut z = Vec::with_capacity(2 * h);
        z.extend_from_slice(&enc.states[n - 1][..h]);
        z.extend_from_slice(&enc.states[0][h..]);
        let mut h0s = Vec::new();
        let layers = layout
            .init
            .iter()
            .map(|(w, b)| {
                let mut h0 = b.of(&self.params).to_vec();
                gemv_acc(&mut h0, w.of(&self.params), &z);
                for x in h0.iter_mut() {
                    *x = x.tanh();
                }
                h0s.push(h0.clone());
                let mut st = CellState::zeros(self.config.cell_kind, h);
                st.h = h0;
                st
            })
            .collect();
        let state = DecoderState {
            layers,
            context: vec![F::zero(); 2 * h],
        };
        (state, Bridge { z, h0: h0s })
    }

    /// Decoder state before the first step: each layer's hidden state is
    /// `tanh(W [fwd_n; bwd_1] + b)`, cell memories and the fed-back
    /// context start at zero.
    pub fn initial_state(&self, enc: &EncoderStates<F>) -> DecoderState<F> {
        self.bridge(&self.layout, enc).0
    }

    fn attend(&self, layout: &Layout, enc: &EncoderStates<F>, s: &[F]) -> Attended<F> {
        let p = &self.params;
        let h = self.config.hidden_units;
        let mut hidden = Vec::new();
        let scores: Vec<F> = match &layout.attention {
            AttIdx::Additive { wq, b, v, .. } => {
                let mut q = b.of(p).to_vec();
                gemv_acc(&mut q, wq.of(p), s);
                let v = v.of(p);
                enc.keys
                    .iter()
                    .map(|k| {
                        let t: Vec<F> = k.iter().zip(&q).map(|(a, b)| (*a + *b).tanh()).collect();
                        let e = dot(v, &t);
                        hidden.push(t);
                        e
                    })
                    .collect()
            }
            AttIdx::Multiplicative { .. } => enc.keys.iter().map(|k| dot(s, k)).collect(),
        };
        let (weights64, _) = softmax_f64(&scores);
        let weights: Vec<F> = weights64.iter().map(|&a| cast(a)).collect();
        let context = weighted_average(&weights, &enc.states, 2 * h);
        Attended {
            weights,
            weights64,
            context,
            hidden,
        }
    }

    fn step_inner(&self, layout: &Layout, enc: &EncoderStates<F>, state: &DecoderState<F>, prev: u32) -> (DecoderState<F>, DecCache<F>, Vec<F>) {
        let p = &self.params;
        let mut x = self.embed(layout, prev).to_vec();
        x.extend_from_slice(&state.context);
        let mut layers = Vec::with_capacity(layout.decoder.len());
        let mut cells = Vec::with_capacity(layout.decoder.len());
        for (l, idx) in layout.decoder.iter().enumerate() {
            let (next, cache) = cell::forward(p, idx, &x, &state.layers[l]);
            x = next.h.clone();
            layers.push(next);
            cells.push(cache);
        }
        let s = x;
        let att = self.attend(layout, enc, &s);
        let mut o = s.clone();
        o.extend_from_slice(&att.context);
        let mut logits = layout.out_b.of(p).to_vec();
        gemv_acc(&mut logits, layout.out_w.of(p), &o);
        let new_state = DecoderState {
            layers,
            context: att.context.clone(),
        };
        let cache = DecCache {
            prev,
            cells,
            att,
            s,
            o,
        };
        (new_state, cache, logits)
    }

    /// One decoder step from `state` after emitting `prev`.
    pub fn decode_step(&self, state: &DecoderState<F>, prev: u32, enc: &EncoderStates<F>) -> Result<StepOutput<F>, ModelError> {
        self.check_tokens(&[prev])?;
        Ok(self.step_with(&self.layout, state, prev, enc))
    }

    fn step_with(&self, layout: &Layout, state: &DecoderState<F>, prev: u32, enc: &EncoderStates<F>) -> StepOutput<F> {
        let (state, cache, logits) = self.step_inner(layout, enc, state, prev);
        let (probs, _) = softmax_f64(&logits);
        StepOutput {
            probs,
            log_probs: log_softmax_f64(&logits),
            attention: cache.att.weights64,
            context: state.context.clone(),
            state,
        }
    }

    /// Encodes `input` once for step-by-step decoding.
    pub fn stepper(&self, input: &[u32]) -> Result<Stepper<'_, F>, ModelError> {
        let enc = self.encode(input)?;
        let start = self.bridge(&self.layout, &enc).0;
        Ok(Stepper { model: self, enc, start })
    }

    /// Teacher-forced negative log likelihood of `target` followed by EOS.
    pub fn nll(&self, input: &[u32], target: &[u32]) -> Result<f64, ModelError> {
        self.check_tokens(target)?;
        let st = self.stepper(input)?;
        let mut state = st.start.clone();
        let mut prev = Vocabulary::SOS_ID;
        let mut loss = 0.0;
        for &y in target.iter().chain(core::iter::once(&Vocabulary::EOS_ID)) {
            let (next, _, logits) = self.step_inner(&self.layout, &st.enc, &state, prev);
            loss -= log_softmax_f64(&logits)[y as usize];
            state = next;
            prev = y;
        }
        Ok(loss)
    }

    /// Teacher-forced NLL of `target` followed by EOS; adds its gradient
    /// with respect to every parameter into `grad`.
    pub fn loss_and_grad(&self, input: &[u32], target: &[u32], grad: &mut [F]) -> Result<f64, ModelError> {
        if input.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        self.check_tokens(input)?;
        self.check_tokens(target)?;
        assert_eq!(grad.len(), self.params.len(), "gradient buffer size");
        let layout = &self.layout;
        let p = &self.params;
        let h = self.config.hidden_units;
        let n = input.len();
        let kind = self.config.cell_kind;

        let (enc, enc_caches) = self.encode_inner(layout, input);
        let (mut state, bridge) = self.bridge(layout, &enc);
        let mut steps = Vec::with_capacity(target.len() + 1);
        let mut loss = 0.0;
        let mut prev = Vocabulary::SOS_ID;
        for &y in target.iter().chain(core::iter::once(&Vocabulary::EOS_ID)) {
            let (next, cache, logits) = self.step_inner(layout, &enc, &state, prev);
            let (probs, log_z) = softmax_f64(&logits);
            loss += log_z - logits[y as usize].to_f64().unwrap_or(f64::NAN);
            steps.push((cache, probs, y));
            state = next;
            prev = y;
        }

        let mut d_states = vec![vec![F::zero(); 2 * h]; n];
        let mut d_keys = vec![vec![F::zero(); h]; n];
        let mut d_layers: Vec<(Vec<F>, Vec<F>)> = layout
            .decoder
            .iter()
            .map(|_| {
                let c = match kind {
                    CellKind::Lstm => vec![F::zero(); h],
                    CellKind::Gru => Vec::new(),
                };
                (vec![F::zero(); h], c)
            })
            .collect();
        let mut d_ctx_next = vec![F::zero(); 2 * h];
        let e = self.config.embedding_dim;
        for (cache, probs, y) in steps.iter().rev() {
            let mut dlogits: Vec<F> = probs.iter().map(|&q| cast(q)).collect();
            dlogits[*y as usize] = dlogits[*y as usize] - F::one();
            outer_acc(layout.out_w.of_mut(grad), &dlogits, &cache.o);
            add_assign(layout.out_b.of_mut(grad), &dlogits);
            let mut d_o = vec![F::zero(); 3 * h];
            gemv_t_acc(&mut d_o, layout.out_w.of(p), &dlogits);
            let mut ds = d_o[..h].to_vec();
            let mut dc = d_o[h..].to_vec();
            add_assign(&mut dc, &d_ctx_next);

            // context = sum_j a_j h_j
            let a = &cache.att.weights;
            let da: Vec<F> = enc.states.iter().map(|hj| dot(&dc, hj)).collect();
            for (j, dh) in d_states.iter_mut().enumerate() {
                axpy(dh, a[j], &dc);
            }
            let mean = dot(a, &da);
            let de: Vec<F> = a.iter().zip(&da).map(|(&aj, &dj)| aj * (dj - mean)).collect();
            match &layout.attention {
                AttIdx::Additive { wq, b, v, .. } => {
                    let vv = v.of(p).to_vec();
                    let mut dq = vec![F::zero(); h];
                    for (j, t) in cache.att.hidden.iter().enumerate() {
                        axpy(v.of_mut(grad), de[j], t);
                        let dpre: Vec<F> = (0..h).map(|k| de[j] * vv[k] * (F::one() - t[k] * t[k])).collect();
                        add_assign(&mut d_keys[j], &dpre);
                        add_assign(&mut dq, &dpre);
                    }
                    add_assign(b.of_mut(grad), &dq);
                    outer_acc(wq.of_mut(grad), &dq, &cache.s);
                    gemv_t_acc(&mut ds, wq.of(p), &dq);
                }
                AttIdx::Multiplicative { .. } => {
                    for (j, k) in enc.keys.iter().enumerate() {
                        axpy(&mut ds, de[j], k);
                        axpy(&mut d_keys[j], de[j], &cache.s);
                    }
                }
            }

            let mut dh_above = ds;
            for l in (0..layout.decoder.len()).rev() {
                let (dh_carry, dc_carry) = &d_layers[l];
                let mut dh = dh_carry.clone();
                add_assign(&mut dh, &dh_above);
                let sg = cell::backward(p, grad, &layout.decoder[l], &cache.cells[l], &dh, dc_carry);
                d_layers[l] = (sg.dh_prev, sg.dc_prev);
                dh_above = sg.dx;
            }
            // layer 0 input is [embedding(prev); previous context]
            let off = layout.embedding.offset + cache.prev as usize * e;
            add_assign(&mut grad[off..off + e], &dh_above[..e]);
            d_ctx_next = dh_above[e..].to_vec();
        }

        // bridge: h0_l = tanh(W_l z + b_l), z = [fwd_n; bwd_1]
        let mut dz = vec![F::zero(); 2 * h];
        for (l, (w, b)) in layout.init.iter().enumerate() {
            let h0 = &bridge.h0[l];
            let dpre: Vec<F> = d_layers[l].0.iter().zip(h0).map(|(&d, &x)| d * (F::one() - x * x)).collect();
            outer_acc(w.of_mut(grad), &dpre, &bridge.z);
            add_assign(b.of_mut(grad), &dpre);
            gemv_t_acc(&mut dz, w.of(p), &dpre);
        }
        add_assign(&mut d_states[n - 1][..h], &dz[..h]);
        add_assign(&mut d_states[0][h..], &dz[h..]);

        let wkey = match &layout.attention {
            AttIdx::Additive { wk, .. } => wk,
            AttIdx::Multiplicative { w } => w,
        };
        for j in 0..n {
            outer_acc(wkey.of_mut(grad), &d_keys[j], &enc.states[j]);
            gemv_t_acc(&mut d_states[j], wkey.of(p), &d_keys[j]);
        }

        let mut d_out = d_states;
        for (l, cells) in layout.encoder.iter().enumerate().rev() {
            let mut d_in = vec![vec![F::zero(); cells[0].input]; n];
            let zeros_c = || match kind {
                CellKind::Lstm => vec![F::zero(); h],
                CellKind::Gru => Vec::new(),
            };
            let (mut dh_next, mut dc_next) = (vec![F::zero(); h], zeros_c());
            for j in (0..n).rev() {
                let mut dh = dh_next.clone();
                add_assign(&mut dh, &d_out[j][..h]);
                let sg = cell::backward(p, grad, &cells[0], &enc_caches[l][0][j], &dh, &dc_next);
                add_assign(&mut d_in[j], &sg.dx);
                dh_next = sg.dh_prev;
                dc_next = sg.dc_prev;
            }
            let (mut dh_next, mut dc_next) = (vec![F::zero(); h], zeros_c());
            for j in 0..n {
                let mut dh = dh_next.clone();
                add_assign(&mut dh, &d_out[j][h..]);
                let sg = cell::backward(p, grad, &cells[1], &enc_caches[l][1][j], &dh, &dc_next);
                add_assign(&mut d_in[j], &sg.dx);
                dh_next = sg.dh_prev;
                dc_next = sg.dc_prev;
            }
            d_out = d_in;
        }
        for (j, &t) in input.iter().enumerate() {
            let off = layout.embedding.offset + t as usize * e;
            add_assign(&mut grad[off..off + e], &d_out[j]);
        }
        Ok(loss)
    }
}

/// `sum_j w_j x_j` over vectors of length `dim`.
pub fn weighted_average<F: Float>(weights: &[F], xs: &[Vec<F>], dim: usize) -> Vec<F> {
    let mut out = vec![F::zero(); dim];
    for (w, x) in weights.iter().zip(xs) {
        axpy(&mut out, *w, x);
    }
    out
}

/// An encoded input ready for step-by-step decoding.
pub struct Stepper<'m, F> {
    model: &'m Seq2SeqModel<F>,
    enc: EncoderStates<F>,
    start: DecoderState<F>,
}

impl<F: Float> Stepper<'_, F> {
    pub fn start(&self) -> &DecoderState<F> {
        &self.start
    }

    pub fn encoder_states(&self) -> &EncoderStates<F> {
        &self.enc
    }

    pub fn vocabulary_size(&self) -> usize {
        self.model.config.vocabulary_size
    }

    pub fn step(&self, state: &DecoderState<F>, prev: u32) -> StepOutput<F> {
        self.model.step_with(&self.model.layout, state, prev, &self.enc)
    }
}
