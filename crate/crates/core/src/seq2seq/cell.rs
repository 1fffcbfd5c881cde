//! LSTM and GRU cells with hand-written backward passes.
//!
//! LSTM gates are packed `[i, f, g, o]` with one bias. GRU follows the
//! common two-bias form: `n = tanh(W_in x + b_in + r * (W_hn h + b_hn))`
//! and `h' = (1 - z) * n + z * h`, gates packed `[r, z, n]`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_traits::Float;

use super::config::CellKind;
use super::linalg::{gemv_acc, gemv_t_acc, outer_acc, add_assign, sigmoid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Slot {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Slot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn of<'a, F>(&self, p: &'a [F]) -> &'a [F] {
        &p[self.range()]
    }

    pub fn of_mut<'a, F>(&self, p: &'a mut [F]) -> &'a mut [F] {
        &mut p[self.range()]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CellIdx {
    pub kind: CellKind,
    pub input: usize,
    pub hidden: usize,
    pub wx: Slot,
    pub wh: Slot,
    pub b: Slot,
    /// Recurrent bias, GRU only.
    pub bh: Option<Slot>,
}

impl CellIdx {
    pub fn gates(kind: CellKind) -> usize {
        match kind {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

/// Recurrent state of one cell. `c` is empty for GRU cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState<F> {
    pub h: Vec<F>,
    pub c: Vec<F>,
}

impl<F: Float> CellState<F> {
    pub fn zeros(kind: CellKind, hidden: usize) -> Self {
        let c = match kind {
            CellKind::Lstm => vec![F::zero(); hidden],
            CellKind::Gru => Vec::new(),
        };
        CellState {
            h: vec![F::zero(); hidden],
            c,
        }
    }
}

pub(crate) struct StepCache<F> {
    x: Vec<F>,
    h_prev: Vec<F>,
    c_prev: Vec<F>,
    /// Post-activation gates.
    gates: Vec<F>,
    /// LSTM: tanh(c). GRU: W_hn h + b_hn.
    aux: Vec<F>,
}

pub(crate) fn forward<F: Float>(p: &[F], idx: &CellIdx, x: &[F], prev: &CellState<F>) -> (CellState<F>, StepCache<F>) {
    let h = idx.hidden;
    debug_assert_eq!(x.len(), idx.input);
    match idx.kind {
        CellKind::Lstm => {
            let mut pre = idx.b.of(p).to_vec();
            gemv_acc(&mut pre, idx.wx.of(p), x);
            gemv_acc(&mut pre, idx.wh.of(p), &prev.h);
            for (k, v) in pre.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(*v) };
            }
            let mut c = vec![F::zero(); h];
            let mut tc = vec![F::zero(); h];
            let mut hn = vec![F::zero(); h];
            for k in 0..h {
                c[k] = pre[h + k] * prev.c[k] + pre[k] * pre[2 * h + k];
                tc[k] = c[k].tanh();
                hn[k] = pre[3 * h + k] * tc[k];
            }
            let cache = StepCache {
                x: x.to_vec(),
                h_prev: prev.h.clone(),
                c_prev: prev.c.clone(),
                gates: pre,
                aux: tc,
            };
            (CellState { h: hn, c }, cache)
        }
        CellKind::Gru => {
            let bh = idx.bh.expect("gru cell has a recurrent bias");
            let mut gx = idx.b.of(p).to_vec();
            gemv_acc(&mut gx, idx.wx.of(p), x);
            let mut gh = bh.of(p).to_vec();
            gemv_acc(&mut gh, idx.wh.of(p), &prev.h);
            let mut gates = vec![F::zero(); 3 * h];
            let mut hn = vec![F::zero(); h];
            for k in 0..h {
                let r = sigmoid(gx[k] + gh[k]);
                let z = sigmoid(gx[h + k] + gh[h + k]);
                let n = (gx[2 * h + k] + r * gh[2 * h + k]).tanh();
                gates[k] = r;
                gates[h + k] = z;
                gates[2 * h + k] = n;
                hn[k] = (F::one() - z) * n + z * prev.h[k];
            }
            let cache = StepCache {
                x: x.to_vec(),
                h_prev: prev.h.clone(),
                c_prev: Vec::new(),
                gates,
                aux: gh[2 * h..].to_vec(),
            };
            (CellState { h: hn, c: Vec::new() }, cache)
        }
    }
}

/// Gradients flowing back from one step.
pub(crate) struct StepGrad<F> {
    pub dx: Vec<F>,
    pub dh_prev: Vec<F>,
    pub dc_prev: Vec<F>,
}

/// Accumulates parameter gradients into `g` given the loss gradient with
/// respect to the step's output `h` (and `c` for LSTM cells).
pub(crate) fn backward<F: Float>(
    p: &[F],
    g: &mut [F],
    idx: &CellIdx,
    cache: &StepCache<F>,
    dh: &[F],
    dc: &[F],
) -> StepGrad<F> {
    let h = idx.hidden;
    let one = F::one();
    let mut dx = vec![F::zero(); idx.input];
    let mut dh_prev = vec![F::zero(); h];
    match idx.kind {
        CellKind::Lstm => {
            let gt = &cache.gates;
            let tc = &cache.aux;
            let mut dpre = vec![F::zero(); 4 * h];
            let mut dc_prev = vec![F::zero(); h];
            for k in 0..h {
                let (i, f, gg, o) = (gt[k], gt[h + k], gt[2 * h + k], gt[3 * h + k]);
                let dcell = dc[k] + dh[k] * o * (one - tc[k] * tc[k]);
                let d_o = dh[k] * tc[k];
                let d_i = dcell * gg;
                let d_g = dcell * i;
                let d_f = dcell * cache.c_prev[k];
                dc_prev[k] = dcell * f;
                dpre[k] = d_i * i * (one - i);
                dpre[h + k] = d_f * f * (one - f);
                dpre[2 * h + k] = d_g * (one - gg * gg);
                dpre[3 * h + k] = d_o * o * (one - o);
            }
            outer_acc(idx.wx.of_mut(g), &dpre, &cache.x);
            outer_acc(idx.wh.of_mut(g), &dpre, &cache.h_prev);
            add_assign(idx.b.of_mut(g), &dpre);
            gemv_t_acc(&mut dx, idx.wx.of(p), &dpre);
            gemv_t_acc(&mut dh_prev, idx.wh.of(p), &dpre);
            StepGrad { dx, dh_prev, dc_prev }
        }
        CellKind::Gru => {
            let bh = idx.bh.expect("gru cell has a recurrent bias");
            let gt = &cache.gates;
            let hn = &cache.aux;
            let mut dgx = vec![F::zero(); 3 * h];
            let mut dgh = vec![F::zero(); 3 * h];
            for k in 0..h {
                let (r, z, n) = (gt[k], gt[h + k], gt[2 * h + k]);
                let dn = dh[k] * (one - z);
                let dz = dh[k] * (cache.h_prev[k] - n);
                dh_prev[k] = dh[k] * z;
                let dnpre = dn * (one - n * n);
                let dr = dnpre * hn[k];
                let drpre = dr * r * (one - r);
                let dzpre = dz * z * (one - z);
                dgx[k] = drpre;
                dgx[h + k] = dzpre;
                dgx[2 * h + k] = dnpre;
                dgh[k] = drpre;
                dgh[h + k] = dzpre;
                dgh[2 * h + k] = dnpre * r;
            }
            outer_acc(idx.wx.of_mut(g), &dgx, &cache.x);
            add_assign(idx.b.of_mut(g), &dgx);
            outer_acc(idx.wh.of_mut(g), &dgh, &cache.h_prev);
            add_assign(bh.of_mut(g), &dgh);
            gemv_t_acc(&mut dx, idx.wx.of(p), &dgx);
            gemv_t_acc(&mut dh_prev, idx.wh.of(p), &dgh);
            StepGrad {
                dx,
                dh_prev,
                dc_prev: Vec::new(),
            }
        }
    }
}
