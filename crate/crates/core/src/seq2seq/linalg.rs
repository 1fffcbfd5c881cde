//! Dense kernels over row-major slices. Reductions use eight partial sums
//! in a fixed order, so results are deterministic and vectorize well.

use alloc::vec::Vec;
use num_traits::Float;

#[inline]
pub(crate) fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s = s + *x * *y;
    }
    s
}

#[inline]
pub(crate) fn axpy<F: Float>(out: &mut [F], a: F, x: &[F]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, x) in out.iter_mut().zip(x) {
        *o = *o + a * *x;
    }
}

#[inline]
pub(crate) fn add_assign<F: Float>(out: &mut [F], x: &[F]) {
    for (o, x) in out.iter_mut().zip(x) {
        *o = *o + *x;
    }
}

/// `out += W x` with `W` of shape `out.len() × x.len()`.
pub(crate) fn gemv_acc<F: Float>(out: &mut [F], w: &[F], x: &[F]) {
    debug_assert_eq!(w.len(), out.len() * x.len());
    for (o, row) in out.iter_mut().zip(w.chunks_exact(x.len())) {
        *o = *o + dot(row, x);
    }
}

/// `out += W^T y` with `W` of shape `y.len() × out.len()`.
pub(crate) fn gemv_t_acc<F: Float>(out: &mut [F], w: &[F], y: &[F]) {
    debug_assert_eq!(w.len(), out.len() * y.len());
    for (&yi, row) in y.iter().zip(w.chunks_exact(out.len())) {
        if yi != F::zero() {
            axpy(out, yi, row);
        }
    }
}

/// `G += y x^T`.
pub(crate) fn outer_acc<F: Float>(g: &mut [F], y: &[F], x: &[F]) {
    debug_assert_eq!(g.len(), y.len() * x.len());
    for (&yi, row) in y.iter().zip(g.chunks_exact_mut(x.len())) {
        if yi != F::zero() {
            axpy(row, yi, x);
        }
    }
}

#[inline]
pub(crate) fn sigmoid<F: Float>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Softmax computed in double precision. Returns the probabilities and
/// the log-normalizer.
pub(crate) fn softmax_f64<F: Float>(logits: &[F]) -> (Vec<f64>, f64) {
    let xs: Vec<f64> = logits.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| libm::exp(x - max)).collect();
    let sum: f64 = exps.iter().sum();
    let log_z = max + libm::log(sum);
    (exps.into_iter().map(|e| e / sum).collect(), log_z)
}

pub(crate) fn log_softmax_f64<F: Float>(logits: &[F]) -> Vec<f64> {
    let (_, log_z) = softmax_f64(logits);
    logits.iter().map(|x| x.to_f64().unwrap_or(f64::NAN) - log_z).collect()
}

pub(crate) fn cast<F: Float>(x: f64) -> F {
    F::from(x).expect("float conversion")
}
