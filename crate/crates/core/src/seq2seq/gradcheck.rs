//! Central finite-difference check of [`Seq2SeqModel::loss_and_grad`].

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelError, Seq2SeqModel};

/// Worst disagreement found in one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub analytic: f64,
    pub numeric: f64,
}

/// `|a - n| / max(|a|, |n|, floor)`. The floor keeps coordinates whose
/// true gradient is near zero from being judged on rounding noise in the
/// difference quotient.
pub fn relative_error(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub const FLOOR: f64 = 1e-6;

/// Compares analytic gradients of the summed NLL over `batch` with
/// central differences for up to `per_group` coordinates of each group.
pub fn check_gradients(
    model: &Seq2SeqModel<f64>,
    batch: &[(Vec<u32>, Vec<u32>)],
    eps: f64,
    per_group: usize,
    seed: u64,
) -> Result<Vec<GroupCheck>, ModelError> {
    let mut grad = vec![0.0; model.parameter_count()];
    for (x, y) in batch {
        model.loss_and_grad(x, y, &mut grad)?;
    }
    let loss = |m: &Seq2SeqModel<f64>| -> Result<f64, ModelError> {
        let mut total = 0.0;
        for (x, y) in batch {
            total += m.nll(x, y)?;
        }
        Ok(total)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut out = Vec::new();
    for g in model.parameter_groups() {
        let k = per_group.min(g.len());
        let mut worst = GroupCheck {
            name: g.name.clone(),
            checked: k,
            max_rel_error: 0.0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in sample(&mut rng, g.len(), k) {
            let at = g.offset + i;
            let orig = probe.parameters()[at];
            probe.parameters_mut()[at] = orig + eps;
            let up = loss(&probe)?;
            probe.parameters_mut()[at] = orig - eps;
            let down = loss(&probe)?;
            probe.parameters_mut()[at] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = relative_error(grad[at], numeric, FLOOR);
            if err >= worst.max_rel_error {
                worst.max_rel_error = err;
                worst.analytic = grad[at];
                worst.numeric = numeric;
            }
        }
        out.push(worst);
    }
    Ok(out)
}
