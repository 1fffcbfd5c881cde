use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, Optimizer};
use super::linalg::cast;
use super::model::{ModelError, Seq2SeqModel};
use crate::dataset::{BugFixPair, OutOfVocabulary, Vocabulary};

/// One evaluation point of a training run. Only the checkpoint with the
/// lowest validation loss so far keeps its parameters; earlier ones drop
/// them when superseded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    pub step: u64,
    /// Mean per-token NLL over the epoch's training batches.
    pub train_loss: f64,
    /// Mean per-token NLL over the validation split.
    pub validation_loss: f64,
    pub learning_rate: f64,
    pub parameters: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedPair {
    pub input: Vec<u32>,
    pub target: Vec<u32>,
}

pub fn encode_split(pairs: &[BugFixPair], vocabulary: &Vocabulary) -> Result<Vec<EncodedPair>, OutOfVocabulary> {
    pairs
        .iter()
        .map(|p| {
            Ok(EncodedPair {
                input: vocabulary.encode(&p.buggy)?,
                target: vocabulary.encode(&p.fixed)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub learning_rate: f64,
    pub improved: bool,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("training split is empty")]
    EmptyTrainingSet,
    #[error("validation split is empty")]
    EmptyValidationSet,
    #[error(
        "loss became {loss} at epoch {epoch}, step {step} with learning rate {learning_rate}; \
         lower the learning rate or the gradient clip"
    )]
    NonFinite {
        epoch: usize,
        step: u64,
        learning_rate: f64,
        loss: f64,
    },
    #[error("no checkpoints to select from")]
    NoCheckpoints,
    #[error("empty configuration grid")]
    EmptyGrid,
}

fn mean_token_nll<F: Float>(model: &Seq2SeqModel<F>, pairs: &[EncodedPair]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for p in pairs {
        total += model.nll(&p.input, &p.target)?;
        tokens += p.target.len() + 1;
    }
    Ok(total / tokens as f64)
}

/// Groups pair indices by input-length bucket, shuffles inside each
/// bucket, cuts batches and shuffles the batch order.
fn make_batches(pairs: &[EncodedPair], spec: &[usize], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); spec.len() + 1];
    for (i, p) in pairs.iter().enumerate() {
        let b = spec.iter().position(|&ub| p.input.len() <= ub).unwrap_or(spec.len());
        buckets[b].push(i);
    }
    let mut batches = Vec::new();
    for mut b in buckets {
        b.shuffle(rng);
        batches.extend(b.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Teacher-forced training of `model` in place. Returns one checkpoint per
/// evaluation, in epoch order. The learning rate is multiplied by
/// `lr_decay` whenever validation loss fails to improve.
pub fn train<F: Float>(
    model: &mut Seq2SeqModel<F>,
    train_set: &[EncodedPair],
    validation: &[EncodedPair],
    seed: u64,
    observer: &mut dyn FnMut(&EpochReport),
) -> Result<Vec<Checkpoint>, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if validation.is_empty() {
        return Err(TrainError::EmptyValidationSet);
    }
    let cfg: ModelConfig = model.config().clone();
    cfg.validate().map_err(ModelError::from)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lr = cfg.learning_rate;
    let mut grad = vec![F::zero(); model.parameter_count()];
    let mut adam = match cfg.optimizer {
        Optimizer::Adam => Some(Adam {
            m: vec![0.0; grad.len()],
            v: vec![0.0; grad.len()],
            t: 0,
        }),
        Optimizer::Sgd => None,
    };
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut best: Option<usize> = None;
    let mut stale = 0usize;
    let mut step = 0u64;
    for epoch in 1..=cfg.max_epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0usize;
        let mut out_of_steps = false;
        for batch in make_batches(train_set, &cfg.bucket_spec, cfg.batch_size, &mut rng) {
            grad.iter_mut().for_each(|g| *g = F::zero());
            let mut loss = 0.0;
            for &i in &batch {
                let p = &train_set[i];
                loss += model.loss_and_grad(&p.input, &p.target, &mut grad)?;
                epoch_tokens += p.target.len() + 1;
            }
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFinite {
                    epoch,
                    step,
                    learning_rate: lr,
                    loss,
                });
            }
            epoch_loss += loss;
            let scale = 1.0 / batch.len() as f64;
            let norm = libm::sqrt(grad.iter().map(|g| g.to_f64().unwrap_or(0.0).powi(2)).sum::<f64>()) * scale;
            let scale = if cfg.grad_clip > 0.0 && norm > cfg.grad_clip {
                scale * cfg.grad_clip / norm
            } else {
                scale
            };
            let params = model.parameters_mut();
            match adam.as_mut() {
                None => {
                    let k: F = cast(lr * scale);
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p = *p - k * *g;
                    }
                }
                Some(a) => {
                    a.t += 1;
                    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
                    let c1 = 1.0 - libm::pow(b1, a.t as f64);
                    let c2 = 1.0 - libm::pow(b2, a.t as f64);
                    for (i, (p, g)) in params.iter_mut().zip(&grad).enumerate() {
                        let g = g.to_f64().unwrap_or(0.0) * scale;
                        a.m[i] = b1 * a.m[i] + (1.0 - b1) * g;
                        a.v[i] = b2 * a.v[i] + (1.0 - b2) * g * g;
                        let upd = lr * (a.m[i] / c1) / (libm::sqrt(a.v[i] / c2) + eps);
                        *p = *p - cast(upd);
                    }
                }
            }
            step += 1;
            if cfg.max_steps.is_some_and(|m| step >= m) {
                out_of_steps = true;
                break;
            }
        }
        let last = epoch == cfg.max_epochs || out_of_steps;
        if epoch % cfg.eval_interval != 0 && !last {
            continue;
        }
        let validation_loss = mean_token_nll(model, validation)?;
        let train_loss = epoch_loss / epoch_tokens.max(1) as f64;
        if !validation_loss.is_finite() {
            return Err(TrainError::NonFinite {
                epoch,
                step,
                learning_rate: lr,
                loss: validation_loss,
            });
        }
        let improved = best.is_none_or(|b| validation_loss < checkpoints[b].validation_loss);
        let report = EpochReport {
            epoch,
            step,
            train_loss,
            validation_loss,
            learning_rate: lr,
            improved,
        };
        let mut cp = Checkpoint {
            epoch,
            step,
            train_loss,
            validation_loss,
            learning_rate: lr,
            parameters: None,
        };
        if improved {
            if let Some(b) = best {
                checkpoints[b].parameters = None;
            }
            cp.parameters = Some(model.to_f64());
            best = Some(checkpoints.len());
            stale = 0;
        } else {
            lr *= cfg.lr_decay;
            stale += 1;
        }
        checkpoints.push(cp);
        observer(&report);
        if out_of_steps || cfg.patience.is_some_and(|p| stale >= p) {
            break;
        }
    }
    Ok(checkpoints)
}

/// The checkpoint with the lowest validation loss, earliest epoch on ties.
pub fn select_best(checkpoints: &[Checkpoint]) -> Result<&Checkpoint, TrainError> {
    checkpoints
        .iter()
        .min_by(|a, b| a.validation_loss.total_cmp(&b.validation_loss).then(a.epoch.cmp(&b.epoch)))
        .ok_or(TrainError::NoCheckpoints)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub config: ModelConfig,
    pub checkpoint: Checkpoint,
    /// Best validation loss reached by every config, in grid order.
    pub losses: Vec<f64>,
}

/// Trains every config from the same seed and keeps the one whose best
/// checkpoint has the lowest validation loss (first in grid order on ties).
pub fn grid_search<F: Float>(
    grid: &[ModelConfig],
    train_set: &[EncodedPair],
    validation: &[EncodedPair],
    seed: u64,
    observer: &mut dyn FnMut(usize, &EpochReport),
) -> Result<GridResult, TrainError> {
    let mut winner: Option<(ModelConfig, Checkpoint)> = None;
    let mut losses = Vec::with_capacity(grid.len());
    for (i, cfg) in grid.iter().enumerate() {
        let mut model = Seq2SeqModel::<F>::new(cfg.clone(), seed)?;
        let cps = train(&mut model, train_set, validation, seed, &mut |r| observer(i, r))?;
        let best = select_best(&cps)?.clone();
        losses.push(best.validation_loss);
        if winner.as_ref().is_none_or(|(_, w)| best.validation_loss < w.validation_loss) {
            winner = Some((cfg.clone(), best));
        }
    }
    let (config, checkpoint) = winner.ok_or(TrainError::EmptyGrid)?;
    Ok(GridResult {
        config,
        checkpoint,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn pair(input: &[u32], target: &[u32]) -> EncodedPair {
        EncodedPair {
            input: input.to_vec(),
            target: target.to_vec(),
        }
    }

    fn cfg(epochs: usize) -> ModelConfig {
        ModelConfig {
            max_epochs: epochs,
            batch_size: 1,
            ..ModelConfig::tiny(8, 8)
        }
    }

    #[test]
    fn memorizes_one_pair() {
        let data = [pair(&[3, 4, 5], &[5, 6, 7])];
        let mut m = Seq2SeqModel::<f64>::new(cfg(1000), 3).unwrap();
        let cps = train(&mut m, &data, &data, 1, &mut |_| {}).unwrap();
        let loss = m.nll(&data[0].input, &data[0].target).unwrap();
        assert!(loss < 0.01, "loss {loss}");
        assert_eq!(cps.len(), 1000);
        assert!(cps.windows(2).all(|w| w[0].epoch < w[1].epoch));
        assert_eq!(cps.iter().filter(|c| c.parameters.is_some()).count(), 1);
        assert!(select_best(&cps).unwrap().parameters.is_some());
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let data = [pair(&[3, 4], &[5]), pair(&[6], &[7, 3])];
        let mut c = cfg(3);
        c.learning_rate = 0.0;
        let mut m = Seq2SeqModel::<f32>::new(c, 5).unwrap();
        let before = m.clone();
        let cps = train(&mut m, &data, &data, 1, &mut |_| {}).unwrap();
        assert_eq!(m, before);
        assert!(cps.iter().all(|c| c.validation_loss == cps[0].validation_loss));
    }

    #[test]
    fn same_seed_same_run() {
        let data: Vec<_> = (0..6).map(|i| pair(&[3 + i % 5, 4], &[7 - i % 4])).collect();
        let run = |opt| {
            let mut c = cfg(4);
            c.batch_size = 2;
            c.optimizer = opt;
            c.learning_rate = if opt == Optimizer::Adam { 0.01 } else { 0.5 };
            let mut m = Seq2SeqModel::<f32>::new(c, 9).unwrap();
            let cps = train(&mut m, &data, &data[..2], 4, &mut |_| {}).unwrap();
            (cps, m)
        };
        for opt in [Optimizer::Sgd, Optimizer::Adam] {
            let (a, ma) = run(opt);
            let (b, mb) = run(opt);
            assert_eq!(a, b);
            assert_eq!(ma, mb);
        }
    }

    #[test]
    fn non_finite_loss_aborts() {
        let data = [pair(&[3], &[4])];
        let mut m = Seq2SeqModel::<f32>::new(cfg(2), 1).unwrap();
        let n = m.parameter_count();
        m.parameters_mut()[n - 1] = f32::NAN;
        let err = train(&mut m, &data, &data, 1, &mut |_| {}).unwrap_err();
        assert!(matches!(err, TrainError::NonFinite { epoch: 1, step: 0, .. }));
        assert!(err.to_string().contains("lower the learning rate"));
    }

    #[test]
    fn best_checkpoint_ties_go_to_earliest() {
        let cp = |epoch, v| Checkpoint {
            epoch,
            step: 0,
            train_loss: 1.0,
            validation_loss: v,
            learning_rate: 1.0,
            parameters: None,
        };
        let cps = [cp(1, 3.0), cp(2, 1.0), cp(3, 1.0), cp(4, 2.0)];
        assert_eq!(select_best(&cps).unwrap().epoch, 2);
        assert_eq!(select_best(&[]), Err(TrainError::NoCheckpoints));
    }

    #[test]
    fn batches_cover_every_pair_once() {
        let data: Vec<_> = (0..23u32).map(|i| pair(&vec![3; 1 + i as usize * 3], &[4])).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batches = make_batches(&data, &[10, 20, 30], 4, &mut rng);
        let mut all: Vec<usize> = batches.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let bucket = |i: usize| [10, 20, 30].iter().position(|&b| data[i].input.len() <= b).unwrap_or(3);
        assert!(batches.iter().all(|b| b.len() <= 4 && b.iter().all(|&i| bucket(i) == bucket(b[0]))));
    }

    #[test]
    fn grid_picks_lowest_validation_loss() {
        let data: Vec<_> = (0..6).map(|i| pair(&[3 + i % 5], &[7 - i % 4])).collect();
        let mut bad = cfg(2);
        bad.learning_rate = 0.0;
        let good = cfg(2);
        let r = grid_search::<f32>(&[bad, good.clone()], &data, &data, 1, &mut |_, _| {}).unwrap();
        assert_eq!(r.config, good);
        assert!(r.losses[1] < r.losses[0]);
        assert!(grid_search::<f32>(&[], &data, &data, 1, &mut |_, _| {}).is_err());
    }
}
