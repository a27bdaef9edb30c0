//! Adam training loop with global-norm clipping and seeded batching.

use super::config::ModelConfig;
use super::net::{backward, forward, Batch, Mode};
use super::params::{Params, Scalar};
use super::vocab::Vocab;
use crate::error::ModelError;
use crate::linking::rng_from_seed;
use crate::token::Sample;
use ndarray::Zip;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Per-epoch training metrics (teacher-forced token statistics).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub seed: u64,
    pub loss: f64,
    pub token_acc: f64,
    pub seq_acc: f64,
}

struct AdamState<F> {
    m: Params<F>,
    v: Params<F>,
    t: u64,
}

/// Scales `grads` in place so the global L2 norm is at most `max_norm`.
pub fn clip_global_norm<F: Scalar>(grads: &mut Params<F>, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(F::from_f64(max_norm / norm).unwrap());
    }
    norm
}

fn adam_update<F: Scalar>(
    params: &mut Params<F>,
    grads: &Params<F>,
    state: &mut AdamState<F>,
    lr: f64,
    embed_lr_mult: f64,
) {
    state.t += 1;
    let b1 = F::from_f64(0.9).unwrap();
    let b2 = F::from_f64(0.999).unwrap();
    let eps = F::from_f64(1e-8).unwrap();
    let one = F::one();
    let bc1 = F::from_f64(1.0 - 0.9f64.powi(state.t as i32)).unwrap();
    let bc2 = F::from_f64(1.0 - 0.999f64.powi(state.t as i32)).unwrap();
    let step = F::from_f64(lr).unwrap();
    let embed_step = F::from_f64(lr * embed_lr_mult).unwrap();
    // Walk every tensor in the fixed parameter order, updating moments and
    // weights together.
    let mut g_flat = Vec::new();
    grads.for_each(|_, a| g_flat.push(a.to_owned()));
    let mut m_flat = Vec::new();
    state.m.for_each(|_, a| m_flat.push(a.to_owned()));
    let mut v_flat = Vec::new();
    state.v.for_each(|_, a| v_flat.push(a.to_owned()));
    let mut gi = 0;
    params.for_each_mut(|name, mut p| {
        let step = if name.ends_with("_embed") { embed_step } else { step };
        Zip::from(&mut p)
            .and(&g_flat[gi])
            .and(&mut m_flat[gi])
            .and(&mut v_flat[gi])
            .for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p = *p - step * mhat / (vhat.sqrt() + eps);
            });
        gi += 1;
    });
    let mut wi = 0;
    state.m.for_each_mut(|_, mut a| {
        a.assign(&m_flat[wi]);
        wi += 1;
    });
    let mut wi = 0;
    state.v.for_each_mut(|_, mut a| {
        a.assign(&v_flat[wi]);
        wi += 1;
    });
}

/// Window-sorted batching: shuffle, then sort each window of a few batches
/// by source length so padding stays small without fixing the order.
fn make_batches(
    samples: &[Sample],
    batch_size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    src_vocab: &Vocab,
    tgt_vocab: &Vocab,
) -> Vec<Batch> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    // Sorting by target length keeps decoder padding small; the window
    // bound preserves epoch-to-epoch batch variety.
    let window = batch_size * 16;
    for chunk in order.chunks_mut(window) {
        chunk.sort_by_key(|&i| samples[i].target.len());
    }
    order
        .chunks(batch_size)
        .map(|chunk| {
            let subset: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            Batch::from_samples(&subset, src_vocab, tgt_vocab)
        })
        .collect()
}

/// Owns the parameters and vocabularies for one training run.
pub struct Trainer<F: Scalar> {
    pub cfg: ModelConfig,
    pub params: Params<F>,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
}

impl<F: Scalar> Trainer<F> {
    pub fn new(cfg: ModelConfig, train_set: &[Sample]) -> Result<Self, ModelError> {
        cfg.validate()?;
        let src_vocab = Vocab::build(train_set.iter().map(|s| s.source.as_slice()));
        let tgt_vocab = Vocab::build(train_set.iter().map(|s| s.target.as_slice()));
        let params = Params::init(&cfg, src_vocab.len(), tgt_vocab.len());
        Ok(Trainer {
            cfg,
            params,
            src_vocab,
            tgt_vocab,
        })
    }

    /// Runs `max_epochs` of Adam over the training set, returning per-epoch
    /// metrics. Aborts on non-finite loss.
    pub fn fit(
        &mut self,
        train_set: &[Sample],
        mut on_epoch: impl FnMut(&MetricsRecord),
    ) -> Result<Vec<MetricsRecord>, ModelError> {
        let mut rng = rng_from_seed(self.cfg.seed);
        let mut adam = AdamState {
            m: self.params.zeros_like(),
            v: self.params.zeros_like(),
            t: 0,
        };
        let mut history = Vec::with_capacity(self.cfg.max_epochs);
        for epoch in 0..self.cfg.max_epochs {
            let batches = make_batches(
                train_set,
                self.cfg.batch_size,
                &mut rng,
                &self.src_vocab,
                &self.tgt_vocab,
            );
            let mut loss_sum = 0.0;
            let mut tok_total = 0usize;
            let mut tok_correct = 0usize;
            let mut seq_correct = 0usize;
            for (step, batch) in batches.iter().enumerate() {
                let (out, cache) =
                    forward(&self.params, &self.cfg, batch, Mode::Train(&mut rng), true)
                        .map_err(|e| match e {
                            ModelError::NonFiniteLoss { loss, .. } => {
                                ModelError::NonFiniteLoss { epoch, step, loss }
                            }
                            other => other,
                        })?;
                if !out.loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss {
                        epoch,
                        step,
                        loss: out.loss,
                    });
                }
                let mut grads = backward(&self.params, &self.cfg, batch, &cache.unwrap());
                clip_global_norm(&mut grads, self.cfg.grad_clip_l2);
                adam_update(
                    &mut self.params,
                    &grads,
                    &mut adam,
                    self.cfg.learning_rate,
                    self.cfg.embed_lr_mult,
                );
                loss_sum += out.loss * out.token_count as f64;
                tok_total += out.token_count;
                tok_correct += out.correct_tokens;
                seq_correct += out.correct_seqs;
            }
            if !self.params.all_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    step: batches.len(),
                    loss: f64::NAN,
                });
            }
            let record = MetricsRecord {
                epoch,
                seed: self.cfg.seed,
                loss: loss_sum / tok_total.max(1) as f64,
                token_acc: tok_correct as f64 / tok_total.max(1) as f64,
                seq_acc: seq_correct as f64 / train_set.len() as f64,
            };
            on_epoch(&record);
            history.push(record);
        }
        Ok(history)
    }
}

/// Convenience wrapper: build a trainer, fit, return it with history.
pub fn train<F: Scalar>(
    cfg: ModelConfig,
    train_set: &[Sample],
) -> Result<(Trainer<F>, Vec<MetricsRecord>), ModelError> {
    let mut trainer = Trainer::new(cfg, train_set)?;
    let history = trainer.fit(train_set, |_| {})?;
    Ok((trainer, history))
}
