//! Accuracy metrics, experiment plans, and multi-seed runs.

use crate::error::ModelError;
use crate::linking::rng_from_seed;
use crate::model::{greedy_decode, train, Batch, ModelConfig, Trainer};
use crate::token::{Sample, Token};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Per-token accuracy with the longer of the two sequences as denominator,
/// so both omissions and insertions count as errors.
pub fn token_accuracy(pred: &[Token], gold: &[Token]) -> f64 {
    let denom = pred.len().max(gold.len());
    if denom == 0 {
        return 1.0;
    }
    let hits = pred
        .iter()
        .zip(gold.iter())
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / denom as f64
}

pub fn sequence_accuracy(pred: &[Token], gold: &[Token]) -> f64 {
    if pred == gold {
        1.0
    } else {
        0.0
    }
}

/// Mean token and sequence accuracy of a trained model over an eval set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalResult {
    pub token_acc: f64,
    pub seq_acc: f64,
    pub n: usize,
}

/// Decodes the eval set greedily in batches and scores it.
pub fn evaluate<F: crate::model::Scalar>(
    trainer: &Trainer<F>,
    eval_set: &[Sample],
    max_len: usize,
) -> EvalResult {
    let mut tok_sum = 0.0;
    let mut seq_sum = 0.0;
    // Batching like-length targets together keeps decode steps tight;
    // metrics are order-independent.
    let mut by_len: Vec<Sample> = eval_set.to_vec();
    by_len.sort_by_key(|s| s.target.len());
    let eval_set: &[Sample] = &by_len;
    for chunk in eval_set.chunks(trainer.cfg.batch_size.max(1)) {
        let batch = Batch::from_samples(chunk, &trainer.src_vocab, &trainer.tgt_vocab);
        let preds = greedy_decode(&trainer.params, &trainer.cfg, &batch, &trainer.tgt_vocab, max_len);
        for (pred, sample) in preds.iter().zip(chunk) {
            tok_sum += token_accuracy(pred, &sample.target);
            seq_sum += sequence_accuracy(pred, &sample.target);
        }
    }
    EvalResult {
        token_acc: tok_sum / eval_set.len().max(1) as f64,
        seq_acc: seq_sum / eval_set.len().max(1) as f64,
        n: eval_set.len(),
    }
}

/// Loads a checkpoint and scores it on an eval set. Without an explicit
/// cap, decoding may run to twice the longest gold target plus two.
pub fn evaluate_checkpoint<F: crate::model::Scalar>(
    path: &std::path::Path,
    eval_set: &[Sample],
    max_len: Option<usize>,
) -> Result<EvalResult, ModelError> {
    let ck = crate::model::load_checkpoint::<F>(path)?;
    let trainer = Trainer {
        cfg: ck.config,
        params: ck.params,
        src_vocab: ck.src_vocab,
        tgt_vocab: ck.tgt_vocab,
    };
    let max_len = max_len.unwrap_or_else(|| {
        2 * eval_set.iter().map(|s| s.target.len()).max().unwrap_or(1) + 2
    });
    Ok(evaluate(&trainer, eval_set, max_len))
}

/// Which augmentation scheme a planned run uses; recorded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanScheme {
    None,
    Inductive,
    Deductive,
    Pool,
    EntityAug,
}

/// A reproducible experiment description, TOML-serializable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dataset: String,
    pub scheme: PlanScheme,
    pub level: Option<String>,
    pub n_primitives: usize,
    pub n_variants: usize,
    pub samples_per_variant: Option<usize>,
    pub seeds: Vec<u64>,
    pub eval_subsample: usize,
    pub eval_seed: u64,
    pub model: ModelConfig,
}

impl ExperimentPlan {
    pub fn desk(dataset: &str, scheme: PlanScheme) -> Self {
        ExperimentPlan {
            dataset: dataset.to_string(),
            scheme,
            level: Some("standard".into()),
            n_primitives: 1,
            n_variants: 4,
            samples_per_variant: None,
            seeds: vec![11, 23, 47],
            eval_subsample: 5000,
            eval_seed: 9001,
            model: ModelConfig::desk_default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub token_acc: f64,
    pub seq_acc: f64,
    pub final_train_loss: f64,
}

/// Mean and standard deviation across seeds plus the plan that produced
/// it. Wall-clock time goes to the progress stream, not the report, so
/// identical runs produce identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub plan: ExperimentPlan,
    pub per_seed: Vec<SeedOutcome>,
    pub token_acc_mean: f64,
    pub token_acc_std: f64,
    pub seq_acc_mean: f64,
    pub seq_acc_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len().max(1) as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Subsamples the eval set to at most `plan.eval_subsample` items with the
/// plan's eval seed.
pub fn eval_subset(plan: &ExperimentPlan, eval_set: &[Sample]) -> Vec<Sample> {
    if eval_set.len() <= plan.eval_subsample {
        return eval_set.to_vec();
    }
    let mut rng = rng_from_seed(plan.eval_seed);
    let mut idx: Vec<usize> = (0..eval_set.len()).collect();
    idx.shuffle(&mut rng);
    let mut keep: Vec<usize> = idx.into_iter().take(plan.eval_subsample).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| eval_set[i].clone()).collect()
}

/// Trains one model per seed and aggregates greedy-decode accuracy.
pub fn run_experiment(
    plan: &ExperimentPlan,
    train_set: &[Sample],
    eval_set: &[Sample],
    mut progress: impl FnMut(&str),
) -> Result<AggregateReport, ModelError> {
    let started = Instant::now();
    let eval_subsampled = eval_subset(plan, eval_set);
    let max_target = train_set.iter().map(|s| s.target.len()).max().unwrap_or(1);
    let max_len = 2 * max_target + 2;
    let mut per_seed = Vec::new();
    for &seed in &plan.seeds {
        let mut cfg = plan.model.clone();
        cfg.seed = seed;
        progress(&format!("seed {seed}: training on {} samples", train_set.len()));
        let (trainer, history) = train::<f32>(cfg, train_set)?;
        let result = evaluate(&trainer, &eval_subsampled, max_len);
        progress(&format!(
            "seed {seed}: token_acc {:.4} seq_acc {:.4}",
            result.token_acc, result.seq_acc
        ));
        per_seed.push(SeedOutcome {
            seed,
            token_acc: round4(result.token_acc),
            seq_acc: round4(result.seq_acc),
            final_train_loss: history.last().map(|r| r.loss).unwrap_or(f64::NAN),
        });
    }
    let (tm, ts) = mean_std(&per_seed.iter().map(|o| o.token_acc).collect::<Vec<_>>());
    let (sm, ss) = mean_std(&per_seed.iter().map(|o| o.seq_acc).collect::<Vec<_>>());
    progress(&format!(
        "experiment wall clock {:.1}s",
        started.elapsed().as_secs_f64()
    ));
    Ok(AggregateReport {
        plan: plan.clone(),
        per_seed,
        token_acc_mean: round4(tm),
        token_acc_std: round4(ts),
        seq_acc_mean: round4(sm),
        seq_acc_std: round4(ss),
    })
}

/// Serializes sweep reports as one consolidated per-seed CSV keyed by the
/// swept parameters — the plot-ready artifact.
pub fn sweep_csv(reports: &[AggregateReport]) -> String {
    let mut out = String::from(
        "dataset,scheme,level,n_primitives,n_variants,samples_per_variant,seed,token_acc,seq_acc,loss\n",
    );
    for r in reports {
        let scheme = match r.plan.scheme {
            PlanScheme::None => "none",
            PlanScheme::Inductive => "inductive",
            PlanScheme::Deductive => "deductive",
            PlanScheme::Pool => "pool",
            PlanScheme::EntityAug => "entity-aug",
        };
        for o in &r.per_seed {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.4},{:.4},{:.4}\n",
                r.plan.dataset,
                scheme,
                r.plan.level.as_deref().unwrap_or("-"),
                r.plan.n_primitives,
                r.plan.n_variants,
                r.plan
                    .samples_per_variant
                    .map(|k| k.to_string())
                    .unwrap_or_else(|| "-".into()),
                o.seed,
                o.token_acc,
                o.seq_acc,
                o.final_train_loss,
            ));
        }
    }
    out
}
