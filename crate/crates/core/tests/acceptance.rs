//! End-to-end acceptance gate: nine criteria, one test (and one pass/fail
//! line) each. Heavier criteria share trained models through lazy statics.

use scanlab::eval::{evaluate, token_accuracy};
use scanlab::linking::{
    build_deductive, build_inductive, build_replacement_test, one_shot_pool, remove_multi_variant,
    scan_inventory, split_pool, subsample_per_variant, Level,
};
use scanlab::model::{
    backward, forward, save_checkpoint, train, Batch, Mode, ModelConfig, Params, Vocab,
};
use scanlab::scan::{enumerate_commands, interpret_text};
use scanlab::sqlgen::{derive_dataset, entity_rules, geo_config, read_corpus};
use scanlab::token::{render, seq, Sample};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn base() -> &'static Vec<Sample> {
    static BASE: OnceLock<Vec<Sample>> = OnceLock::new();
    BASE.get_or_init(enumerate_commands)
}

/// The desk-scale recurrent configuration used by criteria 5-7.
fn desk_cfg(seed: u64) -> ModelConfig {
    let mut cfg = ModelConfig::desk_default();
    cfg.seed = seed;
    cfg
}

const DESK_SEEDS: [u64; 2] = [11, 23];
const EVAL_SUBSAMPLE: usize = 5000;
const EVAL_SEED: u64 = 9001;

fn subsample(set: &[Sample], n: usize, seed: u64) -> Vec<Sample> {
    use rand::seq::SliceRandom;
    if set.len() <= n {
        return set.to_vec();
    }
    let mut rng = scanlab::linking::rng_from_seed(seed);
    let mut idx: Vec<usize> = (0..set.len()).collect();
    idx.shuffle(&mut rng);
    let mut keep: Vec<usize> = idx.into_iter().take(n).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| set[i].clone()).collect()
}

/// Trains one desk model per seed and returns mean sequence accuracy on
/// the eval subsample.
fn mean_seq_acc(train_set: &[Sample], eval_sub: &[Sample], seeds: &[u64]) -> f64 {
    let max_len = 2 * train_set.iter().map(|s| s.target.len()).max().unwrap() + 2;
    let mut accs = Vec::new();
    for &seed in seeds {
        let (trainer, history) = train::<f32>(desk_cfg(seed), train_set).unwrap();
        let result = evaluate(&trainer, eval_sub, max_len);
        eprintln!(
            "    seed {seed}: seq_acc {:.4} token_acc {:.4} final loss {:.4}",
            result.seq_acc,
            result.token_acc,
            history.last().unwrap().loss
        );
        accs.push(result.seq_acc);
    }
    accs.iter().sum::<f64>() / accs.len() as f64
}

struct DlStandard {
    mean_seq_acc: f64,
    eval_sub: Vec<Sample>,
}

/// DL-Standard desk runs, shared between criteria 5 and 7.
fn dl_standard() -> &'static DlStandard {
    static DL: OnceLock<DlStandard> = OnceLock::new();
    DL.get_or_init(|| {
        let inv = scan_inventory(4, 10);
        let bundle = build_deductive(base(), &inv, Level::Standard).unwrap();
        let eval_sub = subsample(&bundle.test, EVAL_SUBSAMPLE, EVAL_SEED);
        eprintln!("  DL-Standard:");
        let mean = mean_seq_acc(&bundle.train, &eval_sub, &DESK_SEEDS);
        DlStandard {
            mean_seq_acc: mean,
            eval_sub,
        }
    })
}

#[test]
fn criterion_1_grammar_regeneration() {
    let start = std::time::Instant::now();
    let cmds = base();
    assert_eq!(cmds.len(), 20910, "corpus size");
    let unique: std::collections::HashSet<&Sample> = cmds.iter().collect();
    assert_eq!(unique.len(), 20910, "all pairs unique");
    let golden = manifest_dir().join("tests/golden/scan_cases.tsv");
    let cases = scanlab::token::read_samples(&golden).unwrap();
    assert_eq!(cases.len(), 25, "golden file has 25 cases");
    for case in &cases {
        let actions = interpret_text(&render(&case.source)).unwrap();
        assert_eq!(
            actions,
            case.target,
            "interpreter disagrees on {:?}",
            render(&case.source)
        );
    }
    assert!(cases
        .iter()
        .any(|c| c.source == seq("jump twice") && c.target == seq("JUMP JUMP")));
    let max_len = cmds.iter().map(|c| c.target.len()).max().unwrap();
    assert_eq!(max_len, 48, "max target length");
    assert!(start.elapsed().as_secs() < 5, "runtime budget 5s");
}

#[test]
fn criterion_2_counting_oracles() {
    let start = std::time::Instant::now();
    let inv = scan_inventory(4, 10);
    let pool = build_replacement_test(base(), &inv);
    assert_eq!(pool.len(), 308_280, "replacement pool");

    let il_std = build_inductive(base(), &inv, Level::Standard).unwrap();
    let il_dif = build_inductive(base(), &inv, Level::Difficult).unwrap();
    let il_cha = build_inductive(base(), &inv, Level::Challenging).unwrap();
    let dl_std = build_deductive(base(), &inv, Level::Standard).unwrap();
    let dl_dif = build_deductive(base(), &inv, Level::Difficult).unwrap();

    assert_eq!(il_std.test.len(), 308_240, "test size exact");
    assert_eq!(il_std.train.len() - il_dif.train.len(), 4, "IL Std-Dif delta");
    assert_eq!(dl_std.train.len() - dl_dif.train.len(), 4, "DL Std-Dif delta");
    assert_eq!(dl_std.train.len() - il_std.train.len(), 4, "DL Std - IL Std");

    // Published absolute sizes carry the documented +4 interpretation gap.
    for (ours, published, label) in [
        (il_std.train.len(), 20946usize, "IL-Standard"),
        (il_dif.train.len(), 20942, "IL-Difficult"),
        (dl_std.train.len(), 20950, "DL-Standard"),
        (dl_dif.train.len(), 20946, "DL-Difficult"),
    ] {
        assert!(
            ours.abs_diff(published) <= 4,
            "{label}: ours {ours} vs published {published}"
        );
    }
    // Challenging: the source-length rule removes 12 where the published
    // table implies 14; both recorded, compared within +-3.
    let cha_removed = il_std.train.len() + 4 - il_cha.train.len() - 4;
    let removed_from_std = il_std.train.len() - il_cha.train.len();
    eprintln!(
        "  IL-Challenging removals: ours {} (train {}), published implies 14",
        removed_from_std - 4,
        il_cha.train.len()
    );
    assert!((removed_from_std as i64 - 4 - 14).abs() <= 3, "removal count");
    let _ = cha_removed;

    // Fixture-derived datasets: the same exact delta identities hold.
    for name in ["geo.json", "adv.json"] {
        let corpus = read_corpus(&manifest_dir().join("fixtures").join(name)).unwrap();
        let cfg = if name == "geo.json" { geo_config() } else { scanlab::sqlgen::adv_config() };
        let (samples, inventory) = derive_dataset(&corpus, &cfg).unwrap();
        assert_eq!(inventory.len(), 4, "{name}: |P|");
        let i_std = build_inductive(&samples, &inventory, Level::Standard).unwrap();
        let i_dif = build_inductive(&samples, &inventory, Level::Difficult).unwrap();
        let d_std = build_deductive(&samples, &inventory, Level::Standard).unwrap();
        let d_dif = build_deductive(&samples, &inventory, Level::Difficult).unwrap();
        assert_eq!(i_std.train.len() - i_dif.train.len(), 4, "{name} IL delta");
        assert_eq!(d_std.train.len() - d_dif.train.len(), 4, "{name} DL delta");
        assert_eq!(d_std.train.len() - i_std.train.len(), 4, "{name} DL-IL delta");
    }
    assert!(start.elapsed().as_secs() < 30, "runtime budget 30s");
}

#[test]
fn criterion_3_pooled_pipeline() {
    let start = std::time::Instant::now();
    let inv = scan_inventory(4, 10);
    let pool = one_shot_pool(base(), &inv);
    assert_eq!(pool.len(), 329_190, "total pool");
    let (train, test) = split_pool(&pool, 0.8, 42);
    assert_eq!(train.len() + test.len(), pool.len());
    let train = remove_multi_variant(&train, &inv);
    eprintln!("  pooled train after split+removal: {}", train.len());
    assert!(
        train.len().abs_diff(235_002) <= 300,
        "pooled train size {}",
        train.len()
    );
    let k1 = subsample_per_variant(&train, &inv, 1, 42).unwrap();
    eprintln!("  pooled train at k=1: {}", k1.len());
    assert!(k1.len().abs_diff(16_736) <= 100, "k=1 size {}", k1.len());
    assert!(start.elapsed().as_secs() < 60, "runtime budget 60s");
}

#[test]
fn criterion_4_gradient_correctness() {
    let start = std::time::Instant::now();
    let cfg = ModelConfig::tiny();
    let samples = vec![
        Sample::from_text("run around right and jump", "RTURN RUN RTURN RUN RTURN RUN RTURN RUN JUMP"),
        Sample::from_text("look after walk left", "LTURN WALK LOOK"),
    ];
    let sv = Vocab::build(samples.iter().map(|s| s.source.as_slice()));
    let tv = Vocab::build(samples.iter().map(|s| s.target.as_slice()));
    let params: Params<f64> = Params::init(&cfg, sv.len(), tv.len());
    let batch = Batch::from_samples(&samples, &sv, &tv);
    let (_, cache) = forward(&params, &cfg, &batch, Mode::Eval, true).unwrap();
    let grads = backward(&params, &cfg, &batch, &cache.unwrap());

    let mut names = Vec::new();
    let mut analytic = Vec::new();
    grads.for_each(|name, a| {
        names.push(name);
        analytic.push(a.iter().cloned().collect::<Vec<f64>>());
    });
    let eps = 1e-5;
    for (gi, name) in names.iter().enumerate() {
        let n = analytic[gi].len();
        let mut diff2 = 0.0;
        let mut a2 = 0.0;
        let mut n2 = 0.0;
        for j in 0..n {
            let probe = |delta: f64| {
                let mut p = params.clone();
                p.for_each_mut(|nm, mut a| {
                    if nm == *name {
                        *a.iter_mut().nth(j).unwrap() += delta;
                    }
                });
                forward(&p, &cfg, &batch, Mode::Eval, false).unwrap().0.loss
            };
            let num = (probe(eps) - probe(-eps)) / (2.0 * eps);
            let d = analytic[gi][j] - num;
            diff2 += d * d;
            a2 += analytic[gi][j] * analytic[gi][j];
            n2 += num * num;
        }
        let rel = diff2.sqrt() / a2.sqrt().max(n2.sqrt()).max(1e-8);
        assert!(
            rel < 1e-3 || diff2.sqrt() < 1e-9,
            "group {name}: relative error {rel:.2e}"
        );
    }
    assert!(start.elapsed().as_secs() < 60, "runtime budget 60s");
}

#[test]
fn criterion_5_desk_scale_reproduction() {
    let inv = scan_inventory(4, 10);

    let il = build_inductive(base(), &inv, Level::Standard).unwrap();
    let il_sub = subsample(&il.test, EVAL_SUBSAMPLE, EVAL_SEED);
    eprintln!("  IL-Standard:");
    let il_acc = mean_seq_acc(&il.train, &il_sub, &DESK_SEEDS);
    assert!(il_acc >= 0.95, "IL-Standard seq acc {il_acc:.4} < 0.95");

    let dl = dl_standard();
    assert!(dl.mean_seq_acc >= 0.90, "DL-Standard seq acc {:.4} < 0.90", dl.mean_seq_acc);

    let dl_dif = build_deductive(base(), &inv, Level::Difficult).unwrap();
    eprintln!("  DL-Difficult:");
    let dif_acc = mean_seq_acc(&dl_dif.train, &dl.eval_sub, &DESK_SEEDS);
    assert!(
        (dl.mean_seq_acc - dif_acc).abs() <= 0.05,
        "DL-Difficult {dif_acc:.4} not within 5 points of DL-Standard {:.4}",
        dl.mean_seq_acc
    );

    // Fixture smoke runs: a small model memorises the derived datasets.
    for name in ["geo.json", "adv.json"] {
        let corpus = read_corpus(&manifest_dir().join("fixtures").join(name)).unwrap();
        let cfg = if name == "geo.json" { geo_config() } else { scanlab::sqlgen::adv_config() };
        let (samples, _) = derive_dataset(&corpus, &cfg).unwrap();
        let mut mc = ModelConfig::tiny();
        mc.embed_dim = 24;
        mc.enc_hidden_per_dir = 16;
        mc.dec_hidden = 32;
        mc.attn_dim = 16;
        mc.learning_rate = 4e-3;
        mc.batch_size = 8;
        mc.max_epochs = 150;
        let (trainer, _) = train::<f32>(mc, &samples).unwrap();
        let max_len = 2 * samples.iter().map(|s| s.target.len()).max().unwrap() + 2;
        let result = evaluate(&trainer, &samples, max_len);
        eprintln!("  {name} smoke train seq_acc {:.4}", result.seq_acc);
        assert!(result.seq_acc > 0.60, "{name} smoke seq acc {:.4}", result.seq_acc);
    }
}

#[test]
fn criterion_6_one_shot_property() {
    let inv = scan_inventory(4, 10);
    let pool = one_shot_pool(base(), &inv);
    let (train, test) = split_pool(&pool, 0.8, 42);
    let train = remove_multi_variant(&train, &inv);
    let eval_sub = subsample(&test, EVAL_SUBSAMPLE, EVAL_SEED);
    // Desk-scale stand-in for "full k": k=32 bounds the big arm's size
    // while preserving the many-shot vs one-shot contrast.
    let k_full = subsample_per_variant(&train, &inv, 32, 42).unwrap();
    let k_one = subsample_per_variant(&train, &inv, 1, 42).unwrap();
    eprintln!("  k=32 train {} / k=1 train {}", k_full.len(), k_one.len());
    eprintln!("  k=32:");
    let acc_full = mean_seq_acc(&k_full, &eval_sub, &DESK_SEEDS[..1]);
    eprintln!("  k=1:");
    let acc_one = mean_seq_acc(&k_one, &eval_sub, &DESK_SEEDS[..1]);
    assert!(
        (acc_full - acc_one).abs() <= 0.05,
        "k=1 {acc_one:.4} not within 5 points of k=32 {acc_full:.4}"
    );
}

#[test]
fn criterion_7_ablation_trend() {
    let dl4 = dl_standard();
    let inv1 = scan_inventory(1, 10);
    let bundle1 = build_deductive(base(), &inv1, Level::Standard).unwrap();
    // Both arms score on the |P|=4 replacement test: unlinked variants
    // stay out-of-vocabulary for the |P|=1 model.
    eprintln!("  DL-Standard |P|=1:");
    let acc1 = mean_seq_acc(&bundle1.train, &dl4.eval_sub, &DESK_SEEDS);
    eprintln!(
        "  mean seq acc |P|=4 {:.4} vs |P|=1 {acc1:.4}",
        dl4.mean_seq_acc
    );
    assert!(dl4.mean_seq_acc >= acc1, "|P|=4 should not trail |P|=1");
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let write_all = |tag: &str| -> (PathBuf, PathBuf, PathBuf) {
        let dataset = dir.path().join(format!("{tag}.tsv"));
        let inv = scan_inventory(1, 2);
        let bundle = build_inductive(base(), &inv, Level::Standard).unwrap();
        scanlab::token::write_samples(&dataset, &bundle.train).unwrap();

        let subset: Vec<Sample> = base().iter().take(64).cloned().collect();
        let mut cfg = ModelConfig::tiny();
        cfg.max_epochs = 2;
        cfg.batch_size = 16;
        let (trainer, _) = train::<f32>(cfg.clone(), &subset).unwrap();
        let ckpt = dir.path().join(format!("{tag}.ckpt"));
        save_checkpoint(&ckpt, &cfg, &trainer.params, &trainer.src_vocab, &trainer.tgt_vocab)
            .unwrap();

        let mut plan = scanlab::eval::ExperimentPlan::desk("scan", scanlab::eval::PlanScheme::None);
        plan.seeds = vec![7];
        plan.eval_subsample = 32;
        plan.model = ModelConfig::tiny();
        plan.model.max_epochs = 2;
        plan.model.batch_size = 16;
        let report =
            scanlab::eval::run_experiment(&plan, &subset, &subset, |_| {}).unwrap();
        let rp = dir.path().join(format!("{tag}.report.json"));
        std::fs::write(&rp, serde_json::to_string_pretty(&report).unwrap()).unwrap();
        (dataset, ckpt, rp)
    };
    let (d1, c1, r1) = write_all("a");
    let (d2, c2, r2) = write_all("b");
    for (a, b, what) in [(&d1, &d2, "dataset"), (&c1, &c2, "checkpoint"), (&r1, &r2, "report")] {
        assert_eq!(
            std::fs::read(a).unwrap(),
            std::fs::read(b).unwrap(),
            "{what} not byte-identical"
        );
    }
}

#[test]
fn criterion_9_entity_augmentation() {
    let corpus = read_corpus(&manifest_dir().join("fixtures/geo.json")).unwrap();
    let (samples, _) = derive_dataset(&corpus, &geo_config()).unwrap();

    // Entity list: every bound value in the corpus, deduplicated.
    let mut entities: Vec<Vec<scanlab::token::Token>> = Vec::new();
    for q in &corpus {
        for v in q.bindings.values() {
            entities.push(v.clone());
        }
    }
    let base_vocab: std::collections::HashSet<String> = samples
        .iter()
        .flat_map(|s| s.source.iter().map(|t| t.as_str().to_string()))
        .collect();
    let rules = entity_rules(&entities, &base_vocab);
    let dedup: std::collections::HashSet<Vec<String>> = entities
        .iter()
        .map(|e| {
            e.iter()
                .map(|t| {
                    if base_vocab.contains(t.as_str()) {
                        t.as_str().to_string()
                    } else {
                        "<unk>".to_string()
                    }
                })
                .collect()
        })
        .collect();
    assert_eq!(rules.len(), dedup.len(), "one rule per distinct masked entity");
    for r in &rules {
        assert_eq!(r.source.len(), r.target.len(), "identity rules align");
    }

    // EntityAug = base plus the rules; the test set stays the baseline's.
    let mut aug_train = samples.clone();
    aug_train.extend(rules.iter().map(|r| r.as_sample()));
    assert_eq!(aug_train.len(), samples.len() + rules.len());

    let mut mc = ModelConfig::tiny();
    mc.embed_dim = 24;
    mc.enc_hidden_per_dir = 16;
    mc.dec_hidden = 32;
    mc.attn_dim = 16;
    mc.learning_rate = 4e-3;
    mc.batch_size = 8;
    mc.max_epochs = 60;
    let max_len = 2 * samples.iter().map(|s| s.target.len()).max().unwrap() + 2;
    let (baseline, _) = train::<f32>(mc.clone(), &samples).unwrap();
    let (augmented, _) = train::<f32>(mc, &aug_train).unwrap();
    let rb = evaluate(&baseline, &samples, max_len);
    let ra = evaluate(&augmented, &samples, max_len);
    eprintln!(
        "  baseline seq_acc {:.4} vs entity-aug seq_acc {:.4} on identical test",
        rb.seq_acc, ra.seq_acc
    );
    assert!(rb.seq_acc.is_finite() && ra.seq_acc.is_finite());
    assert!(token_accuracy(&samples[0].target, &samples[0].target) == 1.0);
    let _ = Path::new("");
}
