//! Inductive and deductive semantic-linking augmentation.
//!
//! Primitives are old concepts already covered by the base data; variants are
//! new concepts tied to a primitive either through a shared prompt context
//! (inductive) or through a shared target label in a concept rule
//! (deductive). The replacement-augmentation test set substitutes variants
//! for primitives in base samples to form novel compositions.

use crate::error::LinkError;
use crate::scan;
use crate::token::{
    count_subseq, find_subseq, render, replace_all_subseq, seq, Sample, Token,
};
use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};

/// Slot mark used in prompts. Literal token in inventory files.
pub const SLOT: &str = "[z]";

/// All seeded choices in this crate use ChaCha8 so counts reproduce
/// across platforms.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    LexicalVariant,
    CoHyponym,
    Synonym,
}

/// A source sequence with its primitive replaced by the slot mark, carrying
/// the target of the sample it was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub tokens: Vec<Token>,
    pub target: Vec<Token>,
}

impl Prompt {
    pub fn slot_position(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.as_str() == SLOT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptEntry {
    pub primitive: Vec<Token>,
    pub variants: Vec<Vec<Token>>,
    pub prompt: Prompt,
    pub target_label: Vec<Token>,
    pub link_kind: LinkKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    PrimitiveRule,
    VariantRule,
}

/// A context-free source -> target dictionary pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptRule {
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    pub kind: RuleKind,
}

impl ConceptRule {
    pub fn as_sample(&self) -> Sample {
        Sample::new(self.source.clone(), self.target.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Il,
    Dl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Standard,
    Difficult,
    Challenging,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleMeta {
    pub scheme: Scheme,
    pub level: Level,
    pub inventory_fingerprint: String,
    pub removed_base: usize,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone)]
pub struct AugmentationBundle {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub meta: BundleMeta,
}

/// Lexical variants of a primitive: the final token gains suffix `_i`.
pub fn make_variants(primitive: &[Token], n: usize) -> Vec<Vec<Token>> {
    assert!(n >= 1, "variant count must be positive");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = primitive.to_vec();
        let last = v.last_mut().expect("non-empty primitive");
        *last = Token::new(format!("{}_{}", last.as_str(), i)).unwrap();
        out.push(v);
    }
    out
}

/// Replaces the unique occurrence of `primitive` in the sample source with
/// the slot mark.
pub fn derive_prompt(sample: &Sample, primitive: &[Token]) -> Result<Prompt, LinkError> {
    match count_subseq(&sample.source, primitive) {
        0 => Err(LinkError::NotFound(render(primitive))),
        1 => {
            let pos = find_subseq(&sample.source, primitive).unwrap();
            let mut tokens = sample.source[..pos].to_vec();
            tokens.push(Token::new(SLOT).unwrap());
            tokens.extend_from_slice(&sample.source[pos + primitive.len()..]);
            Ok(Prompt {
                tokens,
                target: sample.target.clone(),
            })
        }
        _ => Err(LinkError::Ambiguous(render(primitive))),
    }
}

/// Fills the slot with `filler`; the target is copied unchanged.
pub fn fill_prompt(prompt: &Prompt, filler: &[Token]) -> Sample {
    let pos = prompt.slot_position().expect("prompt has a slot");
    let mut source = prompt.tokens[..pos].to_vec();
    source.extend_from_slice(filler);
    source.extend_from_slice(&prompt.tokens[pos + 1..]);
    Sample::new(source, prompt.target.clone())
}

/// The concept rules of an entry: one primitive rule plus one rule per
/// variant, all sharing the entry's target label.
pub fn concept_rules(entry: &ConceptEntry) -> Vec<ConceptRule> {
    let mut out = vec![ConceptRule {
        source: entry.primitive.clone(),
        target: entry.target_label.clone(),
        kind: RuleKind::PrimitiveRule,
    }];
    for v in &entry.variants {
        out.push(ConceptRule {
            source: v.clone(),
            target: entry.target_label.clone(),
            kind: RuleKind::VariantRule,
        });
    }
    out
}

/// Replacement augmentation: per base sample, per primitive type occurring in
/// it, per variant of that type, substitute ALL occurrences of the primitive
/// jointly. Targets are unchanged. Deduplicated, deterministic order.
pub fn build_replacement_test(base: &[Sample], inventory: &[ConceptEntry]) -> Vec<Sample> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in base {
        for entry in inventory {
            if count_subseq(&s.source, &entry.primitive) == 0 {
                continue;
            }
            for v in &entry.variants {
                let replaced = Sample::new(
                    replace_all_subseq(&s.source, &entry.primitive, v),
                    s.target.clone(),
                );
                if seen.insert(replaced.clone()) {
                    out.push(replaced);
                }
            }
        }
    }
    out
}

/// Hex fingerprint of an inventory, stable across runs.
pub fn inventory_fingerprint(inventory: &[ConceptEntry]) -> String {
    let mut hasher = Sha256::new();
    for e in inventory {
        hasher.update(render(&e.primitive));
        hasher.update("\x1f");
        for v in &e.variants {
            hasher.update(render(v));
            hasher.update("\x1e");
        }
        hasher.update(render(&e.prompt.tokens));
        hasher.update("\x1f");
        hasher.update(render(&e.prompt.target));
        hasher.update("\x1f");
        hasher.update(render(&e.target_label));
        hasher.update("\x1d");
    }
    hex::encode(&hasher.finalize()[..8])
}

fn variant_samples(inventory: &[ConceptEntry]) -> Vec<Sample> {
    inventory
        .iter()
        .flat_map(|e| e.variants.iter().map(|v| fill_prompt(&e.prompt, v)))
        .collect()
}

fn subtract(pool: Vec<Sample>, train: &[Sample]) -> Vec<Sample> {
    let train_set: HashSet<&Sample> = train.iter().collect();
    pool.into_iter().filter(|s| !train_set.contains(s)).collect()
}

/// Inductive augmentation with the Standard / Difficult / Challenging ladder.
pub fn build_inductive(
    base: &[Sample],
    inventory: &[ConceptEntry],
    level: Level,
) -> Result<AugmentationBundle, LinkError> {
    let base_set: HashSet<&Sample> = base.iter().collect();
    let mut context_samples = Vec::new();
    for e in inventory {
        let ctx = fill_prompt(&e.prompt, &e.primitive);
        if !base_set.contains(&ctx) {
            return Err(LinkError::InventoryMismatch(ctx.to_line()));
        }
        context_samples.push(ctx);
    }
    let extra = variant_samples(inventory);

    let mut train_base: Vec<Sample> = base.to_vec();
    let mut removed = 0usize;
    if level != Level::Standard {
        let ctx_set: HashSet<&Sample> = context_samples.iter().collect();
        let before = train_base.len();
        train_base.retain(|s| !ctx_set.contains(s));
        removed += before - train_base.len();
    }
    if level == Level::Challenging {
        removed += challenging_filter(&mut train_base, inventory, &extra);
    }

    let mut train = train_base;
    train.extend(extra);
    let test = subtract(build_replacement_test(base, inventory), &train);
    let meta = BundleMeta {
        scheme: Scheme::Il,
        level,
        inventory_fingerprint: inventory_fingerprint(inventory),
        removed_base: removed,
        train_size: train.len(),
        test_size: test.len(),
    };
    Ok(AugmentationBundle { train, test, meta })
}

/// Removes base samples that contain a primitive and whose source length
/// equals one of that primitive's variant-sample source lengths. A removal is
/// skipped when it would drive some token's training-occurrence count to
/// zero. Returns the number of removed samples.
fn challenging_filter(
    train_base: &mut Vec<Sample>,
    inventory: &[ConceptEntry],
    extra: &[Sample],
) -> usize {
    let mut counts: HashMap<Token, usize> = HashMap::new();
    let add = |counts: &mut HashMap<Token, usize>, s: &Sample| {
        for t in s.source.iter().chain(s.target.iter()) {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    };
    for s in train_base.iter() {
        add(&mut counts, s);
    }
    for s in extra {
        add(&mut counts, s);
    }

    let lengths: Vec<(usize, HashSet<usize>)> = inventory
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let ls = e
                .variants
                .iter()
                .map(|v| fill_prompt(&e.prompt, v).source.len())
                .collect();
            (i, ls)
        })
        .collect();

    let mut removed = 0;
    let mut kept = Vec::with_capacity(train_base.len());
    'outer: for s in train_base.drain(..) {
        let matches = inventory.iter().zip(&lengths).any(|(e, (_, ls))| {
            ls.contains(&s.source.len()) && count_subseq(&s.source, &e.primitive) > 0
        });
        if matches {
            // Footnote guard: keep the sample if it is the last occurrence of
            // any of its tokens.
            let mut local: HashMap<&Token, usize> = HashMap::new();
            for t in s.source.iter().chain(s.target.iter()) {
                *local.entry(t).or_insert(0) += 1;
            }
            for (t, n) in &local {
                if counts.get(*t).copied().unwrap_or(0) <= *n {
                    kept.push(s);
                    continue 'outer;
                }
            }
            for (t, n) in local {
                *counts.get_mut(t).unwrap() -= n;
            }
            removed += 1;
        } else {
            kept.push(s);
        }
    }
    *train_base = kept;
    removed
}

/// Deductive augmentation: Standard adds primitive and variant rules,
/// Difficult adds variant rules only. Challenging is not defined here.
pub fn build_deductive(
    base: &[Sample],
    inventory: &[ConceptEntry],
    level: Level,
) -> Result<AugmentationBundle, LinkError> {
    if level == Level::Challenging {
        return Err(LinkError::UnsupportedLevel("challenging".into()));
    }
    let mut train: Vec<Sample> = base.to_vec();
    let mut removed = 0;
    for e in inventory {
        for rule in concept_rules(e) {
            match rule.kind {
                RuleKind::PrimitiveRule => {
                    if level == Level::Standard {
                        train.push(rule.as_sample());
                    } else {
                        removed += 1;
                    }
                }
                RuleKind::VariantRule => train.push(rule.as_sample()),
            }
        }
    }
    let test = subtract(build_replacement_test(base, inventory), &train);
    let meta = BundleMeta {
        scheme: Scheme::Dl,
        level,
        inventory_fingerprint: inventory_fingerprint(inventory),
        removed_base: removed,
        train_size: train.len(),
        test_size: test.len(),
    };
    Ok(AugmentationBundle { train, test, meta })
}

/// How a sample relates to the variant vocabulary.
enum VariantUse {
    None,
    /// Exactly one occurrence of exactly one variant; payload indexes
    /// (entry, variant).
    Single(usize, usize),
    /// Two distinct variant types, or one variant occurring twice or more.
    Multiple,
}

fn classify(sample: &Sample, inventory: &[ConceptEntry]) -> VariantUse {
    let mut hit: Option<(usize, usize)> = None;
    for (ei, e) in inventory.iter().enumerate() {
        for (vi, v) in e.variants.iter().enumerate() {
            match count_subseq(&sample.source, v) {
                0 => {}
                1 => {
                    if hit.is_some() {
                        return VariantUse::Multiple;
                    }
                    hit = Some((ei, vi));
                }
                _ => return VariantUse::Multiple,
            }
        }
    }
    match hit {
        Some((ei, vi)) => VariantUse::Single(ei, vi),
        None => VariantUse::None,
    }
}

/// Drops every sample containing multiple variants (two distinct variant
/// types, or one variant more than once).
pub fn remove_multi_variant(train: &[Sample], inventory: &[ConceptEntry]) -> Vec<Sample> {
    train
        .iter()
        .filter(|s| !matches!(classify(s, inventory), VariantUse::Multiple))
        .cloned()
        .collect()
}

/// Keeps all variant-free samples and, per variant, a seeded uniform choice
/// of `k` samples among those containing that variant exactly once.
/// Multi-variant samples are removed first.
pub fn subsample_per_variant(
    train: &[Sample],
    inventory: &[ConceptEntry],
    k: usize,
    seed: u64,
) -> Result<Vec<Sample>, LinkError> {
    assert!(k >= 1);
    let mut keep = vec![false; train.len()];
    let mut candidates: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, s) in train.iter().enumerate() {
        match classify(s, inventory) {
            VariantUse::None => keep[i] = true,
            VariantUse::Single(ei, vi) => candidates.entry((ei, vi)).or_default().push(i),
            VariantUse::Multiple => {}
        }
    }
    let mut rng = rng_from_seed(seed);
    for (ei, e) in inventory.iter().enumerate() {
        for (vi, v) in e.variants.iter().enumerate() {
            let slots = candidates
                .get(&(ei, vi))
                .ok_or_else(|| LinkError::InsufficientSamples(render(v)))?;
            let take = k.min(slots.len());
            let mut chosen: Vec<usize> = index_sample(&mut rng, slots.len(), take).into_vec();
            chosen.sort_unstable();
            for c in chosen {
                keep[slots[c]] = true;
            }
        }
    }
    Ok(train
        .iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then(|| s.clone()))
        .collect())
}

/// Base set plus the full replacement pool (all variant compositions).
pub fn one_shot_pool(base: &[Sample], inventory: &[ConceptEntry]) -> Vec<Sample> {
    let mut pool = base.to_vec();
    pool.extend(build_replacement_test(base, inventory));
    pool
}

/// Seeded shuffle then split; the first `train_fraction` goes to train.
pub fn split_pool(
    pool: &[Sample],
    train_fraction: f64,
    seed: u64,
) -> (Vec<Sample>, Vec<Sample>) {
    assert!((0.0..=1.0).contains(&train_fraction));
    let mut order: Vec<usize> = (0..pool.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng_from_seed(seed));
    let n_train = (pool.len() as f64 * train_fraction).round() as usize;
    let train = order[..n_train].iter().map(|&i| pool[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| pool[i].clone()).collect();
    (train, test)
}

/// The SCAN concept inventory: the first `n_primitives` of
/// {jump, look, run, walk}, each with `n_variants` suffix variants and the
/// shared `[z] twice` prompt.
pub fn scan_inventory(n_primitives: usize, n_variants: usize) -> Vec<ConceptEntry> {
    assert!((1..=4).contains(&n_primitives));
    let primitives = ["jump", "look", "run", "walk"];
    primitives[..n_primitives]
        .iter()
        .map(|p| {
            let prim = seq(p);
            let base = Sample::new(
                seq(&format!("{p} twice")),
                scan::interpret_text(&format!("{p} twice")).unwrap(),
            );
            let prompt = derive_prompt(&base, &prim).unwrap();
            let target_label = scan::interpret_text(p).unwrap();
            ConceptEntry {
                variants: make_variants(&prim, n_variants),
                primitive: prim,
                prompt,
                target_label,
                link_kind: LinkKind::LexicalVariant,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Inventory file format (TOML key-value records).
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct InventoryFile {
    concept: Vec<ConceptRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConceptRecord {
    primitive: String,
    variants: Vec<String>,
    prompt: String,
    prompt_target: String,
    target_label: String,
    link_kind: LinkKind,
}

pub fn inventory_to_toml(inventory: &[ConceptEntry]) -> String {
    let file = InventoryFile {
        concept: inventory
            .iter()
            .map(|e| ConceptRecord {
                primitive: render(&e.primitive),
                variants: e.variants.iter().map(|v| render(v)).collect(),
                prompt: render(&e.prompt.tokens),
                prompt_target: render(&e.prompt.target),
                target_label: render(&e.target_label),
                link_kind: e.link_kind,
            })
            .collect(),
    };
    toml::to_string_pretty(&file).expect("inventory serialization")
}

pub fn inventory_from_toml(text: &str) -> Result<Vec<ConceptEntry>, toml::de::Error> {
    let file: InventoryFile = toml::from_str(text)?;
    Ok(file
        .concept
        .into_iter()
        .map(|r| ConceptEntry {
            primitive: seq(&r.primitive),
            variants: r.variants.iter().map(|v| seq(v)).collect(),
            prompt: Prompt {
                tokens: seq(&r.prompt),
                target: seq(&r.prompt_target),
            },
            target_label: seq(&r.target_label),
            link_kind: r.link_kind,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::enumerate_commands;

    #[test]
    fn variants_suffix_last_token() {
        let v = make_variants(&seq("jump"), 3);
        assert_eq!(v, vec![seq("jump_0"), seq("jump_1"), seq("jump_2")]);
        let v = make_variants(&seq("new york city"), 2);
        assert_eq!(render(&v[0]), "new york city_0");
        assert_eq!(render(&v[1]), "new york city_1");
    }

    #[test]
    fn prompt_derivation_and_fill() {
        let base = Sample::from_text("jump twice", "JUMP JUMP");
        let p = derive_prompt(&base, &seq("jump")).unwrap();
        assert_eq!(render(&p.tokens), "[z] twice");
        assert_eq!(render(&p.target), "JUMP JUMP");
        let filled = fill_prompt(&p, &seq("jump_0"));
        assert_eq!(filled, Sample::from_text("jump_0 twice", "JUMP JUMP"));
        // Filling with the primitive recovers the base sample.
        assert_eq!(fill_prompt(&p, &seq("jump")), base);
    }

    #[test]
    fn prompt_multi_token_primitive() {
        let s = Sample::from_text("how many people in new york city", "T");
        let p = derive_prompt(&s, &seq("new york city")).unwrap();
        assert_eq!(render(&p.tokens), "how many people in [z]");
    }

    #[test]
    fn prompt_errors() {
        let s = Sample::from_text("jump and jump", "JUMP JUMP");
        assert!(matches!(
            derive_prompt(&s, &seq("jump")),
            Err(LinkError::Ambiguous(_))
        ));
        assert!(matches!(
            derive_prompt(&s, &seq("walk")),
            Err(LinkError::NotFound(_))
        ));
    }

    #[test]
    fn concept_rules_share_target_label() {
        let inv = scan_inventory(1, 1);
        let rules = concept_rules(&inv[0]);
        assert_eq!(rules.len(), 2);
        assert_eq!(render(&rules[0].source), "jump");
        assert_eq!(render(&rules[0].target), "JUMP");
        assert_eq!(rules[0].kind, RuleKind::PrimitiveRule);
        assert_eq!(render(&rules[1].source), "jump_0");
        assert_eq!(render(&rules[1].target), "JUMP");
        assert_eq!(rules[1].kind, RuleKind::VariantRule);
    }

    #[test]
    fn empty_inventory_is_identity() {
        let base = vec![Sample::from_text("jump", "JUMP")];
        let b = build_inductive(&base, &[], Level::Standard).unwrap();
        assert_eq!(b.train, base);
        assert!(b.test.is_empty());
    }

    #[test]
    fn replacement_moves_occurrences_jointly() {
        let base = vec![Sample::from_text("jump and jump", "JUMP JUMP")];
        let inv = scan_inventory(4, 2);
        let test = build_replacement_test(&base, &inv);
        assert_eq!(test.len(), 2);
        assert_eq!(render(&test[0].source), "jump_0 and jump_0");
        assert_eq!(render(&test[1].source), "jump_1 and jump_1");
    }

    #[test]
    fn scan_standard_sizes() {
        let base = enumerate_commands();
        let inv = scan_inventory(4, 10);
        let il = build_inductive(&base, &inv, Level::Standard).unwrap();
        assert_eq!(il.train.len(), 20910 + 40);
        assert_eq!(il.test.len(), 308_240);
        let dl = build_deductive(&base, &inv, Level::Standard).unwrap();
        assert_eq!(dl.train.len(), 20910 + 4 + 40);
        // Exact size identities.
        let il_dif = build_inductive(&base, &inv, Level::Difficult).unwrap();
        let dl_dif = build_deductive(&base, &inv, Level::Difficult).unwrap();
        assert_eq!(il.train.len() - il_dif.train.len(), 4);
        assert_eq!(dl.train.len() - dl_dif.train.len(), 4);
        assert_eq!(dl.train.len() - il.train.len(), 4);
    }

    #[test]
    fn scan_challenging_removes_length_matched_samples() {
        let base = enumerate_commands();
        let inv = scan_inventory(4, 10);
        let dif = build_inductive(&base, &inv, Level::Difficult).unwrap();
        let cha = build_inductive(&base, &inv, Level::Challenging).unwrap();
        // Per primitive the remaining length-2 commands are "p thrice",
        // "p left", "p right".
        assert_eq!(dif.train.len() - cha.train.len(), 12);
        let train_set: HashSet<&Sample> = cha.train.iter().collect();
        assert!(!train_set.contains(&Sample::from_text("jump thrice", "JUMP JUMP JUMP")));
        assert!(!train_set.contains(&Sample::from_text("jump left", "LTURN JUMP")));
        // Guard: every base vocabulary token still occurs in train.
        let mut present: HashSet<&str> = HashSet::new();
        for s in &cha.train {
            for t in s.source.iter().chain(s.target.iter()) {
                present.insert(t.as_str());
            }
        }
        for w in scan::SOURCE_VOCAB.iter().chain(scan::ACTION_VOCAB.iter()) {
            assert!(present.contains(w), "token {w} lost from train");
        }
    }

    #[test]
    fn one_shot_property_in_standard_train() {
        let base = enumerate_commands();
        let inv = scan_inventory(4, 10);
        let il = build_inductive(&base, &inv, Level::Standard).unwrap();
        for e in &inv {
            for v in &e.variants {
                let n: usize = il
                    .train
                    .iter()
                    .map(|s| count_subseq(&s.source, v))
                    .sum();
                assert_eq!(n, 1, "variant {} not one-shot", render(v));
            }
        }
    }

    #[test]
    fn test_set_has_no_base_and_no_mixed_variants() {
        let base = enumerate_commands();
        let inv = scan_inventory(4, 3);
        let test = build_replacement_test(&base, &inv);
        let base_set: HashSet<&Sample> = base.iter().collect();
        for s in &test {
            assert!(!base_set.contains(s));
            // One replacement per sample: never two distinct variant types,
            // though one variant may repeat ("jump_0 and jump_0").
            let distinct: usize = inv
                .iter()
                .flat_map(|e| &e.variants)
                .filter(|v| count_subseq(&s.source, v) > 0)
                .count();
            assert_eq!(distinct, 1);
        }
    }

    #[test]
    fn deductive_rejects_challenging() {
        let base = vec![Sample::from_text("jump", "JUMP")];
        assert!(matches!(
            build_deductive(&base, &[], Level::Challenging),
            Err(LinkError::UnsupportedLevel(_))
        ));
    }

    #[test]
    fn subsample_keeps_k_per_variant() {
        let base = enumerate_commands();
        let inv = scan_inventory(2, 2);
        let pool = one_shot_pool(&base, &inv);
        let single = remove_multi_variant(&pool, &inv);
        let k = 3;
        let sub = subsample_per_variant(&single, &inv, k, 7).unwrap();
        for e in &inv {
            for v in &e.variants {
                let n = sub
                    .iter()
                    .filter(|s| count_subseq(&s.source, v) > 0)
                    .count();
                assert_eq!(n, k);
            }
        }
        // Determinism.
        let again = subsample_per_variant(&single, &inv, k, 7).unwrap();
        assert_eq!(sub, again);
        let other = subsample_per_variant(&single, &inv, k, 8).unwrap();
        assert_ne!(sub, other);
    }

    #[test]
    fn split_is_seeded_and_exhaustive() {
        let pool: Vec<Sample> = (0..100)
            .map(|i| Sample::from_text(&format!("s{i}"), &format!("T{i}")))
            .collect();
        let (tr, te) = split_pool(&pool, 0.8, 1);
        assert_eq!(tr.len(), 80);
        assert_eq!(te.len(), 20);
        let (tr2, _) = split_pool(&pool, 0.8, 1);
        assert_eq!(tr, tr2);
    }

    #[test]
    fn inventory_toml_round_trip() {
        let inv = scan_inventory(4, 2);
        let text = inventory_to_toml(&inv);
        assert!(text.contains("[z] twice"));
        let back = inventory_from_toml(&text).unwrap();
        assert_eq!(back, inv);
        assert_eq!(inventory_fingerprint(&back), inventory_fingerprint(&inv));
    }
}
