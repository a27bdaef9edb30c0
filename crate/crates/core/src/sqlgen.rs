//! GEO/ADV-style dataset derivation from variable-annotated text-to-SQL
//! corpora, co-hyponym inventories, and entity-augmentation concept rules.
//!
//! Corpus files use the public text-to-SQL record layout: each record holds
//! paraphrase sentences with per-sentence variable maps plus templated SQL
//! strings. Variables group by name with trailing digits stripped and
//! uppercased (`city_name0` -> `CITY_NAME`). Hypernym groups stay abstract in
//! targets; all other placeholders are restored by their bound entities.

use crate::error::CorpusError;
use crate::linking::{
    derive_prompt, rng_from_seed, ConceptEntry, ConceptRule, LinkKind, RuleKind,
};
use crate::token::{count_subseq, render, seq, Sample, Token};
use rand::seq::index::sample as index_sample;
use serde::Deserialize;
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

pub const UNK: &str = "<unk>";

/// One sentence realization: text and SQL with placeholders plus the
/// entity bound to each placeholder.
#[derive(Debug, Clone)]
pub struct AnnotatedQuery {
    pub text: Vec<Token>,
    pub sql: Vec<Token>,
    pub bindings: BTreeMap<String, Vec<Token>>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    sentences: Vec<RawSentence>,
    sql: Vec<String>,
    #[serde(default)]
    variables: Vec<RawVariable>,
}

#[derive(Debug, Deserialize)]
struct RawSentence {
    text: String,
    #[serde(default)]
    variables: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct RawVariable {
    name: String,
    #[serde(default)]
    example: String,
}

/// Uppercased variable name with trailing digits stripped.
pub fn variable_group(name: &str) -> String {
    name.trim_end_matches(|c: char| c.is_ascii_digit())
        .to_uppercase()
}

/// Reads a corpus file, flattening each (sentence, first sql) pair into one
/// realization. Record-level variable examples back fill missing sentence
/// bindings.
pub fn read_corpus(path: &Path) -> Result<Vec<AnnotatedQuery>, CorpusError> {
    let text = fs::read_to_string(path)?;
    let records: Vec<RawRecord> = serde_json::from_str(&text)?;
    let mut out = Vec::new();
    for rec in records {
        let sql = rec.sql.first().cloned().unwrap_or_default();
        let var_names: HashSet<&str> = rec.variables.iter().map(|v| v.name.as_str()).collect();
        for sent in &rec.sentences {
            let mut bindings = BTreeMap::new();
            for (k, v) in &sent.variables {
                bindings.insert(k.clone(), seq(v));
            }
            for v in &rec.variables {
                if !bindings.contains_key(&v.name) && !v.example.is_empty() {
                    bindings.insert(v.name.clone(), seq(&v.example));
                }
            }
            for tok in sent.text.split_whitespace().chain(sql.split_whitespace()) {
                if var_names.contains(tok) && !bindings.contains_key(tok) {
                    return Err(CorpusError::MissingBinding {
                        variable: tok.to_string(),
                        sentence: sent.text.clone(),
                    });
                }
            }
            out.push(AnnotatedQuery {
                text: seq(&sent.text),
                sql: seq(&sql),
                bindings,
            });
        }
    }
    Ok(out)
}

/// Which variable groups stay abstract in targets, and the primitive entity
/// chosen for each.
#[derive(Debug, Clone)]
pub struct DerivationConfig {
    pub hypernyms: Vec<HypernymSpec>,
}

#[derive(Debug, Clone)]
pub struct HypernymSpec {
    pub group: String,
    pub primitive: Vec<Token>,
}

/// The paper's GEO hypernym variables and primitives.
pub fn geo_config() -> DerivationConfig {
    DerivationConfig {
        hypernyms: vec![
            HypernymSpec { group: "CITY_NAME".into(), primitive: seq("new york city") },
            HypernymSpec { group: "RIVER_NAME".into(), primitive: seq("mississippi rivier") },
            HypernymSpec { group: "STATE_NAME".into(), primitive: seq("dc") },
            HypernymSpec { group: "CAPITAL_NAME".into(), primitive: seq("dover") },
        ],
    }
}

/// The paper's ADV hypernym variables and primitives.
pub fn adv_config() -> DerivationConfig {
    DerivationConfig {
        hypernyms: vec![
            HypernymSpec { group: "TOPIC".into(), primitive: seq("a history of american film") },
            HypernymSpec { group: "INSTRUCTOR".into(), primitive: seq("aaron magid") },
            HypernymSpec { group: "DEPARTMENT".into(), primitive: seq("aaptis") },
            HypernymSpec { group: "NUMBER".into(), primitive: seq("100") },
        ],
    }
}

fn is_hypernym(cfg: &DerivationConfig, group: &str) -> bool {
    cfg.hypernyms.iter().any(|h| h.group == group)
}

/// Derives (samples, inventory) from a corpus. Sources restore every
/// placeholder; targets keep hypernym placeholders as their group name and
/// restore the rest. Inventory variants are all other distinct binding
/// values of each hypernym group; prompts come from the shortest sample
/// containing the primitive exactly once.
pub fn derive_dataset(
    corpus: &[AnnotatedQuery],
    cfg: &DerivationConfig,
) -> Result<(Vec<Sample>, Vec<ConceptEntry>), CorpusError> {
    if cfg.hypernyms.is_empty() {
        return Err(CorpusError::NoHypernyms);
    }
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    // First-occurrence order of binding values per hypernym group.
    let mut group_values: BTreeMap<String, Vec<Vec<Token>>> = BTreeMap::new();

    for q in corpus {
        let mut source = Vec::new();
        for t in &q.text {
            match q.bindings.get(t.as_str()) {
                Some(entity) => source.extend(entity.iter().cloned()),
                None => source.push(t.clone()),
            }
        }
        let mut target = Vec::new();
        for t in &q.sql {
            match q.bindings.get(t.as_str()) {
                Some(entity) => {
                    let group = variable_group(t.as_str());
                    if is_hypernym(cfg, &group) {
                        target.push(Token::new(&group).unwrap());
                    } else {
                        target.extend(entity.iter().cloned());
                    }
                }
                None => target.push(t.clone()),
            }
        }
        for (name, value) in &q.bindings {
            let group = variable_group(name);
            if is_hypernym(cfg, &group) {
                let values = group_values.entry(group).or_default();
                if !values.contains(value) {
                    values.push(value.clone());
                }
            }
        }
        let sample = Sample::new(source, target);
        if seen.insert(sample.clone()) {
            samples.push(sample);
        }
    }

    let mut inventory = Vec::new();
    for h in &cfg.hypernyms {
        let values = group_values.get(&h.group).cloned().unwrap_or_default();
        if !values.contains(&h.primitive) {
            return Err(CorpusError::PrimitiveNotInCorpus {
                variable: h.group.clone(),
                primitive: render(&h.primitive),
            });
        }
        let variants: Vec<Vec<Token>> =
            values.into_iter().filter(|v| *v != h.primitive).collect();
        let mut host: Option<&Sample> = None;
        for s in &samples {
            if count_subseq(&s.source, &h.primitive) == 1 {
                let better = match host {
                    None => true,
                    Some(curr) => (s.source.len(), &s.source) < (curr.source.len(), &curr.source),
                };
                if better {
                    host = Some(s);
                }
            }
        }
        let host = host.ok_or_else(|| CorpusError::PrimitiveNotInCorpus {
            variable: h.group.clone(),
            primitive: render(&h.primitive),
        })?;
        let prompt = derive_prompt(host, &h.primitive).expect("host has one occurrence");
        inventory.push(ConceptEntry {
            primitive: h.primitive.clone(),
            variants,
            prompt,
            target_label: seq(&h.group),
            link_kind: LinkKind::CoHyponym,
        });
    }
    Ok((samples, inventory))
}

/// Replaces each entry's variant list by a seeded uniform sample of size
/// `min(k, |V_p|)`, preserving original order of the chosen variants.
pub fn variant_sampler(
    inventory: &[ConceptEntry],
    k_per_primitive: usize,
    seed: u64,
) -> Vec<ConceptEntry> {
    assert!(k_per_primitive >= 1);
    let mut rng = rng_from_seed(seed);
    inventory
        .iter()
        .map(|e| {
            let take = k_per_primitive.min(e.variants.len());
            let mut idx: Vec<usize> = index_sample(&mut rng, e.variants.len(), take).into_vec();
            idx.sort_unstable();
            ConceptEntry {
                variants: idx.iter().map(|&i| e.variants[i].clone()).collect(),
                ..e.clone()
            }
        })
        .collect()
}

/// Identity entity rules with unknown-token masking: any token absent from
/// the base vocabulary is replaced on both sides by `<unk>`. Duplicates
/// (post-masking) are removed.
pub fn entity_rules(
    corpus_entities: &[Vec<Token>],
    base_vocab: &HashSet<String>,
) -> Vec<ConceptRule> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for entity in corpus_entities {
        let masked: Vec<Token> = entity
            .iter()
            .map(|t| {
                if base_vocab.contains(t.as_str()) {
                    t.clone()
                } else {
                    Token::new(UNK).unwrap()
                }
            })
            .collect();
        if seen.insert(masked.clone()) {
            out.push(ConceptRule {
                source: masked.clone(),
                target: masked,
                kind: RuleKind::PrimitiveRule,
            });
        }
    }
    out
}
