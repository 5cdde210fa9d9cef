//! Benchmark construction from a full triple set: relation refinement,
//! head-entity filtering over head/tail relation groups, triple sampling,
//! and a leakage-free train/dev/test split.
//!
//! Every random decision is drawn from [`CounterRng`] keyed by the element it
//! concerns and accepted when `u < rate`, so results do not depend on
//! iteration order and raising a rate never drops an element.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{save_dataset, write_json, DatasetLayout};
use crate::kg::{dedup_in_place, Dataset, EntityId, RawTriple, RelationId, Triple, Vocabulary};
use crate::rng::{triple_key, CounterRng, Stage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationFilter {
    Allowlist(BTreeSet<RelationId>),
    MinFrequency(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub relation_filter: RelationFilter,
    /// Relations whose frequency reaches this quantile are head-relations.
    pub head_quantile: f64,
    pub alpha_head: f64,
    pub alpha_tail: f64,
    /// Triple sampling rate.
    pub alpha: f64,
    pub dev_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            relation_filter: RelationFilter::MinFrequency(1),
            head_quantile: 0.8,
            alpha_head: 0.5,
            alpha_tail: 0.1,
            alpha: 0.5,
            dev_size: 0,
            test_size: 0,
            seed: DEFAULT_SEED,
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_230_101;

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSamplerConfig(m));
        if !(self.head_quantile > 0.0 && self.head_quantile < 1.0) {
            return bad(format!("head_quantile {} not in (0, 1)", self.head_quantile));
        }
        for (name, a) in [
            ("alpha_head", self.alpha_head),
            ("alpha_tail", self.alpha_tail),
            ("alpha", self.alpha),
        ] {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("{name} {a} not in [0, 1]"));
            }
        }
        if self.alpha_head < self.alpha_tail {
            return bad(format!(
                "alpha_head {} must not be below alpha_tail {}",
                self.alpha_head, self.alpha_tail
            ));
        }
        Ok(())
    }
}

pub fn relation_counts(triples: &[Triple]) -> BTreeMap<RelationId, usize> {
    let mut counts = BTreeMap::new();
    for t in triples {
        *counts.entry(t.relation).or_default() += 1;
    }
    counts
}

/// Relations kept for the benchmark: the allowlist (restricted to relations
/// that occur) or every relation meeting the frequency threshold.
pub fn refine_relations(full: &[Triple], cfg: &SamplerConfig) -> Result<BTreeSet<RelationId>> {
    if full.is_empty() {
        return Err(Error::EmptyInput);
    }
    let counts = relation_counts(full);
    let rels: BTreeSet<RelationId> = match &cfg.relation_filter {
        RelationFilter::Allowlist(allow) => allow.iter().filter(|r| counts.contains_key(r)).copied().collect(),
        RelationFilter::MinFrequency(min) => counts
            .iter()
            .filter(|(_, &c)| c >= *min)
            .map(|(&r, _)| r)
            .collect(),
    };
    if rels.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(rels)
}

/// Splits `rels` into (head-relations, tail-relations). The threshold is the
/// frequency at position `floor(q * n)` of the ascending frequency list, so
/// with `q = 0.8` roughly the top fifth are head-relations.
pub fn split_relations(
    full: &[Triple],
    rels: &BTreeSet<RelationId>,
    head_quantile: f64,
) -> (BTreeSet<RelationId>, BTreeSet<RelationId>) {
    let counts = relation_counts(full);
    let freq = |r: &RelationId| counts.get(r).copied().unwrap_or(0);
    let mut sorted: Vec<usize> = rels.iter().map(freq).collect();
    if sorted.is_empty() {
        return Default::default();
    }
    sorted.sort_unstable();
    let idx = ((head_quantile * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    let threshold = sorted[idx];
    rels.iter().partition(|r| freq(r) >= threshold)
}

/// Union of a Bernoulli(`alpha_head`) sample of the heads of head-relation
/// triples and a Bernoulli(`alpha_tail`) sample of the heads of
/// tail-relation triples. An entity in both groups is drawn independently
/// in each and kept once.
pub fn filter_head_entities(
    full: &[Triple],
    rels: &BTreeSet<RelationId>,
    cfg: &SamplerConfig,
) -> BTreeSet<EntityId> {
    let (head_rels, tail_rels) = split_relations(full, rels, cfg.head_quantile);
    let mut head_group = BTreeSet::new();
    let mut tail_group = BTreeSet::new();
    for t in full {
        if head_rels.contains(&t.relation) {
            head_group.insert(t.head);
        } else if tail_rels.contains(&t.relation) {
            tail_group.insert(t.head);
        }
    }
    let rng_h = CounterRng::new(cfg.seed, Stage::HeadRelationEntities);
    let rng_l = CounterRng::new(cfg.seed, Stage::TailRelationEntities);
    let mut out: BTreeSet<EntityId> = head_group
        .into_iter()
        .filter(|e| rng_h.accept(e.0 as u64, cfg.alpha_head))
        .collect();
    out.extend(tail_group.into_iter().filter(|e| rng_l.accept(e.0 as u64, cfg.alpha_tail)));
    out
}

/// Triples with a sampled head and a kept relation, Bernoulli-sampled at `alpha`.
/// Input order is preserved.
pub fn sample_triples(
    full: &[Triple],
    heads: &BTreeSet<EntityId>,
    rels: &BTreeSet<RelationId>,
    cfg: &SamplerConfig,
) -> Vec<Triple> {
    let rng = CounterRng::new(cfg.seed, Stage::Triples);
    full.iter()
        .filter(|t| heads.contains(&t.head) && rels.contains(&t.relation))
        .filter(|t| rng.accept(triple_key(t.head.0, t.relation.0, t.tail.0), cfg.alpha))
        .copied()
        .collect()
}

/// Draws dev and test uniformly without replacement, skipping any triple
/// whose removal would leave one of its entities or its relation absent
/// from train. Splits keep input order; the returned dataset is re-encoded
/// with dense ids in first-appearance order over train, dev, test.
pub fn split_dataset(triples: &[Triple], vocab: &Vocabulary, cfg: &SamplerConfig) -> Result<Dataset> {
    let mut triples = triples.to_vec();
    dedup_in_place(&mut triples);
    let held_out = cfg.dev_size + cfg.test_size;
    if held_out >= triples.len() && held_out > 0 {
        return Err(Error::InfeasibleSplit(format!(
            "dev + test = {held_out} but only {} triples",
            triples.len()
        )));
    }
    let mut ent_count: BTreeMap<EntityId, usize> = BTreeMap::new();
    let mut rel_count: BTreeMap<RelationId, usize> = BTreeMap::new();
    for t in &triples {
        *ent_count.entry(t.head).or_default() += 1;
        *ent_count.entry(t.tail).or_default() += 1;
        *rel_count.entry(t.relation).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..triples.len()).collect();
    CounterRng::new(cfg.seed, Stage::Split).stream(0).shuffle(&mut order);

    let mut chosen = Vec::with_capacity(held_out);
    for &i in &order {
        if chosen.len() == held_out {
            break;
        }
        let t = triples[i];
        let need_h = if t.head == t.tail { 3 } else { 2 };
        let ok = ent_count[&t.head] >= need_h && ent_count[&t.tail] >= need_h.min(2) && rel_count[&t.relation] >= 2;
        if ok {
            *ent_count.get_mut(&t.head).expect("counted") -= 1;
            *ent_count.get_mut(&t.tail).expect("counted") -= 1;
            *rel_count.get_mut(&t.relation).expect("counted") -= 1;
            chosen.push(i);
        }
    }
    if chosen.len() < held_out {
        return Err(Error::InfeasibleSplit(format!(
            "only {} of {held_out} triples can be held out without unseen entities or relations",
            chosen.len()
        )));
    }
    let mut dev_idx = chosen[..cfg.dev_size].to_vec();
    let mut test_idx = chosen[cfg.dev_size..].to_vec();
    dev_idx.sort_unstable();
    test_idx.sort_unstable();
    let held: HashSet<usize> = chosen.into_iter().collect();
    let train: Vec<Triple> = (0..triples.len())
        .filter(|i| !held.contains(i))
        .map(|i| triples[i])
        .collect();
    let dev: Vec<Triple> = dev_idx.iter().map(|&i| triples[i]).collect();
    let test: Vec<Triple> = test_idx.iter().map(|&i| triples[i]).collect();
    reencode(vocab, &train, &dev, &test)
}

fn reencode(vocab: &Vocabulary, train: &[Triple], dev: &[Triple], test: &[Triple]) -> Result<Dataset> {
    let mut out = Vocabulary::new();
    let mut map = |ts: &[Triple]| -> Result<Vec<Triple>> {
        ts.iter()
            .map(|t| {
                vocab.check(t)?;
                let (h, r, tl) = vocab.decode(t).expect("checked");
                Ok(Triple {
                    head: out.intern_entity(h),
                    relation: out.intern_relation(r),
                    tail: out.intern_entity(tl),
                })
            })
            .collect()
    };
    let train = map(train)?;
    let dev = map(dev)?;
    let test = map(test)?;
    Dataset::new(out, train, dev, test)
}

/// Relation frequencies, descending by count then ascending by id.
pub fn relation_histogram(triples: &[Triple]) -> Vec<(RelationId, usize)> {
    let mut h: Vec<(RelationId, usize)> = relation_counts(triples).into_iter().collect();
    h.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    h
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAudit {
    pub num_entities: usize,
    pub num_relations: usize,
    pub num_train: usize,
    pub num_dev: usize,
    pub num_test: usize,
    pub disjoint: bool,
    pub dev_test_vocab_in_train: bool,
}

impl SplitAudit {
    pub fn passed(&self) -> bool {
        self.disjoint && self.dev_test_vocab_in_train
    }
}

/// Recomputes disjointness and train coverage from scratch.
pub fn audit_split(d: &Dataset) -> SplitAudit {
    let train: HashSet<&Triple> = d.train().iter().collect();
    let dev: HashSet<&Triple> = d.dev().iter().collect();
    let disjoint = d.dev().iter().all(|t| !train.contains(t))
        && d.test().iter().all(|t| !train.contains(t) && !dev.contains(t));
    let s = d.stats();
    SplitAudit {
        num_entities: s.num_entities,
        num_relations: s.num_relations,
        num_train: s.num_train,
        num_dev: s.num_dev,
        num_test: s.num_test,
        disjoint,
        dev_test_vocab_in_train: d.unseen_in_train().is_empty(),
    }
}

// ---------------------------------------------------------------------------
// Label-level pipeline

/// JSON build configuration. At most one of `relation_allowlist` and
/// `min_relation_frequency` may be given; neither keeps every relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    #[serde(default)]
    pub relation_allowlist: Option<Vec<String>>,
    #[serde(default)]
    pub min_relation_frequency: Option<usize>,
    #[serde(default = "defaults::head_quantile")]
    pub head_quantile: f64,
    #[serde(default = "defaults::alpha_head")]
    pub alpha_head: f64,
    #[serde(default = "defaults::alpha_tail")]
    pub alpha_tail: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub dev_size: usize,
    #[serde(default)]
    pub test_size: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

mod defaults {
    pub fn head_quantile() -> f64 {
        0.8
    }
    pub fn alpha_head() -> f64 {
        0.5
    }
    pub fn alpha_tail() -> f64 {
        0.1
    }
    pub fn alpha() -> f64 {
        0.5
    }
    pub fn seed() -> u64 {
        super::DEFAULT_SEED
    }
}

impl Default for BuildConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl BuildConfig {
    fn sampler_config(&self, vocab: &Vocabulary) -> Result<SamplerConfig> {
        let relation_filter = match (&self.relation_allowlist, self.min_relation_frequency) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidSamplerConfig(
                    "relation_allowlist and min_relation_frequency are mutually exclusive".into(),
                ))
            }
            (Some(labels), None) => RelationFilter::Allowlist(
                labels
                    .iter()
                    .map(|l| vocab.relation_id(l).ok_or_else(|| Error::UnknownLabel(l.clone())))
                    .collect::<Result<_>>()?,
            ),
            (None, Some(n)) => RelationFilter::MinFrequency(n),
            (None, None) => RelationFilter::MinFrequency(1),
        };
        let cfg = SamplerConfig {
            relation_filter,
            head_quantile: self.head_quantile,
            alpha_head: self.alpha_head,
            alpha_tail: self.alpha_tail,
            alpha: self.alpha,
            dev_size: self.dev_size,
            test_size: self.test_size,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub dataset: Dataset,
    pub histogram: Vec<(String, usize)>,
    pub audit: SplitAudit,
}

/// Encodes with ids in label order so sampling decisions do not depend on
/// the order of lines in the input file.
pub fn encode_sorted(raw: &[RawTriple]) -> (Vocabulary, Vec<Triple>) {
    let mut ents = BTreeSet::new();
    let mut rels = BTreeSet::new();
    for (h, r, t) in raw {
        ents.insert(h.as_str());
        ents.insert(t.as_str());
        rels.insert(r.as_str());
    }
    let mut vocab = Vocabulary::new();
    for e in ents {
        vocab.intern_entity(e);
    }
    for r in rels {
        vocab.intern_relation(r);
    }
    let triples = raw
        .iter()
        .map(|(h, r, t)| Triple {
            head: vocab.entity_id(h).expect("interned"),
            relation: vocab.relation_id(r).expect("interned"),
            tail: vocab.entity_id(t).expect("interned"),
        })
        .collect();
    (vocab, triples)
}

/// Runs refinement, head filtering, triple sampling and the split.
pub fn build_benchmark(full: &[RawTriple], cfg: &BuildConfig) -> Result<Benchmark> {
    if full.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (vocab, mut triples) = encode_sorted(full);
    // input file order must not leak into the split
    triples.sort_unstable();
    let scfg = cfg.sampler_config(&vocab)?;
    let rels = refine_relations(&triples, &scfg)?;
    let heads = filter_head_entities(&triples, &rels, &scfg);
    let sampled = sample_triples(&triples, &heads, &rels, &scfg);
    log::info!(
        "kept {} relations, {} head entities, {} triples",
        rels.len(),
        heads.len(),
        sampled.len()
    );
    if sampled.is_empty() {
        return Err(Error::InfeasibleSplit("sampling produced no triples".into()));
    }
    let dataset = split_dataset(&sampled, &vocab, &scfg)?;
    let all: Vec<Triple> = dataset.all_triples().copied().collect();
    let histogram = relation_histogram(&all)
        .into_iter()
        .map(|(r, c)| (dataset.vocabulary().relation_label(r).expect("valid").to_owned(), c))
        .collect();
    let audit = audit_split(&dataset);
    Ok(Benchmark {
        dataset,
        histogram,
        audit,
    })
}

pub fn write_benchmark(dir: impl AsRef<Path>, b: &Benchmark) -> Result<()> {
    let dir = dir.as_ref();
    save_dataset(dir, &DatasetLayout::default(), &b.dataset)?;
    let mut csv = String::from("relation,count\n");
    for (label, c) in &b.histogram {
        csv.push_str(&csv_field(label));
        csv.push(',');
        csv.push_str(&c.to_string());
        csv.push('\n');
    }
    let path = dir.join("relation_histogram.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    write_json(dir.join("audit.json"), &b.audit)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(h, r, tl)
    }

    fn vocab(ne: u32, nr: u32) -> Vocabulary {
        let mut v = Vocabulary::new();
        for i in 0..ne {
            v.intern_entity(&format!("e{i}"));
        }
        for i in 0..nr {
            v.intern_relation(&format!("r{i}"));
        }
        v
    }

    #[test]
    fn threshold_refinement() {
        let mut full = vec![t(0, 0, 1); 100];
        full.push(t(0, 1, 1));
        let cfg = SamplerConfig {
            relation_filter: RelationFilter::MinFrequency(10),
            ..Default::default()
        };
        assert_eq!(refine_relations(&full, &cfg).unwrap(), BTreeSet::from([RelationId(0)]));
        let cfg = SamplerConfig {
            relation_filter: RelationFilter::Allowlist(BTreeSet::from([RelationId(1)])),
            ..Default::default()
        };
        assert_eq!(refine_relations(&full, &cfg).unwrap(), BTreeSet::from([RelationId(1)]));
        let cfg = SamplerConfig {
            relation_filter: RelationFilter::MinFrequency(1000),
            ..Default::default()
        };
        assert!(matches!(refine_relations(&full, &cfg), Err(Error::EmptyResult)));
    }

    #[test]
    fn head_quantile_split() {
        // frequencies 1..=10 for relations 0..10
        let full: Vec<Triple> = (0..10u32).flat_map(|r| (0..=r).map(move |i| t(i, r, 0))).collect();
        let rels: BTreeSet<_> = (0..10).map(RelationId).collect();
        let (head, tail) = split_relations(&full, &rels, 0.8);
        assert_eq!(head, BTreeSet::from([RelationId(8), RelationId(9)]));
        assert_eq!(tail.len(), 8);
    }

    #[test]
    fn identity_and_annihilation_rates() {
        let full: Vec<Triple> = (0..50).map(|i| t(i, i % 5, (i + 1) % 50)).collect();
        let rels: BTreeSet<_> = (0..5).map(RelationId).collect();
        let all_heads: BTreeSet<_> = full.iter().map(|t| t.head).collect();
        let one = SamplerConfig {
            alpha_head: 1.0,
            alpha_tail: 1.0,
            alpha: 1.0,
            ..Default::default()
        };
        assert_eq!(filter_head_entities(&full, &rels, &one), all_heads);
        assert_eq!(sample_triples(&full, &all_heads, &rels, &one), full);
        let zero = SamplerConfig {
            alpha_head: 0.0,
            alpha_tail: 0.0,
            ..Default::default()
        };
        assert!(filter_head_entities(&full, &rels, &zero).is_empty());
        assert!(sample_triples(&full, &BTreeSet::new(), &rels, &one).is_empty());
    }

    #[test]
    fn alpha_ordering_enforced() {
        let cfg = SamplerConfig {
            alpha_head: 0.1,
            alpha_tail: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }

    #[test]
    fn degenerate_split_keeps_everything_in_train() {
        let full: Vec<Triple> = (0..10).map(|i| t(i, 0, i + 1)).collect();
        let d = split_dataset(&full, &vocab(11, 1), &SamplerConfig::default()).unwrap();
        assert_eq!(d.stats().num_train, 10);
        assert!(d.dev().is_empty() && d.test().is_empty());
    }

    #[test]
    fn chain_endpoints_never_leak() {
        // Chain 0-1-2-...-10: entities 0 and 10 appear once.
        let full: Vec<Triple> = (0..10).map(|i| t(i, 0, i + 1)).collect();
        for seed in 0..20 {
            let cfg = SamplerConfig {
                test_size: 3,
                seed,
                ..Default::default()
            };
            let d = split_dataset(&full, &vocab(11, 1), &cfg).unwrap();
            assert_eq!(d.test().len(), 3);
            assert!(audit_split(&d).passed(), "seed {seed}");
        }
    }

    #[test]
    fn infeasible_split() {
        let full: Vec<Triple> = (0..4).map(|i| t(i, 0, i + 1)).collect();
        let cfg = SamplerConfig {
            test_size: 3,
            ..Default::default()
        };
        assert!(matches!(
            split_dataset(&full, &vocab(5, 1), &cfg),
            Err(Error::InfeasibleSplit(_))
        ));
    }

    #[test]
    fn histogram_order() {
        let ts = [t(0, 1, 1), t(0, 1, 2), t(0, 2, 1)];
        assert_eq!(relation_histogram(&ts), vec![(RelationId(1), 2), (RelationId(2), 1)]);
        assert!(relation_histogram(&[]).is_empty());
        let tie = [t(0, 3, 1), t(0, 2, 1)];
        assert_eq!(relation_histogram(&tie), vec![(RelationId(2), 1), (RelationId(3), 1)]);
    }

    #[test]
    fn raising_alpha_never_drops_a_triple() {
        let full: Vec<Triple> = (0..500).map(|i| t(i % 40, i % 7, (i * 13) % 97)).collect();
        let rels: BTreeSet<_> = (0..7).map(RelationId).collect();
        let heads: BTreeSet<_> = full.iter().map(|t| t.head).collect();
        let mut prev: HashSet<Triple> = HashSet::new();
        for a in [0.1, 0.3, 0.5, 0.9, 1.0] {
            let cfg = SamplerConfig { alpha: a, ..Default::default() };
            let cur: HashSet<Triple> = sample_triples(&full, &heads, &rels, &cfg).into_iter().collect();
            assert!(prev.is_subset(&cur));
            prev = cur;
        }
    }

    #[test]
    fn build_config_defaults_and_exclusivity() {
        let c = BuildConfig::default();
        assert_eq!((c.head_quantile, c.alpha_head, c.alpha_tail, c.alpha), (0.8, 0.5, 0.1, 0.5));
        let both: BuildConfig =
            serde_json::from_str(r#"{"relation_allowlist": ["r0"], "min_relation_frequency": 2}"#).unwrap();
        assert!(both.sampler_config(&vocab(1, 1)).is_err());
        assert!(serde_json::from_str::<BuildConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
