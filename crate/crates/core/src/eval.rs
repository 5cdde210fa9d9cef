//! Link-prediction ranking and metric aggregation.
//!
//! Ranks use the mean-tie rule: `1 + #better + #tied / 2`, so a model that
//! scores every candidate equally gets the expected rank of a random guess.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Dataset, EntityId, RelationId, Side, Triple, TripleIndex};
use crate::models::{score_candidates, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Raw,
    #[default]
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    #[serde(rename = "tail")]
    TailOnly,
    #[default]
    #[serde(rename = "both")]
    HeadAndTail,
}

impl Sides {
    pub fn sides(self) -> &'static [Side] {
        match self {
            Sides::TailOnly => &[Side::Tail],
            Sides::HeadAndTail => &[Side::Tail, Side::Head],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    pub protocol: Protocol,
    pub sides: Sides,
    hits_at: Vec<u32>,
    pub relation: Option<RelationId>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Filtered,
            sides: Sides::HeadAndTail,
            hits_at: vec![1, 3, 10],
            relation: None,
        }
    }
}

impl EvalConfig {
    /// Cutoffs are sorted and deduplicated; zero is rejected.
    pub fn with_hits_at(mut self, mut cutoffs: Vec<u32>) -> Result<Self> {
        if cutoffs.is_empty() || cutoffs.contains(&0) {
            return Err(Error::InvalidConfig("hits cutoffs must be non-empty and >= 1".into()));
        }
        cutoffs.sort_unstable();
        cutoffs.dedup();
        self.hits_at = cutoffs;
        Ok(self)
    }

    pub fn hits_at(&self) -> &[u32] {
        &self.hits_at
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    tail_ranks: Vec<f64>,
    head_ranks: Vec<f64>,
    hits: Vec<(u32, f64)>,
    mr: f64,
    mrr: f64,
    protocol: Protocol,
    sides: Sides,
    n_test: usize,
}

impl EvalReport {
    /// Aggregates per-side ranks. Both sides contribute equally when present.
    pub fn from_ranks(
        tail_ranks: Vec<f64>,
        head_ranks: Vec<f64>,
        cutoffs: &[u32],
        protocol: Protocol,
        sides: Sides,
        n_test: usize,
    ) -> Result<Self> {
        let all: Vec<f64> = tail_ranks.iter().chain(&head_ranks).copied().collect();
        if all.is_empty() {
            return Err(Error::EmptyReport);
        }
        let n = all.len() as f64;
        let hits = cutoffs
            .iter()
            .map(|&k| (k, all.iter().filter(|&&r| r <= k as f64).count() as f64 / n))
            .collect();
        let mr = all.iter().sum::<f64>() / n;
        let mrr = all.iter().map(|r| 1.0 / r).sum::<f64>() / n;
        Ok(Self {
            tail_ranks,
            head_ranks,
            hits,
            mr,
            mrr,
            protocol,
            sides,
            n_test,
        })
    }

    pub fn tail_ranks(&self) -> &[f64] {
        &self.tail_ranks
    }

    pub fn head_ranks(&self) -> &[f64] {
        &self.head_ranks
    }

    pub fn num_ranks(&self) -> usize {
        self.tail_ranks.len() + self.head_ranks.len()
    }

    pub fn hits(&self) -> &[(u32, f64)] {
        &self.hits
    }

    pub fn hits_at(&self, k: u32) -> Option<f64> {
        self.hits.iter().find(|(c, _)| *c == k).map(|(_, v)| *v)
    }

    pub fn mr(&self) -> f64 {
        self.mr
    }

    pub fn mrr(&self) -> f64 {
        self.mrr
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn sides(&self) -> Sides {
        self.sides
    }

    pub fn n_test(&self) -> usize {
        self.n_test
    }

    /// Metric identities every report must satisfy.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for w in self.hits.windows(2) {
            if w[0].1 > w[1].1 {
                return Err(format!("hits@{} > hits@{}", w[0].0, w[1].0));
            }
        }
        if self.mr < 1.0 {
            return Err(format!("mr {} < 1", self.mr));
        }
        let tol = 1e-12;
        if let Some(h1) = self.hits_at(1) {
            if self.mrr + tol < h1 {
                return Err(format!("mrr {} < hits@1 {}", self.mrr, h1));
            }
        }
        if self.mrr + tol < 1.0 / self.mr {
            return Err(format!("mrr {} < 1/mr {}", self.mrr, 1.0 / self.mr));
        }
        Ok(())
    }
}

/// Mean-tie rank of `target` among `scores`, skipping ids in `excluded`
/// (sorted ascending). The target itself is never excluded.
pub fn rank_from_scores(scores: &[f64], target: EntityId, excluded: &[EntityId]) -> f64 {
    let s = scores[target.index()];
    let mut better = 0usize;
    let mut ties = 0usize;
    let mut ex = excluded.iter().peekable();
    for (c, &sc) in scores.iter().enumerate() {
        while ex.peek().is_some_and(|e| e.index() < c) {
            ex.next();
        }
        if c == target.index() || ex.peek().is_some_and(|e| e.index() == c) {
            continue;
        }
        if sc > s {
            better += 1;
        } else if sc == s {
            ties += 1;
        }
    }
    1.0 + better as f64 + ties as f64 / 2.0
}

/// Rank of the true entity of `t` on `side`. Under the filtered protocol,
/// candidates forming a triple in `filter` are removed.
pub fn rank_one(
    params: &ModelParams,
    t: &Triple,
    side: Side,
    filter: &TripleIndex,
    protocol: Protocol,
) -> Result<f64> {
    let scores = score_candidates(params, t, side)?;
    let excluded = match protocol {
        Protocol::Raw => &[][..],
        Protocol::Filtered => filter.completions(t, side),
    };
    Ok(rank_from_scores(&scores, side.entity(t), excluded))
}

/// Ranks every test triple (optionally restricted to one relation) against
/// the full entity set. Runs on the current rayon pool; results do not
/// depend on the number of workers.
pub fn evaluate(dataset: &Dataset, params: &ModelParams, cfg: &EvalConfig) -> Result<EvalReport> {
    let test: Vec<Triple> = dataset
        .test()
        .iter()
        .filter(|t| cfg.relation.is_none_or(|r| t.relation == r))
        .copied()
        .collect();
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let filter = match cfg.protocol {
        Protocol::Filtered => TripleIndex::new(dataset.all_triples()),
        Protocol::Raw => TripleIndex::default(),
    };
    let per_triple: Vec<Vec<f64>> = test
        .par_iter()
        .map(|t| {
            cfg.sides
                .sides()
                .iter()
                .map(|&side| rank_one(params, t, side, &filter, cfg.protocol))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let tail_ranks = per_triple.iter().map(|r| r[0]).collect();
    let head_ranks = match cfg.sides {
        Sides::HeadAndTail => per_triple.iter().map(|r| r[1]).collect(),
        Sides::TailOnly => Vec::new(),
    };
    EvalReport::from_ranks(tail_ranks, head_ranks, &cfg.hits_at, cfg.protocol, cfg.sides, test.len())
}

/// Top-`k` tails for `(item, relation, ?)`, excluding tails already known in
/// `filter`. Sorted by score descending, ties by id ascending.
pub fn category_predict(
    item: EntityId,
    relation: RelationId,
    k: usize,
    params: &ModelParams,
    filter: &TripleIndex,
) -> Result<Vec<(EntityId, f64)>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let query = Triple {
        head: item,
        relation,
        tail: item,
    };
    let scores = score_candidates(params, &query, Side::Tail)?;
    let known = filter.completions(&query, Side::Tail);
    let mut ranked: Vec<(EntityId, f64)> = scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| (EntityId(i as u32), s))
        .filter(|(e, _)| known.binary_search(e).is_err())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

/// Per-relation mean reciprocal rank, for breaking results down by relation.
pub fn mrr_by_relation(test: &[Triple], tail_ranks: &[f64]) -> BTreeMap<RelationId, f64> {
    let mut acc: BTreeMap<RelationId, (f64, usize)> = BTreeMap::new();
    for (t, r) in test.iter().zip(tail_ranks) {
        let e = acc.entry(t.relation).or_default();
        e.0 += 1.0 / r;
        e.1 += 1;
    }
    acc.into_iter().map(|(r, (s, n))| (r, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_without_ties() {
        assert_eq!(rank_from_scores(&[0.9, 0.5, 0.7], EntityId(2), &[]), 2.0);
    }

    #[test]
    fn rank_all_tied() {
        assert_eq!(rank_from_scores(&[1.0; 5], EntityId(0), &[]), 3.0);
    }

    #[test]
    fn filtering_skips_competitors_but_not_target() {
        let scores = [0.9, 0.5, 0.7, 0.8];
        assert_eq!(rank_from_scores(&scores, EntityId(2), &[EntityId(0), EntityId(2)]), 2.0);
        assert_eq!(rank_from_scores(&scores, EntityId(2), &[EntityId(0), EntityId(3)]), 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let r = EvalReport::from_ranks(vec![1.0, 2.0, 10.0], vec![], &[1, 3, 10], Protocol::Raw, Sides::TailOnly, 3)
            .unwrap();
        assert!((r.hits_at(1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.hits_at(3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.hits_at(10).unwrap(), 1.0);
        assert!((r.mr() - 13.0 / 3.0).abs() < 1e-12);
        assert!((r.mrr() - 1.6 / 3.0).abs() < 1e-12);
        r.check_invariants().unwrap();

        let one = EvalReport::from_ranks(vec![1.0], vec![], &[1, 3, 10], Protocol::Raw, Sides::TailOnly, 1).unwrap();
        assert_eq!((one.hits_at(1), one.mr(), one.mrr()), (Some(1.0), 1.0, 1.0));
        assert!(matches!(
            EvalReport::from_ranks(vec![], vec![], &[1], Protocol::Raw, Sides::TailOnly, 0),
            Err(Error::EmptyReport)
        ));
    }

    #[test]
    fn cutoffs_validated() {
        assert!(EvalConfig::default().with_hits_at(vec![0, 1]).is_err());
        let c = EvalConfig::default().with_hits_at(vec![10, 1, 10]).unwrap();
        assert_eq!(c.hits_at(), [1, 10]);
    }
}
