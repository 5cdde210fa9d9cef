//! Negative sampling by corrupting one end of a positive triple.

use std::collections::{HashMap, HashSet};

use log::warn;

use super::config::Corruption;
use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Side, Triple, TripleIndex};
use crate::rng::Stream;

const MAX_RETRIES: usize = 100;

/// Chooses which end to corrupt. Bernoulli corruption replaces the head with
/// probability `tph / (tph + hpt)` for the triple's relation.
#[derive(Debug, Clone)]
pub struct Corrupter {
    num_entities: usize,
    head_prob: Option<HashMap<RelationId, f64>>,
}

impl Corrupter {
    pub fn new(scheme: Corruption, train: &[Triple], num_entities: usize) -> Self {
        let head_prob = match scheme {
            Corruption::UniformHeadOrTail => None,
            Corruption::Bernoulli => Some(bernoulli_head_probs(train)),
        };
        Self {
            num_entities,
            head_prob,
        }
    }

    pub fn head_probability(&self, r: RelationId) -> f64 {
        self.head_prob
            .as_ref()
            .and_then(|m| m.get(&r).copied())
            .unwrap_or(0.5)
    }

    /// `k` corruptions of `t` that are not in `known`. After 100 rejected
    /// draws for one negative, a known triple is accepted with a warning;
    /// that can only fail outright when there is a single entity.
    pub fn sample(&self, t: &Triple, k: usize, known: &TripleIndex, rng: &mut Stream) -> Result<Vec<Triple>> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        let n = self.num_entities as u64;
        let p_head = self.head_probability(t.relation);
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let mut picked = None;
            let mut side = Side::Tail;
            for _ in 0..MAX_RETRIES {
                side = if rng.next_f64() < p_head { Side::Head } else { Side::Tail };
                let cand = side.replace(t, EntityId(rng.below(n) as u32));
                if cand != *t && !known.contains(&cand) {
                    picked = Some(cand);
                    break;
                }
            }
            let neg = match picked {
                Some(c) => c,
                None => {
                    if n <= 1 {
                        return Err(Error::ExhaustedCandidates(t.head.0, t.relation.0, t.tail.0));
                    }
                    warn!(
                        "no unseen corruption of ({}, {}, {}) after {MAX_RETRIES} draws; accepting a known triple",
                        t.head.0, t.relation.0, t.tail.0
                    );
                    let orig = side.entity(t).0 as u64;
                    let mut e = rng.below(n - 1);
                    if e >= orig {
                        e += 1;
                    }
                    side.replace(t, EntityId(e as u32))
                }
            };
            out.push(neg);
        }
        Ok(out)
    }
}

/// Free-function form of [`Corrupter::sample`].
pub fn sample_negatives(
    t: &Triple,
    k: usize,
    corrupter: &Corrupter,
    known: &TripleIndex,
    rng: &mut Stream,
) -> Result<Vec<Triple>> {
    corrupter.sample(t, k, known, rng)
}

fn bernoulli_head_probs(train: &[Triple]) -> HashMap<RelationId, f64> {
    let mut heads: HashMap<RelationId, HashSet<EntityId>> = HashMap::new();
    let mut tails: HashMap<RelationId, HashSet<EntityId>> = HashMap::new();
    let mut count: HashMap<RelationId, usize> = HashMap::new();
    for t in train {
        heads.entry(t.relation).or_default().insert(t.head);
        tails.entry(t.relation).or_default().insert(t.tail);
        *count.entry(t.relation).or_default() += 1;
    }
    count
        .into_iter()
        .map(|(r, c)| {
            let tph = c as f64 / heads[&r].len() as f64;
            let hpt = c as f64 / tails[&r].len() as f64;
            (r, tph / (tph + hpt))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, Stage};

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(h, r, tl)
    }

    #[test]
    fn negatives_avoid_known() {
        let train = vec![t(0, 0, 1), t(1, 0, 2), t(2, 0, 3)];
        let known = TripleIndex::new(&train);
        let c = Corrupter::new(Corruption::UniformHeadOrTail, &train, 10);
        let mut s = CounterRng::new(1, Stage::Negatives).stream(0);
        for _ in 0..200 {
            for n in c.sample(&train[0], 3, &known, &mut s).unwrap() {
                assert!(!known.contains(&n));
                assert!(n.head == train[0].head || n.tail == train[0].tail);
                assert_eq!(n.relation, train[0].relation);
            }
        }
    }

    #[test]
    fn k_zero_rejected() {
        let train = vec![t(0, 0, 1)];
        let c = Corrupter::new(Corruption::UniformHeadOrTail, &train, 3);
        let mut s = CounterRng::new(1, Stage::Negatives).stream(0);
        assert!(matches!(
            c.sample(&train[0], 0, &TripleIndex::new(&train), &mut s),
            Err(Error::InvalidK)
        ));
    }

    #[test]
    fn single_entity_exhausts() {
        let train = vec![t(0, 0, 0)];
        let c = Corrupter::new(Corruption::UniformHeadOrTail, &train, 1);
        let mut s = CounterRng::new(1, Stage::Negatives).stream(0);
        assert!(matches!(
            c.sample(&train[0], 1, &TripleIndex::new(&train), &mut s),
            Err(Error::ExhaustedCandidates(0, 0, 0))
        ));
    }

    #[test]
    fn saturated_graph_falls_back_to_known() {
        let train: Vec<Triple> = (0..2).flat_map(|h| (0..2).map(move |tl| t(h, 0, tl))).collect();
        let c = Corrupter::new(Corruption::UniformHeadOrTail, &train, 2);
        let mut s = CounterRng::new(1, Stage::Negatives).stream(0);
        let n = c.sample(&train[0], 1, &TripleIndex::new(&train), &mut s).unwrap();
        assert_ne!(n[0], train[0]);
    }

    #[test]
    fn bernoulli_prefers_the_many_side() {
        // one head, many tails: tph = 4, hpt = 1, so heads are corrupted 80% of the time
        let train: Vec<Triple> = (1..5).map(|tl| t(0, 0, tl)).collect();
        let c = Corrupter::new(Corruption::Bernoulli, &train, 5);
        assert!((c.head_probability(RelationId(0)) - 0.8).abs() < 1e-12);
        assert_eq!(
            Corrupter::new(Corruption::UniformHeadOrTail, &train, 5).head_probability(RelationId(0)),
            0.5
        );
    }
}
