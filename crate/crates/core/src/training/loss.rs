//! Training objectives and their gradients.
//!
//! Per-example work runs on the current rayon pool; partial gradients are
//! merged sequentially in input order so results do not depend on the
//! number of workers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::Loss;
use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Side, Triple};
use crate::models::tensors::{ENTITY, RELATION, TUCKER_CORE};
use crate::models::tucker::{backprop_relation, head_query, relation_matrix, tail_query};
use crate::models::{accumulate_grad, dot, score_unchecked, ModelKind, ModelParams, SparseGrad};

/// One 1-to-N query: score every entity on `side` of `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub anchor: Triple,
    pub side: Side,
    /// Entities that complete the query in the training set, sorted.
    pub labels: Vec<EntityId>,
    /// Inverted-dropout mask on the anchor embedding (TuckER only).
    pub input_mask: Option<Vec<f64>>,
    /// Inverted-dropout mask on the query vector (TuckER only).
    pub hidden_mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Batch {
    /// Positives with their corruptions, `negatives[i]` belonging to `positives[i]`.
    Pairs {
        positives: Vec<Triple>,
        negatives: Vec<Vec<Triple>>,
    },
    Queries(Vec<Query>),
}

/// Summed loss over the batch and its gradient.
pub fn loss_and_grads(params: &ModelParams, batch: &Batch, loss: &Loss) -> Result<(f64, SparseGrad)> {
    let (parts, g) = loss_parts(params, batch, loss)?;
    Ok((parts.iter().sum(), g))
}

/// Loss per batch element (positive or query) and the summed gradient.
pub(crate) fn loss_parts(params: &ModelParams, batch: &Batch, loss: &Loss) -> Result<(Vec<f64>, SparseGrad)> {
    match (batch, loss) {
        (Batch::Pairs { positives, negatives }, Loss::MarginRanking { margin }) => {
            check_pairs(params, positives, negatives)?;
            Ok(margin_ranking(params, positives, negatives, *margin))
        }
        (Batch::Pairs { positives, negatives }, Loss::Logistic { reg }) => {
            check_pairs(params, positives, negatives)?;
            Ok(logistic(params, positives, negatives, *reg))
        }
        (Batch::Queries(queries), Loss::Bce1toN { label_smoothing, .. }) => {
            for q in queries {
                params.check_triple(&q.anchor)?;
            }
            Ok(bce_1_to_n(params, queries, *label_smoothing))
        }
        _ => Err(Error::InvalidConfig(format!(
            "loss {} does not match the batch kind",
            loss.tag()
        ))),
    }
}

fn check_pairs(params: &ModelParams, positives: &[Triple], negatives: &[Vec<Triple>]) -> Result<()> {
    if positives.len() != negatives.len() {
        return Err(Error::InvalidConfig("one negative list per positive expected".into()));
    }
    for t in positives.iter().chain(negatives.iter().flatten()) {
        params.check_triple(t)?;
    }
    Ok(())
}

fn merge_ordered(parts: Vec<(f64, SparseGrad)>) -> (Vec<f64>, SparseGrad) {
    let mut losses = Vec::with_capacity(parts.len());
    let mut g = SparseGrad::new();
    for (l, part) in parts {
        losses.push(l);
        g.merge(&part);
    }
    (losses, g)
}

/// `sum max(0, margin - f(pos) + f(neg))` over every (positive, negative) pair.
fn margin_ranking(params: &ModelParams, positives: &[Triple], negatives: &[Vec<Triple>], margin: f64) -> (Vec<f64>, SparseGrad) {
    let parts: Vec<(f64, SparseGrad)> = positives
        .par_iter()
        .zip(negatives.par_iter())
        .map(|(pos, negs)| {
            let mut g = SparseGrad::new();
            let mut l = 0.0;
            let sp = score_unchecked(params, pos);
            for neg in negs {
                let v = margin - sp + score_unchecked(params, neg);
                if v > 0.0 {
                    l += v;
                    accumulate_grad(params, pos, -1.0, &mut g);
                    accumulate_grad(params, neg, 1.0, &mut g);
                }
            }
            (l, g)
        })
        .collect();
    merge_ordered(parts)
}

/// `softplus(-y f)` for positives (`y = 1`) and negatives (`y = -1`), plus
/// `reg * ||row||^2` for each embedding row of every scored triple, counted
/// per occurrence.
fn logistic(params: &ModelParams, positives: &[Triple], negatives: &[Vec<Triple>], reg: f64) -> (Vec<f64>, SparseGrad) {
    let parts: Vec<(f64, SparseGrad)> = positives
        .par_iter()
        .zip(negatives.par_iter())
        .map(|(pos, negs)| {
            let mut g = SparseGrad::new();
            let mut l = 0.0;
            for (t, y) in std::iter::once((pos, 1.0)).chain(negs.iter().map(|n| (n, -1.0))) {
                let s = score_unchecked(params, t);
                l += softplus(-y * s);
                // d softplus(-y s) / ds = -y * sigmoid(-y s)
                accumulate_grad(params, t, -y * sigmoid(-y * s), &mut g);
                if reg > 0.0 {
                    for (tensor, row) in embedding_rows(params, t) {
                        let v = params.tensor(tensor).row(row);
                        l += reg * dot(v, v);
                        g.axpy(tensor, row, 2.0 * reg, v);
                    }
                }
            }
            (l, g)
        })
        .collect();
    merge_ordered(parts)
}

/// Embedding rows a triple reads: entity-indexed rows at head and tail and
/// relation-indexed rows at the relation. The TuckER core is not included.
pub fn embedding_rows(params: &ModelParams, t: &Triple) -> Vec<(usize, usize)> {
    let mut rows = Vec::new();
    for (i, spec) in params.layout().iter().enumerate() {
        if params.model() == ModelKind::TuckER && i == TUCKER_CORE {
            continue;
        }
        if spec.per_entity {
            rows.push((i, t.head.index()));
            if t.tail != t.head {
                rows.push((i, t.tail.index()));
            }
        } else {
            rows.push((i, t.relation.index()));
        }
    }
    rows
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smoothed target for one candidate.
#[inline]
fn target(is_label: bool, smoothing: f64, n: f64) -> f64 {
    (1.0 - smoothing) * if is_label { 1.0 } else { 0.0 } + smoothing / n
}

/// Per-query loss is the mean BCE over all entities; the batch loss is the
/// sum over queries.
fn bce_1_to_n(params: &ModelParams, queries: &[Query], smoothing: f64) -> (Vec<f64>, SparseGrad) {
    if params.model() == ModelKind::TuckER {
        return tucker_bce(params, queries, smoothing);
    }
    let n = params.num_entities();
    let parts: Vec<(f64, SparseGrad)> = queries
        .par_iter()
        .map(|q| {
            let mut g = SparseGrad::new();
            let mut l = 0.0;
            for e in 0..n {
                let t = q.side.replace(&q.anchor, EntityId(e as u32));
                let s = score_unchecked(params, &t);
                let y = target(q.labels.binary_search(&EntityId(e as u32)).is_ok(), smoothing, n as f64);
                l += y * softplus(-s) + (1.0 - y) * softplus(s);
                let ds = (sigmoid(s) - y) / n as f64;
                if ds != 0.0 {
                    accumulate_grad(params, &t, ds, &mut g);
                }
            }
            (l / n as f64, g)
        })
        .collect();
    merge_ordered(parts)
}

struct TuckerQueryOut {
    loss: f64,
    /// dL/ds for every entity
    ds: Vec<f64>,
    /// query vector after hidden dropout, dotted with every candidate
    q: Vec<f64>,
    /// gradient for the anchor entity row
    d_anchor: Vec<f64>,
    /// `acc[i][k]` contribution for the relation (head-side i, tail-side k)
    acc: Vec<f64>,
}

/// TuckER batch: relation matrices are built once per relation and entity
/// gradients are accumulated densely.
fn tucker_bce(params: &ModelParams, queries: &[Query], smoothing: f64) -> (Vec<f64>, SparseGrad) {
    let de = params.entity_dim();
    let n = params.num_entities();
    let ent = params.tensor(ENTITY);
    let rels: Vec<RelationId> = {
        let mut r: Vec<RelationId> = queries.iter().map(|q| q.anchor.relation).collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    let mats: BTreeMap<RelationId, Vec<f64>> = rels
        .par_iter()
        .map(|&r| (r, relation_matrix(params, r)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let outs: Vec<TuckerQueryOut> = queries
        .par_iter()
        .map(|q| {
            let m = &mats[&q.anchor.relation];
            let anchor_row = match q.side {
                Side::Tail => ent.row(q.anchor.head.index()),
                Side::Head => ent.row(q.anchor.tail.index()),
            };
            let x: Vec<f64> = match &q.input_mask {
                Some(mask) => anchor_row.iter().zip(mask).map(|(a, b)| a * b).collect(),
                None => anchor_row.to_vec(),
            };
            let raw = match q.side {
                Side::Tail => tail_query(m, &x),
                Side::Head => head_query(m, &x),
            };
            let qv: Vec<f64> = match &q.hidden_mask {
                Some(mask) => raw.iter().zip(mask).map(|(a, b)| a * b).collect(),
                None => raw,
            };
            let mut loss = 0.0;
            let mut ds = vec![0.0; n];
            let mut dq = vec![0.0; de];
            let mut li = q.labels.iter().peekable();
            for (e, d) in ds.iter_mut().enumerate() {
                while li.peek().is_some_and(|l| l.index() < e) {
                    li.next();
                }
                let is_label = li.peek().is_some_and(|l| l.index() == e);
                let row = ent.row(e);
                let s = dot(&qv, row);
                let y = target(is_label, smoothing, n as f64);
                loss += y * softplus(-s) + (1.0 - y) * softplus(s);
                *d = (sigmoid(s) - y) / n as f64;
                for (a, b) in dq.iter_mut().zip(row) {
                    *a += *d * b;
                }
            }
            if let Some(mask) = &q.hidden_mask {
                for (a, b) in dq.iter_mut().zip(mask) {
                    *a *= b;
                }
            }
            // back through the relation matrix to the (masked) anchor
            let mut d_anchor = match q.side {
                Side::Tail => head_query(m, &dq),
                Side::Head => tail_query(m, &dq),
            };
            if let Some(mask) = &q.input_mask {
                for (a, b) in d_anchor.iter_mut().zip(mask) {
                    *a *= b;
                }
            }
            let (left, right) = match q.side {
                Side::Tail => (&x, &dq),
                Side::Head => (&dq, &x),
            };
            let mut acc = vec![0.0; de * de];
            for i in 0..de {
                let row = &mut acc[i * de..(i + 1) * de];
                for k in 0..de {
                    row[k] = left[i] * right[k];
                }
            }
            TuckerQueryOut {
                loss: loss / n as f64,
                ds,
                q: qv,
                d_anchor,
                acc,
            }
        })
        .collect();

    let mut losses = Vec::with_capacity(queries.len());
    let mut g = SparseGrad::new();
    let mut dent = vec![0.0; n * de];
    let mut rel_acc: BTreeMap<RelationId, Vec<f64>> = BTreeMap::new();
    for (q, o) in queries.iter().zip(&outs) {
        losses.push(o.loss);
        for (e, &d) in o.ds.iter().enumerate() {
            if d != 0.0 {
                for (a, b) in dent[e * de..(e + 1) * de].iter_mut().zip(&o.q) {
                    *a += d * b;
                }
            }
        }
        let anchor = q.side.other().entity(&q.anchor).index();
        for (a, b) in dent[anchor * de..(anchor + 1) * de].iter_mut().zip(&o.d_anchor) {
            *a += b;
        }
        let acc = rel_acc
            .entry(q.anchor.relation)
            .or_insert_with(|| vec![0.0; de * de]);
        for (a, b) in acc.iter_mut().zip(&o.acc) {
            *a += b;
        }
    }
    for e in 0..n {
        g.axpy(ENTITY, e, 1.0, &dent[e * de..(e + 1) * de]);
    }
    for (r, acc) in &rel_acc {
        backprop_relation(params, *r, acc, 1.0, &mut g);
    }
    debug_assert!(g.keys().all(|(t, _)| t == ENTITY || t == RELATION || t == TUCKER_CORE));
    (losses, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::init_params;

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn margin_is_zero_when_separated() {
        let p = init_params(ModelKind::DistMult, 4, 1, 3, 3, 1).unwrap();
        let pos = Triple::new(0, 0, 1);
        let neg = Triple::new(2, 0, 1);
        let gap = score_unchecked(&p, &pos) - score_unchecked(&p, &neg);
        let (l, g) = margin_ranking(&p, &[pos], &[vec![neg]], gap - 1e-9);
        assert_eq!(l, [0.0]);
        assert!(g.is_empty());
        let (l, _) = margin_ranking(&p, &[pos], &[vec![neg]], gap + 1.0);
        assert!((l[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tucker_fast_path_matches_generic_path() {
        let p = init_params(ModelKind::TuckER, 6, 2, 4, 3, 9).unwrap();
        let queries = vec![
            Query {
                anchor: Triple::new(1, 0, 2),
                side: Side::Tail,
                labels: vec![EntityId(2), EntityId(4)],
                input_mask: None,
                hidden_mask: None,
            },
            Query {
                anchor: Triple::new(3, 1, 5),
                side: Side::Head,
                labels: vec![EntityId(3)],
                input_mask: None,
                hidden_mask: None,
            },
        ];
        let (lf, gf) = tucker_bce(&p, &queries, 0.1);
        let lf: f64 = lf.iter().sum();
        // generic path, bypassing the TuckER dispatch
        let n = p.num_entities();
        let mut lg = 0.0;
        let mut gg = SparseGrad::new();
        for q in &queries {
            let mut l = 0.0;
            for e in 0..n {
                let t = q.side.replace(&q.anchor, EntityId(e as u32));
                let s = score_unchecked(&p, &t);
                let y = target(q.labels.contains(&EntityId(e as u32)), 0.1, n as f64);
                l += y * softplus(-s) + (1.0 - y) * softplus(s);
                accumulate_grad(&p, &t, (sigmoid(s) - y) / n as f64, &mut gg);
            }
            lg += l / n as f64;
        }
        assert!((lf - lg).abs() < 1e-12);
        for (&(t, r), v) in gg.iter() {
            let w = gf.get(t, r).unwrap();
            for (a, b) in v.iter().zip(w) {
                assert!((a - b).abs() < 1e-12, "tensor {t} row {r}: {a} vs {b}");
            }
        }
    }
}
