//! TuckER: `W x1 h x2 r x3 t` with a core tensor stored as `d_e` rows of
//! `d_r * d_e` values, `W[i, j, k] = core[i][j * d_e + k]`.

use std::collections::BTreeMap;

use super::tensors::{ENTITY, RELATION, TUCKER_CORE};
use super::{dot, ModelParams, SparseGrad};
use crate::kg::{RelationId, Side, Triple};

/// `M_r[i][k] = sum_j W[i, j, k] r_j`, row-major `d_e x d_e`.
pub(crate) fn relation_matrix(p: &ModelParams, r: RelationId) -> Vec<f64> {
    let de = p.entity_dim();
    let rv = p.row(RELATION, r.index());
    let core = p.tensor(TUCKER_CORE);
    let mut m = vec![0.0; de * de];
    for i in 0..de {
        let w = core.row(i);
        let out = &mut m[i * de..(i + 1) * de];
        for (j, &rj) in rv.iter().enumerate() {
            let block = &w[j * de..(j + 1) * de];
            for k in 0..de {
                out[k] += rj * block[k];
            }
        }
    }
    m
}

/// Per-relation matrices, built on demand.
#[derive(Debug, Default)]
pub struct TuckerQueryCache {
    mats: BTreeMap<RelationId, Vec<f64>>,
}

impl TuckerQueryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn matrix(&mut self, p: &ModelParams, r: RelationId) -> &[f64] {
        self.mats.entry(r).or_insert_with(|| relation_matrix(p, r))
    }

    pub fn get(&self, r: RelationId) -> Option<&[f64]> {
        self.mats.get(&r).map(Vec::as_slice)
    }
}

/// `v = M_r^T h`: the vector that is dotted with each candidate tail.
pub(crate) fn tail_query(m: &[f64], h: &[f64]) -> Vec<f64> {
    let de = h.len();
    let mut v = vec![0.0; de];
    for i in 0..de {
        let row = &m[i * de..(i + 1) * de];
        for k in 0..de {
            v[k] += h[i] * row[k];
        }
    }
    v
}

/// `u = M_r t`: the vector that is dotted with each candidate head.
pub(crate) fn head_query(m: &[f64], t: &[f64]) -> Vec<f64> {
    let de = t.len();
    (0..de).map(|i| dot(&m[i * de..(i + 1) * de], t)).collect()
}

/// Given `acc[i][k] = sum over queries of dL/dW-contraction outer products`
/// (head-side vector i, tail-side vector k), adds the core and relation
/// gradients for relation `r`.
pub(crate) fn backprop_relation(p: &ModelParams, r: RelationId, acc: &[f64], coeff: f64, g: &mut SparseGrad) {
    let de = p.entity_dim();
    let dr = p.relation_dim();
    let rv = p.row(RELATION, r.index());
    let core = p.tensor(TUCKER_CORE);
    let mut grel = vec![0.0; dr];
    for i in 0..de {
        let a = &acc[i * de..(i + 1) * de];
        let w = core.row(i);
        let gcore = g.row_mut(TUCKER_CORE, i, dr * de);
        for j in 0..dr {
            let block = &w[j * de..(j + 1) * de];
            grel[j] += dot(block, a);
            let gblock = &mut gcore[j * de..(j + 1) * de];
            for k in 0..de {
                gblock[k] += coeff * rv[j] * a[k];
            }
        }
    }
    g.axpy(RELATION, r.index(), coeff, &grel);
}

pub(super) fn score(p: &ModelParams, t: &Triple) -> f64 {
    let m = relation_matrix(p, t.relation);
    let v = tail_query(&m, p.row(ENTITY, t.head.index()));
    dot(&v, p.row(ENTITY, t.tail.index()))
}

pub(super) fn grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    let de = p.entity_dim();
    let h = p.row(ENTITY, t.head.index());
    let tl = p.row(ENTITY, t.tail.index());
    let m = relation_matrix(p, t.relation);
    g.axpy(ENTITY, t.head.index(), coeff, &head_query(&m, tl));
    g.axpy(ENTITY, t.tail.index(), coeff, &tail_query(&m, h));
    let mut acc = vec![0.0; de * de];
    for i in 0..de {
        for k in 0..de {
            acc[i * de + k] = h[i] * tl[k];
        }
    }
    backprop_relation(p, t.relation, &acc, coeff, g);
}

pub(super) fn candidates(p: &ModelParams, t: &Triple, side: Side) -> Vec<f64> {
    let m = relation_matrix(p, t.relation);
    let q = match side {
        Side::Tail => tail_query(&m, p.row(ENTITY, t.head.index())),
        Side::Head => head_query(&m, p.row(ENTITY, t.tail.index())),
    };
    let ent = p.tensor(ENTITY);
    (0..ent.rows()).map(|c| dot(&q, ent.row(c))).collect()
}
