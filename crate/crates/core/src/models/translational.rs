use super::tensors::{ENTITY, RELATION, TRANSD_ENTITY_PROJ, TRANSD_RELATION_PROJ, TRANSH_NORMAL};
use super::{dot, l2, ModelParams, Norm, SparseGrad};
use crate::kg::{Side, Triple};

#[inline]
fn hrt<'a>(p: &'a ModelParams, t: &Triple) -> (&'a [f64], &'a [f64], &'a [f64]) {
    (
        p.row(ENTITY, t.head.index()),
        p.row(RELATION, t.relation.index()),
        p.row(ENTITY, t.tail.index()),
    )
}

fn distance(norm: Norm, e: impl Iterator<Item = f64>) -> f64 {
    match norm {
        Norm::L1 => e.map(f64::abs).sum(),
        Norm::L2 => e.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// `-||h + r - t||_p`
pub(super) fn transe_score(p: &ModelParams, t: &Triple) -> f64 {
    let (h, r, tl) = hrt(p, t);
    -distance(p.norm(), (0..h.len()).map(|i| h[i] + r[i] - tl[i]))
}

pub(super) fn transe_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    let (h, r, tl) = hrt(p, t);
    let e: Vec<f64> = (0..h.len()).map(|i| h[i] + r[i] - tl[i]).collect();
    // d(-||e||)/de; subgradient 0 at the kink.
    let de: Vec<f64> = match p.norm() {
        Norm::L1 => e.iter().map(|x| -x.signum() * (*x != 0.0) as u8 as f64).collect(),
        Norm::L2 => {
            let n = l2(&e);
            if n == 0.0 {
                vec![0.0; e.len()]
            } else {
                e.iter().map(|x| -x / n).collect()
            }
        }
    };
    g.axpy(ENTITY, t.head.index(), coeff, &de);
    g.axpy(RELATION, t.relation.index(), coeff, &de);
    g.axpy(ENTITY, t.tail.index(), -coeff, &de);
}

pub(super) fn transe_candidates(p: &ModelParams, t: &Triple, side: Side) -> Vec<f64> {
    let (h, r, tl) = hrt(p, t);
    let ent = p.tensor(ENTITY);
    // Distance from a fixed anchor point to each candidate row.
    let anchor: Vec<f64> = match side {
        Side::Tail => h.iter().zip(r).map(|(a, b)| a + b).collect(),
        Side::Head => tl.iter().zip(r).map(|(a, b)| a - b).collect(),
    };
    (0..ent.rows())
        .map(|c| {
            let row = ent.row(c);
            let diff = anchor.iter().zip(row).map(|(a, x)| match side {
                Side::Tail => a - x,
                Side::Head => x - a,
            });
            -distance(p.norm(), diff)
        })
        .collect()
}

/// Residual `e = h_perp + d_r - t_perp` with `x_perp = x - (w.x) w`.
fn transh_residual(p: &ModelParams, t: &Triple) -> (Vec<f64>, Vec<f64>, f64) {
    let (h, d, tl) = hrt(p, t);
    let w = p.row(TRANSH_NORMAL, t.relation.index());
    let x: Vec<f64> = h.iter().zip(tl).map(|(a, b)| a - b).collect();
    let a = dot(w, &x);
    let e = (0..x.len()).map(|i| x[i] - a * w[i] + d[i]).collect();
    (e, x, a)
}

/// `-||h_perp + d_r - t_perp||^2`
pub(super) fn transh_score(p: &ModelParams, t: &Triple) -> f64 {
    let (e, _, _) = transh_residual(p, t);
    -dot(&e, &e)
}

pub(super) fn transh_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    let w = p.row(TRANSH_NORMAL, t.relation.index());
    let (e, x, a) = transh_residual(p, t);
    let ge: Vec<f64> = e.iter().map(|v| -2.0 * v).collect();
    let gw_dot = dot(&ge, w);
    // de/dx = I - w w^T
    let gx: Vec<f64> = (0..ge.len()).map(|i| ge[i] - gw_dot * w[i]).collect();
    let gw: Vec<f64> = (0..ge.len()).map(|j| -gw_dot * x[j] - a * ge[j]).collect();
    g.axpy(ENTITY, t.head.index(), coeff, &gx);
    g.axpy(ENTITY, t.tail.index(), -coeff, &gx);
    g.axpy(RELATION, t.relation.index(), coeff, &ge);
    g.axpy(TRANSH_NORMAL, t.relation.index(), coeff, &gw);
}

struct TransdParts<'a> {
    h: &'a [f64],
    tl: &'a [f64],
    hp: &'a [f64],
    tp: &'a [f64],
    rp: &'a [f64],
    hp_h: f64,
    tp_t: f64,
    e: Vec<f64>,
}

fn transd_parts<'a>(p: &'a ModelParams, t: &Triple) -> TransdParts<'a> {
    let (h, r, tl) = hrt(p, t);
    let hp = p.row(TRANSD_ENTITY_PROJ, t.head.index());
    let tp = p.row(TRANSD_ENTITY_PROJ, t.tail.index());
    let rp = p.row(TRANSD_RELATION_PROJ, t.relation.index());
    let hp_h = dot(hp, h);
    let tp_t = dot(tp, tl);
    // (r_p h_p^T + I) h = (h_p.h) r_p + h
    let e = (0..h.len())
        .map(|i| hp_h * rp[i] + h[i] + r[i] - tp_t * rp[i] - tl[i])
        .collect();
    TransdParts {
        h,
        tl,
        hp,
        tp,
        rp,
        hp_h,
        tp_t,
        e,
    }
}

/// `-||(r_p h_p^T + I) h + r - (r_p t_p^T + I) t||^2`
pub(super) fn transd_score(p: &ModelParams, t: &Triple) -> f64 {
    let parts = transd_parts(p, t);
    -dot(&parts.e, &parts.e)
}

pub(super) fn transd_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    let TransdParts {
        h,
        tl,
        hp,
        tp,
        rp,
        hp_h,
        tp_t,
        e,
    } = transd_parts(p, t);
    let ge: Vec<f64> = e.iter().map(|v| -2.0 * v).collect();
    let g_rp = dot(&ge, rp);
    let n = ge.len();
    let gh: Vec<f64> = (0..n).map(|i| ge[i] + g_rp * hp[i]).collect();
    let ghp: Vec<f64> = (0..n).map(|i| g_rp * h[i]).collect();
    let gt: Vec<f64> = (0..n).map(|i| -ge[i] - g_rp * tp[i]).collect();
    let gtp: Vec<f64> = (0..n).map(|i| -g_rp * tl[i]).collect();
    let grp: Vec<f64> = (0..n).map(|i| ge[i] * (hp_h - tp_t)).collect();
    g.axpy(ENTITY, t.head.index(), coeff, &gh);
    g.axpy(TRANSD_ENTITY_PROJ, t.head.index(), coeff, &ghp);
    g.axpy(ENTITY, t.tail.index(), coeff, &gt);
    g.axpy(TRANSD_ENTITY_PROJ, t.tail.index(), coeff, &gtp);
    g.axpy(RELATION, t.relation.index(), coeff, &ge);
    g.axpy(TRANSD_RELATION_PROJ, t.relation.index(), coeff, &grp);
}
