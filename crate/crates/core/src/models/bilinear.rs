use super::tensors::{
    COMPLEX_ENTITY_IM, COMPLEX_ENTITY_RE, COMPLEX_RELATION_IM, COMPLEX_RELATION_RE, ENTITY, RELATION,
};
use super::{dot, ModelParams, SparseGrad};
use crate::kg::{Side, Triple};

/// `sum_i h_i r_i t_i`
pub(super) fn distmult_score(p: &ModelParams, t: &Triple) -> f64 {
    let h = p.row(ENTITY, t.head.index());
    let r = p.row(RELATION, t.relation.index());
    let tl = p.row(ENTITY, t.tail.index());
    (0..h.len()).map(|i| h[i] * r[i] * tl[i]).sum()
}

pub(super) fn distmult_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    let h = p.row(ENTITY, t.head.index());
    let r = p.row(RELATION, t.relation.index());
    let tl = p.row(ENTITY, t.tail.index());
    let prod = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
    g.axpy(ENTITY, t.head.index(), coeff, &prod(r, tl));
    g.axpy(RELATION, t.relation.index(), coeff, &prod(h, tl));
    g.axpy(ENTITY, t.tail.index(), coeff, &prod(h, r));
}

pub(super) fn distmult_candidates(p: &ModelParams, t: &Triple, side: Side) -> Vec<f64> {
    let r = p.row(RELATION, t.relation.index());
    // The fixed end of the triple is the one not being predicted.
    let fixed = match side {
        Side::Tail => t.head,
        Side::Head => t.tail,
    };
    let anchor: Vec<f64> = p.row(ENTITY, fixed.index()).iter().zip(r).map(|(a, b)| a * b).collect();
    let ent = p.tensor(ENTITY);
    (0..ent.rows()).map(|c| dot(&anchor, ent.row(c))).collect()
}

struct Complex<'a> {
    hr: &'a [f64],
    hi: &'a [f64],
    rr: &'a [f64],
    ri: &'a [f64],
    tr: &'a [f64],
    ti: &'a [f64],
}

fn complex_rows<'a>(p: &'a ModelParams, t: &Triple) -> Complex<'a> {
    Complex {
        hr: p.row(COMPLEX_ENTITY_RE, t.head.index()),
        hi: p.row(COMPLEX_ENTITY_IM, t.head.index()),
        rr: p.row(COMPLEX_RELATION_RE, t.relation.index()),
        ri: p.row(COMPLEX_RELATION_IM, t.relation.index()),
        tr: p.row(COMPLEX_ENTITY_RE, t.tail.index()),
        ti: p.row(COMPLEX_ENTITY_IM, t.tail.index()),
    }
}

/// `Re(sum_i h_i r_i conj(t_i))`
pub(super) fn complex_score(p: &ModelParams, t: &Triple) -> f64 {
    let Complex { hr, hi, rr, ri, tr, ti } = complex_rows(p, t);
    (0..hr.len())
        .map(|i| hr[i] * rr[i] * tr[i] + hi[i] * rr[i] * ti[i] + hr[i] * ri[i] * ti[i] - hi[i] * ri[i] * tr[i])
        .sum()
}

pub(super) fn complex_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    let Complex { hr, hi, rr, ri, tr, ti } = complex_rows(p, t);
    let n = hr.len();
    let v = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
    g.axpy(COMPLEX_ENTITY_RE, t.head.index(), coeff, &v(&|i| rr[i] * tr[i] + ri[i] * ti[i]));
    g.axpy(COMPLEX_ENTITY_IM, t.head.index(), coeff, &v(&|i| rr[i] * ti[i] - ri[i] * tr[i]));
    g.axpy(COMPLEX_RELATION_RE, t.relation.index(), coeff, &v(&|i| hr[i] * tr[i] + hi[i] * ti[i]));
    g.axpy(COMPLEX_RELATION_IM, t.relation.index(), coeff, &v(&|i| hr[i] * ti[i] - hi[i] * tr[i]));
    g.axpy(COMPLEX_ENTITY_RE, t.tail.index(), coeff, &v(&|i| hr[i] * rr[i] - hi[i] * ri[i]));
    g.axpy(COMPLEX_ENTITY_IM, t.tail.index(), coeff, &v(&|i| hi[i] * rr[i] + hr[i] * ri[i]));
}

pub(super) fn complex_candidates(p: &ModelParams, t: &Triple, side: Side) -> Vec<f64> {
    let Complex { hr, hi, rr, ri, tr, ti } = complex_rows(p, t);
    let n = hr.len();
    // Score is linear in the candidate: sum_i c_re[i] x_re[i] + c_im[i] x_im[i].
    let (c_re, c_im): (Vec<f64>, Vec<f64>) = match side {
        // a = h r, score = a_re t_re + a_im t_im
        Side::Tail => (0..n)
            .map(|i| (hr[i] * rr[i] - hi[i] * ri[i], hr[i] * ri[i] + hi[i] * rr[i]))
            .unzip(),
        // b = r conj(t), score = h_re b_re - h_im b_im
        Side::Head => (0..n)
            .map(|i| (rr[i] * tr[i] + ri[i] * ti[i], -(ri[i] * tr[i] - rr[i] * ti[i])))
            .unzip(),
    };
    let re = p.tensor(COMPLEX_ENTITY_RE);
    let im = p.tensor(COMPLEX_ENTITY_IM);
    (0..re.rows())
        .map(|c| dot(&c_re, re.row(c)) + dot(&c_im, im.row(c)))
        .collect()
}
