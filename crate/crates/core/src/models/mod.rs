//! Scoring models for link prediction.
//!
//! Every model scores a triple so that higher means more plausible;
//! translational distances are negated. Parameters live in a list of dense
//! row-major tensors whose order is fixed per model (see [`tensor_layout`]),
//! which is also the order they are written to checkpoints.

mod bilinear;
mod translational;
pub(crate) mod tucker;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, Side, Triple};
use crate::rng::{CounterRng, Stage};

pub use tucker::TuckerQueryCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    TransE,
    TransH,
    TransD,
    DistMult,
    ComplEx,
    TuckER,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::TransE,
        ModelKind::TransH,
        ModelKind::TransD,
        ModelKind::DistMult,
        ModelKind::ComplEx,
        ModelKind::TuckER,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::TransH => "transh",
            ModelKind::TransD => "transd",
            ModelKind::DistMult => "distmult",
            ModelKind::ComplEx => "complex",
            ModelKind::TuckER => "tucker",
        }
    }

    pub fn is_translational(self) -> bool {
        matches!(self, ModelKind::TransE | ModelKind::TransH | ModelKind::TransD)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_owned()))
    }
}

/// Distance norm used by TransE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Norm {
    L1,
    #[default]
    L2,
}

/// Storage precision. Single-precision parameters are kept rounded to `f32`
/// after every update so that a 4-byte checkpoint is lossless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Single,
    Double,
}

impl Precision {
    pub fn width(self) -> u8 {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    #[inline]
    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::Single => v as f32 as f64,
            Precision::Double => v,
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Row-sparse gradient keyed by `(tensor index, row)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    rows: BTreeMap<(usize, usize), Vec<f64>>,
}

impl SparseGrad {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row_mut(&mut self, tensor: usize, row: usize, cols: usize) -> &mut [f64] {
        self.rows
            .entry((tensor, row))
            .or_insert_with(|| vec![0.0; cols])
    }

    /// `self[tensor, row] += scale * v`
    #[inline]
    pub fn axpy(&mut self, tensor: usize, row: usize, scale: f64, v: &[f64]) {
        let dst = self.row_mut(tensor, row, v.len());
        for (d, x) in dst.iter_mut().zip(v) {
            *d += scale * x;
        }
    }

    pub fn get(&self, tensor: usize, row: usize) -> Option<&[f64]> {
        self.rows.get(&(tensor, row)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<f64>)> {
        self.rows.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds `scale * other` row by row, in key order.
    pub fn merge_scaled(&mut self, other: &SparseGrad, scale: f64) {
        for (&(t, r), v) in &other.rows {
            self.axpy(t, r, scale, v);
        }
    }

    pub fn merge(&mut self, other: &SparseGrad) {
        self.merge_scaled(other, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    /// Rows are indexed by entity id.
    pub per_entity: bool,
}

/// Tensor index constants.
pub mod tensors {
    pub const ENTITY: usize = 0;
    pub const RELATION: usize = 1;
    pub const TRANSH_NORMAL: usize = 2;
    pub const TRANSD_ENTITY_PROJ: usize = 2;
    pub const TRANSD_RELATION_PROJ: usize = 3;
    pub const COMPLEX_ENTITY_RE: usize = 0;
    pub const COMPLEX_ENTITY_IM: usize = 1;
    pub const COMPLEX_RELATION_RE: usize = 2;
    pub const COMPLEX_RELATION_IM: usize = 3;
    pub const TUCKER_CORE: usize = 2;
}

/// Fixed tensor order per model. Translational and bilinear models other than
/// TuckER require `entity_dim == relation_dim`.
pub fn tensor_layout(
    model: ModelKind,
    num_entities: usize,
    num_relations: usize,
    entity_dim: usize,
    relation_dim: usize,
) -> Result<Vec<TensorSpec>> {
    if entity_dim == 0 || relation_dim == 0 {
        return Err(Error::DimMismatch("dimensions must be positive".into()));
    }
    if model != ModelKind::TuckER && entity_dim != relation_dim {
        return Err(Error::DimMismatch(format!(
            "{model} needs equal entity and relation dims, got {entity_dim} and {relation_dim}"
        )));
    }
    let ent = |name| TensorSpec {
        name,
        rows: num_entities,
        cols: entity_dim,
        per_entity: true,
    };
    let rel = |name| TensorSpec {
        name,
        rows: num_relations,
        cols: relation_dim,
        per_entity: false,
    };
    Ok(match model {
        ModelKind::TransE | ModelKind::DistMult => vec![ent("entity"), rel("relation")],
        ModelKind::TransH => vec![ent("entity"), rel("relation"), rel("normal")],
        ModelKind::TransD => vec![
            ent("entity"),
            rel("relation"),
            ent("entity_proj"),
            rel("relation_proj"),
        ],
        ModelKind::ComplEx => vec![
            ent("entity_re"),
            ent("entity_im"),
            rel("relation_re"),
            rel("relation_im"),
        ],
        ModelKind::TuckER => vec![
            ent("entity"),
            rel("relation"),
            TensorSpec {
                name: "core",
                rows: entity_dim,
                cols: relation_dim * entity_dim,
                per_entity: false,
            },
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    model: ModelKind,
    num_entities: usize,
    num_relations: usize,
    entity_dim: usize,
    relation_dim: usize,
    norm: Norm,
    precision: Precision,
    tensors: Vec<Matrix>,
}

impl ModelParams {
    /// Assembles parameters from tensors in layout order.
    pub fn from_tensors(
        model: ModelKind,
        num_entities: usize,
        num_relations: usize,
        entity_dim: usize,
        relation_dim: usize,
        tensors: Vec<Matrix>,
    ) -> Result<Self> {
        let layout = tensor_layout(model, num_entities, num_relations, entity_dim, relation_dim)?;
        if layout.len() != tensors.len() {
            return Err(Error::DimMismatch(format!(
                "{model} expects {} tensors, got {}",
                layout.len(),
                tensors.len()
            )));
        }
        for (spec, m) in layout.iter().zip(&tensors) {
            if spec.rows != m.rows || spec.cols != m.cols {
                return Err(Error::DimMismatch(format!(
                    "{model} tensor {} should be {}x{}, got {}x{}",
                    spec.name, spec.rows, spec.cols, m.rows, m.cols
                )));
            }
        }
        Ok(Self {
            model,
            num_entities,
            num_relations,
            entity_dim,
            relation_dim,
            norm: Norm::default(),
            precision: Precision::Double,
            tensors,
        })
    }

    pub fn zeros(
        model: ModelKind,
        num_entities: usize,
        num_relations: usize,
        entity_dim: usize,
        relation_dim: usize,
    ) -> Result<Self> {
        let tensors = tensor_layout(model, num_entities, num_relations, entity_dim, relation_dim)?
            .iter()
            .map(|s| Matrix::zeros(s.rows, s.cols))
            .collect();
        Self::from_tensors(model, num_entities, num_relations, entity_dim, relation_dim, tensors)
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    /// Switches precision, rounding every value if narrowing.
    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        if precision == Precision::Single {
            for m in &mut self.tensors {
                for v in m.as_mut_slice() {
                    *v = precision.round(*v);
                }
            }
        }
        self
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn entity_dim(&self) -> usize {
        self.entity_dim
    }

    pub fn relation_dim(&self) -> usize {
        self.relation_dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn tensors(&self) -> &[Matrix] {
        &self.tensors
    }

    pub fn tensor(&self, i: usize) -> &Matrix {
        &self.tensors[i]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.tensors[i]
    }

    pub fn layout(&self) -> Vec<TensorSpec> {
        tensor_layout(
            self.model,
            self.num_entities,
            self.num_relations,
            self.entity_dim,
            self.relation_dim,
        )
        .expect("validated on construction")
    }

    #[inline]
    pub(crate) fn row(&self, tensor: usize, row: usize) -> &[f64] {
        self.tensors[tensor].row(row)
    }

    /// Ids must index existing rows.
    pub fn check_triple(&self, t: &Triple) -> Result<()> {
        for e in [t.head, t.tail] {
            if e.index() >= self.num_entities {
                return Err(Error::UnseenEntity {
                    id: e.0,
                    rows: self.num_entities,
                });
            }
        }
        if t.relation.index() >= self.num_relations {
            return Err(Error::DimMismatch(format!(
                "relation {} out of range for {} relations",
                t.relation.0, self.num_relations
            )));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|m| m.as_slice().iter().all(|v| v.is_finite()))
    }
}

/// Score of one triple; ids must be in range.
#[inline]
pub(crate) fn score_unchecked(p: &ModelParams, t: &Triple) -> f64 {
    match p.model {
        ModelKind::TransE => translational::transe_score(p, t),
        ModelKind::TransH => translational::transh_score(p, t),
        ModelKind::TransD => translational::transd_score(p, t),
        ModelKind::DistMult => bilinear::distmult_score(p, t),
        ModelKind::ComplEx => bilinear::complex_score(p, t),
        ModelKind::TuckER => tucker::score(p, t),
    }
}

/// Adds `coeff * d score(t) / d params` into `g`.
pub(crate) fn accumulate_grad(p: &ModelParams, t: &Triple, coeff: f64, g: &mut SparseGrad) {
    match p.model {
        ModelKind::TransE => translational::transe_grad(p, t, coeff, g),
        ModelKind::TransH => translational::transh_grad(p, t, coeff, g),
        ModelKind::TransD => translational::transd_grad(p, t, coeff, g),
        ModelKind::DistMult => bilinear::distmult_grad(p, t, coeff, g),
        ModelKind::ComplEx => bilinear::complex_grad(p, t, coeff, g),
        ModelKind::TuckER => tucker::grad(p, t, coeff, g),
    }
}

pub fn score(p: &ModelParams, t: &Triple) -> Result<f64> {
    p.check_triple(t)?;
    Ok(score_unchecked(p, t))
}

/// Gradient of the score with respect to the rows `t` touches.
pub fn grad(p: &ModelParams, t: &Triple) -> Result<SparseGrad> {
    p.check_triple(t)?;
    let mut g = SparseGrad::new();
    accumulate_grad(p, t, 1.0, &mut g);
    Ok(g)
}

/// Scores of `t` with every entity substituted on `side`, indexed by entity id.
pub fn score_candidates(p: &ModelParams, t: &Triple, side: Side) -> Result<Vec<f64>> {
    p.check_triple(t)?;
    Ok(match p.model {
        ModelKind::TransE => translational::transe_candidates(p, t, side),
        ModelKind::DistMult => bilinear::distmult_candidates(p, t, side),
        ModelKind::ComplEx => bilinear::complex_candidates(p, t, side),
        ModelKind::TuckER => tucker::candidates(p, t, side),
        ModelKind::TransH | ModelKind::TransD => (0..p.num_entities)
            .map(|e| score_unchecked(p, &side.replace(t, EntityId(e as u32))))
            .collect(),
    })
}

/// Re-imposes norm constraints on the given rows: entity rows of the
/// translational models (and TransD projection vectors) are scaled into the
/// unit ball and TransH normals are rescaled to unit length. No-op for the bilinear models.
pub fn project_constraints(p: &mut ModelParams, touched: impl IntoIterator<Item = (usize, usize)>) {
    if !p.model.is_translational() {
        return;
    }
    let precision = p.precision;
    for (tensor, row) in touched {
        let unit = p.model == ModelKind::TransH && tensor == tensors::TRANSH_NORMAL;
        let ball = tensor == tensors::ENTITY || (p.model == ModelKind::TransD && tensor >= tensors::TRANSD_ENTITY_PROJ);
        if !ball && !unit {
            continue;
        }
        let r = p.tensors[tensor].row_mut(row);
        let norm = l2(r);
        if (unit && norm > 0.0) || norm > 1.0 {
            for v in r.iter_mut() {
                *v = precision.round(*v / norm);
            }
        }
    }
}

/// Uniform initialisation in `[-6/sqrt(d), 6/sqrt(d)]` per embedding table and
/// `[-1, 1] / relation_dim` for the TuckER core. Translational entity rows are
/// projected into the unit ball and TransH normals normalised.
pub fn init_params(
    model: ModelKind,
    num_entities: usize,
    num_relations: usize,
    entity_dim: usize,
    relation_dim: usize,
    seed: u64,
) -> Result<ModelParams> {
    let mut p = ModelParams::zeros(model, num_entities, num_relations, entity_dim, relation_dim)?;
    let rng = CounterRng::new(seed, Stage::Init);
    for (i, spec) in p.layout().iter().enumerate() {
        let bound = if model == ModelKind::TuckER && i == tensors::TUCKER_CORE {
            1.0 / relation_dim as f64
        } else {
            6.0 / (spec.cols as f64).sqrt()
        };
        let mut s = rng.stream(i as u64);
        for v in p.tensors[i].as_mut_slice() {
            *v = s.uniform_in(-bound, bound);
        }
    }
    let touched: Vec<(usize, usize)> = p
        .layout()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.rows).map(move |r| (i, r)))
        .collect();
    p.precision = Precision::Double;
    project_constraints(&mut p, touched);
    Ok(p)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(model: ModelKind, rows: &[(usize, &[&[f64]])]) -> ModelParams {
        // rows: (tensor, list of row values)
        let mut ne = 0;
        let mut nr = 0;
        let mut d = 0;
        for (t, r) in rows {
            d = r[0].len();
            if *t == 0 {
                ne = r.len();
            }
            if *t == 1 {
                nr = r.len();
            }
        }
        let mut p = ModelParams::zeros(model, ne, nr, d, d).unwrap();
        for (t, r) in rows {
            for (i, vals) in r.iter().enumerate() {
                p.tensor_mut(*t).row_mut(i).copy_from_slice(vals);
            }
        }
        p
    }

    #[test]
    fn tags_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.tag().parse::<ModelKind>().unwrap(), m);
        }
        assert!("TransE".parse::<ModelKind>().is_err());
    }

    #[test]
    fn transe_l1_zero_when_translation_is_exact() {
        let p = params(
            ModelKind::TransE,
            &[(0, &[&[1.0, 0.0], &[1.0, 1.0]]), (1, &[&[0.0, 1.0]])],
        )
        .with_norm(Norm::L1);
        assert_eq!(score(&p, &Triple::new(0, 0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn distmult_direct_arithmetic() {
        let p = params(
            ModelKind::DistMult,
            &[(0, &[&[1.0, 2.0], &[3.0, 1.0]]), (1, &[&[1.0, 1.0]])],
        );
        let t = Triple::new(0, 0, 1);
        assert_eq!(score(&p, &t).unwrap(), 5.0);
        let g = grad(&p, &t).unwrap();
        assert_eq!(g.get(tensors::ENTITY, 0).unwrap(), [3.0, 1.0]);
    }

    #[test]
    fn complex_with_zero_imaginary_parts() {
        let mut p = ModelParams::zeros(ModelKind::ComplEx, 2, 1, 2, 2).unwrap();
        p.tensor_mut(tensors::COMPLEX_ENTITY_RE).row_mut(0).copy_from_slice(&[1.0, 2.0]);
        p.tensor_mut(tensors::COMPLEX_ENTITY_RE).row_mut(1).copy_from_slice(&[3.0, 1.0]);
        p.tensor_mut(tensors::COMPLEX_RELATION_RE).row_mut(0).copy_from_slice(&[1.0, 1.0]);
        assert_eq!(score(&p, &Triple::new(0, 0, 1)).unwrap(), 5.0);
    }

    #[test]
    fn tucker_superdiagonal_core() {
        let mut p = ModelParams::zeros(ModelKind::TuckER, 2, 1, 2, 2).unwrap();
        p.tensor_mut(0).row_mut(0).copy_from_slice(&[1.0, 2.0]);
        p.tensor_mut(0).row_mut(1).copy_from_slice(&[3.0, 1.0]);
        p.tensor_mut(1).row_mut(0).copy_from_slice(&[1.0, 1.0]);
        for i in 0..2 {
            p.tensor_mut(tensors::TUCKER_CORE).row_mut(i)[i * 2 + i] = 1.0;
        }
        assert_eq!(score(&p, &Triple::new(0, 0, 1)).unwrap(), 5.0);
    }

    #[test]
    fn transe_l2_relation_gradient() {
        let p = params(
            ModelKind::TransE,
            &[(0, &[&[0.0, 0.0]]), (1, &[&[3.0, 4.0]])],
        );
        let g = grad(&p, &Triple::new(0, 0, 0)).unwrap();
        let gr = g.get(tensors::RELATION, 0).unwrap();
        assert!((gr[0] + 0.6).abs() < 1e-15 && (gr[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn transd_without_projection_is_squared_transe() {
        let mut d = ModelParams::zeros(ModelKind::TransD, 2, 1, 3, 3).unwrap();
        let mut e = ModelParams::zeros(ModelKind::TransE, 2, 1, 3, 3).unwrap();
        for p in [&mut d, &mut e] {
            p.tensor_mut(0).row_mut(0).copy_from_slice(&[0.1, -0.2, 0.3]);
            p.tensor_mut(0).row_mut(1).copy_from_slice(&[0.5, 0.1, -0.4]);
            p.tensor_mut(1).row_mut(0).copy_from_slice(&[0.2, 0.2, 0.2]);
        }
        let t = Triple::new(0, 0, 1);
        let s = score(&e, &t).unwrap();
        assert!((score(&d, &t).unwrap() + s * s).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let mut p = ModelParams::zeros(ModelKind::TransH, 2, 1, 2, 2).unwrap();
        p.tensor_mut(0).row_mut(0).copy_from_slice(&[3.0, 4.0]);
        p.tensor_mut(0).row_mut(1).copy_from_slice(&[0.3, 0.4]);
        p.tensor_mut(tensors::TRANSH_NORMAL).row_mut(0).copy_from_slice(&[0.0, 2.0]);
        project_constraints(&mut p, [(0, 0), (0, 1), (2, 0)]);
        assert_eq!(p.tensor(0).row(0), [0.6, 0.8]);
        assert_eq!(p.tensor(0).row(1), [0.3, 0.4]);
        assert_eq!(p.tensor(2).row(0), [0.0, 1.0]);

        let mut q = ModelParams::zeros(ModelKind::DistMult, 1, 1, 2, 2).unwrap();
        q.tensor_mut(0).row_mut(0).copy_from_slice(&[3.0, 4.0]);
        project_constraints(&mut q, [(0, 0)]);
        assert_eq!(q.tensor(0).row(0), [3.0, 4.0]);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        for m in ModelKind::ALL {
            let a = init_params(m, 7, 3, 4, 4, 11).unwrap();
            let b = init_params(m, 7, 3, 4, 4, 11).unwrap();
            let c = init_params(m, 7, 3, 4, 4, 12).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            for (i, spec) in a.layout().iter().enumerate() {
                let bound = if m == ModelKind::TuckER && i == tensors::TUCKER_CORE {
                    1.0 / 4.0
                } else {
                    6.0 / (spec.cols as f64).sqrt()
                };
                assert!(a.tensor(i).as_slice().iter().all(|v| v.abs() <= bound));
            }
            if m.is_translational() {
                for r in 0..7 {
                    assert!(l2(a.tensor(0).row(r)) <= 1.0 + 1e-12);
                }
            }
            if m == ModelKind::TransH {
                for r in 0..3 {
                    assert!((l2(a.tensor(2).row(r)) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dim_mismatch() {
        assert!(matches!(
            ModelParams::zeros(ModelKind::TransE, 2, 1, 3, 4),
            Err(Error::DimMismatch(_))
        ));
        assert!(ModelParams::zeros(ModelKind::TuckER, 2, 1, 3, 4).is_ok());
        let p = ModelParams::zeros(ModelKind::DistMult, 2, 1, 2, 2).unwrap();
        assert!(matches!(
            score(&p, &Triple::new(0, 3, 1)),
            Err(Error::DimMismatch(_))
        ));
        assert!(matches!(
            score(&p, &Triple::new(0, 0, 5)),
            Err(Error::UnseenEntity { .. })
        ));
    }
}
