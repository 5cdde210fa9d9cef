//! SGD and AdaGrad over row-sparse gradients.

use super::config::OptimizerKind;
use crate::error::{Error, Result};
use crate::models::{project_constraints, Matrix, ModelParams, SparseGrad};

const ADAGRAD_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    /// AdaGrad squared-gradient accumulators, one per tensor.
    acc: Vec<Matrix>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: &ModelParams) -> Self {
        let acc = match kind {
            OptimizerKind::Sgd => Vec::new(),
            OptimizerKind::AdaGrad => params
                .tensors()
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        };
        Self {
            kind,
            learning_rate,
            acc,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// AdaGrad squared-gradient sums for one tensor; `None` for SGD.
    pub fn accumulator(&self, tensor: usize) -> Option<&Matrix> {
        self.acc.get(tensor)
    }

    /// Applies one update to the rows in `grads`, then rounds to the storage
    /// precision and re-imposes the model's norm constraints on those rows.
    /// Fails without touching `params` if any gradient is non-finite.
    pub fn step(&mut self, params: &mut ModelParams, grads: &SparseGrad) -> Result<()> {
        for (&(tensor, row), g) in grads.iter() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { tensor, row });
            }
        }
        let precision = params.precision();
        let lr = self.learning_rate;
        for (&(tensor, row), g) in grads.iter() {
            let w = params.tensor_mut(tensor).row_mut(row);
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, g) in w.iter_mut().zip(g) {
                        *w = precision.round(*w - lr * g);
                    }
                }
                OptimizerKind::AdaGrad => {
                    let a = self.acc[tensor].row_mut(row);
                    for ((w, g), a) in w.iter_mut().zip(g).zip(a.iter_mut()) {
                        *a += g * g;
                        *w = precision.round(*w - lr * g / (a.sqrt() + ADAGRAD_EPS));
                    }
                }
            }
        }
        project_constraints(params, grads.keys());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, Precision};

    fn one_row(v: f64) -> ModelParams {
        let e = Matrix::from_vec(1, 1, vec![v]).unwrap();
        let r = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        ModelParams::from_tensors(ModelKind::DistMult, 1, 1, 1, 1, vec![e, r]).unwrap()
    }

    #[test]
    fn sgd_step() {
        let mut p = one_row(1.0);
        let mut g = SparseGrad::new();
        g.axpy(0, 0, 1.0, &[0.5]);
        Optimizer::new(OptimizerKind::Sgd, 0.1, &p).step(&mut p, &g).unwrap();
        assert!((p.tensor(0).row(0)[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn adagrad_first_step_is_lr_sized() {
        let mut p = one_row(1.0);
        let mut g = SparseGrad::new();
        g.axpy(0, 0, 1.0, &[3.0]);
        let mut o = Optimizer::new(OptimizerKind::AdaGrad, 0.1, &p);
        o.step(&mut p, &g).unwrap();
        assert!((p.tensor(0).row(0)[0] - 0.9).abs() < 1e-9);
        // second identical gradient: accumulator is 18, step 0.1 * 3 / sqrt(18)
        o.step(&mut p, &g).unwrap();
        assert!((p.tensor(0).row(0)[0] - (0.9 - 0.3 / 18f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_leaves_params_untouched() {
        let mut p = one_row(1.0);
        let mut g = SparseGrad::new();
        g.axpy(1, 0, 1.0, &[1.0]);
        g.axpy(0, 0, 1.0, &[f64::NAN]);
        let err = Optimizer::new(OptimizerKind::Sgd, 0.1, &p).step(&mut p, &g);
        assert!(matches!(err, Err(Error::NonFiniteGradient { tensor: 0, row: 0 })));
        assert_eq!(p, one_row(1.0));
    }

    #[test]
    fn single_precision_rounds() {
        let mut p = one_row(1.0).with_precision(Precision::Single);
        let mut g = SparseGrad::new();
        g.axpy(0, 0, 1.0, &[1e-9]);
        Optimizer::new(OptimizerKind::Sgd, 0.1, &p).step(&mut p, &g).unwrap();
        let v = p.tensor(0).row(0)[0];
        assert_eq!(v, v as f32 as f64);
    }
}
