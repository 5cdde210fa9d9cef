use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelKind, Norm, Precision};

pub const DEFAULT_SEED: u64 = 20_230_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Batching {
    /// Batches per epoch; batch size is `ceil(|train| / n)`.
    NumBatches(usize),
    BatchSize(usize),
}

impl Batching {
    pub fn batch_size(self, num_train: usize) -> usize {
        match self {
            Batching::NumBatches(n) => num_train.div_ceil(n).max(1),
            Batching::BatchSize(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    AdaGrad,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    /// `sum max(0, margin - f(pos) + f(neg))`
    MarginRanking { margin: f64 },
    /// `sum softplus(-y f) + reg * sum ||touched rows||^2`
    Logistic { reg: f64 },
    /// Binary cross-entropy of every entity as the missing end of a query,
    /// with smoothed labels. Dropout applies to TuckER only.
    Bce1toN {
        label_smoothing: f64,
        input_dropout: f64,
        hidden_dropout1: f64,
        hidden_dropout2: f64,
    },
}

impl Loss {
    pub fn tag(&self) -> &'static str {
        match self {
            Loss::MarginRanking { .. } => "margin",
            Loss::Logistic { .. } => "logistic",
            Loss::Bce1toN { .. } => "bce1ton",
        }
    }

    pub fn default_for(tag: &str) -> Result<Self> {
        Ok(match tag {
            "margin" => Loss::MarginRanking { margin: 1.0 },
            "logistic" => Loss::Logistic { reg: 1e-5 },
            "bce1ton" => Loss::Bce1toN {
                label_smoothing: 0.1,
                input_dropout: 0.3,
                hidden_dropout1: 0.4,
                hidden_dropout2: 0.5,
            },
            other => return Err(Error::InvalidConfig(format!("unknown loss {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corruption {
    #[serde(rename = "uniform")]
    UniformHeadOrTail,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub batching: Batching,
    pub epochs: usize,
    pub learning_rate: f64,
    pub entity_dim: usize,
    pub relation_dim: usize,
    pub optimizer: OptimizerKind,
    pub loss: Loss,
    pub negatives: usize,
    pub corruption: Corruption,
    pub norm: Norm,
    pub precision: Precision,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults per model: translational models use margin loss with SGD,
    /// DistMult/ComplEx logistic loss with AdaGrad, TuckER 1-to-N BCE.
    pub fn defaults_for(model: ModelKind) -> Self {
        let (optimizer, loss, lr, batching) = match model {
            ModelKind::TransE | ModelKind::TransH | ModelKind::TransD => {
                (OptimizerKind::Sgd, "margin", 0.5, Batching::NumBatches(100))
            }
            ModelKind::DistMult | ModelKind::ComplEx => {
                (OptimizerKind::AdaGrad, "logistic", 0.5, Batching::NumBatches(100))
            }
            ModelKind::TuckER => (OptimizerKind::AdaGrad, "bce1ton", 5e-4, Batching::BatchSize(200)),
        };
        Self {
            model,
            batching,
            epochs: if model == ModelKind::TuckER { 500 } else { 1000 },
            learning_rate: lr,
            entity_dim: 200,
            relation_dim: 200,
            optimizer,
            loss: Loss::default_for(loss).expect("known tag"),
            negatives: 1,
            corruption: Corruption::UniformHeadOrTail,
            norm: Norm::L2,
            precision: Precision::Single,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self.batching {
            Batching::NumBatches(0) | Batching::BatchSize(0) => return bad("batch count/size must be positive".into()),
            _ => {}
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        if self.entity_dim == 0 || self.relation_dim == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.model != ModelKind::TuckER && self.entity_dim != self.relation_dim {
            return bad(format!("{} needs entity_dim == relation_dim", self.model));
        }
        if self.negatives == 0 && !matches!(self.loss, Loss::Bce1toN { .. }) {
            return Err(Error::InvalidK);
        }
        match self.loss {
            Loss::MarginRanking { margin } if margin.is_nan() || margin < 0.0 => bad(format!("margin {margin} < 0")),
            Loss::Logistic { reg } if reg.is_nan() || reg < 0.0 => bad(format!("reg weight {reg} < 0")),
            Loss::Bce1toN {
                label_smoothing,
                input_dropout,
                hidden_dropout1,
                hidden_dropout2,
            } => {
                if !(0.0..1.0).contains(&label_smoothing) {
                    return bad(format!("label smoothing {label_smoothing} not in [0, 1)"));
                }
                for p in [input_dropout, hidden_dropout1, hidden_dropout2] {
                    if !(0.0..1.0).contains(&p) {
                        return bad(format!("dropout {p} not in [0, 1)"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Applies the fields present in `file` on top of `self`.
    pub fn apply(&mut self, file: &TrainConfigFile) -> Result<()> {
        if let Some(m) = &file.model {
            self.model = m.parse()?;
        }
        match (file.num_batches, file.batch_size) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "num_batches and batch_size are mutually exclusive".into(),
                ))
            }
            (Some(n), None) => self.batching = Batching::NumBatches(n),
            (None, Some(s)) => self.batching = Batching::BatchSize(s),
            (None, None) => {}
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = file.$field { self.$field = v; }
            )*};
        }
        set!(epochs, learning_rate, entity_dim, relation_dim, optimizer, negatives, corruption, precision, seed);
        if let Some(n) = &file.norm {
            self.norm = match n.as_str() {
                "l1" => Norm::L1,
                "l2" => Norm::L2,
                other => return Err(Error::InvalidConfig(format!("unknown norm {other:?}"))),
            };
        }
        if let Some(l) = &file.loss {
            if l != self.loss.tag() {
                self.loss = Loss::default_for(l)?;
            }
        }
        let tag = self.loss.tag();
        let mismatch = |field: &str| Err(Error::InvalidConfig(format!("{field} does not apply to loss {tag}")));
        match &mut self.loss {
            Loss::MarginRanking { margin } => {
                if let Some(v) = file.margin {
                    *margin = v;
                }
                if file.reg_weight.is_some() {
                    return mismatch("reg_weight");
                }
            }
            Loss::Logistic { reg } => {
                if let Some(v) = file.reg_weight {
                    *reg = v;
                }
                if file.margin.is_some() {
                    return mismatch("margin");
                }
            }
            Loss::Bce1toN {
                label_smoothing,
                input_dropout,
                hidden_dropout1,
                hidden_dropout2,
            } => {
                if let Some(v) = file.label_smoothing {
                    *label_smoothing = v;
                }
                if let Some(v) = file.input_dropout {
                    *input_dropout = v;
                }
                if let Some(v) = file.hidden_dropout1 {
                    *hidden_dropout1 = v;
                }
                if let Some(v) = file.hidden_dropout2 {
                    *hidden_dropout2 = v;
                }
                if file.margin.is_some() || file.reg_weight.is_some() {
                    return mismatch("margin/reg_weight");
                }
            }
        }
        self.validate()
    }

    /// Flat representation with the same keys the config file accepts.
    pub fn to_file(&self) -> TrainConfigFile {
        let mut f = TrainConfigFile {
            model: Some(self.model.tag().to_owned()),
            epochs: Some(self.epochs),
            learning_rate: Some(self.learning_rate),
            entity_dim: Some(self.entity_dim),
            relation_dim: Some(self.relation_dim),
            optimizer: Some(self.optimizer),
            loss: Some(self.loss.tag().to_owned()),
            negatives: Some(self.negatives),
            corruption: Some(self.corruption),
            norm: Some(match self.norm {
                Norm::L1 => "l1".to_owned(),
                Norm::L2 => "l2".to_owned(),
            }),
            precision: Some(self.precision),
            seed: Some(self.seed),
            ..Default::default()
        };
        match self.batching {
            Batching::NumBatches(n) => f.num_batches = Some(n),
            Batching::BatchSize(s) => f.batch_size = Some(s),
        }
        match self.loss {
            Loss::MarginRanking { margin } => f.margin = Some(margin),
            Loss::Logistic { reg } => f.reg_weight = Some(reg),
            Loss::Bce1toN {
                label_smoothing,
                input_dropout,
                hidden_dropout1,
                hidden_dropout2,
            } => {
                f.label_smoothing = Some(label_smoothing);
                f.input_dropout = Some(input_dropout);
                f.hidden_dropout1 = Some(hidden_dropout1);
                f.hidden_dropout2 = Some(hidden_dropout2);
            }
        }
        f
    }
}

/// Flat JSON form of [`TrainConfig`]; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_smoothing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_dropout: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dropout1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dropout2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negatives: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corruption: Option<Corruption>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<Precision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DatasetTag {
    OpenBgImg,
    OpenBg500,
    OpenBg500L,
}

impl DatasetTag {
    pub const ALL: [DatasetTag; 3] = [DatasetTag::OpenBgImg, DatasetTag::OpenBg500, DatasetTag::OpenBg500L];

    pub fn tag(self) -> &'static str {
        match self {
            DatasetTag::OpenBgImg => "openbg-img",
            DatasetTag::OpenBg500 => "openbg500",
            DatasetTag::OpenBg500L => "openbg500-l",
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DatasetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetTag::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| Error::UnknownPreset {
                model: "*".into(),
                dataset: s.to_owned(),
            })
    }
}

/// (dataset, model, batching, epochs, learning rate, optimizer); dimension is 200 throughout.
const PRESETS: &[(DatasetTag, ModelKind, Batching, usize, f64, OptimizerKind)] = {
    use Batching::{BatchSize as Bs, NumBatches as Nb};
    use DatasetTag::*;
    use ModelKind::*;
    use OptimizerKind::*;
    &[
        (OpenBgImg, TransE, Nb(100), 1000, 0.5, Sgd),
        (OpenBgImg, TransH, Nb(100), 1000, 0.5, Sgd),
        (OpenBgImg, TransD, Nb(100), 1000, 1.0, Sgd),
        (OpenBgImg, DistMult, Nb(100), 1000, 0.5, AdaGrad),
        (OpenBgImg, ComplEx, Nb(100), 1000, 0.5, AdaGrad),
        (OpenBgImg, TuckER, Bs(200), 500, 5e-4, AdaGrad),
        (OpenBg500, TransE, Nb(100), 1000, 0.5, Sgd),
        (OpenBg500, TransH, Nb(100), 1000, 0.5, Sgd),
        (OpenBg500, TransD, Nb(100), 1000, 1.0, Sgd),
        (OpenBg500, DistMult, Nb(100), 1000, 0.5, AdaGrad),
        (OpenBg500, ComplEx, Nb(100), 1000, 0.5, AdaGrad),
        (OpenBg500, TuckER, Bs(200), 500, 5e-4, AdaGrad),
        (OpenBg500L, TransE, Nb(500), 100, 0.5, Sgd),
        (OpenBg500L, TransH, Nb(1000), 1000, 0.5, Sgd),
        (OpenBg500L, TransD, Nb(1000), 1000, 1.0, Sgd),
        (OpenBg500L, DistMult, Nb(500), 200, 0.5, AdaGrad),
        (OpenBg500L, ComplEx, Nb(1500), 200, 0.5, AdaGrad),
    ]
};

/// Published hyperparameters for a (model, dataset) pair, on top of the
/// model's defaults.
pub fn preset(model: ModelKind, dataset: DatasetTag) -> Result<TrainConfig> {
    let &(_, _, batching, epochs, learning_rate, optimizer) = PRESETS
        .iter()
        .find(|p| p.0 == dataset && p.1 == model)
        .ok_or_else(|| Error::UnknownPreset {
            model: model.tag().into(),
            dataset: dataset.tag().into(),
        })?;
    Ok(TrainConfig {
        batching,
        epochs,
        learning_rate,
        optimizer,
        entity_dim: 200,
        relation_dim: 200,
        ..TrainConfig::defaults_for(model)
    })
}

pub fn all_presets() -> Vec<(DatasetTag, TrainConfig)> {
    PRESETS
        .iter()
        .map(|p| (p.0, preset(p.1, p.0).expect("listed")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_values() {
        let c = preset(ModelKind::TransE, DatasetTag::OpenBg500).unwrap();
        assert_eq!(
            (c.batching, c.epochs, c.learning_rate, c.entity_dim, c.optimizer),
            (Batching::NumBatches(100), 1000, 0.5, 200, OptimizerKind::Sgd)
        );
        let c = preset(ModelKind::TransD, DatasetTag::OpenBg500L).unwrap();
        assert_eq!(
            (c.batching, c.epochs, c.learning_rate, c.entity_dim, c.optimizer),
            (Batching::NumBatches(1000), 1000, 1.0, 200, OptimizerKind::Sgd)
        );
        let c = preset(ModelKind::TuckER, DatasetTag::OpenBgImg).unwrap();
        assert_eq!(
            (c.batching, c.epochs, c.learning_rate, c.entity_dim),
            (Batching::BatchSize(200), 500, 5e-4, 200)
        );
        assert!(matches!(
            preset(ModelKind::TuckER, DatasetTag::OpenBg500L),
            Err(Error::UnknownPreset { .. })
        ));
        assert_eq!(all_presets().len(), 17);
    }

    #[test]
    fn batch_size_from_batch_count() {
        assert_eq!(Batching::NumBatches(100).batch_size(1000), 10);
        assert_eq!(Batching::NumBatches(100).batch_size(1001), 11);
        assert_eq!(Batching::BatchSize(7).batch_size(1000), 7);
    }

    #[test]
    fn file_overlay() {
        let mut c = TrainConfig::defaults_for(ModelKind::TransE);
        let f: TrainConfigFile =
            serde_json::from_str(r#"{"batch_size": 32, "margin": 2.0, "norm": "l1", "epochs": 3}"#).unwrap();
        c.apply(&f).unwrap();
        assert_eq!(c.batching, Batching::BatchSize(32));
        assert_eq!(c.loss, Loss::MarginRanking { margin: 2.0 });
        assert_eq!(c.norm, Norm::L1);
        assert_eq!(c.epochs, 3);

        let both: TrainConfigFile = serde_json::from_str(r#"{"batch_size": 1, "num_batches": 1}"#).unwrap();
        assert!(c.clone().apply(&both).is_err());
        let wrong: TrainConfigFile = serde_json::from_str(r#"{"reg_weight": 0.1}"#).unwrap();
        assert!(c.clone().apply(&wrong).is_err());
        let lr: TrainConfigFile = serde_json::from_str(r#"{"learning_rate": -1}"#).unwrap();
        assert!(c.clone().apply(&lr).is_err());
        assert!(serde_json::from_str::<TrainConfigFile>(r#"{"lr": 1}"#).is_err());
    }

    #[test]
    fn flat_form_round_trips() {
        for (_, c) in all_presets() {
            let mut d = TrainConfig::defaults_for(ModelKind::DistMult);
            d.apply(&c.to_file()).unwrap();
            assert_eq!(d, c);
        }
    }
}
