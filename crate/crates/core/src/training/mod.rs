//! Mini-batch training of the scoring models.

mod config;
mod loss;
mod negatives;
mod optim;

use log::{debug, info};

pub use config::{
    all_presets, preset, Batching, Corruption, DatasetTag, Loss, OptimizerKind, TrainConfig, TrainConfigFile,
    DEFAULT_SEED,
};
pub use loss::{embedding_rows, loss_and_grads, Batch, Query};
use loss::loss_parts;
pub use negatives::{sample_negatives, Corrupter};
pub use optim::Optimizer;

use crate::error::{Error, Result};
use crate::kg::{Dataset, Side, Triple, TripleIndex};
use crate::models::{init_params, ModelKind, ModelParams};
use crate::rng::{CounterRng, Stream};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean loss per training triple, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(dataset, cfg, |_, _| {})
}

/// Like [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with(dataset: &Dataset, cfg: &TrainConfig, mut on_epoch: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train = dataset.train();
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let vocab = dataset.vocabulary();
    let mut params = init_params(
        cfg.model,
        vocab.num_entities(),
        vocab.num_relations(),
        cfg.entity_dim,
        cfg.relation_dim,
        cfg.seed,
    )?
    .with_norm(cfg.norm)
    .with_precision(cfg.precision);

    let n = train.len();
    let batch_size = cfg.batching.batch_size(n);
    let known = TripleIndex::new(train);
    let corrupter = Corrupter::new(cfg.corruption, train, vocab.num_entities());
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, &params);
    let shuffle = CounterRng::new(cfg.seed, crate::rng::Stage::Shuffle);
    let neg_rng = CounterRng::new(cfg.seed, crate::rng::Stage::Negatives);
    let drop_rng = CounterRng::new(cfg.seed, crate::rng::Stage::Dropout);
    info!(
        "training {} on {n} triples: batch size {batch_size}, {} epochs",
        cfg.model, cfg.epochs
    );

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle.stream(epoch as u64).shuffle(&mut order);
        let negs = neg_rng.fork(epoch as u64);
        let drops = drop_rng.fork(epoch as u64);
        let mut per_triple = vec![0.0; n];
        for chunk in order.chunks(batch_size) {
            let batch = match cfg.loss {
                Loss::MarginRanking { .. } | Loss::Logistic { .. } => {
                    let positives: Vec<Triple> = chunk.iter().map(|&i| train[i]).collect();
                    let negatives = chunk
                        .iter()
                        .zip(&positives)
                        .map(|(&i, t)| corrupter.sample(t, cfg.negatives, &known, &mut negs.stream(i as u64)))
                        .collect::<Result<Vec<_>>>()?;
                    Batch::Pairs { positives, negatives }
                }
                Loss::Bce1toN {
                    input_dropout,
                    hidden_dropout1,
                    hidden_dropout2,
                    ..
                } => {
                    let dropout = cfg.model == ModelKind::TuckER;
                    let mut queries = Vec::with_capacity(2 * chunk.len());
                    for &i in chunk {
                        let t = train[i];
                        let mut s = drops.stream(i as u64);
                        for side in [Side::Tail, Side::Head] {
                            let (input_mask, hidden_mask) = if dropout {
                                let de = cfg.entity_dim;
                                let h1 = mask(&mut s, de, hidden_dropout1);
                                let h2 = mask(&mut s, de, hidden_dropout2);
                                (
                                    Some(mask(&mut s, de, input_dropout)),
                                    Some(h1.iter().zip(&h2).map(|(a, b)| a * b).collect()),
                                )
                            } else {
                                (None, None)
                            };
                            queries.push(Query {
                                anchor: t,
                                side,
                                labels: known.completions(&t, side).to_vec(),
                                input_mask,
                                hidden_mask,
                            });
                        }
                    }
                    Batch::Queries(queries)
                }
            };
            let (parts, grads) = loss_parts(&params, &batch, &cfg.loss)?;
            // one part per positive, or two (tail and head query) per positive
            let per = parts.len() / chunk.len();
            for (&i, p) in chunk.iter().zip(parts.chunks(per)) {
                per_triple[i] = p.iter().sum();
            }
            optimizer.step(&mut params, &grads)?;
        }
        // summed in train order so the total does not depend on the shuffle
        let mean = per_triple.iter().sum::<f64>() / n as f64;
        debug!("epoch {epoch}: loss {mean}");
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome { params, epoch_losses })
}

/// Inverted-dropout mask: `0` with probability `p`, else `1 / (1 - p)`.
fn mask(s: &mut Stream, len: usize, p: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len).map(|_| if s.next_f64() < p { 0.0 } else { keep }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Vocabulary;

    fn toy() -> Dataset {
        let mut v = Vocabulary::new();
        for i in 0..6 {
            v.intern_entity(&format!("e{i}"));
        }
        v.intern_relation("r");
        let train = (0..5).map(|i| Triple::new(i, 0, i + 1)).collect();
        Dataset::new(v, train, vec![], vec![Triple::new(0, 0, 2)]).unwrap()
    }

    fn small(model: ModelKind) -> TrainConfig {
        TrainConfig {
            entity_dim: 4,
            relation_dim: 4,
            epochs: 3,
            batching: Batching::NumBatches(2),
            ..TrainConfig::defaults_for(model)
        }
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let d = toy();
        let cfg = TrainConfig {
            epochs: 0,
            ..small(ModelKind::TransE)
        };
        let out = train(&d, &cfg).unwrap();
        let init = init_params(ModelKind::TransE, 6, 1, 4, 4, cfg.seed)
            .unwrap()
            .with_precision(cfg.precision);
        assert_eq!(out.params, init);
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn every_model_trains_to_finite_params() {
        let d = toy();
        for m in ModelKind::ALL {
            let out = train(&d, &small(m)).unwrap();
            assert_eq!(out.epoch_losses.len(), 3);
            assert!(out.params.all_finite(), "{m}");
            assert!(out.epoch_losses.iter().all(|l| l.is_finite()), "{m}");
        }
    }

    #[test]
    fn same_seed_same_result() {
        let d = toy();
        let a = train(&d, &small(ModelKind::TuckER)).unwrap();
        let b = train(&d, &small(ModelKind::TuckER)).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn dropout_mask_scaling() {
        let mut s = CounterRng::new(3, crate::rng::Stage::Dropout).stream(0);
        let m = mask(&mut s, 10_000, 0.4);
        let kept = m.iter().filter(|&&v| v > 0.0).count() as f64 / 1e4;
        assert!((kept - 0.6).abs() < 0.03);
        assert!(m.iter().all(|&v| v == 0.0 || (v - 1.0 / 0.6).abs() < 1e-12));
        let mean = m.iter().sum::<f64>() / 1e4;
        assert!((mean - 1.0).abs() < 0.05);
    }
}
