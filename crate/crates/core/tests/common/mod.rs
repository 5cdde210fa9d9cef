#![allow(dead_code)]

use kgbench::eval::Protocol;
use kgbench::kg::{Dataset, EntityId, Side, Triple, Vocabulary};
use kgbench::models::{init_params, score, ModelKind, ModelParams, SparseGrad};
use kgbench::training::{Batch, Loss, Query};
use kgbench::rng::{CounterRng, Stage, Stream};

pub fn vocab(num_entities: usize, num_relations: usize) -> Vocabulary {
    let mut v = Vocabulary::new();
    for i in 0..num_entities {
        v.intern_entity(&format!("e{i}"));
    }
    for i in 0..num_relations {
        v.intern_relation(&format!("r{i}"));
    }
    v
}

pub fn stream(seed: u64, element: u64) -> Stream {
    CounterRng::new(seed, Stage::Synthetic).stream(element)
}

/// `n` distinct random triples over the given vocabulary sizes.
pub fn random_triples(s: &mut Stream, num_entities: usize, num_relations: usize, n: usize) -> Vec<Triple> {
    let mut seen = std::collections::HashSet::new();
    let cap = num_entities * num_entities * num_relations;
    let mut out = Vec::new();
    while out.len() < n.min(cap) {
        let t = Triple::new(
            s.below(num_entities as u64) as u32,
            s.below(num_relations as u64) as u32,
            s.below(num_entities as u64) as u32,
        );
        if seen.insert(t) {
            out.push(t);
        }
    }
    out
}

/// Random dataset with every split drawn from one pool of distinct triples.
pub fn random_dataset(seed: u64, num_entities: usize, num_relations: usize, n_train: usize, n_test: usize) -> Dataset {
    let mut s = stream(seed, 0);
    let all = random_triples(&mut s, num_entities, num_relations, n_train + n_test);
    let (train, test) = all.split_at(all.len() - n_test.min(all.len()));
    Dataset::new(vocab(num_entities, num_relations), train.to_vec(), vec![], test.to_vec()).unwrap()
}

/// Block-structured KG: 200 entities in 10 blocks of 20, 10 relations.
/// Relation `r` shifts by `s = r mod 5`: it links every entity of head block
/// `b` (for `b + s < 5`) to every entity of tail block `5 + b + s`, so two
/// relations with shifts `s1` and `s2` compose to the shift `s1 + s2`.
/// Every tenth triple of a seeded shuffle is held out for test.
pub fn block_kg(seed: u64) -> Dataset {
    let mut all = Vec::new();
    for r in 0..10u32 {
        let shift = r % 5;
        for b in 0..5 - shift {
            let tb = 5 + b + shift;
            for i in 0..20 {
                for j in 0..20 {
                    all.push(Triple::new(b * 20 + i, r, tb * 20 + j));
                }
            }
        }
    }
    let mut s = stream(seed, 1);
    s.shuffle(&mut all);
    let n_test = all.len() / 10;
    let test = all[..n_test].to_vec();
    let train = all[n_test..].to_vec();
    Dataset::new(vocab(200, 10), train, vec![], test).unwrap()
}

/// Random params in double precision for gradient checks; unconstrained so
/// TransH normals are not unit and TransD projections are non-trivial.
pub fn random_params(model: ModelKind, ne: usize, nr: usize, de: usize, dr: usize, seed: u64) -> ModelParams {
    let mut p = init_params(model, ne, nr, de, dr, seed).unwrap();
    let mut s = stream(seed, 99);
    for i in 0..p.tensors().len() {
        for v in p.tensor_mut(i).as_mut_slice() {
            *v = s.uniform_in(-1.0, 1.0);
        }
    }
    p
}

/// Max relative error between `g` and central differences of `f` over every
/// parameter coordinate; rows absent from `g` must have zero derivative.
/// Relative error uses a floor of 1e-2 on the denominator so near-zero
/// entries are compared absolutely.
pub fn fd_max_rel_err(p: &ModelParams, g: &SparseGrad, f: impl Fn(&ModelParams) -> f64) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut q = p.clone();
    for tensor in 0..p.tensors().len() {
        for row in 0..p.tensor(tensor).rows() {
            for c in 0..p.tensor(tensor).cols() {
                let analytic = g.get(tensor, row).map_or(0.0, |v| v[c]);
                let orig = q.tensor(tensor).row(row)[c];
                q.tensor_mut(tensor).row_mut(row)[c] = orig + h;
                let up = f(&q);
                q.tensor_mut(tensor).row_mut(row)[c] = orig - h;
                let down = f(&q);
                q.tensor_mut(tensor).row_mut(row)[c] = orig;
                let numeric = (up - down) / (2.0 * h);
                let denom = analytic.abs().max(numeric.abs()).max(1e-2);
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        }
    }
    worst
}

pub fn dims(model: ModelKind) -> (usize, usize) {
    if model == ModelKind::TuckER {
        (4, 3)
    } else {
        (5, 5)
    }
}

/// Long-tailed synthetic KG: relation `r` has about `n / (r + 1)` triples.
pub fn power_law_kg(seed: u64, num_entities: u32, num_relations: u32, n: usize) -> Vec<Triple> {
    let mut s = stream(seed, 21);
    let weights: Vec<f64> = (0..num_relations).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let mut u = s.next_f64() * total;
        let mut r = 0;
        while r + 1 < num_relations && u >= weights[r as usize] {
            u -= weights[r as usize];
            r += 1;
        }
        let t = Triple::new(s.below(num_entities as u64) as u32, r, s.below(num_entities as u64) as u32);
        if seen.insert(t) {
            out.push(t);
        }
    }
    out
}

/// Category-shaped taxonomy with the given nodes per level, as
/// `(child, parent)` edges. Each non-root node gets a parent one level up;
/// every seventh node also gets a second parent further up, which must not
/// change its level.
pub fn layered_taxonomy(seed: u64, sizes: &[usize]) -> Vec<(EntityId, EntityId)> {
    let mut s = stream(seed, 31);
    let mut starts = vec![0usize];
    for n in sizes {
        starts.push(starts.last().unwrap() + n);
    }
    let mut edges = Vec::new();
    for level in 1..sizes.len() {
        for i in 0..sizes[level] {
            let child = EntityId((starts[level] + i) as u32);
            let pick = |s: &mut Stream, l: usize| EntityId((starts[l] + s.below(sizes[l] as u64) as usize) as u32);
            edges.push((child, pick(&mut s, level - 1)));
            if level >= 2 && i % 7 == 0 {
                let up = s.below(level as u64 - 1) as usize;
                edges.push((child, pick(&mut s, up)));
            }
        }
    }
    s.shuffle(&mut edges);
    edges
}

/// Writes an OpenBG500-shaped synthetic `train.tsv` of `lines` triples over
/// `num_entities` entities and 500 relations. Returns the path.
pub fn write_synthetic_tsv(dir: &std::path::Path, lines: usize, num_entities: u64) -> std::path::PathBuf {
    use std::io::Write;
    let path = dir.join("train.tsv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
    let mut s = stream(lines as u64, 77);
    for _ in 0..lines {
        writeln!(
            w,
            "ent_{:06}\trel_{:03}\tent_{:06}",
            s.below(num_entities),
            s.below(500),
            s.below(num_entities)
        )
        .unwrap();
    }
    w.flush().unwrap();
    path
}

/// The three losses with settings that keep every term active at random points.
pub fn losses() -> [Loss; 3] {
    [
        Loss::MarginRanking { margin: 50.0 },
        Loss::Logistic { reg: 0.01 },
        Loss::default_for("bce1ton").unwrap(),
    ]
}

pub fn random_batch(model: ModelKind, loss: &Loss, seed: u64, ne: usize, nr: usize) -> Batch {
    let mut s = stream(seed, 3);
    let mut pick = |n: usize| s.below(n as u64) as u32;
    match loss {
        Loss::Bce1toN { .. } => {
            let de = dims(model).0;
            let queries = (0..3)
                .map(|i| {
                    let anchor = Triple::new(pick(ne), pick(nr), pick(ne));
                    let mut labels: Vec<EntityId> = (0..2).map(|_| EntityId(pick(ne))).collect();
                    labels.sort_unstable();
                    labels.dedup();
                    let mask = |p: f64, s: &mut Stream| -> Vec<f64> {
                        (0..de).map(|_| if s.next_f64() < p { 0.0 } else { 1.0 / (1.0 - p) }).collect()
                    };
                    let mut ms = stream(seed, 50 + i);
                    let (input_mask, hidden_mask) = if model == ModelKind::TuckER {
                        (Some(mask(0.3, &mut ms)), Some(mask(0.4, &mut ms)))
                    } else {
                        (None, None)
                    };
                    Query {
                        anchor,
                        side: if i % 2 == 0 { Side::Tail } else { Side::Head },
                        labels,
                        input_mask,
                        hidden_mask,
                    }
                })
                .collect();
            Batch::Queries(queries)
        }
        _ => {
            let positives: Vec<Triple> = (0..3).map(|_| Triple::new(pick(ne), pick(nr), pick(ne))).collect();
            let negatives = positives
                .iter()
                .map(|p| {
                    (0..2)
                        .map(|_| Triple {
                            head: EntityId(pick(ne)),
                            ..*p
                        })
                        .collect()
                })
                .collect();
            Batch::Pairs { positives, negatives }
        }
    }
}

/// Scores every candidate with the single-triple scorer, drops filtered
/// competitors, sorts descending and reads the rank off the positions of the
/// target's score (mean of first and last tied position).
pub fn oracle_rank(p: &ModelParams, t: &Triple, side: Side, known: &[Triple], protocol: Protocol) -> f64 {
    let target = side.entity(t);
    let mut scores: Vec<f64> = (0..p.num_entities() as u32)
        .map(EntityId)
        .filter(|&e| {
            let c = side.replace(t, e);
            e == target || protocol == Protocol::Raw || !known.contains(&c)
        })
        .map(|e| score(p, &side.replace(t, e)).unwrap())
        .collect();
    let st = score(p, t).unwrap();
    scores.sort_by(|a, b| b.total_cmp(a));
    let first = scores.iter().position(|&s| s == st).unwrap();
    let last = scores.iter().rposition(|&s| s == st).unwrap();
    1.0 + (first + last) as f64 / 2.0
}

/// Random params, optionally rounded to a coarse grid so ties are common.
pub fn eval_params(model: ModelKind, d: &Dataset, seed: u64, coarse: bool) -> ModelParams {
    let (de, dr) = dims(model);
    let mut p = random_params(
        model,
        d.vocabulary().num_entities(),
        d.vocabulary().num_relations(),
        de,
        dr,
        seed,
    );
    if coarse {
        for i in 0..p.tensors().len() {
            for v in p.tensor_mut(i).as_mut_slice() {
                *v = v.signum() * (v.abs() > 0.5) as u8 as f64;
            }
        }
    }
    p
}
