//! Identifiers, triples, vocabularies, datasets and the ontology schema.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: u32, relation: u32, tail: u32) -> Self {
        Self {
            head: EntityId(head),
            relation: RelationId(relation),
            tail: EntityId(tail),
        }
    }
}

/// Which end of a triple is being predicted or corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Head,
    Tail,
}

impl Side {
    #[inline]
    pub fn entity(self, t: &Triple) -> EntityId {
        match self {
            Side::Head => t.head,
            Side::Tail => t.tail,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Head => Side::Tail,
            Side::Tail => Side::Head,
        }
    }

    /// `t` with the entity on this side replaced.
    #[inline]
    pub fn replace(self, t: &Triple, e: EntityId) -> Triple {
        match self {
            Side::Head => Triple { head: e, ..*t },
            Side::Tail => Triple { tail: e, ..*t },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct LabelMap {
    labels: Vec<String>,
    ids: HashMap<String, u32>,
}

impl LabelMap {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }

    fn from_pairs(pairs: Vec<(String, u32)>) -> Result<Self> {
        let mut ids: HashMap<String, u32> = HashMap::with_capacity(pairs.len());
        let mut by_id: BTreeMap<u32, String> = BTreeMap::new();
        for (label, id) in pairs {
            if let Some(&prev) = ids.get(&label) {
                if prev != id {
                    return Err(Error::DuplicateLabel {
                        label,
                        first: prev,
                        second: id,
                    });
                }
                continue;
            }
            if let Some(other) = by_id.get(&id) {
                return Err(Error::DuplicateLabel {
                    label: other.clone(),
                    first: id,
                    second: id,
                });
            }
            ids.insert(label.clone(), id);
            by_id.insert(id, label);
        }
        let n = by_id.len();
        if let Some((&max, _)) = by_id.iter().next_back() {
            if max as usize + 1 != n {
                return Err(Error::SparseDictionary {
                    expected: n,
                    found: max as usize + 1,
                });
            }
        }
        Ok(Self {
            labels: by_id.into_values().collect(),
            ids,
        })
    }
}

/// Bidirectional label/id maps for entities and relations. Ids are dense.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entities: LabelMap,
    relations: LabelMap,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from `(label, id)` dictionary entries. Ids must be dense from 0.
    pub fn from_dictionaries(
        entities: Vec<(String, u32)>,
        relations: Vec<(String, u32)>,
    ) -> Result<Self> {
        Ok(Self {
            entities: LabelMap::from_pairs(entities)?,
            relations: LabelMap::from_pairs(relations)?,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.entities.labels.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.labels.len()
    }

    pub fn entity_id(&self, label: &str) -> Option<EntityId> {
        self.entities.ids.get(label).copied().map(EntityId)
    }

    pub fn relation_id(&self, label: &str) -> Option<RelationId> {
        self.relations.ids.get(label).copied().map(RelationId)
    }

    pub fn entity_label(&self, id: EntityId) -> Option<&str> {
        self.entities.labels.get(id.index()).map(String::as_str)
    }

    pub fn relation_label(&self, id: RelationId) -> Option<&str> {
        self.relations.labels.get(id.index()).map(String::as_str)
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entities.labels
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relations.labels
    }

    pub fn intern_entity(&mut self, label: &str) -> EntityId {
        EntityId(self.entities.intern(label))
    }

    pub fn intern_relation(&mut self, label: &str) -> RelationId {
        RelationId(self.relations.intern(label))
    }

    pub fn check(&self, t: &Triple) -> Result<()> {
        for e in [t.head, t.tail] {
            if e.index() >= self.num_entities() {
                return Err(Error::InvalidId {
                    id: e.0,
                    size: self.num_entities(),
                });
            }
        }
        if t.relation.index() >= self.num_relations() {
            return Err(Error::InvalidId {
                id: t.relation.0,
                size: self.num_relations(),
            });
        }
        Ok(())
    }

    pub fn decode(&self, t: &Triple) -> Option<(&str, &str, &str)> {
        Some((
            self.entity_label(t.head)?,
            self.relation_label(t.relation)?,
            self.entity_label(t.tail)?,
        ))
    }
}

pub type RawTriple = (String, String, String);

pub enum VocabPolicy {
    /// Extend the given vocabulary with unseen labels in first-appearance order.
    Grow(Vocabulary),
    /// Every label must already exist.
    Frozen(Vocabulary),
}

pub fn encode_triples(raw: &[RawTriple], policy: VocabPolicy) -> Result<(Vocabulary, Vec<Triple>)> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = Vec::with_capacity(raw.len());
    match policy {
        VocabPolicy::Grow(mut vocab) => {
            for (h, r, t) in raw {
                let head = vocab.intern_entity(h);
                let relation = vocab.intern_relation(r);
                let tail = vocab.intern_entity(t);
                out.push(Triple {
                    head,
                    relation,
                    tail,
                });
            }
            Ok((vocab, out))
        }
        VocabPolicy::Frozen(vocab) => {
            for (h, r, t) in raw {
                let head = vocab
                    .entity_id(h)
                    .ok_or_else(|| Error::UnknownLabel(h.clone()))?;
                let relation = vocab
                    .relation_id(r)
                    .ok_or_else(|| Error::UnknownLabel(r.clone()))?;
                let tail = vocab
                    .entity_id(t)
                    .ok_or_else(|| Error::UnknownLabel(t.clone()))?;
                out.push(Triple {
                    head,
                    relation,
                    tail,
                });
            }
            Ok((vocab, out))
        }
    }
}

pub fn decode_triples(vocab: &Vocabulary, triples: &[Triple]) -> Result<Vec<RawTriple>> {
    triples
        .iter()
        .map(|t| {
            vocab.check(t)?;
            let (h, r, tl) = vocab.decode(t).expect("checked");
            Ok((h.to_owned(), r.to_owned(), tl.to_owned()))
        })
        .collect()
}

/// Removes repeated triples, keeping the first occurrence. Returns the number dropped.
pub fn dedup_in_place(triples: &mut Vec<Triple>) -> usize {
    let before = triples.len();
    let mut seen = HashSet::with_capacity(before);
    triples.retain(|t| seen.insert(*t));
    before - triples.len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    vocabulary: Vocabulary,
    train: Vec<Triple>,
    dev: Vec<Triple>,
    test: Vec<Triple>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub num_entities: usize,
    pub num_relations: usize,
    pub num_train: usize,
    pub num_dev: usize,
    pub num_test: usize,
}

impl Dataset {
    /// Validates ids and split disjointness. Duplicates inside a split are dropped with a log line.
    pub fn new(
        vocabulary: Vocabulary,
        mut train: Vec<Triple>,
        mut dev: Vec<Triple>,
        mut test: Vec<Triple>,
    ) -> Result<Self> {
        for (name, split) in [("train", &mut train), ("dev", &mut dev), ("test", &mut test)] {
            for t in split.iter() {
                vocabulary.check(t)?;
            }
            let dropped = dedup_in_place(split);
            if dropped > 0 {
                log::info!("{name}: dropped {dropped} duplicate triple(s)");
            }
        }
        let train_set: HashSet<&Triple> = train.iter().collect();
        let dev_set: HashSet<&Triple> = dev.iter().collect();
        let overlap = |a: &HashSet<&Triple>, b: &[Triple]| b.iter().filter(|t| a.contains(t)).count();
        let n = overlap(&train_set, &dev);
        if n > 0 {
            return Err(Error::SplitOverlap("train", "dev", n));
        }
        let n = overlap(&train_set, &test);
        if n > 0 {
            return Err(Error::SplitOverlap("train", "test", n));
        }
        let n = overlap(&dev_set, &test);
        if n > 0 {
            return Err(Error::SplitOverlap("dev", "test", n));
        }
        Ok(Self {
            vocabulary,
            train,
            dev,
            test,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn dev(&self) -> &[Triple] {
        &self.dev
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }

    pub fn stats(&self) -> DatasetStats {
        dataset_stats(self)
    }

    /// Dev/test triples whose head, relation or tail never occurs in train.
    pub fn unseen_in_train(&self) -> Vec<Triple> {
        let mut ents = HashSet::new();
        let mut rels = HashSet::new();
        for t in &self.train {
            ents.insert(t.head);
            ents.insert(t.tail);
            rels.insert(t.relation);
        }
        self.dev
            .iter()
            .chain(&self.test)
            .filter(|t| !ents.contains(&t.head) || !ents.contains(&t.tail) || !rels.contains(&t.relation))
            .copied()
            .collect()
    }
}

pub fn dataset_stats(d: &Dataset) -> DatasetStats {
    DatasetStats {
        num_entities: d.vocabulary.num_entities(),
        num_relations: d.vocabulary.num_relations(),
        num_train: d.train.len(),
        num_dev: d.dev.len(),
        num_test: d.test.len(),
    }
}

/// Lookup structure over a set of known triples.
#[derive(Debug, Clone, Default)]
pub struct TripleIndex {
    set: HashSet<Triple>,
    tails: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    heads: HashMap<(RelationId, EntityId), Vec<EntityId>>,
}

impl TripleIndex {
    pub fn new<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut idx = Self::default();
        for t in triples {
            if idx.set.insert(*t) {
                idx.tails.entry((t.head, t.relation)).or_default().push(t.tail);
                idx.heads.entry((t.relation, t.tail)).or_default().push(t.head);
            }
        }
        for v in idx.tails.values_mut().chain(idx.heads.values_mut()) {
            v.sort_unstable();
        }
        idx
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.set.contains(t)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Known entities that complete `t` on `side` (including `t`'s own entity if known).
    pub fn completions(&self, t: &Triple, side: Side) -> &[EntityId] {
        let v = match side {
            Side::Tail => self.tails.get(&(t.head, t.relation)),
            Side::Head => self.heads.get(&(t.relation, t.tail)),
        };
        v.map(Vec::as_slice).unwrap_or(&[])
    }
}

// ---------------------------------------------------------------------------
// Ontology schema

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Class,
    Concept,
    Instance,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Object,
    Data,
    Meta,
}

/// Labels allowed for meta-properties.
pub const META_PROPERTIES: [&str; 6] = [
    "subClassOf",
    "broader",
    "type",
    "equivalentClass",
    "subPropertyOf",
    "equivalentPropertyOf",
];

/// Meta-properties whose edges form the class/concept taxonomy.
pub const TAXONOMY_PROPERTIES: [&str; 2] = ["subClassOf", "broader"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub label: String,
    pub kind: RelationKind,
    pub domain: BTreeSet<NodeKind>,
    pub range: BTreeSet<NodeKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OntologySchema {
    node_kinds: HashMap<EntityId, NodeKind>,
    relations: BTreeMap<RelationId, RelationDecl>,
    taxonomy: Vec<(EntityId, EntityId)>,
    property_edges: Vec<(EntityId, EntityId)>,
}

impl OntologySchema {
    /// `taxonomy` holds `(child, parent)` edges from subClassOf/broader;
    /// `property_edges` holds `(sub, super)` edges from subPropertyOf.
    pub fn new(
        node_kinds: HashMap<EntityId, NodeKind>,
        relations: BTreeMap<RelationId, RelationDecl>,
        taxonomy: Vec<(EntityId, EntityId)>,
        property_edges: Vec<(EntityId, EntityId)>,
    ) -> Result<Self> {
        for decl in relations.values() {
            if decl.kind == RelationKind::Meta && !META_PROPERTIES.contains(&decl.label.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "{:?} declared as a meta-property but is not one of {META_PROPERTIES:?}",
                    decl.label
                )));
            }
            if decl.domain.is_empty() || decl.range.is_empty() {
                return Err(Error::InvalidSchema(format!(
                    "{:?} has an empty domain or range",
                    decl.label
                )));
            }
        }
        Ok(Self {
            node_kinds,
            relations,
            taxonomy,
            property_edges,
        })
    }

    pub fn node_kind(&self, e: EntityId) -> Option<NodeKind> {
        self.node_kinds.get(&e).copied()
    }

    pub fn node_kinds(&self) -> &HashMap<EntityId, NodeKind> {
        &self.node_kinds
    }

    pub fn relation(&self, r: RelationId) -> Option<&RelationDecl> {
        self.relations.get(&r)
    }

    pub fn relations(&self) -> &BTreeMap<RelationId, RelationDecl> {
        &self.relations
    }

    pub fn taxonomy(&self) -> &[(EntityId, EntityId)] {
        &self.taxonomy
    }

    pub fn property_edges(&self) -> &[(EntityId, EntityId)] {
        &self.property_edges
    }
}
