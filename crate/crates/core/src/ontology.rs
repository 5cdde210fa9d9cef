//! Schema validation: taxonomy acyclicity and levels, domain/range checks,
//! equivalence classes.
//!
//! Levels count from 1 at the roots; a node with several parents sits one
//! below its deepest parent.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{
    Dataset, EntityId, NodeKind, OntologySchema, RelationDecl, RelationId, RelationKind, Triple, Vocabulary,
    TAXONOMY_PROPERTIES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    CycleDetected,
    PropertyCycle,
    DomainViolation,
    RangeViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subject {
    Triple(Triple),
    Node(EntityId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: Subject,
    pub rule: Rule,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// level -> number of taxonomy nodes at that level
    pub taxonomy_levels: BTreeMap<usize, usize>,
    pub relation_kinds: BTreeMap<RelationKind, usize>,
}

impl ValidationReport {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        for (k, v) in other.taxonomy_levels {
            *self.taxonomy_levels.entry(k).or_default() += v;
        }
        for (k, v) in other.relation_kinds {
            *self.relation_kinds.entry(k).or_default() += v;
        }
    }
}

/// Nodes lying on a directed cycle (including self-loops), ascending.
pub fn cyclic_nodes(edges: &[(EntityId, EntityId)]) -> Vec<EntityId> {
    let mut g: DiGraphMap<EntityId, ()> = DiGraphMap::new();
    for &(a, b) in edges {
        g.add_edge(a, b, ());
    }
    let mut out: Vec<EntityId> = tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
        .flatten()
        .collect();
    out.sort_unstable();
    out
}

/// Longest-path level of every taxonomy node whose ancestry is acyclic.
pub fn taxonomy_levels(edges: &[(EntityId, EntityId)]) -> BTreeMap<EntityId, usize> {
    let mut parents: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
    let mut nodes: BTreeSet<EntityId> = BTreeSet::new();
    for &(child, parent) in edges {
        parents.entry(child).or_default().push(parent);
        nodes.insert(child);
        nodes.insert(parent);
    }
    // None marks "on a cycle or below one".
    let mut level: HashMap<EntityId, Option<usize>> = cyclic_nodes(edges).into_iter().map(|n| (n, None)).collect();
    for &start in &nodes {
        if level.contains_key(&start) {
            continue;
        }
        // Iterative post-order over parents.
        let mut stack = vec![(start, false)];
        while let Some((n, expanded)) = stack.pop() {
            if level.contains_key(&n) {
                continue;
            }
            let ps = parents.get(&n).map(Vec::as_slice).unwrap_or(&[]);
            if expanded {
                let mut lv = Some(1);
                for p in ps {
                    lv = match (lv, level[p]) {
                        (Some(a), Some(b)) => Some(a.max(b + 1)),
                        _ => None,
                    };
                }
                level.insert(n, lv);
            } else {
                stack.push((n, true));
                for p in ps {
                    if !level.contains_key(p) {
                        stack.push((*p, false));
                    }
                }
            }
        }
    }
    level
        .into_iter()
        .filter_map(|(n, l)| l.map(|l| (n, l)))
        .collect()
}

/// Cycle detection over subClassOf/broader edges plus subPropertyOf
/// acyclicity, with the per-level node histogram and declared relation kinds.
pub fn check_taxonomy(schema: &OntologySchema) -> ValidationReport {
    let mut report = ValidationReport::default();
    for n in cyclic_nodes(schema.taxonomy()) {
        report.violations.push(Violation {
            subject: Subject::Node(n),
            rule: Rule::CycleDetected,
            message: format!("{n} lies on a subClassOf/broader cycle"),
        });
    }
    for n in cyclic_nodes(schema.property_edges()) {
        report.violations.push(Violation {
            subject: Subject::Node(n),
            rule: Rule::PropertyCycle,
            message: format!("{n} lies on a subPropertyOf cycle"),
        });
    }
    for (_, lv) in taxonomy_levels(schema.taxonomy()) {
        *report.taxonomy_levels.entry(lv).or_default() += 1;
    }
    for decl in schema.relations().values() {
        *report.relation_kinds.entry(decl.kind).or_default() += 1;
    }
    report
}

/// Flags triples whose head kind is outside the relation's domain or whose
/// tail kind is outside its range. Entities with no declared kind are
/// treated as instances. `relation_kinds` counts triples per relation kind.
pub fn check_domain_range(d: &Dataset, schema: &OntologySchema) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let vocab = d.vocabulary();
    for t in d.all_triples() {
        let decl = schema.relation(t.relation).ok_or_else(|| {
            Error::UndeclaredRelation(vocab.relation_label(t.relation).unwrap_or("?").to_owned())
        })?;
        *report.relation_kinds.entry(decl.kind).or_default() += 1;
        let kind = |e: EntityId| schema.node_kind(e).unwrap_or(NodeKind::Instance);
        let hk = kind(t.head);
        let tk = kind(t.tail);
        if !decl.domain.contains(&hk) {
            report.violations.push(Violation {
                subject: Subject::Triple(*t),
                rule: Rule::DomainViolation,
                message: format!("{}: head kind {hk:?} not in domain {:?}", decl.label, decl.domain),
            });
        }
        if !decl.range.contains(&tk) {
            report.violations.push(Violation {
                subject: Subject::Triple(*t),
                rule: Rule::RangeViolation,
                message: format!("{}: tail kind {tk:?} not in range {:?}", decl.label, decl.range),
            });
        }
    }
    Ok(report)
}

/// Connected components of the symmetric-transitive closure of `pairs`.
/// Each component is sorted; components are ordered by their smallest id.
pub fn equivalence_closure(pairs: &[(EntityId, EntityId)]) -> Vec<Vec<EntityId>> {
    let mut slot: HashMap<EntityId, usize> = HashMap::new();
    let mut nodes = Vec::new();
    for &(a, b) in pairs {
        for e in [a, b] {
            slot.entry(e).or_insert_with(|| {
                nodes.push(e);
                nodes.len() - 1
            });
        }
    }
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in pairs {
        let ra = find(&mut parent, slot[&a]);
        let rb = find(&mut parent, slot[&b]);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<EntityId>> = BTreeMap::new();
    for (i, &e) in nodes.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(e);
    }
    let mut out: Vec<Vec<EntityId>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    out.sort_unstable_by_key(|g| g[0]);
    out
}

// ---------------------------------------------------------------------------
// Schema files

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub kind: RelationKind,
    pub domain: Vec<NodeKind>,
    pub range: Vec<NodeKind>,
}

/// JSON schema document, keyed by labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaFile {
    #[serde(default)]
    pub nodes: BTreeMap<String, NodeKind>,
    #[serde(default)]
    pub relations: BTreeMap<String, RelationSpec>,
    /// `[child, parent]` pairs in addition to subClassOf/broader triples in the data.
    #[serde(default)]
    pub taxonomy: Vec<(String, String)>,
    #[serde(default)]
    pub property_taxonomy: Vec<(String, String)>,
}

/// A schema resolved against a dataset, plus the equivalentClass pairs found in it.
#[derive(Debug, Clone)]
pub struct ResolvedSchema {
    pub schema: OntologySchema,
    /// Dataset vocabulary extended with schema-only labels.
    pub vocabulary: Vocabulary,
    pub equivalences: Vec<(EntityId, EntityId)>,
}

impl SchemaFile {
    /// Resolves labels against the dataset's vocabulary. Labels that occur only
    /// in the schema get fresh ids after the dataset's. Taxonomy edges are
    /// collected from the file and from subClassOf/broader triples; untyped
    /// tails of data properties are tagged as literals.
    pub fn resolve(&self, d: &Dataset) -> Result<ResolvedSchema> {
        let mut vocab = d.vocabulary().clone();
        let mut node_kinds: HashMap<EntityId, NodeKind> = HashMap::new();
        for (label, kind) in &self.nodes {
            node_kinds.insert(vocab.intern_entity(label), *kind);
        }
        let mut relations: BTreeMap<RelationId, RelationDecl> = BTreeMap::new();
        for (label, spec) in &self.relations {
            let id = vocab.intern_relation(label);
            relations.insert(
                id,
                RelationDecl {
                    label: label.clone(),
                    kind: spec.kind,
                    domain: spec.domain.iter().copied().collect(),
                    range: spec.range.iter().copied().collect(),
                },
            );
        }
        let mut edges = |pairs: &[(String, String)]| -> Vec<(EntityId, EntityId)> {
            pairs
                .iter()
                .map(|(c, p)| (vocab.intern_entity(c), vocab.intern_entity(p)))
                .collect()
        };
        let mut taxonomy = edges(&self.taxonomy);
        let mut property_edges = edges(&self.property_taxonomy);
        let mut equivalences = Vec::new();
        for t in d.all_triples() {
            let label = vocab.relation_label(t.relation).unwrap_or_default();
            if TAXONOMY_PROPERTIES.contains(&label) {
                taxonomy.push((t.head, t.tail));
            } else if label == "subPropertyOf" {
                property_edges.push((t.head, t.tail));
            } else if label == "equivalentClass" {
                equivalences.push((t.head, t.tail));
            }
            if relations.get(&t.relation).is_some_and(|r| r.kind == RelationKind::Data) {
                node_kinds.entry(t.tail).or_insert(NodeKind::Literal);
            }
        }
        let schema = OntologySchema::new(node_kinds, relations, taxonomy, property_edges)?;
        Ok(ResolvedSchema {
            schema,
            vocabulary: vocab,
            equivalences,
        })
    }
}
