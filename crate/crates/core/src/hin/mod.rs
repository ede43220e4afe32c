//! Two-view HIN data model: the instance graph of typed entities and the
//! schema graph derived from it, plus graph surgery (inverse augmentation,
//! triple/entity removal) and query-set derivation.

mod load;

pub use load::{load_instance_graph, load_schema_override};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(EntityId);
id_newtype!(RelId);
id_newtype!(TypeId);

/// Dense name <-> id table. Ids are assigned from 0 in first-appearance order.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub type Triple = (EntityId, RelId, EntityId);

/// The instance-level view: entities, typed via `type_map`, connected by
/// relation-labeled triples. Immutable after construction; surgery ops
/// return new graphs. Entity ids stay stable across surgery (removed
/// entities keep their id slot but lose their types and triples).
#[derive(Debug, Clone)]
pub struct InstanceGraph {
    pub(crate) entity_vocab: Vocab,
    pub(crate) relation_vocab: Vocab,
    pub(crate) type_vocab: Vocab,
    pub(crate) triples: BTreeSet<(u32, u32, u32)>,
    /// Per entity-id slot, the sorted set of type ids. Empty = removed.
    pub(crate) type_map: Vec<Vec<TypeId>>,
    /// Set once `add_inverse_relations` has run: the original relation count.
    pub(crate) inverse_base: Option<u32>,
}

impl InstanceGraph {
    /// Number of live entities (slots with at least one type).
    pub fn n_entities(&self) -> usize {
        self.type_map.iter().filter(|ts| !ts.is_empty()).count()
    }

    /// Total id slots, including removed entities. Matrix row count.
    pub fn n_entity_slots(&self) -> usize {
        self.type_map.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relation_vocab.len()
    }

    pub fn n_types(&self) -> usize {
        self.type_vocab.len()
    }

    pub fn n_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples
            .iter()
            .map(|&(h, r, t)| (EntityId(h), RelId(r), EntityId(t)))
    }

    pub fn has_triple(&self, t: Triple) -> bool {
        self.triples.contains(&(t.0 .0, t.1 .0, t.2 .0))
    }

    pub fn types_of(&self, e: EntityId) -> &[TypeId] {
        &self.type_map[e.idx()]
    }

    pub fn is_live(&self, e: EntityId) -> bool {
        !self.type_map[e.idx()].is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.type_map
            .iter()
            .enumerate()
            .filter(|(_, ts)| !ts.is_empty())
            .map(|(i, _)| EntityId(i as u32))
    }

    pub fn type_members(&self, t: TypeId) -> Vec<EntityId> {
        self.entities()
            .filter(|&e| self.type_map[e.idx()].contains(&t))
            .collect()
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_vocab.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relation_vocab.get(name).map(RelId)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_vocab.get(name).map(TypeId)
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        self.entity_vocab.name(e.0)
    }

    pub fn relation_name(&self, r: RelId) -> &str {
        self.relation_vocab.name(r.0)
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        self.type_vocab.name(t.0)
    }

    pub fn is_augmented(&self) -> bool {
        self.inverse_base.is_some()
    }

    /// The inverse of a relation, defined only after augmentation.
    pub fn inverse_of(&self, r: RelId) -> Option<RelId> {
        let base = self.inverse_base?;
        Some(if r.0 < base {
            RelId(r.0 + base)
        } else {
            RelId(r.0 - base)
        })
    }

    /// Distinct (head, tail) pairs connected by `r`.
    pub fn relation_pairs(&self, r: RelId) -> Vec<(EntityId, EntityId)> {
        self.triples
            .iter()
            .filter(|&&(_, rel, _)| rel == r.0)
            .map(|&(h, _, t)| (EntityId(h), EntityId(t)))
            .collect()
    }

    /// Serialize back to the `triples.tsv` / `types.tsv` text format, in id
    /// order. Reloading the output yields an isomorphic graph.
    pub fn to_tsv_strings(&self) -> (String, String) {
        let mut triples = String::new();
        for (h, r, t) in self.triples() {
            triples.push_str(self.entity_name(h));
            triples.push('\t');
            triples.push_str(self.relation_name(r));
            triples.push('\t');
            triples.push_str(self.entity_name(t));
            triples.push('\n');
        }
        let mut types = String::new();
        for e in self.entities() {
            for &t in self.types_of(e) {
                types.push_str(self.entity_name(e));
                types.push('\t');
                types.push_str(self.type_name(t));
                types.push('\n');
            }
        }
        (triples, types)
    }
}

/// The meta-level view: entity types as nodes, relation-labeled edges.
/// Always derived from an instance graph (optionally merged with override
/// edges), never supplied on its own.
#[derive(Debug, Clone)]
pub struct SchemaGraph {
    n_types: usize,
    edges: BTreeSet<(u32, u32, u32)>,
    /// Outgoing edges per type, sorted by (relation id, dst id).
    out: Vec<Vec<(RelId, TypeId)>>,
}

impl SchemaGraph {
    fn from_edges(n_types: usize, edges: BTreeSet<(u32, u32, u32)>) -> Self {
        let mut out = vec![Vec::new(); n_types];
        for &(s, r, d) in &edges {
            out[s as usize].push((RelId(r), TypeId(d)));
        }
        for o in &mut out {
            o.sort_unstable();
        }
        SchemaGraph { n_types, edges, out }
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (TypeId, RelId, TypeId)> + '_ {
        self.edges
            .iter()
            .map(|&(s, r, d)| (TypeId(s), RelId(r), TypeId(d)))
    }

    pub fn has_edge(&self, src: TypeId, rel: RelId, dst: TypeId) -> bool {
        self.edges.contains(&(src.0, rel.0, dst.0))
    }

    /// Outgoing edges of `t`, sorted by (relation id, dst id).
    pub fn out_edges(&self, t: TypeId) -> &[(RelId, TypeId)] {
        &self.out[t.idx()]
    }

    pub(crate) fn merge_edges(&mut self, extra: impl IntoIterator<Item = (TypeId, RelId, TypeId)>) {
        for (s, r, d) in extra {
            self.edges.insert((s.0, r.0, d.0));
        }
        *self = SchemaGraph::from_edges(self.n_types, std::mem::take(&mut self.edges));
    }
}

/// A query `r_q(t_src, t_tgt) = ?` posed to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Query {
    pub src_type: TypeId,
    pub relation: RelId,
    pub tgt_type: TypeId,
}

/// A (t_src, t_tgt) type pair for a relation together with the number of
/// distinct entity pairs supporting it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypePairSupport {
    pub src: TypeId,
    pub tgt: TypeId,
    pub count: usize,
}

/// Derive the schema graph: edge (t_h, r, t_t) is present iff some instance
/// triple (h, r, t) witnesses it with t_h ∈ τ(h) and t_t ∈ τ(t). Multi-type
/// entities witness all their type combinations.
pub fn derive_schema_graph(g: &InstanceGraph) -> SchemaGraph {
    let mut edges = BTreeSet::new();
    for (h, r, t) in g.triples() {
        for &th in g.types_of(h) {
            for &tt in g.types_of(t) {
                edges.insert((th.0, r.0, tt.0));
            }
        }
    }
    SchemaGraph::from_edges(g.n_types(), edges)
}

/// Augment both views with inverse relations: every relation `r` gains
/// `inv(r)` (named `<name>⁻¹`) with reversed triples and schema edges.
pub fn add_inverse_relations(
    g: &InstanceGraph,
    s: &SchemaGraph,
) -> Result<(InstanceGraph, SchemaGraph)> {
    if g.is_augmented() {
        return Err(Error::Validation(
            "inverse relations already added".to_owned(),
        ));
    }
    let base = g.n_relations() as u32;
    let mut g2 = g.clone();
    for r in 0..base {
        let inv_name = format!("{}⁻¹", g.relation_vocab.name(r));
        g2.relation_vocab.intern(&inv_name);
    }
    for &(h, r, t) in &g.triples {
        g2.triples.insert((t, r + base, h));
    }
    g2.inverse_base = Some(base);

    let mut edges = s.edges.clone();
    for &(src, r, dst) in &s.edges {
        edges.insert((dst, r + base, src));
    }
    Ok((g2, SchemaGraph::from_edges(s.n_types(), edges)))
}

/// Remove the given facts (and their inverses, if the graph is augmented).
/// Facts not present in the graph are ignored; the second return value
/// counts them.
pub fn remove_triples(g: &InstanceGraph, facts: &[Triple]) -> (InstanceGraph, usize) {
    let mut g2 = g.clone();
    let mut ignored = 0;
    for &(h, r, t) in facts {
        if !g2.triples.remove(&(h.0, r.0, t.0)) {
            ignored += 1;
        }
        if let Some(inv) = g.inverse_of(r) {
            g2.triples.remove(&(t.0, inv.0, h.0));
        }
    }
    (g2, ignored)
}

/// Remove entities: all incident triples are deleted and the entities lose
/// their type assignments (their id slots remain so other ids stay stable).
pub fn remove_entities(g: &InstanceGraph, nodes: &HashSet<EntityId>) -> InstanceGraph {
    let mut g2 = g.clone();
    g2.triples
        .retain(|&(h, _, t)| !nodes.contains(&EntityId(h)) && !nodes.contains(&EntityId(t)));
    for e in nodes {
        if e.idx() < g2.type_map.len() {
            g2.type_map[e.idx()].clear();
        }
    }
    g2
}

/// All (t_src, t_tgt) schema pairs connected by `r_q`, each with the exact
/// count of distinct supporting entity pairs, sorted by count descending
/// (ties by src then dst id). Relations with no instance pairs yield an
/// empty list.
pub fn type_pairs_for_relation(g: &InstanceGraph, r_q: RelId) -> Vec<TypePairSupport> {
    let mut buckets: HashMap<(TypeId, TypeId), HashSet<(u32, u32)>> = HashMap::new();
    for (h, r, t) in g.triples() {
        if r != r_q {
            continue;
        }
        for &th in g.types_of(h) {
            for &tt in g.types_of(t) {
                buckets.entry((th, tt)).or_default().insert((h.0, t.0));
            }
        }
    }
    let mut pairs: Vec<TypePairSupport> = buckets
        .into_iter()
        .map(|((src, tgt), set)| TypePairSupport {
            src,
            tgt,
            count: set.len(),
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.src.cmp(&b.src))
            .then(a.tgt.cmp(&b.tgt))
    });
    pairs
}

/// Greedy prefix of the count-descending pair list whose cumulative count
/// first reaches `threshold` of the total. Entity pairs may be double
/// counted across type pairs; the cut is made on the raw counts.
pub fn narrow_query_set(
    pairs: &[TypePairSupport],
    threshold: f64,
) -> Result<Vec<TypePairSupport>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "narrowing threshold must be in (0, 1], got {threshold}"
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Data("cannot narrow an empty query set".to_owned()));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.src.cmp(&b.src))
            .then(a.tgt.cmp(&b.tgt))
    });
    let total: usize = sorted.iter().map(|p| p.count).sum();
    let target = threshold * total as f64;
    let mut cum = 0usize;
    let mut keep = Vec::new();
    for p in sorted {
        cum += p.count;
        keep.push(p);
        if cum as f64 >= target {
            break;
        }
    }
    Ok(keep)
}
