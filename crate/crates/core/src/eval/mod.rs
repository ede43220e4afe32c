//! Meta-path evaluation on the instance graph: connected pairs, coverage,
//! confidence, arrival, reward and valid rate, with memoization.
//!
//! Coverage of meta-path M for relation r_q is the fraction of r_q-connected
//! entity pairs that M also connects; confidence is the fraction of
//! M-connected pairs that r_q holds for. Both are over distinct ordered
//! entity pairs (set semantics) — multiple witnessing paths do not inflate
//! scores.

mod reach;

pub use reach::{AdjacencyIndex, Bitset, ReachMode, DENSE_LIMIT};

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::env::Trajectory;
use crate::error::{Error, Result};
use crate::hin::{EntityId, InstanceGraph, Query, RelId, SchemaGraph, TypeId};

/// A schema-level path: alternating entity types and relations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetaPath {
    node_types: Vec<TypeId>,
    relations: Vec<RelId>,
}

impl MetaPath {
    pub fn new(node_types: Vec<TypeId>, relations: Vec<RelId>) -> Result<Self> {
        if node_types.len() != relations.len() + 1 || relations.is_empty() {
            return Err(Error::Validation(format!(
                "meta-path needs n+1 node types for n >= 1 relations, got {} types / {} relations",
                node_types.len(),
                relations.len()
            )));
        }
        Ok(MetaPath {
            node_types,
            relations,
        })
    }

    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    pub fn relations(&self) -> &[RelId] {
        &self.relations
    }

    /// Number of type nodes (the paper-facing "length" l).
    pub fn len_nodes(&self) -> usize {
        self.node_types.len()
    }

    pub fn head_type(&self) -> TypeId {
        self.node_types[0]
    }

    pub fn tail_type(&self) -> TypeId {
        *self.node_types.last().unwrap()
    }

    /// Canonical interleaved encoding t1,r1,t2,...,tl — the cache key.
    pub fn encoding(&self) -> Vec<u32> {
        let mut enc = Vec::with_capacity(self.node_types.len() + self.relations.len());
        for i in 0..self.relations.len() {
            enc.push(self.node_types[i].0);
            enc.push(self.relations[i].0);
        }
        enc.push(self.node_types.last().unwrap().0);
        enc
    }

    /// True iff every hop is an edge of the schema graph.
    pub fn is_valid_against(&self, schema: &SchemaGraph) -> bool {
        (0..self.relations.len()).all(|i| {
            schema.has_edge(self.node_types[i], self.relations[i], self.node_types[i + 1])
        })
    }

    /// Render as `Person -GraduatedFrom-> University -LocatedIn-> Country`.
    pub fn display(&self, g: &InstanceGraph) -> String {
        let mut s = g.type_name(self.node_types[0]).to_owned();
        for i in 0..self.relations.len() {
            s.push_str(" -");
            s.push_str(g.relation_name(self.relations[i]));
            s.push_str("-> ");
            s.push_str(g.type_name(self.node_types[i + 1]));
        }
        s
    }

    /// Parse the `display` text form back (round-trippable for names that do
    /// not contain the arrow delimiters).
    pub fn parse(text: &str, g: &InstanceGraph) -> Result<Self> {
        let bad = |msg: String| Error::Parse { line: 1, msg };
        let mut node_types = Vec::new();
        let mut relations = Vec::new();
        let segments: Vec<&str> = text.split("-> ").collect();
        for (i, seg) in segments.iter().enumerate() {
            if i + 1 == segments.len() {
                let name = seg.trim();
                let t = g
                    .type_id(name)
                    .ok_or_else(|| bad(format!("unknown type '{name}'")))?;
                node_types.push(t);
            } else {
                let (ty, rel) = seg
                    .rsplit_once(" -")
                    .ok_or_else(|| bad(format!("malformed meta-path segment '{seg}'")))?;
                let ty = ty.trim();
                let t = g
                    .type_id(ty)
                    .ok_or_else(|| bad(format!("unknown type '{ty}'")))?;
                let r = g
                    .relation_id(rel)
                    .ok_or_else(|| bad(format!("unknown relation '{rel}'")))?;
                node_types.push(t);
                relations.push(r);
            }
        }
        MetaPath::new(node_types, relations)
    }
}

/// Memoized evaluation of one meta-path against one relation.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub metapath: MetaPath,
    pub relation: RelId,
    pub coverage: f64,
    pub confidence: f64,
    /// Count of meta-path-connected pairs (confidence denominator).
    pub n_connected: usize,
    /// Count of r_q-connected pairs (coverage denominator).
    pub rq_pair_count: usize,
    /// The connected-pair set itself, shared by all copies of the record.
    pub pairs: Arc<Vec<(u32, u32)>>,
}

impl EvalRecord {
    /// True when the relation has no instance pairs, making coverage 0/0
    /// (reported as 0).
    pub fn is_degenerate(&self) -> bool {
        self.rq_pair_count == 0
    }
}

struct RqPairs {
    set: HashSet<(u32, u32)>,
    count: usize,
}

/// Shared evaluator over an immutable graph. Lookups are concurrent,
/// insertion is exclusive; duplicate concurrent computation of the same key
/// is allowed (records are deterministic, last insert wins).
pub struct Evaluator<'g> {
    g: &'g InstanceGraph,
    index: AdjacencyIndex,
    mode: ReachMode,
    pair_cache: RwLock<HashMap<Vec<u32>, Arc<Vec<(u32, u32)>>>>,
    record_cache: RwLock<HashMap<(Vec<u32>, u32), EvalRecord>>,
    rq_cache: RwLock<HashMap<u32, Arc<RqPairs>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<'g> Evaluator<'g> {
    pub fn new(g: &'g InstanceGraph) -> Self {
        Self::with_mode(g, ReachMode::Auto)
    }

    pub fn with_mode(g: &'g InstanceGraph, mode: ReachMode) -> Self {
        Evaluator {
            g,
            index: AdjacencyIndex::build(g),
            mode,
            pair_cache: RwLock::new(HashMap::new()),
            record_cache: RwLock::new(HashMap::new()),
            rq_cache: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn graph(&self) -> &'g InstanceGraph {
        self.g
    }

    pub fn index(&self) -> &AdjacencyIndex {
        &self.index
    }

    /// (hits, misses) of the record cache.
    pub fn cache_stats(&self) -> (u64, u64) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    /// The set of entity pairs connected by at least one instance path
    /// satisfying `m` (memoized by the canonical encoding).
    pub fn connected_pairs(&self, m: &MetaPath) -> Arc<Vec<(u32, u32)>> {
        let key = m.encoding();
        if let Some(p) = self.pair_cache.read().unwrap().get(&key) {
            return Arc::clone(p);
        }
        let pairs = Arc::new(self.index.connected_pairs(
            m.node_types(),
            m.relations(),
            self.mode,
        ));
        self.pair_cache
            .write()
            .unwrap()
            .insert(key, Arc::clone(&pairs));
        pairs
    }

    fn rq_pairs(&self, r_q: RelId) -> Arc<RqPairs> {
        if let Some(p) = self.rq_cache.read().unwrap().get(&r_q.0) {
            return Arc::clone(p);
        }
        let set: HashSet<(u32, u32)> = self
            .g
            .relation_pairs(r_q)
            .into_iter()
            .map(|(h, t)| (h.0, t.0))
            .collect();
        let count = set.len();
        let pairs = Arc::new(RqPairs { set, count });
        self.rq_cache.write().unwrap().insert(r_q.0, Arc::clone(&pairs));
        pairs
    }

    /// Coverage, confidence and the connected-pair set of `m` for `r_q`,
    /// memoized by (canonical encoding, relation).
    pub fn evaluate(&self, m: &MetaPath, r_q: RelId) -> EvalRecord {
        let key = (m.encoding(), r_q.0);
        if let Some(rec) = self.record_cache.read().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return rec.clone();
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let pairs = self.connected_pairs(m);
        let rq = self.rq_pairs(r_q);
        let joint = pairs.iter().filter(|p| rq.set.contains(p)).count();
        let coverage = if rq.count == 0 {
            0.0
        } else {
            joint as f64 / rq.count as f64
        };
        let confidence = if pairs.is_empty() {
            0.0
        } else {
            joint as f64 / pairs.len() as f64
        };
        let rec = EvalRecord {
            metapath: m.clone(),
            relation: r_q,
            coverage,
            confidence,
            n_connected: pairs.len(),
            rq_pair_count: rq.count,
            pairs,
        };
        self.record_cache
            .write()
            .unwrap()
            .insert(key, rec.clone());
        rec
    }

    pub fn coverage(&self, m: &MetaPath, r_q: RelId) -> f64 {
        self.evaluate(m, r_q).coverage
    }

    pub fn confidence(&self, m: &MetaPath, r_q: RelId) -> f64 {
        self.evaluate(m, r_q).confidence
    }

    /// Fraction of distinct meta-paths with at least one path instance.
    pub fn valid_rate(&self, ms: &[MetaPath]) -> Result<f64> {
        let distinct: HashMap<Vec<u32>, &MetaPath> =
            ms.iter().map(|m| (m.encoding(), m)).collect();
        if distinct.is_empty() {
            return Err(Error::Data(
                "valid rate is undefined for an empty meta-path set".to_owned(),
            ));
        }
        let valid = distinct
            .values()
            .filter(|m| !self.connected_pairs(m).is_empty())
            .count();
        Ok(valid as f64 / distinct.len() as f64)
    }

    /// Tail entities reachable from `start` along `m`.
    pub fn reach_from(&self, start: EntityId, m: &MetaPath) -> Vec<EntityId> {
        self.index.reach_from(start, m.node_types(), m.relations())
    }
}

/// The arrival indicator: 1 iff the trajectory's final type node is the
/// query target and at least one action was a real edge (not stay). The
/// second condition keeps the agent from "arriving" by never moving when
/// source and target type coincide.
pub fn arrival_indicator(tr: &Trajectory, q: &Query) -> bool {
    tr.final_type() == q.tgt_type && tr.real_action_count() > 0
}

/// The normalized reward (λ1·coverage + λ2·confidence + arrived) / (λ1+λ2+1).
pub fn reward_parts(coverage: f64, confidence: f64, arrived: bool, l1: f64, l2: f64) -> f64 {
    debug_assert!(l1 >= 0.0 && l2 >= 0.0);
    (l1 * coverage + l2 * confidence + if arrived { 1.0 } else { 0.0 }) / (l1 + l2 + 1.0)
}

/// Reward of an evaluated meta-path given the arrival bit.
pub fn reward(rec: &EvalRecord, arrived: bool, l1: f64, l2: f64) -> f64 {
    reward_parts(rec.coverage, rec.confidence, arrived, l1, l2)
}
