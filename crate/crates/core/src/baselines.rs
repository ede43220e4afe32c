//! Meta-path generators the agent is compared against: uniform random walks
//! on the schema graph and exact breadth-first enumeration.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::MetaPath;
use crate::hin::{Query, RelId, SchemaGraph, TypeId};

/// Walk-attempt budget for the fair comparison against the agent. The
/// multiplier mirrors the 1x / 5x / 10x attempt scaling of the protocol.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    pub attempts: usize,
    pub multiplier: usize,
}

impl SearchBudget {
    pub fn new(attempts: usize) -> Self {
        SearchBudget {
            attempts,
            multiplier: 1,
        }
    }

    pub fn effective_attempts(&self) -> usize {
        self.attempts * self.multiplier.max(1)
    }
}

/// Uniform random walks from the query source (no stay action); a walk that
/// reaches the target type within `max_hops` edges contributes its
/// meta-path and stops. Output is deduplicated, in first-discovery order.
pub fn random_walk_metapaths(
    schema: &SchemaGraph,
    q: Query,
    budget: SearchBudget,
    max_hops: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<MetaPath>> {
    if budget.attempts == 0 {
        return Err(Error::Config("walk budget must be at least 1".into()));
    }
    let mut out: Vec<MetaPath> = Vec::new();
    let mut seen: std::collections::HashSet<Vec<u32>> = std::collections::HashSet::new();
    for _ in 0..budget.effective_attempts() {
        let mut node_types = vec![q.src_type];
        let mut relations = Vec::new();
        let mut cur = q.src_type;
        for _ in 0..max_hops {
            let edges = schema.out_edges(cur);
            if edges.is_empty() {
                break;
            }
            let (r, d) = edges[rng.gen_range(0..edges.len())];
            relations.push(r);
            node_types.push(d);
            cur = d;
            if cur == q.tgt_type {
                break;
            }
        }
        if cur == q.tgt_type && !relations.is_empty() {
            let m = MetaPath::new(node_types, relations).expect("walk is well-formed");
            if seen.insert(m.encoding()) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

/// Exact count of source-to-target walks of 1..=max_hops edges by dynamic
/// programming (saturating). The enumeration oracle and the refusal gate
/// both use it.
pub fn count_metapaths(schema: &SchemaGraph, q: Query, max_hops: usize) -> u64 {
    let n = schema.n_types();
    let mut ways = vec![0u64; n];
    ways[q.src_type.idx()] = 1;
    let mut total = 0u64;
    for _ in 0..max_hops {
        let mut next = vec![0u64; n];
        for t in 0..n {
            if ways[t] == 0 {
                continue;
            }
            for &(_, d) in schema.out_edges(TypeId(t as u32)) {
                next[d.idx()] = next[d.idx()].saturating_add(ways[t]);
            }
        }
        total = total.saturating_add(next[q.tgt_type.idx()]);
        ways = next;
    }
    total
}

/// Every meta-path from the source to the target type within `max_hops`
/// edges. Refuses when the DP path count exceeds `cap` (enumeration cannot
/// scale past that).
pub fn enumerate_metapaths(
    schema: &SchemaGraph,
    q: Query,
    max_hops: usize,
    cap: u64,
) -> Result<Vec<MetaPath>> {
    let count = count_metapaths(schema, q, max_hops);
    if count > cap {
        return Err(Error::Data(format!(
            "enumeration would produce {count} meta-paths, over the cap of {cap}"
        )));
    }
    let mut out = Vec::new();
    let mut node_types = vec![q.src_type];
    let mut relations = Vec::new();
    dfs(
        schema,
        q.tgt_type,
        max_hops,
        &mut node_types,
        &mut relations,
        &mut out,
    );
    Ok(out)
}

fn dfs(
    schema: &SchemaGraph,
    tgt: TypeId,
    remaining: usize,
    node_types: &mut Vec<TypeId>,
    relations: &mut Vec<RelId>,
    out: &mut Vec<MetaPath>,
) {
    if remaining == 0 {
        return;
    }
    let cur = *node_types.last().unwrap();
    for &(r, d) in schema.out_edges(cur) {
        node_types.push(d);
        relations.push(r);
        if d == tgt {
            out.push(
                MetaPath::new(node_types.clone(), relations.clone())
                    .expect("enumerated path is well-formed"),
            );
        }
        dfs(schema, tgt, remaining - 1, node_types, relations, out);
        node_types.pop();
        relations.pop();
    }
}
