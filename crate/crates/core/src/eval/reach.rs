//! Boolean sparse-matrix reachability over the instance graph.
//!
//! A meta-path's connected pairs are computed by chained type-projected
//! boolean products: the frontier rows hold, per source entity, the set of
//! entities reachable so far; each step ORs together the relation adjacency
//! rows of the frontier members and masks the result with the next type's
//! member set. Products are binarized by construction (sets, not counts),
//! so repeated multiplication can never report a pair without a witnessing
//! path.
//!
//! Frontier rows are dense bitsets while the entity space fits 2^16 ids and
//! compressed sparse rows above that; the contract is identical.

use crate::hin::{EntityId, InstanceGraph, RelId, TypeId};

pub const DENSE_LIMIT: usize = 1 << 16;

/// Row-set representation selector for the reachability kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReachMode {
    #[default]
    Auto,
    DenseBitset,
    SparseCsr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(n: usize) -> Self {
        Bitset {
            words: vec![0; n.div_ceil(64)],
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn and_assign(&mut self, other: &Bitset) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w &= o;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rem = w;
            std::iter::from_fn(move || {
                if rem == 0 {
                    return None;
                }
                let bit = rem.trailing_zeros() as usize;
                rem &= rem - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

/// Per-relation adjacency lists plus per-type member bitsets, built once per
/// graph and shared read-only across evaluations.
#[derive(Debug)]
pub struct AdjacencyIndex {
    n: usize,
    rel_offsets: Vec<Vec<u32>>,
    rel_tails: Vec<Vec<u32>>,
    type_bits: Vec<Bitset>,
}

impl AdjacencyIndex {
    pub fn build(g: &InstanceGraph) -> Self {
        let n = g.n_entity_slots();
        let n_rel = g.n_relations();
        let mut counts = vec![vec![0u32; n + 1]; n_rel];
        for (h, r, _) in g.triples() {
            counts[r.idx()][h.idx() + 1] += 1;
        }
        let mut rel_offsets = Vec::with_capacity(n_rel);
        for mut c in counts {
            for i in 1..=n {
                c[i] += c[i - 1];
            }
            rel_offsets.push(c);
        }
        let mut rel_tails: Vec<Vec<u32>> = rel_offsets
            .iter()
            .map(|o| vec![0u32; o[n] as usize])
            .collect();
        let mut cursor: Vec<Vec<u32>> = rel_offsets.clone();
        for (h, r, t) in g.triples() {
            let slot = cursor[r.idx()][h.idx()];
            rel_tails[r.idx()][slot as usize] = t.0;
            cursor[r.idx()][h.idx()] += 1;
        }
        // Triples iterate in (h, r, t) order, so each neighbor list is sorted.
        let mut type_bits = vec![Bitset::new(n); g.n_types()];
        for e in g.entities() {
            for &t in g.types_of(e) {
                type_bits[t.idx()].set(e.idx());
            }
        }
        AdjacencyIndex {
            n,
            rel_offsets,
            rel_tails,
            type_bits,
        }
    }

    pub fn n_entities(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn neighbors(&self, r: RelId, e: usize) -> &[u32] {
        let o = &self.rel_offsets[r.idx()];
        &self.rel_tails[r.idx()][o[e] as usize..o[e + 1] as usize]
    }

    pub fn type_members(&self, t: TypeId) -> &Bitset {
        &self.type_bits[t.idx()]
    }

    fn resolve(&self, mode: ReachMode) -> ReachMode {
        match mode {
            ReachMode::Auto if self.n <= DENSE_LIMIT => ReachMode::DenseBitset,
            ReachMode::Auto => ReachMode::SparseCsr,
            m => m,
        }
    }

    /// All (source, destination) pairs connected by at least one instance
    /// path satisfying the meta-path `(node_types, relations)`. Sorted by
    /// (source, destination); set semantics.
    pub fn connected_pairs(
        &self,
        node_types: &[TypeId],
        relations: &[RelId],
        mode: ReachMode,
    ) -> Vec<(u32, u32)> {
        debug_assert_eq!(node_types.len(), relations.len() + 1);
        match self.resolve(mode) {
            ReachMode::DenseBitset => self.pairs_dense(node_types, relations),
            ReachMode::SparseCsr => self.pairs_sparse(node_types, relations),
            ReachMode::Auto => unreachable!(),
        }
    }

    fn pairs_dense(&self, node_types: &[TypeId], relations: &[RelId]) -> Vec<(u32, u32)> {
        let sources: Vec<u32> = self.type_bits[node_types[0].idx()]
            .iter()
            .map(|i| i as u32)
            .collect();
        let mut rows: Vec<(u32, Bitset)> = Vec::with_capacity(sources.len());
        for s in sources {
            let mut row = Bitset::new(self.n);
            row.set(s as usize);
            rows.push((s, row));
        }
        for (step, &r) in relations.iter().enumerate() {
            let dst_bits = &self.type_bits[node_types[step + 1].idx()];
            let mut next = Vec::with_capacity(rows.len());
            for (s, row) in rows {
                let mut acc = Bitset::new(self.n);
                for v in row.iter() {
                    for &w in self.neighbors(r, v) {
                        acc.set(w as usize);
                    }
                }
                acc.and_assign(dst_bits);
                if !acc.is_empty() {
                    next.push((s, acc));
                }
            }
            rows = next;
        }
        let mut pairs = Vec::new();
        for (s, row) in rows {
            for d in row.iter() {
                pairs.push((s, d as u32));
            }
        }
        pairs
    }

    fn pairs_sparse(&self, node_types: &[TypeId], relations: &[RelId]) -> Vec<(u32, u32)> {
        let mut scratch = Bitset::new(self.n);
        let mut rows: Vec<(u32, Vec<u32>)> = self.type_bits[node_types[0].idx()]
            .iter()
            .map(|s| (s as u32, vec![s as u32]))
            .collect();
        for (step, &r) in relations.iter().enumerate() {
            let dst_bits = &self.type_bits[node_types[step + 1].idx()];
            let mut next = Vec::with_capacity(rows.len());
            for (s, row) in rows {
                let mut touched: Vec<u32> = Vec::new();
                for v in row {
                    for &w in self.neighbors(r, v as usize) {
                        if dst_bits.get(w as usize) && !scratch.get(w as usize) {
                            scratch.set(w as usize);
                            touched.push(w);
                        }
                    }
                }
                // Reset scratch: every set bit lives in a touched word.
                for &w in &touched {
                    scratch.words[w as usize / 64] = 0;
                }
                if !touched.is_empty() {
                    touched.sort_unstable();
                    next.push((s, touched));
                }
            }
            rows = next;
        }
        let mut pairs = Vec::new();
        for (s, row) in rows {
            for d in row {
                pairs.push((s, d));
            }
        }
        pairs
    }

    /// Entities reachable from `start` along the meta-path (single-source
    /// variant of `connected_pairs`, used for tail ranking). `start` must
    /// carry the head type for any result to be non-empty.
    pub fn reach_from(
        &self,
        start: EntityId,
        node_types: &[TypeId],
        relations: &[RelId],
    ) -> Vec<EntityId> {
        if !self.type_bits[node_types[0].idx()].get(start.idx()) {
            return Vec::new();
        }
        let mut frontier = vec![start.0];
        for (step, &r) in relations.iter().enumerate() {
            let dst_bits = &self.type_bits[node_types[step + 1].idx()];
            let mut acc = Bitset::new(self.n);
            for v in frontier {
                for &w in self.neighbors(r, v as usize) {
                    if dst_bits.get(w as usize) {
                        acc.set(w as usize);
                    }
                }
            }
            frontier = acc.iter().map(|i| i as u32).collect();
            if frontier.is_empty() {
                break;
            }
        }
        frontier.into_iter().map(EntityId).collect()
    }
}
