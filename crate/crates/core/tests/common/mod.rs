//! Shared test machinery: the exhaustive DFS path-enumeration oracle
//! (independent of the boolean-matrix evaluator), a random HIN generator,
//! and the synthetic fixtures the acceptance criteria run on.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metapath::eval::MetaPath;
use metapath::hin::{load_instance_graph, EntityId, InstanceGraph, RelId, TypeId};

/// Exhaustive depth-first enumeration of instance paths satisfying `m`,
/// collected as (source, destination) pairs. Visited (entity, position)
/// marks keep cyclic graphs from looping while preserving exactness for
/// pair connectivity.
pub fn oracle_pairs(g: &InstanceGraph, m: &MetaPath) -> BTreeSet<(u32, u32)> {
    let types = m.node_types();
    let rels = m.relations();
    let n = g.n_entity_slots();
    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for (h, r, t) in g.triples() {
        adj[h.idx()].push((r.0, t.0));
    }
    let mut result = BTreeSet::new();
    for src in g.entities() {
        if !g.types_of(src).contains(&types[0]) {
            continue;
        }
        let mut seen = vec![false; n * rels.len().max(1)];
        let mut stack = vec![(src.0, 0usize)];
        while let Some((e, pos)) = stack.pop() {
            if pos == rels.len() {
                result.insert((src.0, e));
                continue;
            }
            for &(r, t) in &adj[e as usize] {
                if r != rels[pos].0 {
                    continue;
                }
                if !g.types_of(EntityId(t)).contains(&types[pos + 1]) {
                    continue;
                }
                if pos + 1 == rels.len() {
                    result.insert((src.0, t));
                } else if !seen[(t as usize) * rels.len() + (pos + 1)] {
                    seen[(t as usize) * rels.len() + (pos + 1)] = true;
                    stack.push((t, pos + 1));
                }
            }
        }
    }
    result
}

/// Oracle coverage and confidence by direct definition over a
/// pre-enumerated pair set, with the same zero-denominator conventions as
/// the evaluator.
pub fn oracle_scores_from_pairs(
    pairs: &BTreeSet<(u32, u32)>,
    rq_pairs: &BTreeSet<(u32, u32)>,
) -> (f64, f64, usize) {
    let joint = pairs.intersection(rq_pairs).count();
    let coverage = if rq_pairs.is_empty() {
        0.0
    } else {
        joint as f64 / rq_pairs.len() as f64
    };
    let confidence = if pairs.is_empty() {
        0.0
    } else {
        joint as f64 / pairs.len() as f64
    };
    (coverage, confidence, pairs.len())
}

/// One-call form used by small fixtures.
pub fn oracle_scores(g: &InstanceGraph, m: &MetaPath, r_q: RelId) -> (f64, f64, usize) {
    let pairs = oracle_pairs(g, m);
    let rq: BTreeSet<(u32, u32)> = g
        .relation_pairs(r_q)
        .into_iter()
        .map(|(h, t)| (h.0, t.0))
        .collect();
    oracle_scores_from_pairs(&pairs, &rq)
}

/// All meta-paths of up to `max_nodes` type nodes on the derived schema,
/// from every start type (schema-level DFS, independent of the env).
pub fn all_metapaths(schema: &metapath::hin::SchemaGraph, max_nodes: usize) -> Vec<MetaPath> {
    let mut out = Vec::new();
    for t in 0..schema.n_types() {
        let mut types = vec![TypeId(t as u32)];
        let mut rels = Vec::new();
        walk(schema, max_nodes, &mut types, &mut rels, &mut out);
    }
    out
}

fn walk(
    schema: &metapath::hin::SchemaGraph,
    max_nodes: usize,
    types: &mut Vec<TypeId>,
    rels: &mut Vec<RelId>,
    out: &mut Vec<MetaPath>,
) {
    if types.len() == max_nodes {
        return;
    }
    let cur = *types.last().unwrap();
    for &(r, d) in schema.out_edges(cur) {
        types.push(d);
        rels.push(r);
        out.push(MetaPath::new(types.clone(), rels.clone()).unwrap());
        walk(schema, max_nodes, types, rels, out);
        types.pop();
        rels.pop();
    }
}

/// Random HIN generator: a sparse random schema plan with bounded per-type
/// out-degree (so the meta-path space of each graph stays enumerable),
/// entities with one or occasionally two types, and triples instantiated
/// per planned edge. The derived schema may contain extra witnessed edges
/// from the multi-type entities, which is the point.
pub fn random_hin(seed: u64) -> InstanceGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_types = rng.gen_range(4..=10usize);
    let n_rels = rng.gen_range(2..=8usize);
    // Mostly small graphs with a few larger ones up to the 200 limit.
    let n_entities = if seed % 10 == 0 {
        rng.gen_range(100..=200usize)
    } else {
        rng.gen_range(20..=60usize)
    };

    let mut types_src = String::new();
    let mut entity_types: Vec<Vec<usize>> = Vec::with_capacity(n_entities);
    for e in 0..n_entities {
        let primary = rng.gen_range(0..n_types);
        let mut ts = vec![primary];
        if rng.gen_bool(0.1) {
            let second = rng.gen_range(0..n_types);
            if second != primary {
                ts.push(second);
            }
        }
        for &t in &ts {
            writeln!(types_src, "e{e}\tT{t}").unwrap();
        }
        entity_types.push(ts);
    }

    // Schema plan capped at out-degree 2 per source type and 10 edges.
    let mut planned: Vec<(usize, usize, usize)> = Vec::new();
    let mut out_degree = vec![0usize; n_types];
    for _ in 0..24 {
        if planned.len() >= 10 {
            break;
        }
        let ts = rng.gen_range(0..n_types);
        if out_degree[ts] >= 2 {
            continue;
        }
        let r = rng.gen_range(0..n_rels);
        let td = rng.gen_range(0..n_types);
        if planned.contains(&(ts, r, td)) {
            continue;
        }
        out_degree[ts] += 1;
        planned.push((ts, r, td));
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_types];
    for (e, ts) in entity_types.iter().enumerate() {
        for &t in ts {
            members[t].push(e);
        }
    }
    let mut triples_src = String::new();
    let mut seen = BTreeSet::new();
    for &(ts, r, td) in &planned {
        if members[ts].is_empty() || members[td].is_empty() {
            continue;
        }
        for _ in 0..rng.gen_range(1..=12usize) {
            let h = members[ts][rng.gen_range(0..members[ts].len())];
            let t = members[td][rng.gen_range(0..members[td].len())];
            if seen.insert((h, r, t)) {
                writeln!(triples_src, "e{h}\tr{r}\te{t}").unwrap();
            }
        }
    }
    // A graph with no triples at all is useless for the oracle comparison;
    // guarantee one.
    if seen.is_empty() {
        writeln!(triples_src, "e0\tr0\te1").unwrap();
    }
    load_instance_graph(&triples_src, &types_src).unwrap()
}

/// The guiding-example synthetic graph: 250 graduates of universities in
/// one country (150 of them citizens), plus 50 citizens with no graduation
/// path; 200 citizen pairs and 250 graduate pairs in total.
pub fn guiding_example_graph() -> InstanceGraph {
    let mut triples = String::new();
    let mut types = String::from("Germany\tCountry\n");
    for u in 0..10 {
        types.push_str(&format!("u{u}\tUniversity\n"));
        triples.push_str(&format!("u{u}\tLocatedIn\tGermany\n"));
    }
    for p in 0..300 {
        types.push_str(&format!("p{p}\tPerson\n"));
        if p < 250 {
            triples.push_str(&format!("p{p}\tGraduatedFrom\tu{}\n", p % 10));
        }
        let citizen = p < 150 || p >= 250;
        if citizen {
            triples.push_str(&format!("p{p}\tisCitizenOf\tGermany\n"));
        }
    }
    load_instance_graph(&triples, &types).unwrap()
}

/// Convergence fixture: one planted two-hop meta-path with coverage and
/// confidence 1.0 among 28 arrival-satisfying schema decoys whose paths
/// have no instances (scores 0).
pub fn convergence_fixture() -> (InstanceGraph, RelId) {
    let mut triples = String::new();
    let mut types = String::new();
    // Planted corridor: s_k -a-> m_k -b-> t_k, aligned with rq pairs.
    for k in 0..20 {
        types.push_str(&format!("s{k}\tS\nm{k}\tM\nt{k}\tT\n"));
        triples.push_str(&format!("s{k}\ta\tm{k}\nm{k}\tb\tt{k}\ns{k}\trq\tt{k}\n"));
    }
    // Seven decoy mid types, each with two in-relations from S and two
    // out-relations to T, all witnessed by disjoint entity pairs so no
    // decoy path has an instance.
    for i in 0..7 {
        for (j, c) in ["c1", "c2"].iter().enumerate() {
            types.push_str(&format!("ws{i}_{j}\tS\nwm{i}_{j}\tD{i}\n"));
            triples.push_str(&format!("ws{i}_{j}\t{c}\twm{i}_{j}\n"));
        }
        for (j, d) in ["d1", "d2"].iter().enumerate() {
            types.push_str(&format!("vm{i}_{j}\tD{i}\nvt{i}_{j}\tT\n"));
            triples.push_str(&format!("vm{i}_{j}\t{d}\tvt{i}_{j}\n"));
        }
    }
    let g = load_instance_graph(&triples, &types).unwrap();
    let rq = g.relation_id("rq").unwrap();
    (g, rq)
}

/// Parameters of the inductive-transfer fixture.
pub struct InductiveFixture {
    pub graph: InstanceGraph,
    pub relations: Vec<RelId>,
}

/// Eight relations rq0..rq7, each explained by the planted meta-path
/// S_i -a-> M_i -b-> T_i (coverage/confidence 1.0). Shared decoy relations
/// fan out from each S_i into a noise subgraph so the trajectory space is
/// far larger than any beam used in the tests; decoy edges are witnessed by
/// disjoint pairs (no instances chain).
pub fn inductive_fixture(n_pairs: usize) -> InductiveFixture {
    let mut triples = String::new();
    let mut types = String::new();
    for i in 0..8 {
        for k in 0..n_pairs {
            types.push_str(&format!("s{i}_{k}\tS{i}\nm{i}_{k}\tM{i}\nt{i}_{k}\tT{i}\n"));
            triples.push_str(&format!(
                "s{i}_{k}\ta\tm{i}_{k}\nm{i}_{k}\tb\tt{i}_{k}\ns{i}_{k}\trq{i}\tt{i}_{k}\n"
            ));
        }
        // Four decoy branches from S_i into the shared noise types.
        for j in 0..4 {
            types.push_str(&format!("wd{i}_{j}\tS{i}\nxd{i}_{j}\tX{j}\n"));
            triples.push_str(&format!("wd{i}_{j}\tz{j}\txd{i}_{j}\n"));
        }
    }
    // Noise types interconnect so depth-4 trajectories branch widely.
    for j in 0..4 {
        for l in 0..4 {
            if j == l {
                continue;
            }
            types.push_str(&format!("ya{j}_{l}\tX{j}\nyb{j}_{l}\tX{l}\n"));
            triples.push_str(&format!("ya{j}_{l}\tzz{l}\tyb{j}_{l}\n"));
        }
    }
    let g = load_instance_graph(&triples, &types).unwrap();
    let relations = (0..8)
        .map(|i| g.relation_id(&format!("rq{i}")).unwrap())
        .collect();
    InductiveFixture {
        graph: g,
        relations,
    }
}

/// Schema-complex valid-rate fixture. Each of four relations gets a
/// planted two-layer DAG of types whose every source-to-target path is
/// fully instanced along the relation's entity pairs (24 perfect
/// meta-paths per relation), plus three instance-empty "twin" families
/// with the identical relation signature, plus a dense noise web whose
/// edges never chain at the instance level. The meta-path space per query
/// is in the thousands while only ~25 paths are valid.
pub struct ValidRateFixture {
    pub graph: InstanceGraph,
    pub relations: Vec<RelId>,
}

pub fn valid_rate_fixture(seed: u64) -> ValidRateFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = String::new();
    let mut types = String::new();
    let n_rel = 4;
    let n_layer = 4; // types per planted layer
    let n_twin_families = 3;
    let n_pairs = 12;
    let n_noise_types = 30;
    let n_noise_rels = 16;

    for i in 0..n_rel {
        // Fully-instanced planted DAG: S -a-> A_i -b-> B_j -c-> T plus the
        // skips S -d-> B_j and A_i -e-> T; every source-target path in it
        // is a valid meta-path with coverage and confidence 1.0.
        for k in 0..n_pairs {
            types.push_str(&format!("s{i}_{k}\tS{i}\nt{i}_{k}\tT{i}\n"));
            triples.push_str(&format!("s{i}_{k}\trq{i}\tt{i}_{k}\n"));
            for x in 0..n_layer {
                types.push_str(&format!("pa{i}_{x}_{k}\tA{i}_{x}\npb{i}_{x}_{k}\tB{i}_{x}\n"));
                triples.push_str(&format!(
                    "s{i}_{k}\ta\tpa{i}_{x}_{k}\ns{i}_{k}\td\tpb{i}_{x}_{k}\n"
                ));
                triples.push_str(&format!(
                    "pb{i}_{x}_{k}\tc\tt{i}_{k}\npa{i}_{x}_{k}\te\tt{i}_{k}\n"
                ));
                for y in 0..n_layer {
                    triples.push_str(&format!("pa{i}_{x}_{k}\tb\tpb{i}_{y}_{k}\n"));
                }
            }
        }
        // Twin families: the same DAG shape and relations, but every edge
        // is witnessed by a disjoint entity pair, so no twin path has an
        // instance. Only instance-level feedback separates them.
        for f in 0..n_twin_families {
            for x in 0..n_layer {
                types.push_str(&format!(
                    "qs{i}_{f}_{x}\tS{i}\nqa{i}_{f}_{x}\tQA{i}_{f}_{x}\n"
                ));
                triples.push_str(&format!("qs{i}_{f}_{x}\ta\tqa{i}_{f}_{x}\n"));
                types.push_str(&format!(
                    "rs{i}_{f}_{x}\tS{i}\nrb{i}_{f}_{x}\tQB{i}_{f}_{x}\n"
                ));
                triples.push_str(&format!("rs{i}_{f}_{x}\td\trb{i}_{f}_{x}\n"));
                types.push_str(&format!(
                    "ua{i}_{f}_{x}\tQA{i}_{f}_{x}\nut{i}_{f}_{x}\tT{i}\n"
                ));
                triples.push_str(&format!("ua{i}_{f}_{x}\te\tut{i}_{f}_{x}\n"));
                types.push_str(&format!(
                    "vb{i}_{f}_{x}\tQB{i}_{f}_{x}\nvt{i}_{f}_{x}\tT{i}\n"
                ));
                triples.push_str(&format!("vb{i}_{f}_{x}\tc\tvt{i}_{f}_{x}\n"));
                for y in 0..n_layer {
                    types.push_str(&format!(
                        "wa{i}_{f}_{x}_{y}\tQA{i}_{f}_{x}\nwb{i}_{f}_{x}_{y}\tQB{i}_{f}_{y}\n"
                    ));
                    triples.push_str(&format!("wa{i}_{f}_{x}_{y}\tb\twb{i}_{f}_{x}_{y}\n"));
                }
            }
        }
    }
    // Noise web: fresh witness pair per edge, chains never instantiate.
    let mut fresh = 0usize;
    let mut noise_edge = |types: &mut String,
                          triples: &mut String,
                          src_t: String,
                          rel: String,
                          dst_t: String| {
        types.push_str(&format!("nw{fresh}a\t{src_t}\nnw{fresh}b\t{dst_t}\n"));
        triples.push_str(&format!("nw{fresh}a\t{rel}\tnw{fresh}b\n"));
        fresh += 1;
    };
    for i in 0..n_rel {
        for _ in 0..24 {
            let x = rng.gen_range(0..n_noise_types);
            let z = rng.gen_range(0..n_noise_rels);
            noise_edge(
                &mut types,
                &mut triples,
                format!("S{i}"),
                format!("z{z}"),
                format!("X{x}"),
            );
        }
    }
    for x in 0..n_noise_types {
        for _ in 0..10 {
            let y = rng.gen_range(0..n_noise_types);
            let z = rng.gen_range(0..n_noise_rels);
            if y != x {
                noise_edge(
                    &mut types,
                    &mut triples,
                    format!("X{x}"),
                    format!("z{z}"),
                    format!("X{y}"),
                );
            }
        }
    }
    for i in 0..n_rel {
        for _ in 0..14 {
            let x = rng.gen_range(0..n_noise_types);
            let z = rng.gen_range(0..n_noise_rels);
            noise_edge(
                &mut types,
                &mut triples,
                format!("X{x}"),
                format!("z{z}"),
                format!("T{i}"),
            );
        }
    }
    let g = load_instance_graph(&triples, &types).unwrap();
    let relations = (0..n_rel)
        .map(|i| g.relation_id(&format!("rq{i}")).unwrap())
        .collect();
    ValidRateFixture {
        graph: g,
        relations,
    }
}
