//! Per-relation link-prediction harness: BFS-filtered dataset preparation,
//! same-type negative sampling, the four meta-path similarity functions,
//! L1-regularized linear regression by coordinate descent, and ROC-AUC /
//! average precision.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::hin::{remove_triples, EntityId, InstanceGraph, RelId};
use crate::inference::MinedPathSet;

/// Labeled positives for one relation, split for training and testing. The
/// positive:negative ratio is 2:1 by protocol.
#[derive(Debug, Clone)]
pub struct LpDataset {
    pub relation: RelId,
    pub train_pos: Vec<(EntityId, EntityId)>,
    pub test_pos: Vec<(EntityId, EntityId)>,
}

/// Keep the relation's entity pairs that an instance path of at most
/// `l - 1` hops connects, excluding the pair's direct edge (and its inverse
/// if augmented); split the survivors `split_ratio` : rest by seeded
/// shuffle (test size floored); remove the test facts from the graph.
/// Returns the dataset and the surgered graph.
pub fn prepare_dataset(
    g: &InstanceGraph,
    r_q: RelId,
    l: usize,
    split_ratio: f64,
    seed: u64,
) -> Result<(LpDataset, InstanceGraph)> {
    if l < 2 {
        return Err(Error::Config("meta-path length must be at least 2".into()));
    }
    if !(0.0..1.0).contains(&split_ratio) || split_ratio <= 0.0 {
        return Err(Error::Config(format!(
            "split ratio must be in (0, 1), got {split_ratio}"
        )));
    }
    let max_hops = l - 1;
    // Directed adjacency with relation labels for the exclusion check.
    let n = g.n_entity_slots();
    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for (h, r, t) in g.triples() {
        adj[h.idx()].push((r.0, t.0));
    }
    let inv = g.inverse_of(r_q);

    let positives = g.relation_pairs(r_q);
    let mut survivors = Vec::new();
    for &(h, t) in &positives {
        if bfs_connects(&adj, h, t, max_hops, r_q, inv) {
            survivors.push((h, t));
        }
    }
    if survivors.is_empty() {
        return Err(Error::Data(format!(
            "no entity pairs of '{}' survive the connectivity check",
            g.relation_name(r_q)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..survivors.len()).rev() {
        survivors.swap(i, rng.gen_range(0..=i));
    }
    // Epsilon guards the exact-fraction case (e.g. 0.2 * 10) against
    // binary-float drift; test size is floored.
    let n_test = ((1.0 - split_ratio) * survivors.len() as f64 + 1e-9).floor() as usize;
    let test_pos: Vec<_> = survivors[survivors.len() - n_test..].to_vec();
    let train_pos: Vec<_> = survivors[..survivors.len() - n_test].to_vec();

    let facts: Vec<_> = test_pos.iter().map(|&(h, t)| (h, r_q, t)).collect();
    let (surgered, _) = remove_triples(g, &facts);
    Ok((
        LpDataset {
            relation: r_q,
            train_pos,
            test_pos,
        },
        surgered,
    ))
}

/// Is there a directed path h -> t of 1..=max_hops edges that never uses
/// the pair's direct edge (h, r_q, t) nor its inverse (t, inv, h)?
fn bfs_connects(
    adj: &[Vec<(u32, u32)>],
    h: EntityId,
    t: EntityId,
    max_hops: usize,
    r_q: RelId,
    inv: Option<RelId>,
) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::new();
    seen[h.idx()] = true;
    queue.push_back((h.0, 0usize));
    while let Some((u, depth)) = queue.pop_front() {
        if depth == max_hops {
            continue;
        }
        for &(rel, v) in &adj[u as usize] {
            if u == h.0 && rel == r_q.0 && v == t.0 {
                continue;
            }
            if let Some(inv) = inv {
                if u == t.0 && rel == inv.0 && v == h.0 {
                    continue;
                }
            }
            if v == t.0 {
                return true;
            }
            if !seen[v as usize] {
                seen[v as usize] = true;
                queue.push_back((v, depth + 1));
            }
        }
    }
    false
}

/// Corrupt sampled positives' tails into same-type fakes that are not true
/// `r_q` pairs; `positives / ratio` negatives (floored). Positives whose
/// tail type has a single member, or that defeat 100 corruption attempts,
/// are skipped; the skip count is returned alongside.
pub fn generate_negatives(
    positives: &[(EntityId, EntityId)],
    g: &InstanceGraph,
    r_q: RelId,
    ratio: f64,
    seed: u64,
) -> (Vec<(EntityId, EntityId)>, usize) {
    let truth: HashSet<(u32, u32)> = g
        .relation_pairs(r_q)
        .into_iter()
        .map(|(h, t)| (h.0, t.0))
        .collect();
    let want = (positives.len() as f64 / ratio).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut negatives = Vec::with_capacity(want);
    let mut produced: HashSet<(u32, u32)> = HashSet::new();
    let mut skipped = 0;
    let mut member_cache: HashMap<u32, Vec<EntityId>> = HashMap::new();
    while negatives.len() < want {
        if positives.is_empty() {
            break;
        }
        let (h, t) = positives[rng.gen_range(0..positives.len())];
        // Candidate fakes: entities sharing at least one type with t.
        let mut pool: Vec<EntityId> = Vec::new();
        for &ty in g.types_of(t) {
            let members = member_cache
                .entry(ty.0)
                .or_insert_with(|| g.type_members(ty));
            pool.extend(members.iter().copied());
        }
        pool.sort_unstable_by_key(|e| e.0);
        pool.dedup();
        if pool.len() < 2 {
            skipped += 1;
            if skipped > positives.len() * 100 {
                break;
            }
            continue;
        }
        let mut found = false;
        for _ in 0..100 {
            let fake = pool[rng.gen_range(0..pool.len())];
            if fake == t
                || truth.contains(&(h.0, fake.0))
                || produced.contains(&(h.0, fake.0))
            {
                continue;
            }
            produced.insert((h.0, fake.0));
            negatives.push((h, fake));
            found = true;
            break;
        }
        if !found {
            skipped += 1;
            if skipped > positives.len() * 100 {
                break;
            }
        }
    }
    (negatives, skipped)
}

/// The four meta-path similarity functions of the link-prediction harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMode {
    SumConf,
    MetaCount,
    ConfFeat,
    BinaryFeat,
}

impl SimilarityMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sum-conf" => Ok(SimilarityMode::SumConf),
            "meta-count" => Ok(SimilarityMode::MetaCount),
            "conf-feat" => Ok(SimilarityMode::ConfFeat),
            "binary-feat" => Ok(SimilarityMode::BinaryFeat),
            other => Err(Error::Config(format!(
                "unknown similarity mode '{other}' (use sum-conf, meta-count, conf-feat or binary-feat)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimilarityMode::SumConf => "sum-conf",
            SimilarityMode::MetaCount => "meta-count",
            SimilarityMode::ConfFeat => "conf-feat",
            SimilarityMode::BinaryFeat => "binary-feat",
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, SimilarityMode::SumConf | SimilarityMode::MetaCount)
    }
}

/// Feature vector of one pair under a similarity mode. Scalar modes yield a
/// single component; vector modes have one component per mined meta-path.
pub fn pair_features(
    pair: (EntityId, EntityId),
    mined: &MinedPathSet,
    evaluator: &Evaluator,
    mode: SimilarityMode,
) -> Vec<f64> {
    let key = (pair.0 .0, pair.1 .0);
    let connects: Vec<bool> = mined
        .entries
        .iter()
        .map(|e| {
            let pairs = evaluator.connected_pairs(&e.metapath);
            pairs.binary_search(&key).is_ok()
        })
        .collect();
    match mode {
        SimilarityMode::SumConf => {
            let s = mined
                .entries
                .iter()
                .zip(&connects)
                .filter(|(_, &c)| c)
                .map(|(e, _)| e.confidence)
                .sum();
            vec![s]
        }
        SimilarityMode::MetaCount => {
            vec![connects.iter().filter(|&&c| c).count() as f64]
        }
        SimilarityMode::BinaryFeat => connects
            .iter()
            .map(|&c| if c { 1.0 } else { 0.0 })
            .collect(),
        SimilarityMode::ConfFeat => mined
            .entries
            .iter()
            .zip(&connects)
            .map(|(e, &c)| if c { e.confidence } else { 0.0 })
            .collect(),
    }
}

/// Features for a labeled pair list (parallel over pairs).
pub fn feature_matrix(
    pairs: &[(EntityId, EntityId)],
    mined: &MinedPathSet,
    evaluator: &Evaluator,
    mode: SimilarityMode,
) -> Vec<Vec<f64>> {
    pairs
        .par_iter()
        .map(|&p| pair_features(p, mined, evaluator, mode))
        .collect()
}

/// LASSO by cyclic coordinate descent with soft thresholding on centered
/// features: minimizes (1/2n)‖y - Xw - b‖² + reg·‖w‖₁. Labels are {0,1}.
/// Stops when the largest coordinate change drops below 1e-6 or after
/// `iters` sweeps. Returns (weights, intercept).
pub fn fit_l1_regression(
    features: &[Vec<f64>],
    labels: &[f64],
    reg_weight: f64,
    iters: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = features.len();
    if n < 2 || labels.len() != n {
        return Err(Error::Data(
            "regression needs at least two labeled samples".into(),
        ));
    }
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::Data("ragged feature matrix".into()));
    }
    let nf = n as f64;
    let y_mean = labels.iter().sum::<f64>() / nf;
    let x_mean: Vec<f64> = (0..d)
        .map(|j| features.iter().map(|f| f[j]).sum::<f64>() / nf)
        .collect();
    // Centered copies; constant columns become all-zero and keep weight 0.
    let xc: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.iter().zip(&x_mean).map(|(v, m)| v - m).collect())
        .collect();
    let yc: Vec<f64> = labels.iter().map(|&v| v - y_mean).collect();
    let col_sq: Vec<f64> = (0..d)
        .map(|j| xc.iter().map(|f| f[j] * f[j]).sum::<f64>() / nf)
        .collect();

    let mut w = vec![0.0; d];
    let mut resid = yc.clone();
    for _ in 0..iters {
        let mut max_delta: f64 = 0.0;
        for j in 0..d {
            if col_sq[j] == 0.0 {
                continue;
            }
            // rho = (1/n) X_j . (resid + w_j X_j)
            let mut rho = 0.0;
            for i in 0..n {
                rho += xc[i][j] * (resid[i] + w[j] * xc[i][j]);
            }
            rho /= nf;
            let new_w = soft_threshold(rho, reg_weight) / col_sq[j];
            let delta = new_w - w[j];
            if delta != 0.0 {
                for i in 0..n {
                    resid[i] -= delta * xc[i][j];
                }
                w[j] = new_w;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < 1e-6 {
            break;
        }
    }
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    Ok((w, intercept))
}

#[inline]
fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LpMetrics {
    pub roc_auc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Output of the entity-removal study: per-rate link-prediction metrics on
/// graphs with progressively more of the sampled entities removed.
#[derive(Debug)]
pub struct RemovalStudy {
    /// Entities appearing in the sampled positive test pairs, in the
    /// (seeded) removal order; rates remove prefixes of this list.
    pub sampled_entities: Vec<EntityId>,
    pub results: Vec<(f64, LpMetrics)>,
    pub surgered_graphs: Vec<InstanceGraph>,
}

/// Sample `sample_frac` of the positive test pairs, collect the entities
/// they touch, and for each removal rate drop that fraction of the
/// collected entities from the graph, re-score the mined meta-paths on the
/// surgered graph and re-run link prediction. Rate 0 reproduces the
/// baseline evaluation exactly.
#[allow(clippy::too_many_arguments)]
pub fn removal_study(
    g: &InstanceGraph,
    mined: &MinedPathSet,
    dataset: &LpDataset,
    negatives: &[(EntityId, EntityId)],
    rates: &[f64],
    mode: SimilarityMode,
    sample_frac: f64,
    seed: u64,
) -> Result<RemovalStudy> {
    if dataset.test_pos.is_empty() {
        return Err(Error::Data("removal study needs positive test pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..dataset.test_pos.len()).collect();
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let n_sample = ((sample_frac * idx.len() as f64).round() as usize).max(1);
    let mut entity_set: HashSet<EntityId> = HashSet::new();
    for &i in &idx[..n_sample.min(idx.len())] {
        let (h, t) = dataset.test_pos[i];
        entity_set.insert(h);
        entity_set.insert(t);
    }
    let mut sampled: Vec<EntityId> = entity_set.into_iter().collect();
    sampled.sort_unstable_by_key(|e| e.0);
    for i in (1..sampled.len()).rev() {
        sampled.swap(i, rng.gen_range(0..=i));
    }

    let metapaths: Vec<crate::eval::MetaPath> =
        mined.entries.iter().map(|e| e.metapath.clone()).collect();
    let mut results = Vec::with_capacity(rates.len());
    let mut surgered_graphs = Vec::with_capacity(rates.len());
    for &rate in rates {
        let n_remove = ((rate * sampled.len() as f64).round() as usize).min(sampled.len());
        let remove: HashSet<EntityId> = sampled[..n_remove].iter().copied().collect();
        let g_r = crate::hin::remove_entities(g, &remove);
        let ev = Evaluator::new(&g_r);
        let rescored = crate::inference::score_metapaths(&ev, mined.relation, &metapaths);
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for &p in &dataset.test_pos {
            scores.push(scalar_score(p, &rescored, &ev, mode));
            labels.push(true);
        }
        for &n in negatives {
            scores.push(scalar_score(n, &rescored, &ev, mode));
            labels.push(false);
        }
        results.push((rate, evaluate_lp(&scores, &labels)?));
        surgered_graphs.push(g_r);
    }
    Ok(RemovalStudy {
        sampled_entities: sampled,
        results,
        surgered_graphs,
    })
}

/// Collapse a pair's features to one ranking score: scalar modes use the
/// feature directly, vector modes sum the components.
pub fn scalar_score(
    pair: (EntityId, EntityId),
    mined: &MinedPathSet,
    evaluator: &Evaluator,
    mode: SimilarityMode,
) -> f64 {
    pair_features(pair, mined, evaluator, mode).iter().sum()
}

/// ROC-AUC by the Mann-Whitney rank statistic (ties count half) and average
/// precision by the step-interpolated sum over descending score thresholds.
pub fn evaluate_lp(scores: &[f64], labels: &[bool]) -> Result<LpMetrics> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Data("scores and labels must align".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data(
            "link-prediction metrics need both classes present".into(),
        ));
    }

    // Average ranks with tie groups sharing the mean rank.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let roc_auc = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0)
        / (n_pos as f64 * n_neg as f64);

    // AP over descending distinct thresholds, ties processed as one group.
    let mut desc = order.clone();
    desc.reverse();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < desc.len() {
        let mut j = i;
        while j + 1 < desc.len() && scores[desc[j + 1]] == scores[desc[i]] {
            j += 1;
        }
        for &idx in &desc[i..=j] {
            if labels[idx] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }

    Ok(LpMetrics {
        roc_auc,
        ap,
        n_pos,
        n_neg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_graph;
    use crate::hin::{add_inverse_relations, derive_schema_graph};

    #[test]
    fn toy_citizen_pairs_survive_preparation() {
        let g0 = toy_graph();
        let s0 = derive_schema_graph(&g0);
        let (g, _) = add_inverse_relations(&g0, &s0).unwrap();
        let rq = g.relation_id("isCitizenOf").unwrap();
        let (ds, surgered) = prepare_dataset(&g, rq, 5, 0.8, 1).unwrap();
        // Both citizen pairs have alternate paths (via GraduatedFrom +
        // LocatedIn), so both survive. 2 pairs -> 0 test (floor), 2 train.
        assert_eq!(ds.train_pos.len() + ds.test_pos.len(), 2);
        assert_eq!(ds.test_pos.len(), 0);
        assert_eq!(surgered.n_triples(), g.n_triples());
    }

    #[test]
    fn pair_with_only_direct_edge_is_filtered() {
        // b is reachable from a only via the direct edge.
        let g = crate::hin::load_instance_graph(
            "a\tr\tb\nc\tr\td\nc\ts\tx\nx\ts\td\n",
            "a\tA\nb\tB\nc\tA\nd\tB\nx\tX\n",
        )
        .unwrap();
        let rq = g.relation_id("r").unwrap();
        let (ds, _) = prepare_dataset(&g, rq, 5, 0.8, 1).unwrap();
        let all: Vec<_> = ds.train_pos.iter().chain(&ds.test_pos).collect();
        assert_eq!(all.len(), 1);
        let (h, t) = *all[0];
        assert_eq!(g.entity_name(h), "c");
        assert_eq!(g.entity_name(t), "d");
    }

    #[test]
    fn split_floors_test_size() {
        // Ten surviving pairs -> 8 train / 2 test.
        let mut triples = String::new();
        let mut types = String::new();
        for i in 0..10 {
            triples.push_str(&format!("h{i}\tr\tt{i}\nh{i}\tvia\tm{i}\nm{i}\tvia\tt{i}\n"));
            types.push_str(&format!("h{i}\tH\nt{i}\tT\nm{i}\tM\n"));
        }
        let g = crate::hin::load_instance_graph(&triples, &types).unwrap();
        let rq = g.relation_id("r").unwrap();
        let (ds, surgered) = prepare_dataset(&g, rq, 5, 0.8, 42).unwrap();
        assert_eq!(ds.train_pos.len(), 8);
        assert_eq!(ds.test_pos.len(), 2);
        // Test facts removed from the surgered graph.
        for &(h, t) in &ds.test_pos {
            assert!(!surgered.has_triple((h, rq, t)));
        }
        assert_eq!(surgered.n_triples(), g.n_triples() - 2);
        // Survivors all pass an independent DFS connectivity recheck (the
        // via-chain exists for each pair by construction).
        for &(h, t) in ds.train_pos.iter().chain(&ds.test_pos) {
            assert_eq!(
                g.entity_name(h).trim_start_matches('h'),
                g.entity_name(t).trim_start_matches('t')
            );
        }
    }

    #[test]
    fn negatives_are_typed_and_false() {
        let mut triples = String::new();
        let mut types = String::new();
        for i in 0..8 {
            triples.push_str(&format!("h{i}\tr\tt{i}\n"));
            types.push_str(&format!("h{i}\tH\nt{i}\tT\n"));
        }
        let g = crate::hin::load_instance_graph(&triples, &types).unwrap();
        let rq = g.relation_id("r").unwrap();
        let pos = g.relation_pairs(rq);
        let (negs, skipped) = generate_negatives(&pos, &g, rq, 2.0, 5);
        assert_eq!(negs.len(), 4); // 8 positives -> 4 negatives
        assert_eq!(skipped, 0);
        let truth: HashSet<_> = pos.iter().copied().collect();
        for &(h, t) in &negs {
            assert!(!truth.contains(&(h, t)));
            // Fake tail shares the T type.
            assert!(g.types_of(t).contains(&g.type_id("T").unwrap()));
        }
    }

    #[test]
    fn single_member_type_skips() {
        let g = crate::hin::load_instance_graph("a\tr\tb\n", "a\tA\nb\tB\n").unwrap();
        let rq = g.relation_id("r").unwrap();
        let pos = g.relation_pairs(rq);
        // Want = floor(1/2) = 0 negatives; nothing to do.
        let (negs, _) = generate_negatives(&pos, &g, rq, 2.0, 5);
        assert!(negs.is_empty());
        // With ratio 1 the single B member makes corruption impossible.
        let (negs, skipped) = generate_negatives(&pos, &g, rq, 1.0, 5);
        assert!(negs.is_empty());
        assert!(skipped > 0);
    }

    #[test]
    fn feature_modes_agree() {
        let g = toy_graph();
        let ev = Evaluator::new(&g);
        let rq = g.relation_id("isCitizenOf").unwrap();
        let ms = [
            crate::eval::MetaPath::parse(
                "Person -GraduatedFrom-> University -LocatedIn-> Country",
                &g,
            )
            .unwrap(),
            crate::eval::MetaPath::parse("Person -BornIn-> City -LocatedIn-> Country", &g)
                .unwrap(),
        ];
        let mined = crate::inference::score_metapaths(&ev, rq, &ms);
        let planck = g.entity_id("MaxPlanck").unwrap();
        let germany = g.entity_id("Germany").unwrap();
        let pair = (planck, germany);
        let sum = pair_features(pair, &mined, &ev, SimilarityMode::SumConf);
        let count = pair_features(pair, &mined, &ev, SimilarityMode::MetaCount);
        let conf = pair_features(pair, &mined, &ev, SimilarityMode::ConfFeat);
        let bin = pair_features(pair, &mined, &ev, SimilarityMode::BinaryFeat);
        // Both meta-paths connect (MaxPlanck, Germany).
        assert_eq!(count, vec![2.0]);
        let want_sum: f64 = mined.entries.iter().map(|e| e.confidence).sum();
        assert!((sum[0] - want_sum).abs() < 1e-12);
        // ConfFeat = BinaryFeat (elementwise) * confidence vector.
        for i in 0..mined.entries.len() {
            assert_eq!(conf[i], bin[i] * mined.entries[i].confidence);
        }
        // Unconnected pair: all zeros.
        let john = g.entity_id("JohnDoe").unwrap();
        let france = g.entity_id("France").unwrap();
        let z = pair_features((john, france), &mined, &ev, SimilarityMode::SumConf);
        assert_eq!(z, vec![0.0]);
        let z = pair_features((john, france), &mined, &ev, SimilarityMode::BinaryFeat);
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lasso_separable_and_shrunk() {
        // Perfectly ordered 1-D feature: low reg keeps the ordering.
        let x: Vec<Vec<f64>> = vec![vec![0.1], vec![0.2], vec![0.8], vec![0.9]];
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let (w, b) = fit_l1_regression(&x, &y, 1e-6, 1000).unwrap();
        assert!(w[0] > 0.0);
        let scores: Vec<f64> = x.iter().map(|f| w[0] * f[0] + b).collect();
        let labels: Vec<bool> = y.iter().map(|&v| v > 0.5).collect();
        let m = evaluate_lp(&scores, &labels).unwrap();
        assert_eq!(m.roc_auc, 1.0);
        // Huge reg kills every weight; intercept is the label mean.
        let (w, b) = fit_l1_regression(&x, &y, 1e3, 1000).unwrap();
        assert_eq!(w, vec![0.0]);
        assert!((b - 0.5).abs() < 1e-12);
        // Degenerate all-equal feature column.
        let x: Vec<Vec<f64>> = vec![vec![3.0]; 4];
        let (w, b) = fit_l1_regression(&x, &y, 0.01, 1000).unwrap();
        assert_eq!(w, vec![0.0]);
        assert!((b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lasso_satisfies_subgradient_conditions() {
        // 2-D toy system checked against the KKT conditions at one lambda.
        let x: Vec<Vec<f64>> = vec![
            vec![1.0, 0.5],
            vec![2.0, -0.5],
            vec![3.0, 0.25],
            vec![4.0, -0.25],
            vec![5.0, 0.1],
        ];
        let y = vec![0.0, 0.0, 1.0, 1.0, 1.0];
        let reg = 0.05;
        let (w, b) = fit_l1_regression(&x, &y, reg, 10_000).unwrap();
        let n = x.len() as f64;
        for j in 0..2 {
            // gradient of the smooth part at the solution
            let mut gj = 0.0;
            for i in 0..x.len() {
                let pred: f64 = x[i].iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
                gj += x[i][j] * (pred - y[i]);
            }
            gj /= n;
            if w[j] != 0.0 {
                assert!(
                    (gj + reg * w[j].signum()).abs() < 1e-5,
                    "stationarity violated: g={gj}, w={}",
                    w[j]
                );
            } else {
                assert!(gj.abs() <= reg + 1e-5);
            }
        }
    }

    #[test]
    fn lp_metric_fixture() {
        let scores = vec![0.9, 0.8, 0.7, 0.6];
        let labels = vec![true, false, true, false];
        let m = evaluate_lp(&scores, &labels).unwrap();
        assert!((m.roc_auc - 0.75).abs() < 1e-12);
        assert!((m.ap - 5.0 / 6.0).abs() < 1e-12);

        // Perfect separation.
        let m = evaluate_lp(&[1.0, 0.9, 0.1, 0.0], &[true, true, false, false]).unwrap();
        assert_eq!(m.roc_auc, 1.0);
        assert_eq!(m.ap, 1.0);

        // All-tied scores: AUC 0.5 by the tie convention.
        let m = evaluate_lp(&[0.5; 4], &[true, false, true, false]).unwrap();
        assert_eq!(m.roc_auc, 0.5);

        assert!(evaluate_lp(&[1.0, 0.5], &[true, true]).is_err());
    }

    #[test]
    fn auc_is_monotone_invariant_and_flippable() {
        let scores = vec![0.1, 0.4, 0.35, 0.8, 0.65];
        let labels = vec![false, false, true, true, false];
        let m1 = evaluate_lp(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|&s| (10.0 * s).exp()).collect();
        let m2 = evaluate_lp(&squashed, &labels).unwrap();
        assert!((m1.roc_auc - m2.roc_auc).abs() < 1e-12);
        let neg: Vec<f64> = scores.iter().map(|&s| -s).collect();
        let m3 = evaluate_lp(&neg, &labels).unwrap();
        assert!((m3.roc_auc - (1.0 - m1.roc_auc)).abs() < 1e-12);
    }
}
