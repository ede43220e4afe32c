//! The REINFORCE training loop: support-weighted query sampling, rollouts
//! scored by the cached evaluator, a moving-average baseline, entropy
//! regularization with per-block decay, Adam updates, and the periodic
//! multi-relation schedule (round-robin blocks of `i_base` iterations).

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::EmbeddingTable;
use crate::env::{SchemaEnv, Trajectory, TrajStep};
use crate::error::{Error, Result};
use crate::eval::{reward_parts, Evaluator};
use crate::hin::{narrow_query_set, type_pairs_for_relation, InstanceGraph, Query, RelId};
use crate::policy::{
    policy_gradients, Adam, Checkpoint, PolicyParams, PolicyStepper, RolloutBatch,
};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Iterations per relation block.
    pub i_base: usize,
    /// Rounds per relation in the multi-relation schedule.
    pub i_r: usize,
    /// Queries sampled per iteration.
    pub k: usize,
    /// Rollouts per query.
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Adam learning rate.
    pub alpha: f64,
    /// Initial entropy weight; multiplied by `beta_decay` per block.
    pub beta0: f64,
    pub beta_decay: f64,
    /// Optional query-set narrowing threshold (e.g. 0.8).
    pub narrow_threshold: Option<f64>,
    pub max_hops: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            i_base: 500,
            i_r: 5,
            k: 20,
            n: 40,
            lambda1: 1.0,
            lambda2: 1.0,
            alpha: 0.0005,
            beta0: 0.05,
            beta_decay: 0.9,
            narrow_threshold: None,
            max_hops: crate::env::DEFAULT_MAX_HOPS,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("i_base", self.i_base),
            ("i_r", self.i_r),
            ("k", self.k),
            ("n", self.n),
            ("max_hops", self.max_hops),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Config("reward weights must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One row of the training stats stream.
#[derive(Debug, Clone)]
pub struct IterStats {
    pub iter: usize,
    pub relation: RelId,
    pub arrival_rate: f64,
    pub mean_coverage: f64,
    pub mean_confidence: f64,
    pub mean_reward: f64,
    pub baseline: f64,
    pub entropy: f64,
}

/// Render stats as the `iter,relation,arrival,coverage,confidence,reward,
/// baseline,entropy` CSV stream.
pub fn stats_to_csv(stats: &[IterStats], g: &InstanceGraph) -> String {
    let mut out = String::from("iter,relation,arrival,coverage,confidence,reward,baseline,entropy\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.iter,
            g.relation_name(s.relation),
            s.arrival_rate,
            s.mean_coverage,
            s.mean_confidence,
            s.mean_reward,
            s.baseline,
            s.entropy
        ));
    }
    out
}

/// Draw `k` queries for `r_q`, sampling type pairs with replacement,
/// weighted by their entity-pair support (optionally narrowed first).
pub fn sample_queries(
    g: &InstanceGraph,
    r_q: RelId,
    k: usize,
    narrow_threshold: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Query>> {
    let mut pairs = type_pairs_for_relation(g, r_q);
    if let Some(th) = narrow_threshold {
        pairs = narrow_query_set(&pairs, th)?;
    }
    if pairs.is_empty() {
        return Err(Error::Data(format!(
            "relation '{}' has no supporting type pairs",
            g.relation_name(r_q)
        )));
    }
    let total: usize = pairs.iter().map(|p| p.count).sum();
    let dist = rand::distributions::Uniform::new(0, total);
    let mut queries = Vec::with_capacity(k);
    for _ in 0..k {
        let mut ticket = dist.sample(rng);
        let mut chosen = &pairs[0];
        for p in &pairs {
            if ticket < p.count {
                chosen = p;
                break;
            }
            ticket -= p.count;
        }
        queries.push(Query {
            src_type: chosen.src,
            relation: r_q,
            tgt_type: chosen.tgt,
        });
    }
    Ok(queries)
}

/// Sample one trajectory from the current policy.
pub fn sample_trajectory(
    params: &PolicyParams,
    emb: &EmbeddingTable,
    env: &SchemaEnv,
    q: Query,
    rng: &mut ChaCha8Rng,
) -> Result<(Trajectory, Vec<f64>)> {
    let stepper = PolicyStepper::new(params, emb, &q);
    let mut pstate = stepper.begin();
    let mut state = env.reset(q);
    let mut steps = Vec::with_capacity(env.max_hops());
    let mut entropies = Vec::with_capacity(env.max_hops());
    for _ in 0..env.max_hops() {
        let candidates = env.candidate_actions(&state);
        let (mut next, probs, logps) = stepper.step(&pstate, state.current_type, &candidates);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = probs.len() - 1;
        for (c, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = c;
                break;
            }
        }
        entropies.push(-probs.iter().zip(&logps).map(|(p, lp)| p * lp).sum::<f64>());
        let action = candidates[chosen];
        steps.push(TrajStep {
            state,
            action,
            log_prob: logps[chosen],
        });
        stepper.advance(&mut next, &action);
        pstate = next;
        state = env.step(&state, &action)?;
    }
    Ok((Trajectory::finish(q, steps), entropies))
}

/// Reward of a finished trajectory: evaluate its meta-path (if any) through
/// the cache and combine with the arrival bit.
pub fn trajectory_reward(
    evaluator: &Evaluator,
    tr: &Trajectory,
    lambda1: f64,
    lambda2: f64,
) -> (f64, f64, f64) {
    match tr.to_metapath() {
        Some(m) => {
            let rec = evaluator.evaluate(&m, tr.query.relation);
            (
                reward_parts(rec.coverage, rec.confidence, tr.arrived, lambda1, lambda2),
                rec.coverage,
                rec.confidence,
            )
        }
        None => (reward_parts(0.0, 0.0, tr.arrived, lambda1, lambda2), 0.0, 0.0),
    }
}

/// Run `n` rollouts for a query, scoring each trajectory with the cached
/// evaluator.
pub fn rollout(
    params: &PolicyParams,
    emb: &EmbeddingTable,
    env: &SchemaEnv,
    evaluator: &Evaluator,
    q: Query,
    n: usize,
    lambda1: f64,
    lambda2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutBatch> {
    let mut trajectories = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut entropies = Vec::with_capacity(n);
    for _ in 0..n {
        let (tr, ent) = sample_trajectory(params, emb, env, q, rng)?;
        let (r, _, _) = trajectory_reward(evaluator, &tr, lambda1, lambda2);
        trajectories.push(tr);
        rewards.push(r);
        entropies.push(ent);
    }
    Ok(RolloutBatch {
        trajectories,
        rewards,
        entropies,
    })
}

/// Training driver owning the mutable pieces (parameters, optimizer, RNG,
/// schedule position). The graph, schema, embeddings and evaluator are
/// shared immutable references.
pub struct Trainer<'a> {
    pub env: SchemaEnv<'a>,
    pub evaluator: &'a Evaluator<'a>,
    pub emb: &'a EmbeddingTable,
    pub cfg: TrainConfig,
    pub params: PolicyParams,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
    pub blocks_done: u32,
    global_iter: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(
        env: SchemaEnv<'a>,
        evaluator: &'a Evaluator<'a>,
        emb: &'a EmbeddingTable,
        cfg: TrainConfig,
        params: PolicyParams,
    ) -> Result<Self> {
        cfg.validate()?;
        let adam = Adam::new(&params, cfg.alpha);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Trainer {
            env,
            evaluator,
            emb,
            cfg,
            params,
            adam,
            rng,
            blocks_done: 0,
            global_iter: 0,
        })
    }

    pub fn from_checkpoint(
        env: SchemaEnv<'a>,
        evaluator: &'a Evaluator<'a>,
        emb: &'a EmbeddingTable,
        cfg: TrainConfig,
        ck: Checkpoint,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::from_seed(ck.rng_seed);
        rng.set_word_pos(ck.rng_word_pos);
        let blocks_done = ck.blocks_done;
        // A resumed run replays the same per-iteration schedule from where
        // the checkpoint left off.
        let global_iter = blocks_done as usize * cfg.i_base;
        Ok(Trainer {
            env,
            evaluator,
            emb,
            cfg,
            params: ck.params,
            adam: ck.adam,
            rng,
            blocks_done,
            global_iter,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            rng_seed: self.rng.get_seed(),
            rng_word_pos: self.rng.get_word_pos(),
            blocks_done: self.blocks_done,
        }
    }

    /// Entropy weight for a block: beta0 * decay^block_index.
    pub fn beta_for_block(&self, block_index: u32) -> f64 {
        self.cfg.beta0 * self.cfg.beta_decay.powi(block_index as i32)
    }

    /// One block of `i_base` iterations on a single relation. Each
    /// iteration samples K queries and N rollouts per query, refreshes the
    /// moving-average baseline from the batch mean reward, and applies one
    /// Adam step on the advantage-weighted gradient with the block's
    /// entropy bonus.
    pub fn train_relation_block(&mut self, r_q: RelId, block_index: u32) -> Result<Vec<IterStats>> {
        let beta = self.beta_for_block(block_index);
        let g = self.evaluator.graph();
        let mut baseline: Option<f64> = None;
        let mut stats = Vec::with_capacity(self.cfg.i_base);
        for _ in 0..self.cfg.i_base {
            let queries =
                sample_queries(g, r_q, self.cfg.k, self.cfg.narrow_threshold, &mut self.rng)?;
            let mut batch = RolloutBatch {
                trajectories: Vec::with_capacity(self.cfg.k * self.cfg.n),
                rewards: Vec::with_capacity(self.cfg.k * self.cfg.n),
                entropies: Vec::with_capacity(self.cfg.k * self.cfg.n),
            };
            for q in queries {
                let part = rollout(
                    &self.params,
                    self.emb,
                    &self.env,
                    self.evaluator,
                    q,
                    self.cfg.n,
                    self.cfg.lambda1,
                    self.cfg.lambda2,
                    &mut self.rng,
                )?;
                batch.trajectories.extend(part.trajectories);
                batch.rewards.extend(part.rewards);
                batch.entropies.extend(part.entropies);
            }
            let mean_r = batch.mean_reward();
            let b = match baseline {
                None => mean_r,
                Some(b) => 0.9 * b + 0.1 * mean_r,
            };
            baseline = Some(b);

            let (grads, _loss) =
                policy_gradients(&self.params, self.emb, &self.env, &batch, b, beta)?;
            self.adam.step(&mut self.params, &grads);

            let m = batch.len() as f64;
            let arrival_rate =
                batch.trajectories.iter().filter(|t| t.arrived).count() as f64 / m;
            let (mut cov_sum, mut conf_sum) = (0.0, 0.0);
            for tr in &batch.trajectories {
                let (_, cov, conf) =
                    trajectory_reward(self.evaluator, tr, self.cfg.lambda1, self.cfg.lambda2);
                cov_sum += cov;
                conf_sum += conf;
            }
            stats.push(IterStats {
                iter: self.global_iter,
                relation: r_q,
                arrival_rate,
                mean_coverage: cov_sum / m,
                mean_confidence: conf_sum / m,
                mean_reward: mean_r,
                baseline: b,
                entropy: batch.mean_entropy(),
            });
            self.global_iter += 1;
        }
        Ok(stats)
    }

    /// Round-robin multi-relation training: `i_r` rounds over the relation
    /// list, one block each; `|relations| * i_r * i_base` iterations total.
    /// Picks up after `blocks_done` when resumed from a checkpoint.
    pub fn train_multi_relation(&mut self, relations: &[RelId]) -> Result<Vec<IterStats>> {
        if relations.is_empty() {
            return Err(Error::Config("no relations to train".into()));
        }
        let schedule: Vec<RelId> = (0..self.cfg.i_r)
            .flat_map(|_| relations.iter().copied())
            .collect();
        let mut stats = Vec::new();
        for bi in (self.blocks_done as usize)..schedule.len() {
            let block = self.train_relation_block(schedule[bi], bi as u32)?;
            stats.extend(block);
            self.blocks_done = (bi + 1) as u32;
        }
        Ok(stats)
    }
}
