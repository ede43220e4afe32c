//! Exact analytic gradients of the REINFORCE objective with baseline and
//! entropy bonus, by explicit reverse-mode accumulation through the softmax,
//! the decoder MLP and the unrolled two-layer LSTM. No autodiff framework;
//! the candidate feature matrix and all embeddings are frozen.
//!
//! The minimized loss over a batch of M trajectories is
//!
//! ```text
//! L = -(1/M) * sum_j (R_j - baseline) * sum_i ln P[a_i^j]
//!     - beta * (1/M) * sum_j sum_i H(P_i^j)
//! ```

use super::lstm::LstmStepCache;
use super::{build_encoding, mlp_forward, PolicyParams};
use crate::embed::EmbeddingTable;
use crate::env::{SchemaEnv, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{axpy, softmax_logsoftmax, dot};

/// Sampled trajectories for one update, with their terminal rewards and the
/// per-step policy entropies observed during sampling.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub trajectories: Vec<Trajectory>,
    pub rewards: Vec<f64>,
    pub entropies: Vec<Vec<f64>>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn mean_reward(&self) -> f64 {
        if self.rewards.is_empty() {
            0.0
        } else {
            self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
        }
    }

    /// Mean over trajectories of the per-step entropy sums.
    pub fn mean_entropy(&self) -> f64 {
        if self.entropies.is_empty() {
            0.0
        } else {
            self.entropies
                .iter()
                .map(|e| e.iter().sum::<f64>())
                .sum::<f64>()
                / self.entropies.len() as f64
        }
    }
}

struct StepTape<'a> {
    l0: LstmStepCache,
    l1: LstmStepCache,
    enc: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    cand: Vec<(&'a [f64], &'a [f64])>,
    probs: Vec<f64>,
    logps: Vec<f64>,
    chosen: usize,
}

fn forward_tape<'a>(
    params: &PolicyParams,
    emb: &'a EmbeddingTable,
    env: &SchemaEnv,
    tr: &Trajectory,
) -> Result<Vec<StepTape<'a>>> {
    let rq_vec = emb.relation_vec(tr.query.relation);
    let tgt_vec = emb.type_vec(tr.query.tgt_type);
    let d_h = params.d_h;
    let mut h = [vec![0.0; d_h], vec![0.0; d_h]];
    let mut c = [vec![0.0; d_h], vec![0.0; d_h]];
    let mut prev_rel: &[f64] = emb.start_vec();
    let mut tapes = Vec::with_capacity(tr.steps.len());

    for (i, step) in tr.steps.iter().enumerate() {
        let t_i = emb.type_vec(step.state.current_type);
        let mut x = Vec::with_capacity(2 * params.d_e);
        x.extend_from_slice(prev_rel);
        x.extend_from_slice(t_i);
        let l0 = params.lstm[0].forward(&x, &h[0], &c[0]);
        let l1 = params.lstm[1].forward(&l0.h, &h[1], &c[1]);
        let enc = build_encoding(&l1.h, t_i, rq_vec, tgt_vec);
        let (z1, a1, u) = mlp_forward(params, &enc);

        let candidates = env.candidate_actions(&step.state);
        let chosen = candidates
            .iter()
            .position(|a| *a == step.action)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "trajectory action at step {i} is not a legal candidate"
                ))
            })?;
        let cand: Vec<(&[f64], &[f64])> = candidates
            .iter()
            .map(|a| {
                let r = match a.relation {
                    Some(rel) => emb.relation_vec(rel),
                    None => emb.stay_vec(),
                };
                (r, emb.type_vec(a.dst_type))
            })
            .collect();
        let scores: Vec<f64> = cand
            .iter()
            .map(|(r, t)| dot(r, &u[..params.d_e]) + dot(t, &u[params.d_e..]))
            .collect();
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite action score at step {i}"
            )));
        }
        let (probs, logps) = softmax_logsoftmax(&scores);

        h = [l0.h.clone(), l1.h.clone()];
        c = [l0.c.clone(), l1.c.clone()];
        prev_rel = match step.action.relation {
            Some(rel) => emb.relation_vec(rel),
            None => emb.stay_vec(),
        };
        tapes.push(StepTape {
            l0,
            l1,
            enc,
            z1,
            a1,
            cand,
            probs,
            logps,
            chosen,
        });
    }
    Ok(tapes)
}

fn step_entropy(tape: &StepTape) -> f64 {
    -tape
        .probs
        .iter()
        .zip(&tape.logps)
        .map(|(p, lp)| p * lp)
        .sum::<f64>()
}

/// Recompute a trajectory's summed action log-probability and summed
/// per-step policy entropy.
pub fn trajectory_log_prob_entropy(
    params: &PolicyParams,
    emb: &EmbeddingTable,
    env: &SchemaEnv,
    tr: &Trajectory,
) -> Result<(f64, f64)> {
    let tapes = forward_tape(params, emb, env, tr)?;
    let logp = tapes.iter().map(|t| t.logps[t.chosen]).sum();
    let entropy = tapes.iter().map(step_entropy).sum();
    Ok((logp, entropy))
}

/// The batch loss whose gradient `policy_gradients` returns.
pub fn batch_loss(
    params: &PolicyParams,
    emb: &EmbeddingTable,
    env: &SchemaEnv,
    batch: &RolloutBatch,
    baseline: f64,
    beta: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Data("empty rollout batch".into()));
    }
    let m = batch.len() as f64;
    let mut loss = 0.0;
    for (tr, &reward) in batch.trajectories.iter().zip(&batch.rewards) {
        let (logp, entropy) = trajectory_log_prob_entropy(params, emb, env, tr)?;
        loss -= (reward - baseline) * logp / m;
        loss -= beta * entropy / m;
    }
    Ok(loss)
}

/// Analytic gradient of [`batch_loss`] with respect to every policy
/// parameter (embeddings receive none). Returns the gradients and the loss.
pub fn policy_gradients(
    params: &PolicyParams,
    emb: &EmbeddingTable,
    env: &SchemaEnv,
    batch: &RolloutBatch,
    baseline: f64,
    beta: f64,
) -> Result<(PolicyParams, f64)> {
    if batch.is_empty() {
        return Err(Error::Data("empty rollout batch".into()));
    }
    let m = batch.len() as f64;
    let d_e = params.d_e;
    let d_h = params.d_h;
    let mut grads = params.zeros_like();
    let mut loss = 0.0;

    for (tr, &reward) in batch.trajectories.iter().zip(&batch.rewards) {
        let tapes = forward_tape(params, emb, env, tr)?;
        let adv = reward - baseline;
        let coef_pg = -adv / m;

        // Decoder backward per step, collecting dS_i for the recurrent pass.
        let mut ds: Vec<Vec<f64>> = Vec::with_capacity(tapes.len());
        for tape in &tapes {
            let h_i = step_entropy(tape);
            loss -= adv * tape.logps[tape.chosen] / m;
            loss -= beta * h_i / m;

            let mut dscore = vec![0.0; tape.probs.len()];
            for (c, d) in dscore.iter_mut().enumerate() {
                let indicator = if c == tape.chosen { 1.0 } else { 0.0 };
                *d = coef_pg * (indicator - tape.probs[c])
                    + (beta / m) * tape.probs[c] * (tape.logps[c] + h_i);
            }

            let mut du = vec![0.0; 2 * d_e];
            for (c, &dsc) in dscore.iter().enumerate() {
                if dsc == 0.0 {
                    continue;
                }
                let (r, t) = tape.cand[c];
                axpy(dsc, r, &mut du[..d_e]);
                axpy(dsc, t, &mut du[d_e..]);
            }

            grads.w2.add_outer(&du, &tape.a1);
            for (gb, &d) in grads.b2.iter_mut().zip(&du) {
                *gb += d;
            }
            let da1 = params.w2.matvec_t(&du);
            let dz1: Vec<f64> = da1
                .iter()
                .zip(&tape.z1)
                .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
                .collect();
            grads.w1.add_outer(&dz1, &tape.enc);
            for (gb, &d) in grads.b1.iter_mut().zip(&dz1) {
                *gb += d;
            }
            let denc = params.w1.matvec_t(&dz1);
            ds.push(denc[..d_h].to_vec());
        }

        // Backpropagation through time over both layers.
        let mut dh1_next = vec![0.0; d_h];
        let mut dc1_next = vec![0.0; d_h];
        let mut dh0_next = vec![0.0; d_h];
        let mut dc0_next = vec![0.0; d_h];
        let [g0, g1] = &mut grads.lstm;
        for (tape, ds_i) in tapes.iter().zip(&ds).rev() {
            let mut dh1 = ds_i.clone();
            axpy(1.0, &dh1_next, &mut dh1);
            let (dx1, dh1_prev, dc1_prev) =
                params.lstm[1].backward(&tape.l1, &dh1, &dc1_next, g1);
            let mut dh0 = dx1;
            axpy(1.0, &dh0_next, &mut dh0);
            let (_dx0, dh0_prev, dc0_prev) =
                params.lstm[0].backward(&tape.l0, &dh0, &dc0_next, g0);
            dh1_next = dh1_prev;
            dc1_next = dc1_prev;
            dh0_next = dh0_prev;
            dc0_next = dc0_prev;
        }
    }

    if !grads.all_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok((grads, loss))
}
