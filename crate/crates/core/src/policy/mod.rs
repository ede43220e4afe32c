//! The encoder-decoder policy network. A two-layer LSTM encodes the walk
//! history from [prev relation, current type] inputs; the state encoding is
//! concatenated with the current type, query relation and (target - query
//! relation) difference vectors; a two-layer ReLU MLP maps the encoding to a
//! vector that is dotted with each candidate edge's [relation, type]
//! representation; a softmax over those scores is the action distribution.
//!
//! Embeddings are frozen throughout: gradients flow through the LSTM and
//! MLP parameters only.

mod adam;
mod checkpoint;
mod grad;
mod lstm;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use grad::{batch_loss, policy_gradients, trajectory_log_prob_entropy, RolloutBatch};
pub use lstm::{LstmLayer, LstmStepCache};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::EmbeddingTable;
use crate::env::Action;
use crate::hin::Query;
use crate::linalg::{dot, softmax_logsoftmax, Mat};

/// Trainable parameters: the 2-layer LSTM (input width 2*d_e, hidden width
/// d_h in both layers) and the decoder MLP (W1: d_h x (d_h + 3*d_e),
/// W2: 2*d_e x d_h).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub d_e: usize,
    pub d_h: usize,
    pub lstm: [LstmLayer; 2],
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(d_e: usize, d_h: usize) -> Self {
        PolicyParams {
            d_e,
            d_h,
            lstm: [
                LstmLayer::zeros(2 * d_e, d_h),
                LstmLayer::zeros(d_h, d_h),
            ],
            w1: Mat::zeros(d_h, d_h + 3 * d_e),
            b1: vec![0.0; d_h],
            w2: Mat::zeros(2 * d_e, d_h),
            b2: vec![0.0; 2 * d_e],
        }
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases;
    /// deterministic given the seed.
    pub fn init(d_e: usize, d_h: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(d_e, d_h);
        let [l0, l1] = &mut p.lstm;
        for m in [
            &mut l0.w_x,
            &mut l0.w_h,
            &mut l1.w_x,
            &mut l1.w_h,
            &mut p.w1,
            &mut p.w2,
        ] {
            let bound = 1.0 / (m.cols as f64).sqrt();
            for v in m.data.iter_mut() {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.d_e, self.d_h)
    }

    /// All ten parameter tensors in a fixed order (used by the optimizer,
    /// checkpointing, and the finite-difference harness).
    pub fn tensors(&self) -> [&Vec<f64>; 10] {
        let [l0, l1] = &self.lstm;
        [
            &l0.w_x.data,
            &l0.w_h.data,
            &l0.b,
            &l1.w_x.data,
            &l1.w_h.data,
            &l1.b,
            &self.w1.data,
            &self.b1,
            &self.w2.data,
            &self.b2,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 10] {
        let [l0, l1] = &mut self.lstm;
        [
            &mut l0.w_x.data,
            &mut l0.w_h.data,
            &mut l0.b,
            &mut l1.w_x.data,
            &mut l1.w_h.data,
            &mut l1.b,
            &mut self.w1.data,
            &mut self.b1,
            &mut self.w2.data,
            &mut self.b2,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Recurrent state of the encoder (per-layer hidden and cell vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: [Vec<f64>; 2],
    pub c: [Vec<f64>; 2],
}

impl LstmState {
    pub fn zeros(d_h: usize) -> Self {
        LstmState {
            h: [vec![0.0; d_h], vec![0.0; d_h]],
            c: [vec![0.0; d_h], vec![0.0; d_h]],
        }
    }
}

/// One encoder step: feed [prev_rel || cur_type] through both LSTM layers.
/// Returns the updated recurrent state and the top-layer output S_i.
pub fn encode_step(
    params: &PolicyParams,
    state: &LstmState,
    prev_rel: &[f64],
    cur_type: &[f64],
) -> (LstmState, Vec<f64>) {
    let mut x = Vec::with_capacity(prev_rel.len() + cur_type.len());
    x.extend_from_slice(prev_rel);
    x.extend_from_slice(cur_type);
    let c0 = params.lstm[0].forward(&x, &state.h[0], &state.c[0]);
    let c1 = params.lstm[1].forward(&c0.h, &state.h[1], &state.c[1]);
    let s_i = c1.h.clone();
    (
        LstmState {
            h: [c0.h, c1.h],
            c: [c0.c, c1.c],
        },
        s_i,
    )
}

/// enc_i = [S_i || t_i || r_q || (t_tgt - r_q)], width d_h + 3*d_e.
pub fn build_encoding(s_i: &[f64], t_i: &[f64], r_q: &[f64], t_tgt: &[f64]) -> Vec<f64> {
    let mut enc = Vec::with_capacity(s_i.len() + 3 * t_i.len());
    enc.extend_from_slice(s_i);
    enc.extend_from_slice(t_i);
    enc.extend_from_slice(r_q);
    enc.extend(t_tgt.iter().zip(r_q).map(|(a, b)| a - b));
    enc
}

pub(crate) fn mlp_forward(params: &PolicyParams, enc: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut z1 = params.w1.matvec(enc);
    for (z, b) in z1.iter_mut().zip(&params.b1) {
        *z += b;
    }
    let a1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
    let mut u = params.w2.matvec(&a1);
    for (uv, b) in u.iter_mut().zip(&params.b2) {
        *uv += b;
    }
    (z1, a1, u)
}

/// Softmax action probabilities over candidate (relation, type) vector
/// pairs: score_c = [r_c || t_c] . u with u the MLP output.
pub fn action_distribution(
    params: &PolicyParams,
    enc: &[f64],
    candidates: &[(&[f64], &[f64])],
) -> Vec<f64> {
    let (_, _, u) = mlp_forward(params, enc);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|(r, t)| dot(r, &u[..params.d_e]) + dot(t, &u[params.d_e..]))
        .collect();
    softmax_logsoftmax(&scores).0
}

/// Walk-time cursor: the recurrent state plus the previous relation vector
/// to feed at the next step. Cheap to clone for beam search.
#[derive(Debug, Clone)]
pub struct StepperState {
    pub lstm: LstmState,
    pub prev_rel: Vec<f64>,
}

/// Per-query forward driver shared by rollouts, beam search and the
/// gradient recomputation.
pub struct PolicyStepper<'p> {
    pub params: &'p PolicyParams,
    pub emb: &'p EmbeddingTable,
    rq_vec: &'p [f64],
    tgt_vec: &'p [f64],
}

impl<'p> PolicyStepper<'p> {
    pub fn new(params: &'p PolicyParams, emb: &'p EmbeddingTable, q: &Query) -> Self {
        PolicyStepper {
            params,
            emb,
            rq_vec: emb.relation_vec(q.relation),
            tgt_vec: emb.type_vec(q.tgt_type),
        }
    }

    pub fn begin(&self) -> StepperState {
        StepperState {
            lstm: LstmState::zeros(self.params.d_h),
            prev_rel: self.emb.start_vec().to_vec(),
        }
    }

    pub fn candidate_vecs(&self, candidates: &[Action]) -> Vec<(&'p [f64], &'p [f64])> {
        candidates
            .iter()
            .map(|a| {
                let r = match a.relation {
                    Some(rel) => self.emb.relation_vec(rel),
                    None => self.emb.stay_vec(),
                };
                (r, self.emb.type_vec(a.dst_type))
            })
            .collect()
    }

    /// Advance the encoder over the current type and score the candidates.
    /// Returns the post-encoding state (prev_rel not yet updated), the
    /// probabilities and the log-probabilities.
    pub fn step(
        &self,
        st: &StepperState,
        cur_type: crate::hin::TypeId,
        candidates: &[Action],
    ) -> (StepperState, Vec<f64>, Vec<f64>) {
        let t_i = self.emb.type_vec(cur_type);
        let (lstm, s_i) = encode_step(self.params, &st.lstm, &st.prev_rel, t_i);
        let enc = build_encoding(&s_i, t_i, self.rq_vec, self.tgt_vec);
        let (_, _, u) = mlp_forward(self.params, &enc);
        let cand = self.candidate_vecs(candidates);
        let scores: Vec<f64> = cand
            .iter()
            .map(|(r, t)| dot(r, &u[..self.params.d_e]) + dot(t, &u[self.params.d_e..]))
            .collect();
        let (probs, logps) = softmax_logsoftmax(&scores);
        (
            StepperState {
                lstm,
                prev_rel: st.prev_rel.clone(),
            },
            probs,
            logps,
        )
    }

    /// Record the chosen action's relation vector as the next LSTM input.
    pub fn advance(&self, st: &mut StepperState, chosen: &Action) {
        st.prev_rel = match chosen.relation {
            Some(rel) => self.emb.relation_vec(rel).to_vec(),
            None => self.emb.stay_vec().to_vec(),
        };
    }
}
