//! The MDP over the schema graph: the agent starts at a query's source type
//! and picks outgoing schema edges (or a stay action) for a fixed number of
//! decision steps; stripping the stays from a trajectory yields a meta-path.

use crate::error::{Error, Result};
use crate::eval::MetaPath;
use crate::hin::{Query, RelId, SchemaGraph, TypeId};

/// Real decision steps per episode; a meta-path of l type nodes takes l-1
/// hops, and the default maximum length is 5 nodes.
pub const DEFAULT_MAX_HOPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct State {
    pub current_type: TypeId,
    pub query: Query,
    pub step: usize,
}

/// An outgoing schema edge, or stay (`relation == None`, dst = current type).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub relation: Option<RelId>,
    pub dst_type: TypeId,
}

impl Action {
    pub fn stay(at: TypeId) -> Self {
        Action {
            relation: None,
            dst_type: at,
        }
    }

    pub fn is_stay(&self) -> bool {
        self.relation.is_none()
    }

    /// Sort key used for deterministic candidate ordering and beam
    /// tie-breaking; stay sorts after every real relation.
    pub fn order_key(&self) -> (u32, u32) {
        match self.relation {
            Some(r) => (r.0, self.dst_type.0),
            None => (u32::MAX, self.dst_type.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajStep {
    pub state: State,
    pub action: Action,
    pub log_prob: f64,
}

/// A completed episode: exactly `max_hops` steps, stay-padded.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub query: Query,
    pub steps: Vec<TrajStep>,
    pub arrived: bool,
}

impl Trajectory {
    pub fn finish(query: Query, steps: Vec<TrajStep>) -> Self {
        let mut tr = Trajectory {
            query,
            steps,
            arrived: false,
        };
        tr.arrived = crate::eval::arrival_indicator(&tr, &query);
        tr
    }

    /// Type node after the last step.
    pub fn final_type(&self) -> TypeId {
        self.steps
            .last()
            .map(|s| s.action.dst_type)
            .unwrap_or(self.query.src_type)
    }

    pub fn real_action_count(&self) -> usize {
        self.steps.iter().filter(|s| !s.action.is_stay()).count()
    }

    pub fn log_prob(&self) -> f64 {
        self.steps.iter().map(|s| s.log_prob).sum()
    }

    /// Strip stay actions and return the meta-path of visited types and
    /// taken relations; `None` when no real action was taken.
    pub fn to_metapath(&self) -> Option<MetaPath> {
        let mut node_types = vec![self.query.src_type];
        let mut relations = Vec::new();
        for step in &self.steps {
            if let Some(r) = step.action.relation {
                relations.push(r);
                node_types.push(step.action.dst_type);
            }
        }
        if relations.is_empty() {
            None
        } else {
            Some(MetaPath::new(node_types, relations).expect("stripped trajectory is well-formed"))
        }
    }
}

/// Cheap value-type environment over a shared immutable schema.
#[derive(Clone, Copy)]
pub struct SchemaEnv<'s> {
    schema: &'s SchemaGraph,
    max_hops: usize,
}

impl<'s> SchemaEnv<'s> {
    pub fn new(schema: &'s SchemaGraph, max_hops: usize) -> Self {
        SchemaEnv { schema, max_hops }
    }

    pub fn max_hops(&self) -> usize {
        self.max_hops
    }

    pub fn schema(&self) -> &'s SchemaGraph {
        self.schema
    }

    pub fn reset(&self, q: Query) -> State {
        State {
            current_type: q.src_type,
            query: q,
            step: 0,
        }
    }

    /// All outgoing schema edges of the current type plus stay, in
    /// (relation id, dst id) order with stay last. At step 0 the single
    /// action that would complete the degenerate one-hop meta-path
    /// (q.relation, q.tgt_type) is masked out.
    pub fn candidate_actions(&self, s: &State) -> Vec<Action> {
        let mut actions: Vec<Action> = self
            .schema
            .out_edges(s.current_type)
            .iter()
            .map(|&(r, d)| Action {
                relation: Some(r),
                dst_type: d,
            })
            .filter(|a| {
                !(s.step == 0
                    && a.relation == Some(s.query.relation)
                    && a.dst_type == s.query.tgt_type)
            })
            .collect();
        actions.push(Action::stay(s.current_type));
        actions
    }

    pub fn step(&self, s: &State, a: &Action) -> Result<State> {
        if !self.candidate_actions(s).contains(a) {
            return Err(Error::Validation(format!(
                "illegal action ({:?} -> {}) from type {} at step {}",
                a.relation, a.dst_type, s.current_type, s.step
            )));
        }
        Ok(State {
            current_type: a.dst_type,
            query: s.query,
            step: s.step + 1,
        })
    }

    pub fn is_terminal(&self, s: &State) -> bool {
        s.step >= self.max_hops
    }
}
