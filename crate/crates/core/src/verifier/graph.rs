//! Breadth-first construction of the reachable state graph.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::EnvAbstraction;
use super::state::{successors, ModelState, TickParams};
use super::VerifyError;
use crate::rule_dsl::RuleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 2_000_000,
            max_depth: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    States,
    Depth,
}

/// Reachable states in BFS discovery order; ids are positions in `states`.
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub(crate) rules: RuleSet,
    pub(crate) env: EnvAbstraction,
    pub(crate) params: TickParams,
    pub(crate) states: Vec<ModelState>,
    pub(crate) index: HashMap<ModelState, u32>,
    /// Successor ids, in environment-cell order. Empty for unexpanded states.
    pub(crate) succ: Vec<Vec<u32>>,
    pub(crate) expanded: Vec<bool>,
    /// BFS tree parent; `None` for initial states.
    pub(crate) parent: Vec<Option<u32>>,
    pub(crate) depth: Vec<u32>,
    pub(crate) initial: Vec<u32>,
    pub(crate) truncated: Option<LimitKind>,
}

impl StateGraph {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn states(&self) -> &[ModelState] {
        &self.states
    }

    pub fn state(&self, id: u32) -> &ModelState {
        &self.states[id as usize]
    }

    pub fn id_of(&self, s: &ModelState) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn successors_of(&self, id: u32) -> &[u32] {
        &self.succ[id as usize]
    }

    pub fn is_expanded(&self, id: u32) -> bool {
        self.expanded[id as usize]
    }

    pub fn initial_states(&self) -> &[u32] {
        &self.initial
    }

    pub fn depth_of(&self, id: u32) -> u32 {
        self.depth[id as usize]
    }

    pub fn is_complete(&self) -> bool {
        self.truncated.is_none()
    }

    pub fn truncated(&self) -> Option<LimitKind> {
        self.truncated
    }

    pub fn env(&self) -> &EnvAbstraction {
        &self.env
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn params(&self) -> &TickParams {
        &self.params
    }

    /// BFS-tree path from an initial state to `id`, inclusive.
    pub fn path_to(&self, id: u32) -> Vec<u32> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent[cur as usize] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    fn insert(&mut self, s: ModelState, parent: Option<u32>, depth: u32) -> (u32, bool) {
        if let Some(&id) = self.index.get(&s) {
            return (id, false);
        }
        let id = self.states.len() as u32;
        self.states.push(s);
        self.index.insert(s, id);
        self.succ.push(Vec::new());
        self.expanded.push(false);
        self.parent.push(parent);
        self.depth.push(depth);
        (id, true)
    }
}

/// Explores every state reachable from the environment's initial cells,
/// computing successors with the real engine and kernel.
///
/// Each BFS level is expanded in parallel and merged in frontier order, so
/// ids, counts and counterexamples do not depend on the worker count. On a
/// limit the partial graph is returned inside the error.
pub fn build_state_space(rs: &RuleSet, env: &EnvAbstraction, limits: Limits) -> Result<StateGraph, VerifyError> {
    let params = TickParams::new(rs, env);
    let mut g = StateGraph {
        rules: rs.clone(),
        env: env.clone(),
        params,
        states: Vec::new(),
        index: HashMap::new(),
        succ: Vec::new(),
        expanded: Vec::new(),
        parent: Vec::new(),
        depth: Vec::new(),
        initial: Vec::new(),
        truncated: None,
    };
    let mut frontier = Vec::new();
    for &cell in env.initial_cells() {
        if g.states.len() >= limits.max_states {
            g.truncated = Some(LimitKind::States);
            return Err(limit(g, LimitKind::States));
        }
        let (id, fresh) = g.insert(ModelState::initial(cell), None, 0);
        if fresh {
            g.initial.push(id);
            frontier.push(id);
        }
    }
    let mut level = 0usize;
    while !frontier.is_empty() {
        if level >= limits.max_depth {
            return Err(limit(g, LimitKind::Depth));
        }
        let expansions: Vec<Vec<ModelState>> = frontier
            .par_iter()
            .map(|&id| successors(rs, env, &params, &g.states[id as usize]))
            .collect();
        let mut next = Vec::new();
        for (&id, succs) in frontier.iter().zip(expansions) {
            let mut ids = Vec::with_capacity(succs.len());
            for s in succs {
                if !g.index.contains_key(&s) && g.states.len() >= limits.max_states {
                    return Err(limit(g, LimitKind::States));
                }
                let (sid, fresh) = g.insert(s, Some(id), level as u32 + 1);
                if fresh {
                    next.push(sid);
                }
                ids.push(sid);
            }
            g.succ[id as usize] = ids;
            g.expanded[id as usize] = true;
        }
        frontier = next;
        level += 1;
    }
    Ok(g)
}

fn limit(mut g: StateGraph, kind: LimitKind) -> VerifyError {
    g.truncated = Some(kind);
    VerifyError::LimitExceeded {
        kind,
        partial: Box::new(g),
    }
}
