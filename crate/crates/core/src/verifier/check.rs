//! Property checking over an explored state graph.

use serde::{Deserialize, Serialize};

use super::graph::StateGraph;
use super::property::{Property, StateFormula, Temporal};
use super::state::{execute_tick, ModelState, TickParams};
use super::VerifyError;
use crate::rbr_engine::{AgentStep, BeliefState, Percept};
use crate::safety_kernel::WatchdogState;

/// One position of a counterexample: the model state, the representative
/// percept of its environment cell, and the engine step taken on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: ModelState,
    pub percept: Percept,
    pub step: AgentStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub property: Property,
    pub steps: Vec<TraceStep>,
    /// Position at which the violated formula is evaluated (the φ-state for
    /// a bounded response).
    pub violation_at: usize,
    pub params: TickParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
    pub states_explored: usize,
    pub transitions: usize,
}

/// Checks a property.
///
/// `G(φ)` scans states in BFS order, so the first violation found is at
/// minimal depth; the counterexample is the BFS-tree path to it, extended by
/// φ's lookahead. Bounded response uses a backward table of "can stay
/// outside ψ for m more steps". On a truncated graph only violations are
/// conclusive.
pub fn check(graph: &StateGraph, prop: &Property) -> Result<Verdict, VerifyError> {
    let found = match &prop.formula {
        Temporal::Globally(phi) => check_globally(graph, phi),
        Temporal::BoundedResponse { trigger, response, k } => check_bounded_response(graph, trigger, response, *k)?,
    };
    let states_explored = graph.state_count();
    let transitions = graph.transition_count();
    match found {
        Some((path, violation_at)) => Ok(Verdict {
            holds: false,
            counterexample: Some(materialize(graph, prop, &path, violation_at)),
            states_explored,
            transitions,
        }),
        None if graph.is_complete() => Ok(Verdict {
            holds: true,
            counterexample: None,
            states_explored,
            transitions,
        }),
        None => Err(VerifyError::Inconclusive {
            property: prop.name.clone(),
            states_explored,
            transitions,
        }),
    }
}

fn percepts(graph: &StateGraph) -> Vec<Percept> {
    graph.states.iter().map(|s| graph.env.percept(s.env_cell)).collect()
}

/// Finds the first (state, continuation) window of length `n` starting at
/// `id` on which `pred` is false, depth-first in successor order.
fn find_window(
    graph: &StateGraph,
    id: u32,
    n: usize,
    path: &mut Vec<u32>,
    pred: &mut impl FnMut(&[u32]) -> bool,
) -> bool {
    path.push(id);
    if path.len() == n {
        if !pred(path) {
            return true;
        }
    } else if graph.is_expanded(id) {
        for &next in graph.successors_of(id) {
            if find_window(graph, next, n, path, pred) {
                return true;
            }
        }
    }
    path.pop();
    false
}

fn check_globally(graph: &StateGraph, phi: &StateFormula) -> Option<(Vec<u32>, usize)> {
    let percepts = percepts(graph);
    let look = phi.lookahead();
    for id in 0..graph.state_count() as u32 {
        let mut window = Vec::new();
        let mut eval = |ids: &[u32]| {
            let w: Vec<(&ModelState, &Percept)> = ids
                .iter()
                .map(|&i| (&graph.states[i as usize], &percepts[i as usize]))
                .collect();
            phi.eval(&w)
        };
        if find_window(graph, id, look + 1, &mut window, &mut eval) {
            let mut path = graph.path_to(id);
            let at = path.len() - 1;
            path.extend_from_slice(&window[1..]);
            return Some((path, at));
        }
    }
    None
}

fn check_bounded_response(
    graph: &StateGraph,
    trigger: &StateFormula,
    response: &StateFormula,
    k: usize,
) -> Result<Option<(Vec<u32>, usize)>, VerifyError> {
    if trigger.lookahead() > 0 || response.lookahead() > 0 {
        return Err(VerifyError::Unsupported("X inside a bounded response".into()));
    }
    let percepts = percepts(graph);
    let n = graph.state_count();
    let at = |f: &StateFormula, i: usize| f.eval(&[(&graph.states[i], &percepts[i])]);
    // avoid[m][s]: some path from s stays outside ψ for positions 0..=m
    let mut avoid: Vec<Vec<bool>> = Vec::with_capacity(k + 1);
    avoid.push((0..n).map(|i| !at(response, i)).collect());
    for m in 1..=k {
        let prev = &avoid[m - 1];
        let row = (0..n)
            .map(|i| prev[i] && graph.expanded[i] && graph.succ[i].iter().any(|&j| prev[j as usize]))
            .collect();
        avoid.push(row);
    }
    let Some(start) = (0..n).find(|&i| avoid[k][i] && at(trigger, i)) else {
        return Ok(None);
    };
    let mut path = graph.path_to(start as u32);
    let violation_at = path.len() - 1;
    let mut cur = start;
    for m in (0..k).rev() {
        let next = graph.succ[cur]
            .iter()
            .copied()
            .find(|&j| avoid[m][j as usize])
            .expect("table guarantees a continuing successor");
        path.push(next);
        cur = next as usize;
    }
    Ok(Some((path, violation_at)))
}

/// Re-executes the engine along the state path to record the exact steps.
fn materialize(graph: &StateGraph, prop: &Property, path: &[u32], violation_at: usize) -> Counterexample {
    let params = graph.params;
    let mut beliefs = BeliefState::default();
    let mut watchdog = WatchdogState::new(params.wdt_deadline);
    let mut guard = false;
    let mut steps = Vec::with_capacity(path.len());
    for &id in path {
        let state = graph.states[id as usize];
        let percept = graph.env.percept(state.env_cell);
        let outcome = execute_tick(&graph.rules, &params, &beliefs, &watchdog, guard, &percept);
        beliefs = outcome.step.beliefs_after;
        watchdog = outcome.watchdog;
        guard = outcome.guard_latched;
        steps.push(TraceStep {
            state,
            percept,
            step: outcome.step,
        });
    }
    Counterexample {
        property: prop.clone(),
        steps,
        violation_at,
        params,
    }
}
