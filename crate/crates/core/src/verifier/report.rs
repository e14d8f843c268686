use serde::Serialize;

use super::check::{Counterexample, Verdict};
use super::state::ModelState;
use crate::rbr_engine::{Action, Percept};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub state: ModelState,
    pub percept: Percept,
    pub action: Action,
    pub rule: String,
}

/// One property's entry in the JSON verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub property: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inconclusive: bool,
    pub states: usize,
    pub transitions: usize,
    pub counterexample: Option<Vec<TraceEntry>>,
}

impl VerdictReport {
    pub fn from_verdict(property: String, v: &Verdict) -> Self {
        VerdictReport {
            property,
            holds: v.holds,
            inconclusive: false,
            states: v.states_explored,
            transitions: v.transitions,
            counterexample: v.counterexample.as_ref().map(trace_entries),
        }
    }

    pub fn inconclusive(property: String, states: usize, transitions: usize) -> Self {
        VerdictReport {
            property,
            holds: false,
            inconclusive: true,
            states,
            transitions,
            counterexample: None,
        }
    }
}

pub fn trace_entries(cx: &Counterexample) -> Vec<TraceEntry> {
    cx.steps
        .iter()
        .map(|t| TraceEntry {
            state: t.state,
            percept: t.percept,
            action: t.step.action,
            rule: t.step.fired_rule.clone(),
        })
        .collect()
}
