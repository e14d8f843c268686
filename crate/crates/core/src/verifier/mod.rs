//! Explicit-state program model checker.
//!
//! The checker does not model the controller: successor states come from
//! calling the real [`update_beliefs`](crate::rbr_engine::update_beliefs),
//! [`deliberate`](crate::rbr_engine::deliberate) and kernel step functions on
//! the representative percept of each environment cell. Time is measured in
//! ticks, so deadlines become step bounds (`F<=k`).

mod check;
mod env;
mod graph;
mod property;
mod replay;
mod report;
mod state;

use thiserror::Error;

pub use check::{check, Counterexample, TraceStep, Verdict};
pub use env::{EnvAbstraction, EnvConfig, InitialCells, TransitionMode};
pub use graph::{build_state_space, LimitKind, Limits, StateGraph};
pub use property::{parse_properties, ActionKind, Property, PropertyError, StateFormula, Temporal};
pub use replay::{replay, ReplayReport};
pub use report::{trace_entries, TraceEntry, VerdictReport};
pub use state::{execute_tick, successors, ModelState, TickOutcome, TickParams};

use crate::rule_dsl::RuleSet;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("exploration limit exceeded ({kind:?}) after {} states", partial.state_count())]
    LimitExceeded { kind: LimitKind, partial: Box<StateGraph> },
    #[error("property `{property}` not falsified within the {states_explored} explored states; graph is truncated")]
    Inconclusive {
        property: String,
        states_explored: usize,
        transitions: usize,
    },
    #[error("counterexample replay diverged at step {step}")]
    ReplayMismatch { step: usize },
    #[error("unsupported property: {0}")]
    Unsupported(String),
    #[error("invalid environment: {0}")]
    Env(String),
}

/// Outcome of checking a batch of properties against one rule program.
#[derive(Debug)]
pub struct VerificationRun {
    pub reports: Vec<VerdictReport>,
    pub verdicts: Vec<Option<Verdict>>,
    pub truncated: Option<LimitKind>,
}

impl VerificationRun {
    pub fn all_hold(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }
}

/// Explores once, checks every property, and replay-validates every
/// counterexample before it is reported.
pub fn verify_properties(
    rs: &RuleSet,
    env: &EnvAbstraction,
    props: &[Property],
    limits: Limits,
) -> Result<VerificationRun, VerifyError> {
    let (graph, truncated) = match build_state_space(rs, env, limits) {
        Ok(g) => (g, None),
        Err(VerifyError::LimitExceeded { kind, partial }) => (*partial, Some(kind)),
        Err(e) => return Err(e),
    };
    let mut reports = Vec::with_capacity(props.len());
    let mut verdicts = Vec::with_capacity(props.len());
    for prop in props {
        let label = prop.to_string();
        match check(&graph, prop) {
            Ok(v) => {
                if let Some(cx) = &v.counterexample {
                    replay(cx, rs)?;
                }
                reports.push(VerdictReport::from_verdict(label, &v));
                verdicts.push(Some(v));
            }
            Err(VerifyError::Inconclusive {
                states_explored,
                transitions,
                ..
            }) => {
                reports.push(VerdictReport::inconclusive(label, states_explored, transitions));
                verdicts.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(VerificationRun {
        reports,
        verdicts,
        truncated,
    })
}
