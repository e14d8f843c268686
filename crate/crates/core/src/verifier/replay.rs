use serde::Serialize;

use super::check::Counterexample;
use super::property::Temporal;
use super::state::{ModelState, TickOutcome};
use super::VerifyError;
use crate::rbr_engine::{BeliefState, Controller, Percept};
use crate::rule_dsl::RuleSet;
use crate::safety_kernel::{guard_step, hazard_cleared, watchdog_step, GuardState, WatchdogState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub valid: bool,
    pub steps: usize,
}

/// Replays a counterexample through a fresh controller and kernel.
///
/// Every recorded engine step must be reproduced exactly, every recorded
/// model state must follow from the replayed tick, and the replayed
/// states must violate the property at the recorded position.
pub fn replay(cx: &Counterexample, rs: &RuleSet) -> Result<ReplayReport, VerifyError> {
    let trace = &cx.steps;
    if trace.is_empty() {
        return Err(VerifyError::ReplayMismatch { step: 0 });
    }
    let params = cx.params;
    if trace[0].state != ModelState::initial(trace[0].state.env_cell) {
        return Err(VerifyError::ReplayMismatch { step: 0 });
    }
    let mut controller = Controller::with_beliefs(rs, params.clear_threshold, BeliefState::default());
    let mut watchdog = WatchdogState::new(params.wdt_deadline);
    let mut guard = GuardState::default();
    for (i, entry) in trace.iter().enumerate() {
        let step = controller.step(&entry.percept);
        if step != entry.step {
            return Err(VerifyError::ReplayMismatch { step: i });
        }
        let (next_wdt, escalation) = watchdog_step(
            &watchdog,
            entry.percept.voted_trip && !guard.latched,
            hazard_cleared(entry.percept.distance, params.clear_threshold, entry.percept.speed),
        );
        watchdog = next_wdt;
        guard = guard_step(&guard, entry.percept.contact, escalation.is_some(), false);
        if let Some(next) = trace.get(i + 1) {
            let expected = TickOutcome {
                step,
                watchdog,
                escalated: escalation.is_some(),
                guard_latched: guard.latched,
            }
            .successor(next.state.env_cell, &params);
            if expected != next.state {
                return Err(VerifyError::ReplayMismatch { step: i + 1 });
            }
        }
    }
    let window: Vec<(&ModelState, &Percept)> = trace.iter().map(|t| (&t.state, &t.percept)).collect();
    let at = cx.violation_at;
    let violated = match &cx.property.formula {
        Temporal::Globally(phi) => at + phi.lookahead() < window.len() && !phi.eval(&window[at..]),
        Temporal::BoundedResponse { trigger, response, k } => {
            at + k < window.len() && trigger.eval(&window[at..]) && (at..=at + k).all(|j| !response.eval(&window[j..]))
        }
    };
    if !violated {
        return Err(VerifyError::ReplayMismatch { step: trace.len() - 1 });
    }
    Ok(ReplayReport {
        valid: true,
        steps: trace.len(),
    })
}
