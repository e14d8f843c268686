use serde::{Deserialize, Serialize};

use super::env::EnvAbstraction;
use crate::rbr_engine::{deliberate, update_beliefs, Action, AgentStep, BeliefState, Percept};
use crate::rule_dsl::{Field, RuleSet};
use crate::safety_kernel::{guard_step, hazard_cleared, watchdog_step, GuardState, WatchdogState};

/// One explored configuration: the controller's beliefs going into a tick,
/// the environment cell it is about to sense, the action it chose on the
/// previous tick, and the kernel's watchdog and guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelState {
    pub beliefs: BeliefState,
    pub env_cell: u32,
    pub last_action: Action,
    /// 0 when the watchdog is unarmed, otherwise ticks spent armed counting
    /// the arming tick (1..=deadline).
    pub wdt_counter: u32,
    pub guard_latched: bool,
}

impl ModelState {
    pub fn initial(env_cell: u32) -> Self {
        ModelState {
            beliefs: BeliefState::default(),
            env_cell,
            last_action: BeliefState::default().last_action,
            wdt_counter: 0,
            guard_latched: false,
        }
    }

    pub fn watchdog(&self, deadline: u32) -> WatchdogState {
        if self.wdt_counter == 0 {
            WatchdogState::new(deadline)
        } else {
            WatchdogState {
                armed: true,
                ticks_remaining: deadline + 1 - self.wdt_counter,
                deadline,
            }
        }
    }
}

fn wdt_counter(w: &WatchdogState) -> u32 {
    if w.armed {
        w.deadline + 1 - w.ticks_remaining
    } else {
        0
    }
}

/// Parameters needed to re-execute a tick outside the environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickParams {
    pub clear_threshold: f64,
    pub wdt_deadline: u32,
    /// `ticks_since_trip` saturates here inside model states.
    pub ticks_cap: u32,
}

impl TickParams {
    pub fn new(rs: &RuleSet, env: &EnvAbstraction) -> Self {
        let mut max_threshold = 0.0f64;
        for rule in &rs.rules {
            rule.condition.for_each_cmp(&mut |field, _, value| {
                if field == Field::TicksSinceTrip {
                    max_threshold = max_threshold.max(value);
                }
            });
        }
        let rule_cap = if max_threshold >= u32::MAX as f64 - 2.0 {
            u32::MAX
        } else {
            max_threshold.floor() as u32 + 2
        };
        TickParams {
            clear_threshold: env.clear_threshold,
            wdt_deadline: env.wdt_deadline,
            ticks_cap: (env.wdt_deadline + 1).max(rule_cap),
        }
    }
}

/// Result of executing one tick from a state on a percept, before the next
/// environment cell is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutcome {
    pub step: AgentStep,
    pub watchdog: WatchdogState,
    pub escalated: bool,
    pub guard_latched: bool,
}

impl TickOutcome {
    /// The model state entered when the environment moves to `next_cell`.
    pub fn successor(&self, next_cell: u32, params: &TickParams) -> ModelState {
        let mut beliefs = self.step.beliefs_after;
        beliefs.ticks_since_trip = beliefs.ticks_since_trip.min(params.ticks_cap);
        ModelState {
            beliefs,
            env_cell: next_cell,
            last_action: self.step.action,
            wdt_counter: wdt_counter(&self.watchdog),
            guard_latched: self.guard_latched,
        }
    }
}

/// Runs the real engine and kernel step functions for one tick. The
/// watchdog is held off while the guard is latched.
pub fn execute_tick(
    rs: &RuleSet,
    params: &TickParams,
    beliefs: &BeliefState,
    watchdog: &WatchdogState,
    guard_latched: bool,
    percept: &Percept,
) -> TickOutcome {
    let revised = update_beliefs(beliefs, percept, params.clear_threshold);
    let step = deliberate(&revised, percept, rs);
    let (watchdog, escalation) = watchdog_step(
        watchdog,
        percept.voted_trip && !guard_latched,
        hazard_cleared(percept.distance, params.clear_threshold, percept.speed),
    );
    let guard = GuardState {
        latched: guard_latched,
        demand_count: 0,
        power_enabled: !guard_latched,
    };
    let guard = guard_step(&guard, percept.contact, escalation.is_some(), false);
    TickOutcome {
        step,
        watchdog,
        escalated: escalation.is_some(),
        guard_latched: guard.latched,
    }
}

/// All successors of a state, in environment-cell order.
pub fn successors(rs: &RuleSet, env: &EnvAbstraction, params: &TickParams, s: &ModelState) -> Vec<ModelState> {
    let percept = env.percept(s.env_cell);
    let outcome = execute_tick(
        rs,
        params,
        &s.beliefs,
        &s.watchdog(params.wdt_deadline),
        s.guard_latched,
        &percept,
    );
    env.successors(s.env_cell)
        .into_iter()
        .map(|c| outcome.successor(c, params))
        .collect()
}
