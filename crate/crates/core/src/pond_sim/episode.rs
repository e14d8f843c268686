use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::{step_dynamics, AsvState};
use super::scenario::ScenarioConfig;
use super::sensing::sense;
use super::SimError;
use crate::rbr_engine::{act, Action, Controller, Percept, ThrustCommand};
use crate::rule_dsl::{validate, RuleSet, Severity};
use crate::safety_kernel::{guard_step, hazard_cleared, vote_1oo2, watchdog_step, GuardState, WatchdogState};

/// Surge below which a latched vehicle counts as stopped.
pub const STOPPED_SURGE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Collision,
    GuardStop,
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Collision => "collision",
            Outcome::GuardStop => "guard_stop",
            Outcome::Timeout => "timeout",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    /// Vehicle state after this tick's dynamics step.
    pub state: AsvState,
    pub sonar_distance: f64,
    pub sonar_trip: bool,
    pub sonar_healthy: bool,
    pub clf_trip: bool,
    pub clf_healthy: bool,
    pub voted_trip: bool,
    pub action: Action,
    pub rule: String,
    pub watchdog: WatchdogState,
    pub escalated: bool,
    pub guard: GuardState,
    pub contact: bool,
    /// Signed hull clearance after the dynamics step.
    pub clearance: f64,
    pub collision: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub records: Vec<TickRecord>,
    pub outcome: Outcome,
    pub demand_count: u64,
    pub wdt_escalations: u32,
}

impl EpisodeResult {
    pub fn ticks(&self) -> usize {
        self.records.len()
    }

    pub fn trace_csv(&self) -> String {
        let mut out = Vec::new();
        write_trace_csv(&self.records, &mut out).expect("writing to memory");
        String::from_utf8(out).expect("trace is ASCII")
    }
}

/// Seed of episode `index` in a campaign rooted at `root`.
pub fn episode_seed(root: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(root) ^ index)
}

fn check_rules(rs: &RuleSet) -> Result<(), SimError> {
    let errors: Vec<String> = validate(rs)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(SimError::ConfigInvalid(format!(
            "rule set has errors: {}",
            errors.join("; ")
        )))
    }
}

/// Runs one closed-loop episode.
///
/// Per tick: sense, vote, update beliefs, deliberate, act, watchdog, guard,
/// power gate, dynamics, collision check. The start-pose jitter takes three
/// draws before the first tick.
pub fn run_episode(cfg: &ScenarioConfig, rs: &RuleSet) -> Result<EpisodeResult, SimError> {
    cfg.validate()?;
    check_rules(rs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let jitter = cfg.start_jitter;
    let jx = jitter.position * rng.gen_range(-1.0..=1.0);
    let jy = jitter.position * rng.gen_range(-1.0..=1.0);
    let jh = jitter.heading * rng.gen_range(-1.0..=1.0);
    let mut state = AsvState::at_rest(
        cfg.start.x + jx,
        cfg.start.y + jy,
        cfg.start.heading + jh,
        cfg.physics.hull_radius,
    );

    let clear = cfg.controller.clear_threshold;
    let mut controller = Controller::new(rs, clear);
    let mut watchdog = WatchdogState::new(cfg.controller.wdt_deadline);
    let mut guard = GuardState::default();
    let mut avoid_bearing = 0.0;
    let mut escalations = 0;
    let mut records = Vec::new();

    for tick in 0..cfg.max_ticks {
        let senses = sense(&state, &cfg.map, cfg, tick, &mut rng)?;
        let voted = vote_1oo2(&senses.sonar.reading, &senses.classifier).expect("channels share the tick");
        let percept = Percept {
            distance: senses.sonar.distance,
            classifier_detect: senses.classifier.tripped,
            sonar_trip: senses.sonar.reading.tripped,
            voted_trip: voted,
            contact: senses.whisker_contact,
            speed: senses.closing_speed,
        };
        let was_latched = controller.beliefs().trip_latched;
        let step = controller.step(&percept);
        if step.beliefs_after.trip_latched && !was_latched {
            avoid_bearing = senses.sonar.bearing;
        }
        let cmd = act(&step.action, &cfg.controller.control, avoid_bearing);
        let (next_wdt, escalation) = watchdog_step(
            &watchdog,
            voted && !guard.latched,
            hazard_cleared(percept.distance, clear, percept.speed),
        );
        watchdog = next_wdt;
        if escalation.is_some() {
            escalations += 1;
        }
        guard = guard_step(&guard, percept.contact, escalation.is_some(), false);
        let applied = if guard.power_enabled { cmd } else { ThrustCommand::ZERO };
        state = step_dynamics(&state, applied, &cfg.physics, cfg.dt);

        let clearance = cfg.map.clearance(state.x, state.y) - state.hull_radius;
        let collision = clearance <= 0.0;
        records.push(TickRecord {
            tick,
            state,
            sonar_distance: senses.sonar.distance,
            sonar_trip: senses.sonar.reading.tripped,
            sonar_healthy: senses.sonar.reading.healthy,
            clf_trip: senses.classifier.tripped,
            clf_healthy: senses.classifier.healthy,
            voted_trip: voted,
            action: step.action,
            rule: step.fired_rule,
            watchdog,
            escalated: escalation.is_some(),
            guard,
            contact: percept.contact,
            clearance,
            collision,
        });

        let outcome = if collision {
            Some(Outcome::Collision)
        } else if cfg
            .goal
            .is_some_and(|g| (state.x - g.x).hypot(state.y - g.y) <= g.radius)
        {
            Some(Outcome::Completed)
        } else if guard.latched && state.surge.abs() < STOPPED_SURGE {
            Some(Outcome::GuardStop)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            return Ok(finish(records, outcome, guard, escalations));
        }
    }
    Ok(finish(records, Outcome::Timeout, guard, escalations))
}

fn finish(records: Vec<TickRecord>, outcome: Outcome, guard: GuardState, wdt_escalations: u32) -> EpisodeResult {
    EpisodeResult {
        records,
        outcome,
        demand_count: guard.demand_count,
        wdt_escalations,
    }
}

pub const TRACE_HEADER: &str = "tick,x,y,heading,surge,thrust_l,thrust_r,sonar_dist,sonar_trip,sonar_healthy,clf_trip,clf_healthy,voted_trip,action,rule,wdt_armed,wdt_remaining,guard_latched,demand_count,contact,collision";

pub fn write_trace_csv<W: Write>(records: &[TickRecord], out: &mut W) -> io::Result<()> {
    let b = |v: bool| u8::from(v);
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        let s = &r.state;
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.tick,
            s.x,
            s.y,
            s.heading,
            s.surge,
            s.thrust_left,
            s.thrust_right,
            r.sonar_distance,
            b(r.sonar_trip),
            b(r.sonar_healthy),
            b(r.clf_trip),
            b(r.clf_healthy),
            b(r.voted_trip),
            r.action.name(),
            r.rule,
            b(r.watchdog.armed),
            r.watchdog.ticks_remaining,
            b(r.guard.latched),
            r.guard.demand_count,
            b(r.contact),
            b(r.collision),
        )?;
    }
    Ok(())
}
