//! Sense–decide–act controller loop.
//!
//! The same functions drive the simulator and the model checker: beliefs are
//! revised from the percept, then the first rule whose condition holds picks
//! the action, then the action maps to a thrust pair.

use serde::{Deserialize, Serialize};

pub use crate::rule_dsl::Action;
use crate::rule_dsl::{clamp_unit, Field, RuleSet, Valuation};

/// Encodes "no obstacle in range" for the distance channel.
pub const DISTANCE_SENTINEL: f64 = 1e9;

/// Default latch-release distance in metres.
pub const DEFAULT_CLEAR_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percept {
    /// Metres to the nearest obstacle along the heading.
    pub distance: f64,
    pub classifier_detect: bool,
    pub sonar_trip: bool,
    /// 1oo2 vote of the two channels.
    pub voted_trip: bool,
    /// Whisker contact.
    pub contact: bool,
    /// Signed surge speed, m/s.
    pub speed: f64,
}

impl Default for Percept {
    fn default() -> Self {
        Percept {
            distance: DISTANCE_SENTINEL,
            classifier_detect: false,
            sonar_trip: false,
            voted_trip: false,
            contact: false,
            speed: 0.0,
        }
    }
}

impl Percept {
    /// Percept part of a valuation; belief fields are ignored.
    pub fn from_valuation(v: &Valuation) -> Percept {
        Percept {
            distance: v.number(Field::Distance),
            speed: v.number(Field::Speed),
            classifier_detect: v.flag(Field::ClassifierDetect),
            sonar_trip: v.flag(Field::SonarTrip),
            voted_trip: v.flag(Field::VotedTrip),
            contact: v.flag(Field::Contact),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.distance.is_finite() && self.distance >= 0.0 && self.speed.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeliefState {
    pub last_action: Action,
    pub trip_latched: bool,
    pub ticks_since_trip: u32,
}

impl Default for BeliefState {
    fn default() -> Self {
        BeliefState {
            last_action: Action::HoldCourse,
            trip_latched: false,
            ticks_since_trip: 0,
        }
    }
}

/// Rule-vocabulary view of a percept together with the belief fields.
pub fn valuation(b: &BeliefState, p: &Percept) -> Valuation {
    let mut v = Valuation::default();
    v.set_number(Field::Distance, p.distance);
    v.set_number(Field::Speed, p.speed);
    v.set_number(Field::TicksSinceTrip, f64::from(b.ticks_since_trip));
    v.set_flag(Field::ClassifierDetect, p.classifier_detect);
    v.set_flag(Field::SonarTrip, p.sonar_trip);
    v.set_flag(Field::VotedTrip, p.voted_trip);
    v.set_flag(Field::Contact, p.contact);
    v.set_flag(Field::TripLatched, b.trip_latched);
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentStep {
    pub beliefs_after: BeliefState,
    pub action: Action,
    pub fired_rule: String,
}

/// Belief revision: a voted trip latches; the latch releases once the
/// distance exceeds `clear_threshold` with no trip present.
pub fn update_beliefs(b: &BeliefState, p: &Percept, clear_threshold: f64) -> BeliefState {
    let trip_latched = p.voted_trip || (b.trip_latched && p.distance <= clear_threshold);
    BeliefState {
        last_action: b.last_action,
        trip_latched,
        ticks_since_trip: if trip_latched {
            b.ticks_since_trip.saturating_add(1)
        } else {
            0
        },
    }
}

/// First-match rule selection.
///
/// # Panics
///
/// If no rule matches, which cannot happen for a program that passed
/// validation (its last rule is `always`).
pub fn deliberate(b: &BeliefState, p: &Percept, rs: &RuleSet) -> AgentStep {
    let index = rs
        .first_match(&valuation(b, p))
        .expect("validated rule sets end in a catch-all rule");
    let rule = &rs.rules[index];
    AgentStep {
        beliefs_after: BeliefState {
            last_action: rule.action,
            ..*b
        },
        action: rule.action,
        fired_rule: rule.id.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlParams {
    pub cruise_thrust: f64,
    pub reverse_thrust: f64,
    pub turn_thrust: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            cruise_thrust: 0.4,
            reverse_thrust: 0.5,
            turn_thrust: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThrustCommand {
    pub left: f64,
    pub right: f64,
}

impl ThrustCommand {
    pub const ZERO: ThrustCommand = ThrustCommand { left: 0.0, right: 0.0 };
}

/// Maps an action to differential thrust.
///
/// `obstacle_bearing` is the bearing of the obstacle captured when the trip
/// latched, in radians measured clockwise (positive to starboard).
/// `turn_away` turns to port when the bearing is `>= 0`, to starboard
/// otherwise.
pub fn act(a: &Action, params: &ControlParams, obstacle_bearing: f64) -> ThrustCommand {
    let cmd = match *a {
        Action::Stop => ThrustCommand::ZERO,
        Action::Reverse => ThrustCommand {
            left: -params.reverse_thrust,
            right: -params.reverse_thrust,
        },
        Action::TurnAway => {
            let t = params.turn_thrust;
            if obstacle_bearing >= 0.0 {
                ThrustCommand { left: -t, right: t }
            } else {
                ThrustCommand { left: t, right: -t }
            }
        }
        Action::HoldCourse => ThrustCommand {
            left: params.cruise_thrust,
            right: params.cruise_thrust,
        },
        Action::SetThrust { left, right } => ThrustCommand { left, right },
    };
    ThrustCommand {
        left: clamp_unit(cmd.left),
        right: clamp_unit(cmd.right),
    }
}

/// A controller instance: owns its beliefs, shares the program.
#[derive(Debug, Clone)]
pub struct Controller<'r> {
    rules: &'r RuleSet,
    beliefs: BeliefState,
    clear_threshold: f64,
}

impl<'r> Controller<'r> {
    pub fn new(rules: &'r RuleSet, clear_threshold: f64) -> Self {
        Controller {
            rules,
            beliefs: BeliefState::default(),
            clear_threshold,
        }
    }

    pub fn with_beliefs(rules: &'r RuleSet, clear_threshold: f64, beliefs: BeliefState) -> Self {
        Controller {
            rules,
            beliefs,
            clear_threshold,
        }
    }

    pub fn beliefs(&self) -> &BeliefState {
        &self.beliefs
    }

    pub fn rules(&self) -> &RuleSet {
        self.rules
    }

    /// One sense–decide cycle.
    pub fn step(&mut self, p: &Percept) -> AgentStep {
        let revised = update_beliefs(&self.beliefs, p, self.clear_threshold);
        let step = deliberate(&revised, p, self.rules);
        self.beliefs = step.beliefs_after;
        step
    }
}
