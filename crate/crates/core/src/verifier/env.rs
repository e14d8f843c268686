//! Finite environment abstraction the checker explores against.

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::rbr_engine::{Percept, DEFAULT_CLEAR_THRESHOLD};
use crate::rule_dsl::{ruleset_cuts, CellSpace, Cut, Dimension, Field, RuleSet, Segment, Valuation};
use crate::safety_kernel::{vote_1oo2, ChannelReading, DEFAULT_WDT_DEADLINE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionMode {
    /// Distance segment index moves by at most `max_distance_step` per tick;
    /// every other dimension is free.
    Continuity,
    /// Any cell may follow any cell.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCells {
    All,
    /// Farthest distance segment, every flag clear, channels healthy.
    Quiet,
}

/// Verification environment file (`env.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub clear_threshold: f64,
    pub wdt_deadline: u32,
    pub transition: TransitionMode,
    pub max_distance_step: usize,
    /// Adds a health flag per software channel; unhealthy channels vote trip.
    pub channel_faults: bool,
    /// Splits surge speed at zero (closing / not closing) even when no rule
    /// mentions speed. Without it the vehicle is always treated as closing.
    pub model_speed: bool,
    /// Extra distance cuts, e.g. the sonar trip threshold.
    pub distance_cuts: Vec<f64>,
    pub initial: InitialCells,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            clear_threshold: DEFAULT_CLEAR_THRESHOLD,
            wdt_deadline: DEFAULT_WDT_DEADLINE,
            transition: TransitionMode::Continuity,
            max_distance_step: 1,
            channel_faults: false,
            model_speed: false,
            distance_cuts: Vec::new(),
            initial: InitialCells::All,
        }
    }
}

/// Speed used when speed is not a dimension: closing, so the watchdog
/// never sees the hazard cleared by a stopped vehicle.
const CLOSING_SPEED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvAbstraction {
    space: CellSpace,
    channel_faults: bool,
    transition: TransitionMode,
    max_distance_step: usize,
    initial_cells: Vec<u32>,
    pub clear_threshold: f64,
    pub wdt_deadline: u32,
}

impl EnvAbstraction {
    /// Builds an abstraction from an explicit cell space.
    ///
    /// Voted trip is never a free dimension: it is computed by the real
    /// 1oo2 voter from the `classifier_detect` / `sonar_trip` flags (absent
    /// flags read as not tripped) and, with `channel_faults`, per-channel
    /// health flags.
    pub fn new(
        space: CellSpace,
        channel_faults: bool,
        transition: TransitionMode,
        max_distance_step: usize,
        initial: InitialCells,
        clear_threshold: f64,
        wdt_deadline: u32,
    ) -> Result<Self, VerifyError> {
        if space.dim_index(Field::VotedTrip).is_some() || space.dim_index(Field::TripLatched).is_some() {
            return Err(VerifyError::Env(
                "voted_trip and trip_latched are derived, not environment dimensions".into(),
            ));
        }
        if space.dim_index(Field::TicksSinceTrip).is_some() {
            return Err(VerifyError::Env(
                "ticks_since_trip is a belief, not an environment dimension".into(),
            ));
        }
        if wdt_deadline == 0 {
            return Err(VerifyError::Env("wdt_deadline must be at least 1".into()));
        }
        if !clear_threshold.is_finite() {
            return Err(VerifyError::Env("clear_threshold must be finite".into()));
        }
        let mut env = EnvAbstraction {
            space,
            channel_faults,
            transition,
            max_distance_step: max_distance_step.max(1),
            initial_cells: Vec::new(),
            clear_threshold,
            wdt_deadline,
        };
        env.initial_cells = match initial {
            InitialCells::All => (0..env.cell_count() as u32).collect(),
            InitialCells::Quiet => vec![env.quiet_cell()],
        };
        if env.cell_count() > u32::MAX as usize {
            return Err(VerifyError::Env("cell space too large".into()));
        }
        Ok(env)
    }

    /// Default abstraction for a rule program: distance cut at the rule
    /// thresholds and the clear threshold, both channel flags and whisker
    /// contact free, speed only when referenced or requested.
    pub fn for_ruleset(rs: &RuleSet, cfg: &EnvConfig) -> Result<Self, VerifyError> {
        let cuts = ruleset_cuts(rs);
        let mut distance_cuts = cuts.get(&Field::Distance).cloned().unwrap_or_default();
        distance_cuts.push(Cut {
            at: cfg.clear_threshold,
            point: true,
        });
        distance_cuts.extend(cfg.distance_cuts.iter().map(|&at| Cut { at, point: false }));
        let mut dims = vec![Dimension::numeric(Field::Distance, &distance_cuts)];
        let referenced = rs.referenced_fields();
        if cfg.model_speed || referenced.contains(&Field::Speed) {
            let mut speed_cuts = cuts.get(&Field::Speed).cloned().unwrap_or_default();
            speed_cuts.push(Cut { at: 0.0, point: true });
            dims.push(Dimension::numeric(Field::Speed, &speed_cuts));
        }
        for field in [Field::ClassifierDetect, Field::SonarTrip, Field::Contact] {
            dims.push(Dimension::Boolean { field });
        }
        let mut base = Valuation::default();
        base.set_number(Field::Speed, CLOSING_SPEED);
        EnvAbstraction::new(
            CellSpace::new(dims, base),
            cfg.channel_faults,
            cfg.transition,
            cfg.max_distance_step,
            cfg.initial,
            cfg.clear_threshold,
            cfg.wdt_deadline,
        )
    }

    pub fn space(&self) -> &CellSpace {
        &self.space
    }

    pub fn channel_faults(&self) -> bool {
        self.channel_faults
    }

    fn fault_arity(&self) -> usize {
        if self.channel_faults {
            4
        } else {
            1
        }
    }

    pub fn cell_count(&self) -> usize {
        self.space.len().saturating_mul(self.fault_arity())
    }

    pub fn initial_cells(&self) -> &[u32] {
        &self.initial_cells
    }

    /// (percept-space cell, classifier healthy, sonar healthy)
    fn split(&self, cell: u32) -> (usize, bool, bool) {
        let cell = cell as usize;
        if self.channel_faults {
            (cell / 4, cell & 2 == 0, cell & 1 == 0)
        } else {
            (cell, true, true)
        }
    }

    fn quiet_cell(&self) -> u32 {
        let coords: Vec<usize> = self
            .space
            .dims()
            .iter()
            .map(|d| match d {
                Dimension::Numeric {
                    field: Field::Distance,
                    segments,
                } => segments.len() - 1,
                Dimension::Numeric { segments, .. } => {
                    // positive speed segment nearest to the closing speed
                    segments.iter().position(|s| s.contains(CLOSING_SPEED)).unwrap_or(0)
                }
                Dimension::Boolean { .. } => 0,
            })
            .collect();
        (self.space.index_of(&coords) * self.fault_arity()) as u32
    }

    /// Representative percept of an environment cell.
    pub fn percept(&self, cell: u32) -> Percept {
        let (pc, clf_healthy, sonar_healthy) = self.split(cell);
        let v = self.space.valuation_with(pc, physical_representative);
        let classifier = ChannelReading::new(v.flag(Field::ClassifierDetect), clf_healthy, 0);
        let sonar = ChannelReading::new(v.flag(Field::SonarTrip), sonar_healthy, 0);
        Percept {
            distance: v.number(Field::Distance),
            speed: v.number(Field::Speed),
            classifier_detect: classifier.tripped,
            sonar_trip: sonar.tripped,
            voted_trip: vote_1oo2(&classifier, &sonar).expect("same tick"),
            contact: v.flag(Field::Contact),
        }
    }

    /// Channel health flags of a cell (classifier, sonar).
    pub fn channel_health(&self, cell: u32) -> (bool, bool) {
        let (_, c, s) = self.split(cell);
        (c, s)
    }

    /// Successor cells in ascending index order.
    pub fn successors(&self, cell: u32) -> Vec<u32> {
        let (pc, _, _) = self.split(cell);
        let n = self.cell_count() as u32;
        let dist_dim = match self.transition {
            TransitionMode::Free => None,
            TransitionMode::Continuity => self.space.dim_index(Field::Distance),
        };
        let Some(d) = dist_dim else {
            return (0..n).collect();
        };
        let here = self.space.coords(pc)[d];
        let step = self.max_distance_step;
        (0..n)
            .filter(|&c| {
                let (other, _, _) = self.split(c);
                self.space.coords(other)[d].abs_diff(here) <= step
            })
            .collect()
    }
}

/// Canonical representative, except that the lowest distance segment is
/// kept non-negative where possible.
fn physical_representative(seg: &Segment) -> f64 {
    match *seg {
        Segment::Below { upper } if upper > 0.0 && upper - 1.0 < 0.0 => upper / 2.0,
        _ => seg.representative(),
    }
}
