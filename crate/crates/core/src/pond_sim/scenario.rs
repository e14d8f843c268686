use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dynamics::Physics;
use super::geometry::PondMap;
use super::SimError;
use crate::rbr_engine::{ControlParams, DEFAULT_CLEAR_THRESHOLD};
use crate::safety_kernel::DEFAULT_WDT_DEADLINE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Uniform perturbation of the start pose, drawn once per episode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StartJitter {
    pub position: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Sonar,
    Classifier,
}

/// Raw-signal faults: a stuck-high sonar reads far (never trips), a
/// stuck-low one reads zero; a stuck-high classifier always detects, a
/// stuck-low one never does. Dropout blanks the channel and clears its
/// health flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    StuckLow,
    StuckHigh,
    Dropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultWindow {
    pub channel: Channel,
    pub kind: FaultKind,
    #[serde(default)]
    pub start_tick: u64,
    /// Exclusive; open-ended when absent.
    #[serde(default)]
    pub end_tick: Option<u64>,
    /// Health flag reported while a stuck fault is active.
    #[serde(default = "yes")]
    pub healthy: bool,
}

fn yes() -> bool {
    true
}

impl FaultWindow {
    pub fn active(&self, tick: u64) -> bool {
        tick >= self.start_tick && self.end_tick.is_none_or(|e| tick < e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorParams {
    pub sonar_trip_threshold: f64,
    pub sonar_noise_sigma: f64,
    /// Half-width of the sonar fan in radians; 0 is a single heading ray.
    pub sonar_beam_half_angle: f64,
    pub sonar_beam_rays: u32,
    pub classifier_detect_range: f64,
    pub classifier_p_detect: f64,
    pub classifier_false_positive_rate: f64,
    pub faults: Vec<FaultWindow>,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            sonar_trip_threshold: 1.5,
            sonar_noise_sigma: 0.0,
            sonar_beam_half_angle: 0.0,
            sonar_beam_rays: 1,
            classifier_detect_range: 2.0,
            classifier_p_detect: 1.0,
            classifier_false_positive_rate: 0.0,
            faults: Vec::new(),
        }
    }
}

impl SensorParams {
    pub fn fault(&self, channel: Channel, tick: u64) -> Option<&FaultWindow> {
        self.faults.iter().find(|f| f.channel == channel && f.active(tick))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Informational; the CLI takes the rule file as an argument.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ruleset_path: Option<String>,
    pub clear_threshold: f64,
    pub wdt_deadline: u32,
    pub control: ControlParams,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            ruleset_path: None,
            clear_threshold: DEFAULT_CLEAR_THRESHOLD,
            wdt_deadline: DEFAULT_WDT_DEADLINE,
            control: ControlParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub map: PondMap,
    pub start: Pose,
    #[serde(default)]
    pub start_jitter: StartJitter,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub max_ticks: u64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub sensors: SensorParams,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default = "default_whisker_reach")]
    pub whisker_reach: f64,
    #[serde(default = "yes")]
    pub whiskers_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Goal>,
    #[serde(default = "default_acceptance")]
    pub acceptance_threshold: f64,
}

fn default_dt() -> f64 {
    0.1
}

fn default_whisker_reach() -> f64 {
    0.15
}

fn default_acceptance() -> f64 {
    0.005
}

fn check(ok: bool, what: &str) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(SimError::ConfigInvalid(what.to_string()))
    }
}

fn probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SimError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical JSON, also the input of the scenario hash.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.map.validate()?;
        let p = &self.physics;
        let s = &self.sensors;
        let c = &self.controller;
        check(self.dt.is_finite() && self.dt > 0.0, "dt must be positive")?;
        check(self.max_ticks >= 1, "max_ticks must be at least 1")?;
        check(
            p.c_drag >= 0.0 && p.c_drag * self.dt <= 1.0,
            "c_drag must satisfy 0 <= c_drag * dt <= 1",
        )?;
        check(
            p.k_thrust.is_finite() && p.k_yaw.is_finite(),
            "physics constants must be finite",
        )?;
        check(p.hull_radius > 0.0, "hull_radius must be positive")?;
        check(self.whisker_reach >= 0.0, "whisker_reach must be non-negative")?;
        check(s.sonar_noise_sigma >= 0.0, "sonar_noise_sigma must be non-negative")?;
        check(s.sonar_beam_rays >= 1, "sonar_beam_rays must be at least 1")?;
        check(
            s.sonar_beam_half_angle >= 0.0,
            "sonar_beam_half_angle must be non-negative",
        )?;
        check(
            probability(s.classifier_p_detect),
            "classifier_p_detect must be in [0, 1]",
        )?;
        check(
            probability(s.classifier_false_positive_rate),
            "classifier_false_positive_rate must be in [0, 1]",
        )?;
        check(
            probability(self.acceptance_threshold),
            "acceptance_threshold must be in [0, 1]",
        )?;
        check(c.wdt_deadline >= 1, "wdt_deadline must be at least 1")?;
        check(c.clear_threshold.is_finite(), "clear_threshold must be finite")?;
        check(
            self.start_jitter.position >= 0.0 && self.start_jitter.heading >= 0.0,
            "start_jitter must be non-negative",
        )?;
        for f in &s.faults {
            check(
                f.end_tick.is_none_or(|e| e > f.start_tick),
                "fault window must end after it starts",
            )?;
        }
        let margin = self.start_jitter.position * std::f64::consts::SQRT_2;
        check(
            self.map.inside(self.start.x, self.start.y)
                && self.map.clearance(self.start.x, self.start.y) - p.hull_radius > margin,
            "start pose must leave the hull clear of obstacles for every jittered start",
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"map": {"width": 10, "height": 10}, "start": {"x": 2, "y": 5, "heading": 0}, "max_ticks": 100}"#;

    #[test]
    fn defaults() {
        let c = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.dt, 0.1);
        assert_eq!(c.physics, Physics::default());
        assert_eq!(c.whisker_reach, 0.15);
        assert_eq!(c.controller.wdt_deadline, 20);
        assert_eq!(c.controller.control.cruise_thrust, 0.4);
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"max_ticks\"", "\"bogus\": 1, \"max_ticks\"");
        assert!(matches!(
            ScenarioConfig::from_json(&bad),
            Err(SimError::ConfigInvalid(_))
        ));
        let nested = MINIMAL.replace("\"max_ticks\"", "\"physics\": {\"mass\": 3}, \"max_ticks\"");
        assert!(ScenarioConfig::from_json(&nested).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("\"max_ticks\": 100", "\"max_ticks\": 0"),
            ("\"max_ticks\": 100", "\"max_ticks\": 100, \"dt\": 0"),
            (
                "\"max_ticks\": 100",
                "\"max_ticks\": 100, \"sensors\": {\"classifier_p_detect\": 1.5}",
            ),
            ("\"x\": 2", "\"x\": 0.1"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ScenarioConfig::from_json(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn fault_windows() {
        let f = FaultWindow {
            channel: Channel::Sonar,
            kind: FaultKind::Dropout,
            start_tick: 5,
            end_tick: Some(8),
            healthy: true,
        };
        assert!(!f.active(4));
        assert!(f.active(5));
        assert!(f.active(7));
        assert!(!f.active(8));
    }
}
