use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::rbr_engine::ThrustCommand;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub k_thrust: f64,
    pub c_drag: f64,
    pub k_yaw: f64,
    pub hull_radius: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            k_thrust: 1.0,
            c_drag: 0.8,
            k_yaw: 1.0,
            hull_radius: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsvState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub surge: f64,
    pub yaw_rate: f64,
    pub thrust_left: f64,
    pub thrust_right: f64,
    pub hull_radius: f64,
}

impl AsvState {
    pub fn at_rest(x: f64, y: f64, heading: f64, hull_radius: f64) -> Self {
        AsvState {
            x,
            y,
            heading: normalize_angle(heading),
            surge: 0.0,
            yaw_rate: 0.0,
            thrust_left: 0.0,
            thrust_right: 0.0,
            hull_radius,
        }
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Semi-implicit Euler step of the differential-thrust model.
pub fn step_dynamics(s: &AsvState, cmd: ThrustCommand, phys: &Physics, dt: f64) -> AsvState {
    let l = cmd.left.clamp(-1.0, 1.0);
    let r = cmd.right.clamp(-1.0, 1.0);
    let surge = s.surge + dt * (phys.k_thrust * (l + r) / 2.0 - phys.c_drag * s.surge);
    let yaw_rate = phys.k_yaw * (r - l);
    let heading = normalize_angle(s.heading + dt * yaw_rate);
    let (sin, cos) = heading.sin_cos();
    AsvState {
        x: s.x + dt * surge * cos,
        y: s.y + dt * surge * sin,
        heading,
        surge,
        yaw_rate,
        thrust_left: l,
        thrust_right: r,
        hull_radius: s.hull_radius,
    }
}
