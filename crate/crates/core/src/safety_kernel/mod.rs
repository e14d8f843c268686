//! Engineered safety plumbing around the rule controller: the 1-out-of-2
//! voter between the classifier and distance channels, the watchdog that
//! escalates a stalled avoidance to the guard, and the whisker guard latch
//! that cuts propulsion power.
//!
//! Every state machine here is a plain value advanced by a pure step
//! function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default watchdog deadline in ticks (2.0 s at dt = 0.1 s).
pub const DEFAULT_WDT_DEADLINE: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelReading {
    pub tripped: bool,
    pub healthy: bool,
    pub tick: u64,
}

impl ChannelReading {
    pub fn new(tripped: bool, healthy: bool, tick: u64) -> Self {
        ChannelReading { tripped, healthy, tick }
    }

    /// Fail-safe demand: an unhealthy channel counts as tripped.
    pub fn demands_trip(&self) -> bool {
        self.tripped || !self.healthy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("channel readings from different ticks ({a} vs {b})")]
pub struct TickMismatch {
    pub a: u64,
    pub b: u64,
}

/// 1-out-of-2 vote: either channel demanding a trip trips the function.
pub fn vote_1oo2(a: &ChannelReading, b: &ChannelReading) -> Result<bool, TickMismatch> {
    if a.tick != b.tick {
        return Err(TickMismatch { a: a.tick, b: b.tick });
    }
    Ok(a.demands_trip() || b.demands_trip())
}

/// Escalation from the watchdog to the guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardTripCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WatchdogState {
    pub armed: bool,
    pub ticks_remaining: u32,
    pub deadline: u32,
}

impl WatchdogState {
    pub fn new(deadline: u32) -> Self {
        WatchdogState {
            armed: false,
            ticks_remaining: deadline,
            deadline,
        }
    }

    /// Ticks spent armed in the current cycle.
    pub fn elapsed(&self) -> u32 {
        if self.armed {
            self.deadline - self.ticks_remaining
        } else {
            0
        }
    }

    fn disarmed(&self) -> Self {
        WatchdogState::new(self.deadline)
    }
}

/// Advances the watchdog one tick.
///
/// An unarmed watchdog arms on a voted trip with the full deadline. An armed
/// one disarms when the hazard clears, otherwise counts down; reaching zero
/// emits the escalation and disarms.
pub fn watchdog_step(
    w: &WatchdogState,
    voted_trip: bool,
    hazard_cleared: bool,
) -> (WatchdogState, Option<GuardTripCommand>) {
    if !w.armed {
        if voted_trip {
            return (
                WatchdogState {
                    armed: true,
                    ticks_remaining: w.deadline,
                    deadline: w.deadline,
                },
                None,
            );
        }
        return (w.disarmed(), None);
    }
    if hazard_cleared {
        return (w.disarmed(), None);
    }
    let remaining = w.ticks_remaining.saturating_sub(1);
    if remaining == 0 {
        (w.disarmed(), Some(GuardTripCommand))
    } else {
        (
            WatchdogState {
                ticks_remaining: remaining,
                ..*w
            },
            None,
        )
    }
}

/// Hazard is over once the obstacle is beyond the clear threshold or the
/// vehicle is no longer closing on it.
pub fn hazard_cleared(distance: f64, clear_threshold: f64, closing_speed: f64) -> bool {
    distance > clear_threshold || closing_speed <= 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GuardState {
    pub latched: bool,
    pub demand_count: u64,
    pub power_enabled: bool,
}

impl Default for GuardState {
    fn default() -> Self {
        GuardState {
            latched: false,
            demand_count: 0,
            power_enabled: true,
        }
    }
}

/// Whisker guard latch. A demand (contact or watchdog trip) opens the relay;
/// only an operator reset with the whiskers clear closes it again. Demand
/// wins over reset within a tick.
pub fn guard_step(g: &GuardState, whisker_contact: bool, trip_cmd: bool, reset_cmd: bool) -> GuardState {
    if whisker_contact || trip_cmd {
        return GuardState {
            latched: true,
            power_enabled: false,
            demand_count: g.demand_count + u64::from(!g.latched),
        };
    }
    if reset_cmd && g.latched {
        return GuardState {
            latched: false,
            power_enabled: true,
            demand_count: g.demand_count,
        };
    }
    GuardState {
        power_enabled: !g.latched,
        ..*g
    }
}
