use rand::Rng;
use rand_distr::StandardNormal;

use super::dynamics::AsvState;
use super::geometry::{raycast_distance, PondMap};
use super::scenario::{Channel, FaultKind, ScenarioConfig};
use super::SimError;
use crate::rbr_engine::DISTANCE_SENTINEL;
use crate::safety_kernel::ChannelReading;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SonarReading {
    pub reading: ChannelReading,
    /// Reported distance (noisy, or the fault value).
    pub distance: f64,
    /// Noiseless free distance over the beam.
    pub true_distance: f64,
    /// Clockwise angle from the heading to the nearest beam ray.
    pub bearing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Senses {
    pub sonar: SonarReading,
    pub classifier: ChannelReading,
    pub whisker_contact: bool,
    /// Signed hull-to-surface distance.
    pub clearance: f64,
    /// Velocity component towards the nearest surface point.
    pub closing_speed: f64,
}

fn beam(map: &PondMap, s: &AsvState, half: f64, rays: u32) -> Result<(f64, f64), SimError> {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..rays {
        let offset = if rays == 1 {
            0.0
        } else {
            -half + 2.0 * half * f64::from(i) / f64::from(rays - 1)
        };
        let d = raycast_distance(map, s.x, s.y, s.heading + offset, s.hull_radius)?;
        if d < best.0 {
            best = (d, -offset);
        }
    }
    Ok(best)
}

/// Samples all three channels for one tick.
///
/// Exactly three draws are taken per call, in this order: sonar noise,
/// classifier detection, classifier false positive. Faults override the
/// outputs but never skip a draw.
pub fn sense<R: Rng>(
    s: &AsvState,
    map: &PondMap,
    cfg: &ScenarioConfig,
    tick: u64,
    rng: &mut R,
) -> Result<Senses, SimError> {
    let p = &cfg.sensors;
    let (true_distance, bearing) = beam(map, s, p.sonar_beam_half_angle, p.sonar_beam_rays)?;
    let z: f64 = rng.sample(StandardNormal);
    let u_detect: f64 = rng.gen();
    let u_false: f64 = rng.gen();

    let noisy = (true_distance + p.sonar_noise_sigma * z).max(0.0);
    let (distance, tripped, healthy) = match p.fault(Channel::Sonar, tick) {
        None => (noisy, noisy < p.sonar_trip_threshold, true),
        Some(f) => match f.kind {
            FaultKind::StuckHigh => (DISTANCE_SENTINEL, false, f.healthy),
            FaultKind::StuckLow => (0.0, true, f.healthy),
            FaultKind::Dropout => (DISTANCE_SENTINEL, false, false),
        },
    };
    let sonar = SonarReading {
        reading: ChannelReading::new(tripped, healthy, tick),
        distance,
        true_distance,
        bearing,
    };

    let detected = if true_distance <= p.classifier_detect_range {
        u_detect < p.classifier_p_detect
    } else {
        u_false < p.classifier_false_positive_rate
    };
    let classifier = match p.fault(Channel::Classifier, tick) {
        None => ChannelReading::new(detected, true, tick),
        Some(f) => match f.kind {
            FaultKind::StuckHigh => ChannelReading::new(true, f.healthy, tick),
            FaultKind::StuckLow => ChannelReading::new(false, f.healthy, tick),
            FaultKind::Dropout => ChannelReading::new(false, false, tick),
        },
    };

    let clearance = map.clearance(s.x, s.y) - s.hull_radius;
    let (px, py) = map.closest_surface_point(s.x, s.y);
    let gap = (px - s.x).hypot(py - s.y);
    let closing_speed = if gap > 0.0 {
        s.surge * (s.heading.cos() * (px - s.x) + s.heading.sin() * (py - s.y)) / gap
    } else {
        s.surge.abs()
    };
    Ok(Senses {
        sonar,
        classifier,
        whisker_contact: cfg.whiskers_enabled && clearance <= cfg.whisker_reach,
        clearance,
        closing_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pond_sim::scenario::FaultWindow;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::from_json(
            r#"{"map": {"width": 10, "height": 10}, "start": {"x": 2, "y": 5, "heading": 0}, "max_ticks": 10}"#,
        )
        .unwrap()
    }

    fn near_wall() -> AsvState {
        // 1.0 m of free water ahead of the hull
        AsvState::at_rest(8.6, 5.0, 0.0, 0.4)
    }

    fn sense_once(cfg: &ScenarioConfig, s: &AsvState, tick: u64) -> Senses {
        sense(s, &cfg.map, cfg, tick, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn noiseless_trip() {
        let c = cfg();
        let out = sense_once(&c, &near_wall(), 0);
        assert!((out.sonar.distance - 1.0).abs() < 1e-12);
        assert!(out.sonar.reading.tripped && out.sonar.reading.healthy);
    }

    #[test]
    fn certain_detection() {
        let c = cfg();
        let out = sense_once(&c, &near_wall(), 0);
        assert!(out.classifier.tripped && out.classifier.healthy);
        let far = sense_once(&c, &AsvState::at_rest(2.0, 5.0, 0.0, 0.4), 0);
        assert!(!far.classifier.tripped && !far.sonar.reading.tripped);
    }

    #[test]
    fn stuck_high_sonar_never_trips() {
        let mut c = cfg();
        c.sensors.faults.push(FaultWindow {
            channel: Channel::Sonar,
            kind: FaultKind::StuckHigh,
            start_tick: 3,
            end_tick: None,
            healthy: false,
        });
        let s = AsvState::at_rest(9.59, 5.0, 0.0, 0.4);
        assert!(sense_once(&c, &s, 2).sonar.reading.tripped);
        for tick in 3..20 {
            let out = sense_once(&c, &s, tick);
            assert!(!out.sonar.reading.tripped);
            assert!(!out.sonar.reading.healthy);
        }
    }

    #[test]
    fn classifier_faults_and_dropout() {
        let mut c = cfg();
        c.sensors.faults.push(FaultWindow {
            channel: Channel::Classifier,
            kind: FaultKind::StuckLow,
            start_tick: 0,
            end_tick: Some(5),
            healthy: true,
        });
        c.sensors.faults.push(FaultWindow {
            channel: Channel::Classifier,
            kind: FaultKind::Dropout,
            start_tick: 5,
            end_tick: None,
            healthy: true,
        });
        let a = sense_once(&c, &near_wall(), 0);
        assert!(!a.classifier.tripped && a.classifier.healthy);
        let b = sense_once(&c, &near_wall(), 5);
        assert!(!b.classifier.healthy);
    }

    #[test]
    fn draw_order_is_independent_of_faults() {
        let mut faulty = cfg();
        faulty.sensors.sonar_noise_sigma = 0.1;
        faulty.sensors.faults.push(FaultWindow {
            channel: Channel::Sonar,
            kind: FaultKind::Dropout,
            start_tick: 0,
            end_tick: None,
            healthy: true,
        });
        let mut clean = faulty.clone();
        clean.sensors.faults.clear();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        for tick in 0..5 {
            sense(&near_wall(), &faulty.map, &faulty, tick, &mut r1).unwrap();
            sense(&near_wall(), &clean.map, &clean, tick, &mut r2).unwrap();
        }
        assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
    }

    #[test]
    fn whisker_reach() {
        let mut c = cfg();
        let s = AsvState::at_rest(9.5, 5.0, 1.0, 0.4);
        assert!(sense_once(&c, &s, 0).whisker_contact);
        c.whiskers_enabled = false;
        assert!(!sense_once(&c, &s, 0).whisker_contact);
        let clear = AsvState::at_rest(9.3, 5.0, 1.0, 0.4);
        c.whiskers_enabled = true;
        assert!(!sense_once(&c, &clear, 0).whisker_contact);
    }

    #[test]
    fn beam_reports_bearing_of_nearest_ray() {
        let mut c = cfg();
        c.sensors.sonar_beam_half_angle = 0.5;
        c.sensors.sonar_beam_rays = 5;
        // heading along the wall at y = 10, wall is to port
        let s = AsvState::at_rest(5.0, 8.0, 0.0, 0.4);
        let out = sense_once(&c, &s, 0);
        assert!(out.sonar.bearing < 0.0);
        assert!((out.sonar.bearing + 0.5).abs() < 1e-12);
    }
}
