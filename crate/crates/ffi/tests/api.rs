use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use pondguard_ffi::*;

fn fixture(rel: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(rel);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pg_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn load_rules(name: &str) -> *mut PgRuleSet {
    let mut rs = ptr::null_mut();
    assert_eq!(
        unsafe { pg_ruleset_load(fixture(&format!("{name}.rbr")).as_ptr(), &mut rs) },
        PgStatus::Ok
    );
    rs
}

fn load_scenario(name: &str) -> *mut PgScenario {
    let mut sc = ptr::null_mut();
    let path = fixture(&format!("scenarios/{name}.json"));
    assert_eq!(
        unsafe { pg_scenario_load(path.as_ptr(), &mut sc) },
        PgStatus::Ok,
        "{}",
        last_error()
    );
    sc
}

#[test]
fn parse_errors_set_the_message() {
    let src = CString::new("rule a: when distance < do stop\n").unwrap();
    let mut rs = ptr::null_mut();
    let st = unsafe { pg_ruleset_parse(src.as_ptr(), &mut rs) };
    assert_eq!(st, PgStatus::ParseError);
    assert!(rs.is_null());
    assert!(last_error().contains("syntax error"));

    let ok = CString::new("rule a: when always do stop\n").unwrap();
    assert_eq!(unsafe { pg_ruleset_parse(ok.as_ptr(), &mut rs) }, PgStatus::Ok);
    assert_eq!(last_error(), "");
    let mut n = 0;
    assert_eq!(unsafe { pg_ruleset_len(rs, &mut n) }, PgStatus::Ok);
    assert_eq!(n, 1);
    unsafe { pg_ruleset_free(rs) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut rs = ptr::null_mut();
    assert_eq!(
        unsafe { pg_ruleset_parse(ptr::null(), &mut rs) },
        PgStatus::NullArgument
    );
    let src = CString::new("rule a: when always do stop\n").unwrap();
    assert_eq!(
        unsafe { pg_ruleset_parse(src.as_ptr(), ptr::null_mut()) },
        PgStatus::NullArgument
    );
    let mut e = 0;
    let mut w = 0;
    assert_eq!(
        unsafe { pg_ruleset_check(ptr::null(), &mut e, &mut w) },
        PgStatus::NullArgument
    );
    unsafe {
        pg_ruleset_free(ptr::null_mut());
        pg_scenario_free(ptr::null_mut());
        pg_episode_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_reported() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut rs = ptr::null_mut();
    let st = unsafe { pg_ruleset_parse(bytes.as_ptr().cast(), &mut rs) };
    assert_eq!(st, PgStatus::InvalidUtf8);
}

#[test]
fn check_counts_diagnostics() {
    let rs = load_rules("baseline");
    let (mut e, mut w) = (9, 9);
    assert_eq!(unsafe { pg_ruleset_check(rs, &mut e, &mut w) }, PgStatus::Ok);
    assert_eq!((e, w), (0, 0));
    unsafe { pg_ruleset_free(rs) };

    let rs = load_rules("missing_catch_all");
    assert_eq!(
        unsafe { pg_ruleset_check(rs, &mut e, &mut w) },
        PgStatus::ValidationError
    );
    assert_eq!(e, 1);
    assert!(last_error().contains("MissingCatchAll"));
    unsafe { pg_ruleset_free(rs) };
}

#[test]
fn decide_follows_first_match() {
    let rs = load_rules("baseline");
    let mut d = PgDecision {
        action: PgActionKind::HoldCourse,
        thrust_left: 0.0,
        thrust_right: 0.0,
        rule_index: 99,
    };
    let contact = PgPercept {
        distance: 0.1,
        speed: 0.2,
        classifier_detect: true,
        sonar_trip: true,
        voted_trip: true,
        contact: true,
    };
    let beliefs = PgBeliefs {
        trip_latched: true,
        ticks_since_trip: 2,
    };
    assert_eq!(
        unsafe { pg_ruleset_decide(rs, &contact, &beliefs, 0.0, &mut d) },
        PgStatus::Ok
    );
    assert_eq!((d.action, d.rule_index), (PgActionKind::Stop, 0));
    assert_eq!((d.thrust_left, d.thrust_right), (0.0, 0.0));

    let far = PgPercept {
        distance: 10.0,
        contact: false,
        voted_trip: false,
        ..contact
    };
    let idle = PgBeliefs {
        trip_latched: false,
        ticks_since_trip: 0,
    };
    assert_eq!(unsafe { pg_ruleset_decide(rs, &far, &idle, 0.0, &mut d) }, PgStatus::Ok);
    assert_eq!((d.action, d.rule_index), (PgActionKind::HoldCourse, 3));

    let broken = PgPercept {
        distance: f64::NAN,
        ..far
    };
    assert_eq!(
        unsafe { pg_ruleset_decide(rs, &broken, &idle, 0.0, &mut d) },
        PgStatus::InvalidArgument
    );
    unsafe { pg_ruleset_free(rs) };
}

#[test]
fn episode_and_trace() {
    let rs = load_rules("baseline");
    let sc = load_scenario("wall_channels_disabled");
    let mut ep = ptr::null_mut();
    assert_eq!(unsafe { pg_episode_run(sc, rs, &mut ep) }, PgStatus::Ok);
    let mut outcome = PgOutcome::Timeout;
    assert_eq!(unsafe { pg_episode_outcome(ep, &mut outcome) }, PgStatus::Ok);
    assert_eq!(outcome, PgOutcome::GuardStop);
    let (mut ticks, mut demands, mut esc) = (0, 0, 0);
    assert_eq!(
        unsafe { pg_episode_stats(ep, &mut ticks, &mut demands, &mut esc) },
        PgStatus::Ok
    );
    assert_eq!(demands, 1);
    assert!(ticks > 0);

    let mut needed = 0;
    let st = unsafe { pg_episode_trace_csv(ep, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(st, PgStatus::BufferTooSmall);
    let mut short = vec![0 as std::ffi::c_char; needed - 1];
    let st = unsafe { pg_episode_trace_csv(ep, short.as_mut_ptr(), short.len(), &mut needed) };
    assert_eq!(st, PgStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; needed];
    assert_eq!(
        unsafe { pg_episode_trace_csv(ep, buf.as_mut_ptr(), buf.len(), &mut needed) },
        PgStatus::Ok
    );
    let csv = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(csv.lines().count() as u64, ticks + 1);
    assert!(csv.starts_with("tick,x,y,heading,"));
    unsafe {
        pg_episode_free(ep);
        pg_scenario_free(sc);
        pg_ruleset_free(rs);
    }
}

#[test]
fn scenario_errors_and_seed_override() {
    let bad = CString::new(
        r#"{"map": {"width": 10, "height": 10}, "start": {"x": 5, "y": 5, "heading": 0}, "max_ticks": 0}"#,
    )
    .unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(
        unsafe { pg_scenario_parse(bad.as_ptr(), &mut sc) },
        PgStatus::ConfigError
    );
    let missing = CString::new("/no/such/scenario.json").unwrap();
    assert_eq!(
        unsafe { pg_scenario_load(missing.as_ptr(), &mut sc) },
        PgStatus::IoError
    );

    let rs = load_rules("baseline");
    let sc = load_scenario("baseline");
    let run = |seed: u64| {
        assert_eq!(unsafe { pg_scenario_set_seed(sc, seed) }, PgStatus::Ok);
        let mut ep = ptr::null_mut();
        assert_eq!(unsafe { pg_episode_run(sc, rs, &mut ep) }, PgStatus::Ok);
        let mut needed = 0;
        unsafe { pg_episode_trace_csv(ep, ptr::null_mut(), 0, &mut needed) };
        let mut buf = vec![0 as std::ffi::c_char; needed];
        unsafe { pg_episode_trace_csv(ep, buf.as_mut_ptr(), needed, &mut needed) };
        unsafe { pg_episode_free(ep) };
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
    unsafe {
        pg_scenario_free(sc);
        pg_ruleset_free(rs);
    }
}

#[test]
fn campaign_summary() {
    let rs = load_rules("baseline");
    let sc = load_scenario("degraded_breach");
    let mut s = std::mem::MaybeUninit::<PgCampaignSummary>::uninit();
    assert_eq!(
        unsafe { pg_campaign_run(sc, rs, 0, 1, 1, s.as_mut_ptr()) },
        PgStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { pg_campaign_run(sc, rs, 30, 1, 2, s.as_mut_ptr()) },
        PgStatus::Ok
    );
    let s = unsafe { s.assume_init() };
    assert_eq!(s.episodes, 30);
    assert_eq!(s.collisions, 30);
    assert_eq!(s.ci95_high, 1.0);
    assert!(!s.meets_threshold);
    unsafe {
        pg_scenario_free(sc);
        pg_ruleset_free(rs);
    }
}

#[test]
fn verify_summary() {
    let props = CString::new(std::fs::read_to_string(fixture("collision.prop").to_str().unwrap()).unwrap()).unwrap();
    let mut s = std::mem::MaybeUninit::<PgVerifySummary>::uninit();
    let rs = load_rules("no_avoid");
    assert_eq!(
        unsafe { pg_verify(rs, props.as_ptr(), ptr::null(), 0, s.as_mut_ptr()) },
        PgStatus::Ok
    );
    let s = unsafe { s.assume_init() };
    assert_eq!((s.properties, s.holding, s.violated, s.inconclusive), (2, 1, 1, 0));
    assert!(s.states > 0 && s.transitions >= s.states);

    let bad = CString::new("p : G(action=)").unwrap();
    let mut s2 = std::mem::MaybeUninit::<PgVerifySummary>::uninit();
    assert_eq!(
        unsafe { pg_verify(rs, bad.as_ptr(), ptr::null(), 0, s2.as_mut_ptr()) },
        PgStatus::ParseError
    );
    let env = CString::new(r#"{"wdt_deadline": 0, "bogus": 1}"#).unwrap();
    assert_eq!(
        unsafe { pg_verify(rs, props.as_ptr(), env.as_ptr(), 0, s2.as_mut_ptr()) },
        PgStatus::ConfigError
    );
    unsafe { pg_ruleset_free(rs) };
}

#[test]
fn safety_primitives() {
    let mut trip = false;
    for (a, ah, b, bh, want) in [
        (false, true, false, true, false),
        (true, true, false, true, true),
        (false, false, false, true, true),
    ] {
        assert_eq!(unsafe { pg_vote_1oo2(a, ah, b, bh, &mut trip) }, PgStatus::Ok);
        assert_eq!(trip, want);
    }
    let mut band = PgAlarpBand::Above20;
    for (dose, want) in [
        (1.999, PgAlarpBand::Below2),
        (2.0, PgAlarpBand::Band2To20),
        (20.0, PgAlarpBand::Band2To20),
        (20.001, PgAlarpBand::Above20),
    ] {
        assert_eq!(unsafe { pg_alarp_band(dose, &mut band) }, PgStatus::Ok);
        assert_eq!(band, want);
    }
    assert_eq!(unsafe { pg_alarp_band(-1.0, &mut band) }, PgStatus::InvalidArgument);
    let (mut lo, mut hi) = (1.0, 0.0);
    assert_eq!(unsafe { pg_wilson_interval(0, 1000, &mut lo, &mut hi) }, PgStatus::Ok);
    assert_eq!(lo, 0.0);
    assert!((hi - 0.003826758485555125).abs() < 1e-9);
    assert_eq!(
        unsafe { pg_wilson_interval(5, 4, &mut lo, &mut hi) },
        PgStatus::InvalidArgument
    );
    let v = unsafe { CStr::from_ptr(pg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_are_per_thread() {
    let mut rs = ptr::null_mut();
    assert_eq!(
        unsafe { pg_ruleset_parse(ptr::null(), &mut rs) },
        PgStatus::NullArgument
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(last_error().contains("NULL"));
}
