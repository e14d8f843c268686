//! C ABI over the `pondguard` library.
//!
//! Every function returns a [`PgStatus`]. On failure a message is kept per
//! thread and can be read with [`pg_last_error`]. Objects cross the boundary
//! as opaque handles created by `*_parse`, `*_load` or `*_run` and
//! released with the matching `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pondguard::evidence::{alarp_band, run_campaign_with_threads, wilson_interval, AlarpBand, Z_95};
use pondguard::pond_sim::{run_episode, EpisodeResult, Outcome, ScenarioConfig};
use pondguard::rbr_engine::{act, deliberate, valuation, Action, BeliefState, ControlParams, Percept};
use pondguard::rule_dsl::{parse_named, validate, RuleSet, Severity};
use pondguard::safety_kernel::{vote_1oo2, ChannelReading};
use pondguard::verifier::{parse_properties, verify_properties, EnvAbstraction, EnvConfig, Limits, VerdictReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    ConfigError = 5,
    IoError = 6,
    VerifyError = 7,
    BufferTooSmall = 8,
    InvalidArgument = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgOutcome {
    Completed = 0,
    Collision = 1,
    GuardStop = 2,
    Timeout = 3,
}

impl From<Outcome> for PgOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Completed => PgOutcome::Completed,
            Outcome::Collision => PgOutcome::Collision,
            Outcome::GuardStop => PgOutcome::GuardStop,
            Outcome::Timeout => PgOutcome::Timeout,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgAlarpBand {
    Below2 = 0,
    Band2To20 = 1,
    Above20 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgActionKind {
    Stop = 0,
    Reverse = 1,
    TurnAway = 2,
    HoldCourse = 3,
    SetThrust = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgPercept {
    pub distance: f64,
    pub speed: f64,
    pub classifier_detect: bool,
    pub sonar_trip: bool,
    pub voted_trip: bool,
    pub contact: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgBeliefs {
    pub trip_latched: bool,
    pub ticks_since_trip: u32,
}

/// Chosen action with the thrust it maps to under default control gains.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgDecision {
    pub action: PgActionKind,
    pub thrust_left: f64,
    pub thrust_right: f64,
    /// Zero-based index of the rule that fired.
    pub rule_index: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgCampaignSummary {
    pub episodes: u64,
    pub collisions: u64,
    pub guard_stops: u64,
    pub guard_demands: u64,
    pub wdt_escalations: u64,
    pub p_collision_hat: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub meets_threshold: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgVerifySummary {
    pub properties: u32,
    pub holding: u32,
    pub violated: u32,
    pub inconclusive: u32,
    pub states: u64,
    pub transitions: u64,
}

pub struct PgRuleSet(RuleSet);
pub struct PgScenario(ScenarioConfig);
pub struct PgEpisode(EpisodeResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior NULs replaced"));
}

type FfiResult<T> = Result<T, (PgStatus, String)>;

fn fail<T>(status: PgStatus, msg: impl std::fmt::Display) -> FfiResult<T> {
    Err((status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> PgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PgStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PgStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(PgStatus::NullArgument, format!("{what} is NULL"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(PgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .map_or_else(|| fail(PgStatus::NullArgument, format!("{what} is NULL")), Ok)
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .map_or_else(|| fail(PgStatus::NullArgument, format!("{what} is NULL")), Ok)
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn parse_rules(source: &str, name: &str) -> FfiResult<RuleSet> {
    parse_named(name, source).or_else(|e| fail(PgStatus::ParseError, e))
}

/// Parses rule-program text. `*out` receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn pg_ruleset_parse(source: *const c_char, out_rules: *mut *mut PgRuleSet) -> PgStatus {
    guard(|| {
        let source = text(source, "source")?;
        let slot = out(out_rules, "out_rules")?;
        *slot = boxed(PgRuleSet(parse_rules(source, "rules")?));
        Ok(())
    })
}

/// Reads and parses a rule file.
#[no_mangle]
pub unsafe extern "C" fn pg_ruleset_load(path: *const c_char, out_rules: *mut *mut PgRuleSet) -> PgStatus {
    guard(|| {
        let path = Path::new(text(path, "path")?);
        let slot = out(out_rules, "out_rules")?;
        let source =
            std::fs::read_to_string(path).or_else(|e| fail(PgStatus::IoError, format!("{}: {e}", path.display())))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("rules");
        *slot = boxed(PgRuleSet(parse_rules(&source, name)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_ruleset_free(rules: *mut PgRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pg_ruleset_len(rules: *const PgRuleSet, out_len: *mut u32) -> PgStatus {
    guard(|| {
        let rs = handle(rules, "rules")?;
        *out(out_len, "out_len")? = u32::try_from(rs.0.rules.len()).unwrap_or(u32::MAX);
        Ok(())
    })
}

/// Static validation. Returns `ValidationError` when any diagnostic is an
/// error; the counts are written in either case.
#[no_mangle]
pub unsafe extern "C" fn pg_ruleset_check(
    rules: *const PgRuleSet,
    out_errors: *mut u32,
    out_warnings: *mut u32,
) -> PgStatus {
    guard(|| {
        let rs = handle(rules, "rules")?;
        let errors = out(out_errors, "out_errors")?;
        let warnings = out(out_warnings, "out_warnings")?;
        let diags = validate(&rs.0);
        let count = |sev: Severity| diags.iter().filter(|d| d.severity == sev).count() as u32;
        *errors = count(Severity::Error);
        *warnings = count(Severity::Warn);
        if *errors > 0 {
            let text: Vec<String> = diags.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect();
            return fail(PgStatus::ValidationError, text.join("; "));
        }
        Ok(())
    })
}

/// One deliberation step. `obstacle_bearing` steers `turn_away`.
#[no_mangle]
pub unsafe extern "C" fn pg_ruleset_decide(
    rules: *const PgRuleSet,
    percept: *const PgPercept,
    beliefs: *const PgBeliefs,
    obstacle_bearing: f64,
    out_decision: *mut PgDecision,
) -> PgStatus {
    guard(|| {
        let rs = handle(rules, "rules")?;
        let p = handle(percept, "percept")?;
        let b = handle(beliefs, "beliefs")?;
        let slot = out(out_decision, "out_decision")?;
        let percept = Percept {
            distance: p.distance,
            speed: p.speed,
            classifier_detect: p.classifier_detect,
            sonar_trip: p.sonar_trip,
            voted_trip: p.voted_trip,
            contact: p.contact,
        };
        if !percept.is_well_formed() {
            return fail(
                PgStatus::InvalidArgument,
                "percept distance must be finite and non-negative",
            );
        }
        if validate(&rs.0).iter().any(|d| d.is_error()) {
            return fail(PgStatus::ValidationError, "rule program does not validate");
        }
        let beliefs = BeliefState {
            trip_latched: b.trip_latched,
            ticks_since_trip: b.ticks_since_trip,
            ..BeliefState::default()
        };
        let v = valuation(&beliefs, &percept);
        let Some(index) = rs.0.first_match(&v) else {
            return fail(PgStatus::ValidationError, "no rule matches this percept");
        };
        let step = deliberate(&beliefs, &percept, &rs.0);
        let cmd = act(&step.action, &ControlParams::default(), obstacle_bearing);
        *slot = PgDecision {
            action: match step.action {
                Action::Stop => PgActionKind::Stop,
                Action::Reverse => PgActionKind::Reverse,
                Action::TurnAway => PgActionKind::TurnAway,
                Action::HoldCourse => PgActionKind::HoldCourse,
                Action::SetThrust { .. } => PgActionKind::SetThrust,
            },
            thrust_left: cmd.left,
            thrust_right: cmd.right,
            rule_index: index as u32,
        };
        Ok(())
    })
}

/// Parses a scenario from JSON text.
#[no_mangle]
pub unsafe extern "C" fn pg_scenario_parse(json: *const c_char, out_scenario: *mut *mut PgScenario) -> PgStatus {
    guard(|| {
        let json = text(json, "json")?;
        let slot = out(out_scenario, "out_scenario")?;
        let cfg = ScenarioConfig::from_json(json).or_else(|e| fail(PgStatus::ConfigError, e))?;
        *slot = boxed(PgScenario(cfg));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_scenario_load(path: *const c_char, out_scenario: *mut *mut PgScenario) -> PgStatus {
    guard(|| {
        let path = text(path, "path")?;
        let slot = out(out_scenario, "out_scenario")?;
        let json = std::fs::read_to_string(path).or_else(|e| fail(PgStatus::IoError, format!("{path}: {e}")))?;
        let cfg = ScenarioConfig::from_json(&json).or_else(|e| fail(PgStatus::ConfigError, e))?;
        *slot = boxed(PgScenario(cfg));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_scenario_set_seed(scenario: *mut PgScenario, seed: u64) -> PgStatus {
    guard(|| {
        out(scenario, "scenario")?.0.rng_seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_scenario_free(scenario: *mut PgScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs one closed-loop episode with the scenario's seed.
#[no_mangle]
pub unsafe extern "C" fn pg_episode_run(
    scenario: *const PgScenario,
    rules: *const PgRuleSet,
    out_episode: *mut *mut PgEpisode,
) -> PgStatus {
    guard(|| {
        let cfg = handle(scenario, "scenario")?;
        let rs = handle(rules, "rules")?;
        let slot = out(out_episode, "out_episode")?;
        let result = run_episode(&cfg.0, &rs.0).or_else(|e| fail(PgStatus::ConfigError, e))?;
        *slot = boxed(PgEpisode(result));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_episode_outcome(episode: *const PgEpisode, out_outcome: *mut PgOutcome) -> PgStatus {
    guard(|| {
        let ep = handle(episode, "episode")?;
        *out(out_outcome, "out_outcome")? = ep.0.outcome.into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_episode_stats(
    episode: *const PgEpisode,
    out_ticks: *mut u64,
    out_demands: *mut u64,
    out_escalations: *mut u32,
) -> PgStatus {
    guard(|| {
        let ep = handle(episode, "episode")?;
        *out(out_ticks, "out_ticks")? = ep.0.ticks() as u64;
        *out(out_demands, "out_demands")? = ep.0.demand_count;
        *out(out_escalations, "out_escalations")? = ep.0.wdt_escalations;
        Ok(())
    })
}

/// Copies the trace CSV into `buf` with a trailing NUL. `*out_needed`
/// receives the required size including the NUL; a NULL or short buffer
/// yields `BufferTooSmall` and nothing is copied.
#[no_mangle]
pub unsafe extern "C" fn pg_episode_trace_csv(
    episode: *const PgEpisode,
    buf: *mut c_char,
    buf_len: usize,
    out_needed: *mut usize,
) -> PgStatus {
    guard(|| {
        let ep = handle(episode, "episode")?;
        let needed = out(out_needed, "out_needed")?;
        let csv = ep.0.trace_csv();
        *needed = csv.len() + 1;
        if buf.is_null() || buf_len < *needed {
            return fail(PgStatus::BufferTooSmall, format!("trace needs {} bytes", *needed));
        }
        ptr::copy_nonoverlapping(csv.as_ptr(), buf.cast::<u8>(), csv.len());
        *buf.add(csv.len()) = 0;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_episode_free(episode: *mut PgEpisode) {
    if !episode.is_null() {
        drop(Box::from_raw(episode));
    }
}

/// Monte Carlo campaign. `threads == 0` uses the machine's parallelism.
#[no_mangle]
pub unsafe extern "C" fn pg_campaign_run(
    scenario: *const PgScenario,
    rules: *const PgRuleSet,
    episodes: u64,
    root_seed: u64,
    threads: u32,
    out_summary: *mut PgCampaignSummary,
) -> PgStatus {
    guard(|| {
        let cfg = handle(scenario, "scenario")?;
        let rs = handle(rules, "rules")?;
        let slot = out(out_summary, "out_summary")?;
        if episodes == 0 {
            return fail(PgStatus::InvalidArgument, "episodes must be at least 1");
        }
        let threads = if threads == 0 {
            pondguard::evidence::campaign_threads()
        } else {
            threads as usize
        };
        let r = run_campaign_with_threads(&cfg.0, &rs.0, episodes, root_seed, threads)
            .or_else(|e| fail(PgStatus::ConfigError, e))?;
        *slot = PgCampaignSummary {
            episodes: r.episodes,
            collisions: r.collisions,
            guard_stops: r.outcomes.guard_stop,
            guard_demands: r.guard_demands,
            wdt_escalations: r.wdt_escalations,
            p_collision_hat: r.p_collision_hat,
            ci95_low: r.ci95.0,
            ci95_high: r.ci95.1,
            meets_threshold: r.meets(cfg.0.acceptance_threshold),
        };
        Ok(())
    })
}

/// Model checks the property text against a rule program. `env_json` may
/// be NULL for the default environment; `max_states == 0` means no limit
/// beyond the library default.
#[no_mangle]
pub unsafe extern "C" fn pg_verify(
    rules: *const PgRuleSet,
    properties: *const c_char,
    env_json: *const c_char,
    max_states: u64,
    out_summary: *mut PgVerifySummary,
) -> PgStatus {
    guard(|| {
        let rs = handle(rules, "rules")?;
        let props_text = text(properties, "properties")?;
        let slot = out(out_summary, "out_summary")?;
        let cfg: EnvConfig = if env_json.is_null() {
            EnvConfig::default()
        } else {
            serde_json::from_str(text(env_json, "env_json")?).or_else(|e| fail(PgStatus::ConfigError, e))?
        };
        let props = parse_properties(props_text).or_else(|e| fail(PgStatus::ParseError, e))?;
        if validate(&rs.0).iter().any(|d| d.is_error()) {
            return fail(PgStatus::ValidationError, "rule program does not validate");
        }
        let env = EnvAbstraction::for_ruleset(&rs.0, &cfg).or_else(|e| fail(PgStatus::ConfigError, e))?;
        let mut limits = Limits::default();
        if max_states > 0 {
            limits.max_states = usize::try_from(max_states).unwrap_or(usize::MAX);
        }
        let run = verify_properties(&rs.0, &env, &props, limits).or_else(|e| fail(PgStatus::VerifyError, e))?;
        let count = |f: &dyn Fn(&VerdictReport) -> bool| run.reports.iter().filter(|r| f(r)).count() as u32;
        *slot = PgVerifySummary {
            properties: run.reports.len() as u32,
            holding: count(&|r| r.holds),
            violated: count(&|r| !r.holds && !r.inconclusive),
            inconclusive: count(&|r| r.inconclusive),
            states: run.reports.first().map_or(0, |r| r.states as u64),
            transitions: run.reports.first().map_or(0, |r| r.transitions as u64),
        };
        Ok(())
    })
}

/// Fail-safe 1oo2 vote over two channel readings from the same tick.
#[no_mangle]
pub unsafe extern "C" fn pg_vote_1oo2(
    a_tripped: bool,
    a_healthy: bool,
    b_tripped: bool,
    b_healthy: bool,
    out_trip: *mut bool,
) -> PgStatus {
    guard(|| {
        let slot = out(out_trip, "out_trip")?;
        *slot = vote_1oo2(
            &ChannelReading::new(a_tripped, a_healthy, 0),
            &ChannelReading::new(b_tripped, b_healthy, 0),
        )
        .expect("same tick");
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pg_alarp_band(dose_msv: f64, out_band: *mut PgAlarpBand) -> PgStatus {
    guard(|| {
        let slot = out(out_band, "out_band")?;
        *slot = match alarp_band(dose_msv).or_else(|e| fail(PgStatus::InvalidArgument, e))? {
            AlarpBand::Below2 => PgAlarpBand::Below2,
            AlarpBand::Band2To20 => PgAlarpBand::Band2To20,
            AlarpBand::Above20 => PgAlarpBand::Above20,
        };
        Ok(())
    })
}

/// 95% Wilson score interval for `k` collisions in `n` episodes.
#[no_mangle]
pub unsafe extern "C" fn pg_wilson_interval(k: u64, n: u64, out_low: *mut f64, out_high: *mut f64) -> PgStatus {
    guard(|| {
        let low = out(out_low, "out_low")?;
        let high = out(out_high, "out_high")?;
        if n == 0 || k > n {
            return fail(PgStatus::InvalidArgument, "need 0 <= k <= n and n > 0");
        }
        (*low, *high) = wilson_interval(k, n, Z_95);
        Ok(())
    })
}
