//! `pondguard` command line.
//!
//! Exit codes: 0 success or all properties hold, 1 violation or failed
//! check, 2 usage or configuration error, 3 internal error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::evidence::{default_cae_skeleton, run_campaign, CaeGraph, EvidenceError, EvidencePayload};
use crate::pond_sim::{run_episode, Outcome, ScenarioConfig};
use crate::rule_dsl::{parse_named, validate, RuleSet};
use crate::verifier::{
    parse_properties, verify_properties, EnvAbstraction, EnvConfig, LimitKind, Limits, VerdictReport, VerifyError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pondguard",
    version,
    about = "Rules-based collision-avoidance safety function: check, verify, simulate, campaign, report"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and statically validate a rule file
    Check(CheckArgs),
    /// Model check temporal properties against a rule file
    Verify(VerifyArgs),
    /// Run one simulated episode
    Sim(SimArgs),
    /// Run a Monte Carlo campaign and bound the collision probability
    Campaign(CampaignArgs),
    /// Attach evidence to a claims-arguments-evidence graph and show its status
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub rules: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub rules: PathBuf,
    pub properties: PathBuf,
    /// Environment abstraction (JSON); defaults apply when omitted
    #[arg(long)]
    pub env: Option<PathBuf>,
    #[arg(long, default_value_t = Limits::default().max_states)]
    pub max_states: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Write the JSON verification report here
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    pub scenario: PathBuf,
    pub rules: PathBuf,
    /// Write the per-tick trace CSV here
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Override the scenario's rng_seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    pub scenario: PathBuf,
    pub rules: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub episodes: u64,
    /// Root seed; defaults to the scenario's rng_seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON campaign result here
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CAE graph (JSON)
    #[arg(required_unless_present = "skeleton", conflicts_with = "skeleton")]
    pub cae: Option<PathBuf>,
    /// Start from the built-in safety-case skeleton
    #[arg(long)]
    pub skeleton: bool,
    /// Evidence to attach, as NODE=PATH (repeatable)
    #[arg(long, value_name = "NODE=PATH")]
    pub attach: Vec<String>,
    /// Replace evidence whose hash differs, keeping the old payload as a revision
    #[arg(long)]
    pub force: bool,
    /// Write the updated graph here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failed command: message for stderr plus exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult = Result<i32, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn rule_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ruleset".into())
}

fn load_rules(path: &Path) -> Result<RuleSet, Failure> {
    let text = read(path)?;
    parse_named(&rule_name(path), &text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Sim(a) => cmd_sim(a, out),
        Command::Campaign(a) => cmd_campaign(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Entry point used by the binary.
pub fn main_exit() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let text = read(&a.rules)?;
    let rs = match parse_named(&rule_name(&a.rules), &text) {
        Ok(rs) => rs,
        Err(e) => {
            let _ = writeln!(out, "{}: {e}", a.rules.display());
            return Ok(EXIT_FAIL);
        }
    };
    let diags = validate(&rs);
    if diags.is_empty() {
        let _ = writeln!(out, "OK");
        return Ok(EXIT_OK);
    }
    for d in &diags {
        let _ = writeln!(out, "{}: {d}", a.rules.display());
    }
    Ok(if diags.iter().any(|d| d.is_error()) {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    ruleset: &'a str,
    source_hash: String,
    env: &'a EnvConfig,
    truncated: Option<LimitKind>,
    all_hold: bool,
    properties: &'a [VerdictReport],
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let rs = load_rules(&a.rules)?;
    let props =
        parse_properties(&read(&a.properties)?).map_err(|e| usage(format!("{}: {e}", a.properties.display())))?;
    let env_cfg: EnvConfig = match &a.env {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => EnvConfig::default(),
    };
    let diags: Vec<_> = validate(&rs).into_iter().filter(|d| d.is_error()).collect();
    if !diags.is_empty() {
        for d in &diags {
            let _ = writeln!(out, "{}: {d}", a.rules.display());
        }
        return Ok(EXIT_FAIL);
    }
    let env = EnvAbstraction::for_ruleset(&rs, &env_cfg).map_err(|e| usage(e.to_string()))?;
    let limits = Limits {
        max_states: a.max_states,
        max_depth: a.max_depth.unwrap_or(usize::MAX),
    };
    let run = match verify_properties(&rs, &env, &props, limits) {
        Ok(run) => run,
        Err(e @ VerifyError::ReplayMismatch { .. }) => {
            return Err(Failure {
                code: EXIT_INTERNAL,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    for r in &run.reports {
        let status = if r.holds {
            "HOLDS"
        } else if r.inconclusive {
            "INCONCLUSIVE"
        } else {
            "VIOLATED"
        };
        let _ = writeln!(
            out,
            "{status} {} (states={} transitions={})",
            r.property, r.states, r.transitions
        );
    }
    if let Some(kind) = run.truncated {
        let _ = writeln!(out, "exploration truncated by the {kind:?} limit");
    }
    if let Some(path) = &a.report {
        let report = VerifyReport {
            ruleset: &rs.name,
            source_hash: format!("{:016x}", rs.source_hash),
            env: &env_cfg,
            truncated: run.truncated,
            all_hold: run.all_hold(),
            properties: &run.reports,
        };
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        write(path, &json)?;
    }
    Ok(if run.all_hold() { EXIT_OK } else { EXIT_FAIL })
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_sim(a: &SimArgs, out: &mut dyn Write) -> CmdResult {
    let mut cfg = load_scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    let rs = load_rules(&a.rules)?;
    let result = run_episode(&cfg, &rs).map_err(|e| usage(e.to_string()))?;
    if let Some(path) = &a.trace {
        write(path, &result.trace_csv())?;
    }
    let _ = writeln!(
        out,
        "outcome={} ticks={} demands={}",
        result.outcome,
        result.ticks(),
        result.demand_count
    );
    Ok(if result.outcome == Outcome::Collision {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

fn cmd_campaign(a: &CampaignArgs, out: &mut dyn Write) -> CmdResult {
    if a.episodes == 0 {
        return Err(usage("--episodes must be at least 1"));
    }
    let cfg = load_scenario(&a.scenario)?;
    let rs = load_rules(&a.rules)?;
    let seed = a.seed.unwrap_or(cfg.rng_seed);
    let result = run_campaign(&cfg, &rs, a.episodes, seed).map_err(|e| usage(e.to_string()))?;
    if let Some(path) = &a.report {
        write(path, &result.to_json())?;
    }
    let pass = result.meets(cfg.acceptance_threshold);
    let _ = writeln!(
        out,
        "episodes={} collisions={} guard_stops={} demands={} wdt_escalations={} p_hat={:.6} ci95=[{:.6}, {:.6}] threshold={} {}",
        result.episodes,
        result.collisions,
        result.outcomes.guard_stop,
        result.guard_demands,
        result.wdt_escalations,
        result.p_collision_hat,
        result.ci95.0,
        result.ci95.1,
        cfg.acceptance_threshold,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> CmdResult {
    let mut graph = match &a.cae {
        Some(path) => CaeGraph::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => default_cae_skeleton(),
    };
    for item in &a.attach {
        let (node, path) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--attach expects NODE=PATH, got `{item}`")))?;
        let payload = EvidencePayload::from_file(Path::new(path)).map_err(|e| usage(e.to_string()))?;
        match graph.attach_evidence(node, payload, a.force) {
            Ok(()) => {}
            Err(e @ EvidenceError::HashConflict { .. }) => {
                return Err(Failure {
                    code: EXIT_FAIL,
                    message: e.to_string(),
                })
            }
            Err(e) => return Err(usage(e.to_string())),
        }
    }
    let _ = out.write_all(graph.render().as_bytes());
    let missing = graph.missing_evidence();
    if !missing.is_empty() {
        let _ = writeln!(out, "missing evidence: {}", missing.join(", "));
    }
    if let Some(path) = &a.out {
        write(path, &graph.to_json())?;
    }
    Ok(if missing.is_empty() { EXIT_OK } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("pondguard").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["report"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["report", "x.json", "--skeleton"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["verify", "--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("--max-states"));
    }

    #[test]
    fn missing_rule_file() {
        let (code, _, err) = run_args(&["check", "/nonexistent/rules.rbr"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("/nonexistent/rules.rbr"));
    }
}
