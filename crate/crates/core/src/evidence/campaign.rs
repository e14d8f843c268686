use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{wilson_interval, EvidenceError, Z_95};
use crate::pond_sim::{episode_seed, run_episode, Outcome, ScenarioConfig};
use crate::rule_dsl::RuleSet;
use crate::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub completed: u64,
    pub collision: u64,
    pub guard_stop: u64,
    pub timeout: u64,
}

impl OutcomeCounts {
    fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Completed => self.completed += 1,
            Outcome::Collision => self.collision += 1,
            Outcome::GuardStop => self.guard_stop += 1,
            Outcome::Timeout => self.timeout += 1,
        }
    }
}

/// The part of one episode that enters the campaign totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub index: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub demands: u64,
    pub wdt_escalations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub episodes: u64,
    pub collisions: u64,
    pub guard_demands: u64,
    pub wdt_escalations: u64,
    pub p_collision_hat: f64,
    pub ci95: (f64, f64),
    pub root_seed: u64,
    pub ruleset_hash: String,
    pub scenario_hash: String,
    pub outcomes: OutcomeCounts,
}

impl CampaignResult {
    pub fn meets(&self, acceptance_threshold: f64) -> bool {
        self.ci95.1 <= acceptance_threshold
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("campaign result serializes");
        s.push('\n');
        s
    }
}

/// Number of campaign worker threads: `PONDGUARD_THREADS` if set to a
/// positive integer, otherwise the machine's parallelism.
pub fn campaign_threads() -> usize {
    std::env::var("PONDGUARD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Folds episode summaries into campaign totals; the result does not
/// depend on the order of `summaries`.
pub fn aggregate(
    summaries: &[EpisodeSummary],
    root_seed: u64,
    ruleset_hash: String,
    scenario_hash: String,
) -> CampaignResult {
    let mut outcomes = OutcomeCounts::default();
    let mut demands = 0;
    let mut escalations = 0;
    for s in summaries {
        outcomes.add(s.outcome);
        demands += s.demands;
        escalations += u64::from(s.wdt_escalations);
    }
    let n = summaries.len() as u64;
    let k = outcomes.collision;
    CampaignResult {
        episodes: n,
        collisions: k,
        guard_demands: demands,
        wdt_escalations: escalations,
        p_collision_hat: k as f64 / n as f64,
        ci95: wilson_interval(k, n, Z_95),
        root_seed,
        ruleset_hash,
        scenario_hash,
        outcomes,
    }
}

pub fn run_campaign(
    cfg: &ScenarioConfig,
    rs: &RuleSet,
    episodes: u64,
    root_seed: u64,
) -> Result<CampaignResult, EvidenceError> {
    run_campaign_with_threads(cfg, rs, episodes, root_seed, campaign_threads())
}

pub fn run_campaign_with_threads(
    cfg: &ScenarioConfig,
    rs: &RuleSet,
    episodes: u64,
    root_seed: u64,
    threads: usize,
) -> Result<CampaignResult, EvidenceError> {
    if episodes == 0 {
        return Err(EvidenceError::NoEpisodes);
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let summaries = pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|index| {
                let mut c = cfg.clone();
                c.rng_seed = episode_seed(root_seed, index);
                run_episode(&c, rs).map(|r| EpisodeSummary {
                    index,
                    seed: c.rng_seed,
                    outcome: r.outcome,
                    demands: r.demand_count,
                    wdt_escalations: r.wdt_escalations,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(aggregate(
        &summaries,
        root_seed,
        format!("{:016x}", rs.source_hash),
        sha256_hex(cfg.to_json().as_bytes()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_dsl::parse;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture(name: &str) -> ScenarioConfig {
        let path = format!("{}/fixtures/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
        ScenarioConfig::load(std::path::Path::new(&path)).unwrap()
    }

    fn baseline_rules() -> RuleSet {
        parse(include_str!("../../fixtures/baseline.rbr")).unwrap()
    }

    #[test]
    fn zero_episodes_rejected() {
        assert!(matches!(
            run_campaign(&fixture("empty_pond"), &baseline_rules(), 0, 1),
            Err(EvidenceError::NoEpisodes)
        ));
    }

    #[test]
    fn aggregation_ignores_completion_order() {
        let outcomes = [
            Outcome::Collision,
            Outcome::GuardStop,
            Outcome::Timeout,
            Outcome::Completed,
        ];
        let mut summaries: Vec<EpisodeSummary> = (0..40)
            .map(|i| EpisodeSummary {
                index: i,
                seed: i * 7,
                outcome: outcomes[(i * i % 4) as usize],
                demands: i % 3,
                wdt_escalations: (i % 2) as u32,
            })
            .collect();
        let reference = aggregate(&summaries, 5, "r".into(), "s".into());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            summaries.shuffle(&mut rng);
            assert_eq!(aggregate(&summaries, 5, "r".into(), "s".into()), reference);
        }
        assert_eq!(reference.episodes, 40);
        assert_eq!(reference.collisions, reference.outcomes.collision);
    }

    #[test]
    fn demands_match_per_episode_traces() {
        let cfg = fixture("degraded");
        let rs = baseline_rules();
        let result = run_campaign_with_threads(&cfg, &rs, 12, 77, 3).unwrap();
        let mut from_traces = 0;
        for i in 0..12 {
            let mut c = cfg.clone();
            c.rng_seed = episode_seed(77, i);
            let csv = run_episode(&c, &rs).unwrap().trace_csv();
            let last = csv.lines().last().unwrap();
            from_traces += last.split(',').nth(18).unwrap().parse::<u64>().unwrap();
        }
        assert_eq!(result.guard_demands, from_traces);
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let cfg = fixture("baseline");
        let rs = baseline_rules();
        let a = run_campaign_with_threads(&cfg, &rs, 24, 9, 1).unwrap();
        let b = run_campaign_with_threads(&cfg, &rs, 24, 9, 4).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
