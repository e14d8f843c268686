#ifndef PONDGUARD_H
#define PONDGUARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PgActionKind {
  PG_ACTION_KIND_STOP = 0,
  PG_ACTION_KIND_REVERSE = 1,
  PG_ACTION_KIND_TURN_AWAY = 2,
  PG_ACTION_KIND_HOLD_COURSE = 3,
  PG_ACTION_KIND_SET_THRUST = 4,
} PgActionKind;

typedef enum PgAlarpBand {
  PG_ALARP_BAND_BELOW2 = 0,
  PG_ALARP_BAND_BAND2_TO20 = 1,
  PG_ALARP_BAND_ABOVE20 = 2,
} PgAlarpBand;

typedef enum PgOutcome {
  PG_OUTCOME_COMPLETED = 0,
  PG_OUTCOME_COLLISION = 1,
  PG_OUTCOME_GUARD_STOP = 2,
  PG_OUTCOME_TIMEOUT = 3,
} PgOutcome;

typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_ARGUMENT = 1,
  PG_STATUS_INVALID_UTF8 = 2,
  PG_STATUS_PARSE_ERROR = 3,
  PG_STATUS_VALIDATION_ERROR = 4,
  PG_STATUS_CONFIG_ERROR = 5,
  PG_STATUS_IO_ERROR = 6,
  PG_STATUS_VERIFY_ERROR = 7,
  PG_STATUS_BUFFER_TOO_SMALL = 8,
  PG_STATUS_INVALID_ARGUMENT = 9,
  PG_STATUS_PANIC = 10,
} PgStatus;

typedef struct PgEpisode PgEpisode;

typedef struct PgRuleSet PgRuleSet;

typedef struct PgScenario PgScenario;

typedef struct PgPercept {
  double distance;
  double speed;
  bool classifier_detect;
  bool sonar_trip;
  bool voted_trip;
  bool contact;
} PgPercept;

typedef struct PgBeliefs {
  bool trip_latched;
  uint32_t ticks_since_trip;
} PgBeliefs;

/**
 * Chosen action with the thrust it maps to under default control gains.
 */
typedef struct PgDecision {
  enum PgActionKind action;
  double thrust_left;
  double thrust_right;
  /**
   * Zero-based index of the rule that fired.
   */
  uint32_t rule_index;
} PgDecision;

typedef struct PgCampaignSummary {
  uint64_t episodes;
  uint64_t collisions;
  uint64_t guard_stops;
  uint64_t guard_demands;
  uint64_t wdt_escalations;
  double p_collision_hat;
  double ci95_low;
  double ci95_high;
  bool meets_threshold;
} PgCampaignSummary;

typedef struct PgVerifySummary {
  uint32_t properties;
  uint32_t holding;
  uint32_t violated;
  uint32_t inconclusive;
  uint64_t states;
  uint64_t transitions;
} PgVerifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *pg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pg_version(void);

/**
 * Parses rule-program text. `*out` receives a handle owned by the caller.
 */
enum PgStatus pg_ruleset_parse(const char *source, struct PgRuleSet **out_rules);

/**
 * Reads and parses a rule file.
 */
enum PgStatus pg_ruleset_load(const char *path, struct PgRuleSet **out_rules);

void pg_ruleset_free(struct PgRuleSet *rules);

enum PgStatus pg_ruleset_len(const struct PgRuleSet *rules, uint32_t *out_len);

/**
 * Static validation. Returns `ValidationError` when any diagnostic is an
 * error; the counts are written in either case.
 */
enum PgStatus pg_ruleset_check(const struct PgRuleSet *rules,
                               uint32_t *out_errors,
                               uint32_t *out_warnings);

/**
 * One deliberation step. `obstacle_bearing` steers `turn_away`.
 */
enum PgStatus pg_ruleset_decide(const struct PgRuleSet *rules,
                                const struct PgPercept *percept,
                                const struct PgBeliefs *beliefs,
                                double obstacle_bearing,
                                struct PgDecision *out_decision);

/**
 * Parses a scenario from JSON text.
 */
enum PgStatus pg_scenario_parse(const char *json, struct PgScenario **out_scenario);

enum PgStatus pg_scenario_load(const char *path, struct PgScenario **out_scenario);

enum PgStatus pg_scenario_set_seed(struct PgScenario *scenario, uint64_t seed);

void pg_scenario_free(struct PgScenario *scenario);

/**
 * Runs one closed-loop episode with the scenario's seed.
 */
enum PgStatus pg_episode_run(const struct PgScenario *scenario,
                             const struct PgRuleSet *rules,
                             struct PgEpisode **out_episode);

enum PgStatus pg_episode_outcome(const struct PgEpisode *episode, enum PgOutcome *out_outcome);

enum PgStatus pg_episode_stats(const struct PgEpisode *episode,
                               uint64_t *out_ticks,
                               uint64_t *out_demands,
                               uint32_t *out_escalations);

/**
 * Copies the trace CSV into `buf` with a trailing NUL. `*out_needed`
 * receives the required size including the NUL; a NULL or short buffer
 * yields `BufferTooSmall` and nothing is copied.
 */
enum PgStatus pg_episode_trace_csv(const struct PgEpisode *episode,
                                   char *buf,
                                   size_t buf_len,
                                   size_t *out_needed);

void pg_episode_free(struct PgEpisode *episode);

/**
 * Monte Carlo campaign. `threads == 0` uses the machine's parallelism.
 */
enum PgStatus pg_campaign_run(const struct PgScenario *scenario,
                              const struct PgRuleSet *rules,
                              uint64_t episodes,
                              uint64_t root_seed,
                              uint32_t threads,
                              struct PgCampaignSummary *out_summary);

/**
 * Model checks the property text against a rule program. `env_json` may
 * be NULL for the default environment; `max_states == 0` means no limit
 * beyond the library default.
 */
enum PgStatus pg_verify(const struct PgRuleSet *rules,
                        const char *properties,
                        const char *env_json,
                        uint64_t max_states,
                        struct PgVerifySummary *out_summary);

/**
 * Fail-safe 1oo2 vote over two channel readings from the same tick.
 */
enum PgStatus pg_vote_1oo2(bool a_tripped,
                           bool a_healthy,
                           bool b_tripped,
                           bool b_healthy,
                           bool *out_trip);

enum PgStatus pg_alarp_band(double dose_msv, enum PgAlarpBand *out_band);

/**
 * 95% Wilson score interval for `k` collisions in `n` episodes.
 */
enum PgStatus pg_wilson_interval(uint64_t k, uint64_t n, double *out_low, double *out_high);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PONDGUARD_H */
