#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "pondguard.h"

#define CHECK(expr)                                                          \
  do {                                                                       \
    enum PgStatus st_ = (expr);                                              \
    if (st_ != PG_STATUS_OK) {                                               \
      fprintf(stderr, "%s failed: %d %s\n", #expr, st_, pg_last_error());    \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 3) {
    fprintf(stderr, "usage: smoke RULES SCENARIO\n");
    return 2;
  }
  PgRuleSet *rules = NULL;
  PgScenario *scenario = NULL;
  PgEpisode *episode = NULL;
  CHECK(pg_ruleset_load(argv[1], &rules));
  uint32_t errors = 0, warnings = 0;
  CHECK(pg_ruleset_check(rules, &errors, &warnings));

  PgPercept p = {0.5, 0.2, true, true, true, false};
  PgBeliefs b = {true, 3};
  PgDecision d;
  CHECK(pg_ruleset_decide(rules, &p, &b, 0.0, &d));

  CHECK(pg_scenario_load(argv[2], &scenario));
  CHECK(pg_episode_run(scenario, rules, &episode));
  PgOutcome outcome;
  CHECK(pg_episode_outcome(episode, &outcome));
  size_t needed = 0;
  if (pg_episode_trace_csv(episode, NULL, 0, &needed) != PG_STATUS_BUFFER_TOO_SMALL) {
    return 1;
  }
  char *csv = malloc(needed);
  CHECK(pg_episode_trace_csv(episode, csv, needed, &needed));
  const char *eol = strchr(csv, '\n');

  PgRuleSet *bad = NULL;
  enum PgStatus st = pg_ruleset_parse("rule x when", &bad);

  printf("version=%s action=%d rule=%u outcome=%d header=%.*s parse_status=%d error_empty=%d\n",
         pg_version(), d.action, d.rule_index, outcome, (int)(eol - csv), csv, st,
         pg_last_error()[0] == '\0');
  free(csv);
  pg_episode_free(episode);
  pg_scenario_free(scenario);
  pg_ruleset_free(rules);
  pg_ruleset_free(bad);
  return 0;
}
