#ifndef DMWM_H
#define DMWM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  DMWM_PROVENANCE_SLOW_MIND = 0,
  DMWM_PROVENANCE_FAST_MIND = 1,
  DMWM_PROVENANCE_BASELINE = 2,
} DmwmProvenance;

typedef enum {
  DMWM_ROLLOUT_MODE_PAPER_LITERAL = 0,
  DMWM_ROLLOUT_MODE_SERVED_TRANSMISSIONS = 1,
} DmwmRolloutMode;

typedef enum {
  DMWM_STATUS_OK = 0,
  DMWM_STATUS_NULL_POINTER = 1,
  DMWM_STATUS_INVALID_ARGUMENT = 2,
  DMWM_STATUS_INVALID_CONFIG = 3,
  DMWM_STATUS_UNKNOWN_SCENARIO = 4,
  DMWM_STATUS_UNKNOWN_POLICY = 5,
  DMWM_STATUS_SIMULATION_ENDED = 6,
  DMWM_STATUS_BUFFER_TOO_SMALL = 7,
  DMWM_STATUS_PANIC = 8,
} DmwmStatus;

/**
 * Opaque scenario handle.
 */
typedef struct DmwmScenario DmwmScenario;

/**
 * Opaque simulation handle: one seeded run of one policy.
 */
typedef struct DmwmSimulation DmwmSimulation;

/**
 * Result of one executed slot. Node sets are bitmasks (bit `i` = node `i`), so at most 64 nodes.
 */
typedef struct {
  uint32_t slot;
  uint32_t reward;
  uint32_t provenance;
  uint64_t scheduled_mask;
  uint64_t served_mask;
  uint64_t new_violations;
  uint64_t new_drops;
} DmwmStepInfo;

typedef struct {
  double throughput;
  double avg_queue;
  double avg_delay;
  uint64_t violations;
  uint64_t drops;
  uint64_t arrivals;
  uint64_t delivered;
  uint64_t final_backlog;
} DmwmMetrics;

/**
 * Message of the most recent failure on this thread, or null. Owned by the library.
 */
const char *dmwm_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void dmwm_string_free(char *s);

/**
 * Creates one of the built-in scenarios: `default`, `bursty`, `deadline`, `interference`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
DmwmStatus dmwm_scenario_builtin(const char *name, DmwmScenario **out);

/**
 * Parses and validates a JSON scenario document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
DmwmStatus dmwm_scenario_from_json(const char *json, DmwmScenario **out);

/**
 * Serializes a scenario to JSON. Free the result with [`dmwm_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
DmwmStatus dmwm_scenario_to_json(const DmwmScenario *scenario, char **out);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
size_t dmwm_scenario_n_nodes(const DmwmScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
DmwmStatus dmwm_scenario_set_seed(DmwmScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void dmwm_scenario_free(DmwmScenario *scenario);

/**
 * Starts run `run_index` of `policy` (`dmwm|random|lqf|deadline|rr|qlearn`) on a copy of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle, `policy` a NUL-terminated string, `out` writable.
 */
DmwmStatus dmwm_simulation_new(const DmwmScenario *scenario,
                               const char *policy,
                               uint32_t run_index,
                               DmwmSimulation **out);

/**
 * Executes one slot. `info` may be null.
 *
 * # Safety
 * `sim` must be a live handle; `info` null or writable.
 */
DmwmStatus dmwm_simulation_step(DmwmSimulation *sim, DmwmStepInfo *info);

/**
 * Steps until the configured horizon is reached.
 *
 * # Safety
 * `sim` must be a live handle.
 */
DmwmStatus dmwm_simulation_run(DmwmSimulation *sim);

/**
 * Current slot index, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uint32_t dmwm_simulation_slot(const DmwmSimulation *sim);

/**
 * Copies the current queue lengths into `out[0..len]`; `len` must be at least the node count.
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to `len` writable `u32`s.
 */
DmwmStatus dmwm_simulation_queue_lengths(const DmwmSimulation *sim, uint32_t *out, size_t len);

/**
 * Metrics over the slots executed so far.
 *
 * # Safety
 * `sim` must be a live handle; `out` writable.
 */
DmwmStatus dmwm_simulation_metrics(const DmwmSimulation *sim, DmwmMetrics *out);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void dmwm_simulation_free(DmwmSimulation *sim);

/**
 * Constraint feasibility of one schedule.
 *
 * `queue_lengths`, `oldest_age` and `deadlines` have `n` entries. An age of `-1` means an
 * empty queue and a deadline of `0` means no deadline. `conflict_pairs` holds `n_pairs`
 * `(i, j)` pairs flattened.
 *
 * # Safety
 * All pointers must reference arrays of the stated lengths; `out` must be writable.
 */
DmwmStatus dmwm_icn_check(const uint32_t *schedule,
                          size_t schedule_len,
                          const uint32_t *queue_lengths,
                          const int64_t *oldest_age,
                          const uint32_t *deadlines,
                          size_t n,
                          const uint32_t *conflict_pairs,
                          size_t n_pairs,
                          bool *out);

/**
 * Imagined reward of serving `schedule` for `horizon` slots from `queue_lengths`.
 *
 * # Safety
 * `queue_lengths` must hold `n` entries, `schedule` `schedule_len`; `out` writable.
 */
DmwmStatus dmwm_rollout_reward(const uint32_t *queue_lengths,
                               size_t n,
                               const uint32_t *schedule,
                               size_t schedule_len,
                               size_t horizon,
                               DmwmRolloutMode mode,
                               uint32_t *out);

#endif  /* DMWM_H */
