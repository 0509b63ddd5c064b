#ifndef ORAN_H
#define ORAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OranStatus {
  ORAN_STATUS_OK = 0,
  ORAN_STATUS_NULL_ARGUMENT = 1,
  ORAN_STATUS_INVALID_UTF8 = 2,
  ORAN_STATUS_MALFORMED_PDU = 3,
  ORAN_STATUS_ENCODE_FAILED = 4,
  ORAN_STATUS_INVALID_SCENARIO = 5,
  ORAN_STATUS_RUN_FAILED = 6,
  ORAN_STATUS_BUFFER_TOO_SMALL = 7,
  ORAN_STATUS_INVALID_ARGUMENT = 8,
  ORAN_STATUS_PANIC = 9,
} OranStatus;

// Decoded E2AP PDU.
typedef struct OranPdu OranPdu;

// Finished closed-loop scenario run.
typedef struct OranRun OranRun;

// Simulated RAN stepped by the caller.
typedef struct OranSim OranSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none.
const char *oran_last_error(void);

// # Safety
// `s` must come from this library, or be null.
void oran_string_free(char *s);

// Decodes one framed E2AP PDU.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum OranStatus oran_pdu_decode(const uint8_t *data, size_t len, struct OranPdu **out);

// Encodes `pdu` into `buf`. `*written` receives the encoded length, also
// when `cap` is too small (status `BufferTooSmall`), so callers can size
// a buffer with a first call passing `cap` 0.
//
// # Safety
// `pdu` must be a live handle; `buf` must hold `cap` writable bytes (may be
// null when `cap` is 0); `written` must be writable.
enum OranStatus oran_pdu_encode(const struct OranPdu *pdu,
                                uint8_t *buf,
                                size_t cap,
                                size_t *written);

// # Safety
// `pdu` must be a live handle.
uint16_t oran_pdu_procedure_code(const struct OranPdu *pdu);

// Field-per-line text form of the PDU; free with `oran_string_free`.
//
// # Safety
// `pdu` must be a live handle.
char *oran_pdu_render(const struct OranPdu *pdu);

// # Safety
// `pdu` must come from `oran_pdu_decode`, or be null.
void oran_pdu_free(struct OranPdu *pdu);

// Builds a simulator from the TOML topology (`[[nodes]]`, `[[cells]]`,
// `[[ues]]`).
//
// # Safety
// `config_toml` must be a NUL-terminated string; `out` must be writable.
enum OranStatus oran_sim_new(const char *config_toml, uint64_t seed, struct OranSim **out);

// Advances the simulator by `ticks` milliseconds.
//
// # Safety
// `sim` must be a live handle.
enum OranStatus oran_sim_step(struct OranSim *sim, uint64_t ticks);

// # Safety
// `sim` must be a live handle.
uint64_t oran_sim_now(const struct OranSim *sim);

// Hex SHA-256 of the simulator state; free with `oran_string_free`.
//
// # Safety
// `sim` must be a live handle.
char *oran_sim_state_hash(const struct OranSim *sim);

// # Safety
// `sim` must come from `oran_sim_new`, or be null.
void oran_sim_free(struct OranSim *sim);

// Runs a bundled scenario by name, or a scenario file by path, in process.
// `seed` overrides the scenario's seed when `use_seed` is true.
//
// # Safety
// `scenario` must be a NUL-terminated string; `out` must be writable.
enum OranStatus oran_run_scenario(const char *scenario,
                                  uint64_t seed,
                                  bool use_seed,
                                  struct OranRun **out);

// Final state hash, borrowed from the handle.
//
// # Safety
// `run` must be a live handle.
const char *oran_run_state_hash(const struct OranRun *run);

// Share of evaluation windows after warmup in which any slice missed its
// objective.
//
// # Safety
// `run` must be a live handle.
double oran_run_violation_rate(const struct OranRun *run);

// The full run report as JSON; free with `oran_string_free`.
//
// # Safety
// `run` must be a live handle.
char *oran_run_report_json(const struct OranRun *run);

// One CSV artifact by file name; null if the run produced no such file.
// Free with `oran_string_free`.
//
// # Safety
// `run` must be a live handle; `name` a NUL-terminated string.
char *oran_run_file(const struct OranRun *run, const char *name);

// # Safety
// `run` must come from `oran_run_scenario`, or be null.
void oran_run_free(struct OranRun *run);

// Strict-priority PRB split of `capacity` over `n` slices given in
// priority order (index 0 first).
//
// # Safety
// `demand` must hold `n` readable values and `split_out` `n` writable ones.
enum OranStatus oran_baseline_split(const uint32_t *demand,
                                    size_t n,
                                    uint32_t capacity,
                                    uint32_t *split_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORAN_H */
