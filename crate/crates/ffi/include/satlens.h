#ifndef SATLENS_H
#define SATLENS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Outcome of a call.
 */
typedef enum SatlensStatus {
  SATLENS_STATUS_OK = 0,
  SATLENS_STATUS_NULL_POINTER = 1,
  SATLENS_STATUS_INVALID_ARGUMENT = 2,
  /*
   The beam outgrew the simulation grid.
   */
  SATLENS_STATUS_GUARD_BAND = 3,
  /*
   A scenario document was malformed or out of range.
   */
  SATLENS_STATUS_CONFIG = 4,
  SATLENS_STATUS_OUT_OF_RANGE = 5,
  /*
   A Rust panic was caught at the boundary.
   */
  SATLENS_STATUS_PANIC = 6,
} SatlensStatus;

/*
 Relay chain description.
 */
typedef struct SatlensChain SatlensChain;

/*
 Per-element transmission record of one run.
 */
typedef struct SatlensTrace SatlensTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message on this thread into `buffer` as a
 NUL-terminated string, truncating to `capacity` bytes. Returns the
 full message length excluding the terminator, or 0 if there is none.

 # Safety
 `buffer` must be null or valid for `capacity` writable bytes.
 */
size_t satlens_last_error_message(char *buffer, size_t capacity);

/*
 Library version as a static NUL-terminated string.
 */
const char *satlens_version(void);

/*
 Entanglement relay chain: lenses of diameter `d` every `l0` metres
 with focal lengths `l0, l0/2, l0/2, …`.

 # Safety
 `out` must be valid for one pointer write.
 */
enum SatlensStatus satlens_chain_entanglement(double d,
                                              double l0,
                                              double total_distance,
                                              double wavelength,
                                              struct SatlensChain **out);

/*
 Qubit relay chain that first focuses a flat wavefront to an Airy spot
 at least `margin` times the matched waist.

 # Safety
 `out` must be valid for one pointer write.
 */
enum SatlensStatus satlens_chain_qubit(double d,
                                       double l0,
                                       double total_distance,
                                       double margin,
                                       double wavelength,
                                       struct SatlensChain **out);

/*
 Appends a downlink of length `l_sg` onto a ground disk of `d_ground`.

 # Safety
 `chain` must be a live handle from this library.
 */
enum SatlensStatus satlens_chain_add_downlink(struct SatlensChain *chain,
                                              double l_sg,
                                              double d_ground);

/*
 Number of relay satellites in the chain.

 # Safety
 `chain` must be a live handle; `out` valid for one write.
 */
enum SatlensStatus satlens_chain_relay_count(const struct SatlensChain *chain, size_t *out);

/*
 Releases a chain. Null is ignored.

 # Safety
 `chain` must be null or a handle not yet freed.
 */
void satlens_chain_free(struct SatlensChain *chain);

/*
 Propagates the chain's matched Gaussian through it on an `n`×`n` grid
 whose side is `oversize` times the widest optic.

 # Safety
 `chain` must be a live handle; `out` valid for one pointer write.
 */
enum SatlensStatus satlens_chain_run_gaussian(const struct SatlensChain *chain,
                                              size_t n,
                                              double oversize,
                                              struct SatlensTrace **out);

/*
 Number of recorded elements.

 # Safety
 `trace` must be a live handle; `out` valid for one write.
 */
enum SatlensStatus satlens_trace_len(const struct SatlensTrace *trace, size_t *out);

/*
 Distance (m), cumulative transmission and its natural log after
 element `index`. Any out pointer may be null to skip it.

 # Safety
 `trace` must be a live handle; non-null outs valid for one write.
 */
enum SatlensStatus satlens_trace_point(const struct SatlensTrace *trace,
                                       size_t index,
                                       double *distance,
                                       double *transmission,
                                       double *log_transmission);

/*
 End-to-end transmission of the run.

 # Safety
 `trace` must be a live handle; `out` valid for one write.
 */
enum SatlensStatus satlens_trace_final_transmission(const struct SatlensTrace *trace, double *out);

/*
 Releases a trace. Null is ignored.

 # Safety
 `trace` must be null or a handle not yet freed.
 */
void satlens_trace_free(struct SatlensTrace *trace);

/*
 Fried parameter (m) of a slant path of length `path` through a
 Hufnagel-Valley atmosphere with ground term `a` and wind `wind` (m/s).

 # Safety
 `out` must be valid for one write.
 */
enum SatlensStatus satlens_fried_parameter(double path,
                                           double wavelength,
                                           double a,
                                           double wind,
                                           double *out);

/*
 Runs a scenario given as TOML text and reports its total loss budget
 in dB.

 # Safety
 `toml` must be a NUL-terminated string; `total_db` valid for one write.
 */
enum SatlensStatus satlens_scenario_total_db(const char *toml, double *total_db);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SATLENS_H */
