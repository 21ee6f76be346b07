#ifndef TESSLA_H
#define TESSLA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call. The numeric values match the exit codes of the
 * `tessla` command line tool where both exist.
 */
typedef enum TesslaStatus {
  TESSLA_STATUS_OK = 0,
  TESSLA_STATUS_SPEC_ERROR = 1,
  TESSLA_STATUS_TRACE_ERROR = 2,
  TESSLA_STATUS_RUNTIME_ERROR = 3,
  TESSLA_STATUS_NULL_ARGUMENT = 10,
  TESSLA_STATUS_INVALID_UTF8 = 11,
  /**
   * The monitor was already finished or stopped at the event limit.
   */
  TESSLA_STATUS_FINISHED = 12,
  TESSLA_STATUS_PANIC = 13,
} TesslaStatus;

/**
 * An incremental monitor reading trace text.
 */
typedef struct TesslaMonitor TesslaMonitor;

/**
 * A compiled specification.
 */
typedef struct TesslaSpec TesslaSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Compiles specification source text. On success `*out` receives a handle
 * to release with `tessla_spec_free`.
 *
 * # Safety
 * `source` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum TesslaStatus tessla_spec_compile(const char *source, struct TesslaSpec **out);

/**
 * # Safety
 * `spec` must be null or a handle from `tessla_spec_compile` not yet freed.
 */
void tessla_spec_free(struct TesslaSpec *spec);

/**
 * Number of declared inputs, or 0 for a null handle.
 *
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t tessla_spec_input_count(const struct TesslaSpec *spec);

/**
 * Number of outputs, or 0 for a null handle.
 *
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t tessla_spec_output_count(const struct TesslaSpec *spec);

/**
 * The flattened core form of the specification as text.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum TesslaStatus tessla_spec_flatten(const struct TesslaSpec *spec, char **out);

/**
 * Creates a monitor. `max_events` bounds the generated timestamps; 0
 * selects the default.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum TesslaStatus tessla_monitor_new(const struct TesslaSpec *spec,
                                     uint64_t max_events,
                                     struct TesslaMonitor **out);

/**
 * # Safety
 * `monitor` must be null or a handle from `tessla_monitor_new` not yet freed.
 */
void tessla_monitor_free(struct TesslaMonitor *monitor);

/**
 * Feeds trace text. Text may end in the middle of a line; the rest is kept
 * for the next call. `*out` receives the output lines that became final,
 * also when an error is returned.
 *
 * # Safety
 * `monitor` must be a live handle, `text` a nul-terminated string and
 * `out` a valid pointer.
 */
enum TesslaStatus tessla_monitor_feed(struct TesslaMonitor *monitor, const char *text, char **out);

/**
 * Ends the input: processes a trailing unterminated line and writes the
 * remaining output together with the final progress directive.
 *
 * # Safety
 * Same as `tessla_monitor_feed`.
 */
enum TesslaStatus tessla_monitor_finish(struct TesslaMonitor *monitor, char **out);

/**
 * Evaluates a whole trace at once. `*out` receives the output trace, or
 * the part produced before an error.
 *
 * # Safety
 * `spec` must be a live handle, `trace` a nul-terminated string and `out`
 * a valid pointer.
 */
enum TesslaStatus tessla_run(const struct TesslaSpec *spec,
                             const char *trace,
                             uint64_t max_events,
                             char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void tessla_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *tessla_last_error(void);

/**
 * Library version as a static string.
 */
const char *tessla_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TESSLA_H */
