#ifndef SELX_H
#define SELX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SelxStatus {
  SELX_STATUS_OK = 0,
  // A required pointer argument was null.
  SELX_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  SELX_STATUS_INVALID_UTF8 = 2,
  // The model failed to parse, type-check or compile.
  SELX_STATUS_MODEL_ERROR = 3,
  // The property names no assertion and does not parse or bind.
  SELX_STATUS_PROPERTY_ERROR = 4,
  // No counter-example (witness in witness mode) exists within the bound.
  SELX_STATUS_PROPERTY_HOLDS = 5,
  // The operation found no alternative; the session is unchanged.
  SELX_STATUS_NO_ALTERNATIVE = 6,
  // Stepping backward from position 0.
  SELX_STATUS_BOUNDARY = 7,
  SELX_STATUS_UNKNOWN_TYPE = 8,
  // The checker rejected the query (zero bound or malformed model).
  SELX_STATUS_CHECK_ERROR = 9,
  // An enum argument was out of range.
  SELX_STATUS_INVALID_ARGUMENT = 10,
  // An internal panic was caught at the boundary.
  SELX_STATUS_PANIC = 11,
} SelxStatus;

typedef enum SelxMode {
  SELX_MODE_COUNTER_EXAMPLE = 0,
  SELX_MODE_WITNESS = 1,
} SelxMode;

typedef enum SelxOp {
  SELX_OP_FORWARD = 0,
  SELX_OP_BACKWARD = 1,
  SELX_OP_ALT_STATE = 2,
  SELX_OP_ALT_EVENT = 3,
  // Needs the type name argument of [`selx_session_apply`].
  SELX_OP_SET_TYPE = 4,
} SelxOp;

// A compiled model.
typedef struct SelxModel SelxModel;

// An exploration session over a model.
typedef struct SelxSession SelxSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *selx_version(void);

// Message of the last failed call on this thread, or null after a
// successful call. Valid until the next call on this thread.
const char *selx_last_error(void);

// Source position of the last error, when it has one. Returns whether
// `line` and `column` were written.
//
// # Safety
// `line` and `column` are null or valid for writes.
bool selx_last_error_location(size_t *line, size_t *column);

// Parses and compiles model source. On success `*out` receives a model to
// release with [`selx_model_free`].
//
// # Safety
// `source` is a NUL-terminated string; `out` is valid for writes.
enum SelxStatus selx_model_compile(const char *source, bool add_idle, struct SelxModel **out);

// Number of reachable states, or 0 for a null model.
//
// # Safety
// `model` is null or a live model handle.
size_t selx_model_state_count(const struct SelxModel *model);

// # Safety
// `model` is null or a live model handle not used afterwards.
void selx_model_free(struct SelxModel *model);

// Checks `property` (an assertion name or a formula) up to `bound` in the
// given [`SelxMode`] and opens a session on the first counter-example, or
// witness in witness mode. Returns `PropertyHolds` with `*out` null when there is none.
//
// # Safety
// `model` is a live model handle, `property` a NUL-terminated string and
// `out` valid for writes.
enum SelxStatus selx_session_create(const struct SelxModel *model,
                                    const char *property,
                                    size_t bound,
                                    uint32_t mode,
                                    struct SelxSession **out);

// # Safety
// `session` is null or a live session handle not used afterwards.
void selx_session_free(struct SelxSession *session);

// When `strict` is set, `SetType` also keeps the restriction recorded at
// the focus.
//
// # Safety
// `session` is null or a live session handle.
enum SelxStatus selx_session_set_strict(struct SelxSession *session, bool strict);

// Applies one [`SelxOp`]. `type_name` is read only for `SetType`.
//
// # Safety
// `session` is a live session handle; `type_name` is null or a
// NUL-terminated string.
enum SelxStatus selx_session_apply(struct SelxSession *session, uint32_t op, const char *type_name);

// Current focus position, or 0 for a null session.
//
// # Safety
// `session` is null or a live session handle.
size_t selx_session_focus(const struct SelxSession *session);

// Revision counter, or 0 for a null session.
//
// # Safety
// `session` is null or a live session handle.
uint64_t selx_session_revision(const struct SelxSession *session);

// Writes the current trace as JSON, in the same shape as the HTTP
// `GET /sessions/{id}/trace` body.
//
// # Safety
// `session` is a live session handle; `out` is valid for writes.
enum SelxStatus selx_session_trace_json(const struct SelxSession *session, char **out);

// Runs the enabled-types dry run at the focus and writes the result as
// JSON, in the same shape as the HTTP `GET /sessions/{id}/enabled` body.
//
// # Safety
// `session` is a live session handle; `out` is valid for writes.
enum SelxStatus selx_session_enabled_json(const struct SelxSession *session, char **out);

// Releases a string returned by this library.
//
// # Safety
// `s` is null or a string from this library not used afterwards.
void selx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELX_H */
