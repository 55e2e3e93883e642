#ifndef COGMG_H
#define COGMG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every entry point.
typedef enum CogmgStatus {
  COGMG_STATUS_OK = 0,
  COGMG_STATUS_NULL_ARGUMENT = 1,
  COGMG_STATUS_INVALID_UTF8 = 2,
  COGMG_STATUS_CONFIG = 3,
  COGMG_STATUS_EMPTY_QUESTION = 4,
  COGMG_STATUS_NOT_FOUND = 5,
  COGMG_STATUS_CONFLICT = 6,
  COGMG_STATUS_INVALID_INPUT = 7,
  COGMG_STATUS_LLM_FAILURE = 8,
  COGMG_STATUS_UNAVAILABLE = 9,
  COGMG_STATUS_PARSE = 10,
  COGMG_STATUS_PANIC = 11,
} CogmgStatus;

// Opaque engine handle.
typedef struct CogmgEngine CogmgEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates an engine. `config_toml` may be null for the shipped fixtures
// and scripts; otherwise it uses the keys `kg`, `corpus`, `corpus_cache`,
// `script`, `log`, `trace_spill`, `clock` and a `[remote]` table.
//
// # Safety
// `config_toml` is null or a valid string; `out` is valid for a write.
enum CogmgStatus cogmg_engine_new(const char *config_toml, struct CogmgEngine **out);

// Destroys an engine. Null is ignored.
//
// # Safety
// `engine` is null or a handle from [`cogmg_engine_new`] not yet freed.
void cogmg_engine_free(struct CogmgEngine *engine);

// Answers a question; `*out_json` receives the trace.
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_ask(const struct CogmgEngine *engine, const char *question, char **out_json);

// Fetches a stored trace by id.
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_trace_get(const struct CogmgEngine *engine, const char *id, char **out_json);

// Lists pending records, newest first. `status` may be null for all.
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_pending_list(const struct CogmgEngine *engine,
                                    const char *status,
                                    char **out_json);

// Fetches one pending record.
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_pending_get(const struct CogmgEngine *engine,
                                   const char *id,
                                   char **out_json);

// Applies `action` ("accept", "verify", "edit" or "reject") to a record.
// `body_json` may be null except for edit, which needs `{"triples": [...]}`;
// any body may carry `"actor"`. `*out_json` receives the updated record.
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_pending_action(const struct CogmgEngine *engine,
                                      const char *id,
                                      const char *action,
                                      const char *body_json,
                                      char **out_json);

// Graph counts as `{"entities","edges","attributes"}`.
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_kg_stats(const struct CogmgEngine *engine, char **out_json);

// Adds a complete triple written `(s; p; o)`. `*out_outcome` (nullable)
// receives "added_edge", "added_attribute" or "already_present".
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_kg_add(const struct CogmgEngine *engine,
                              const char *triple,
                              char **out_outcome);

// Removes everything matching a pattern such as `(France; capital; ?)`.
//
// # Safety
// Pointer arguments follow the module conventions; `out_removed` may be null.
enum CogmgStatus cogmg_kg_remove(const struct CogmgEngine *engine,
                                 const char *pattern,
                                 size_t *out_removed);

// Parses and runs a KoPL program. A program that fails at run time yields
// `Ok` with the answer "Failed"; a program that does not parse yields
// [`CogmgStatus::Parse`].
//
// # Safety
// Pointer arguments follow the module conventions.
enum CogmgStatus cogmg_kopl_execute(const struct CogmgEngine *engine,
                                    const char *program,
                                    char **out_answer);

// Message for the last call on this thread; empty after a success. The
// pointer stays valid until the next call on the same thread.
const char *cogmg_last_error_message(void);

// Releases a string handed out by this library. Null is ignored.
//
// # Safety
// `s` is null or came from an `out` parameter of this library and was not
// freed before.
void cogmg_string_free(char *s);

// Library version as a static string.
const char *cogmg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COGMG_H */
