#ifndef FARMTALK_H
#define FARMTALK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Which extraction path to load or run.
 */
typedef enum FtBackend {
  FT_BACKEND_NS = 0,
  FT_BACKEND_LLM = 1,
  FT_BACKEND_BOTH = 2,
} FtBackend;

/*
 Scoring mode for [`ft_score`].
 */
typedef enum FtMode {
  FT_MODE_TOTAL = 0,
  FT_MODE_CORE = 1,
} FtMode;

/*
 Result code of every exported function.
 */
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_ARGUMENT = 1,
  FT_STATUS_INVALID_UTF8 = 2,
  FT_STATUS_INVALID_ARGUMENT = 3,
  FT_STATUS_CONFIG = 4,
  FT_STATUS_TRANSCRIPT = 5,
  FT_STATUS_UNAVAILABLE = 6,
  FT_STATUS_EXTRACTION = 7,
  FT_STATUS_PANIC = 8,
} FtStatus;

/*
 Opaque handle owning all loaded resources.
 */
typedef struct FtEngine FtEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Loads the resources named by a manifest for the given backends.

 On success `*out` receives a new engine. On a configuration error every
 problem is listed, one per line, in the last error message.

 # Safety
 `manifest_path` must be a NUL-terminated string and `out` a valid
 pointer to writable storage.
 */
enum FtStatus ft_engine_new(const char *manifest_path,
                            enum FtBackend backend,
                            struct FtEngine **out);

/*
 Releases an engine. Null is ignored.

 # Safety
 `engine` is null or was returned by [`ft_engine_new`] and not yet freed.
 */
void ft_engine_free(struct FtEngine *engine);

/*
 Extracts grounded records from one transcript (JSON lines of
 `{speaker, start, text}`), written to `*out_json` as a JSON array.

 `domain` may be null to let the markers decide. `backend` must be
 `FT_BACKEND_NS` or `FT_BACKEND_LLM` and must have been loaded.

 # Safety
 String arguments are NUL-terminated (or null where allowed); `engine`
 comes from [`ft_engine_new`]; `out_json` is valid for writes.
 */
enum FtStatus ft_extract(const struct FtEngine *engine,
                         const char *transcript_jsonl,
                         const char *interview_id,
                         const char *domain,
                         enum FtBackend backend,
                         char **out_json);

/*
 Scores a JSON array of records against the engine's gold records for
 `interview_id`; `*out_json` receives precision, recall, F1 and counts.

 # Safety
 As for [`ft_extract`].
 */
enum FtStatus ft_score(const struct FtEngine *engine,
                       const char *interview_id,
                       const char *records_json,
                       enum FtMode mode,
                       char **out_json);

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next call into the library on the same thread.
 */
const char *ft_last_error_message(void);

/*
 Releases a string returned by the library. Null is ignored.

 # Safety
 `s` is null or came from this library and has not been freed.
 */
void ft_string_free(char *s);

/*
 Library version as a static NUL-terminated string.
 */
const char *ft_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FARMTALK_H */
