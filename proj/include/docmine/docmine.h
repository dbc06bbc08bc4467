/* docmine C API.
 *
 * Every function returning int returns DM_OK (0) on success or a positive
 * error code. The message and JSON detail of the most recent failure on the
 * calling thread are available through dm_last_error() and
 * dm_last_error_json(). Strings and buffers handed out by the library are
 * released with dm_free().
 */
#ifndef DOCMINE_H
#define DOCMINE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DM_API __declspec(dllexport)
#else
#define DM_API __attribute__((visibility("default")))
#endif

enum {
  DM_OK = 0,
  DM_ERR_MALFORMED_PDF = 1,
  DM_ERR_ENCRYPTED_PDF,
  DM_ERR_EMPTY_REGION,
  DM_ERR_NO_CANDIDATES,
  DM_ERR_VALIDATION,
  DM_ERR_NOT_LOCKED,
  DM_ERR_LOCK_HELD,
  DM_ERR_PRINCIPAL_HELD,
  DM_ERR_UNKNOWN_DOCUMENT,
  DM_ERR_DUPLICATE_CHECKSUM,
  DM_ERR_INVALID_STAGE,
  DM_ERR_REGION_OUT_OF_PAGE,
  DM_ERR_NO_CONTENT,
  DM_ERR_INVALID_EDIT,
  DM_ERR_OCR_CLIENT_UNAVAILABLE,
  DM_ERR_UNKNOWN_CELL,
  DM_ERR_UNKNOWN_TABLE,
  DM_ERR_INVALID_RULE,
  DM_ERR_INVALID_OFFSETS,
  DM_ERR_UNKNOWN_LABEL,
  DM_ERR_UNKNOWN_SPAN,
  DM_ERR_UNKNOWN_FIELD,
  DM_ERR_UNPARSEABLE_LABEL,
  DM_ERR_INVALID_VALUE,
  DM_ERR_UNKNOWN_LINE,
  DM_ERR_INSUFFICIENT_LINES,
  DM_ERR_DEGENERATE_AXIS,
  DM_ERR_NOT_CALIBRATED,
  DM_ERR_OUT_OF_REGION,
  DM_ERR_UNKNOWN_MAP,
  DM_ERR_UNKNOWN_POINT,
  DM_ERR_NO_HEADER_CONFIG,
  DM_ERR_KEY_FIELD_UNMAPPED,
  DM_ERR_EMPTY_HEADER_ROW,
  DM_ERR_UNPARSEABLE_FILE,
  DM_ERR_DUPLICATE_FIELD,
  DM_ERR_KEY_REMOVED,
  DM_ERR_HEADER_MISMATCH,
  DM_ERR_UNKNOWN_PROJECT,
  DM_ERR_UNKNOWN_USER,
  DM_ERR_DUPLICATE_USER,
  DM_ERR_UNAUTHENTICATED,
  DM_ERR_NOT_FOUND,
  DM_ERR_BAD_REQUEST,
  DM_ERR_INTERNAL
};

typedef struct dm_service dm_service;
typedef struct dm_response dm_response;

DM_API const char* dm_version(void);

/* Name of an error code, e.g. "LockHeld"; "Ok" for DM_OK. */
DM_API const char* dm_error_name(int code);
DM_API const char* dm_last_error(void);
/* {"code","message","detail"?} or "null" when the last call succeeded. */
DM_API const char* dm_last_error_json(void);

DM_API void dm_free(void* p);

/* Loads config_path (may be NULL), then DOCMINE_* environment overrides,
 * then overrides_json (may be NULL; same keys as the config file). Returns
 * the effective configuration as JSON in *out. */
DM_API int dm_config_resolve(const char* config_path, const char* overrides_json, char** out);

DM_API int dm_service_open(const char* config_path, const char* overrides_json, dm_service** out);
DM_API void dm_service_close(dm_service* svc);

/* Creates an account directly in the store. */
DM_API int dm_service_add_user(dm_service* svc, const char* user_id, const char* display_name,
                               const char* password);

/* Dispatches one request without a network hop. target is a path with an
 * optional query string; headers_json is a JSON object of header names to
 * values (may be NULL). HTTP-level failures come back as a response with a
 * 4xx/5xx status, not as an error code. */
DM_API int dm_service_request(dm_service* svc, const char* method, const char* target,
                              const char* headers_json, const void* body, size_t body_len,
                              dm_response** out);

DM_API int dm_response_status(const dm_response* r);
DM_API const char* dm_response_content_type(const dm_response* r);
DM_API const void* dm_response_body(const dm_response* r, size_t* len);
/* NULL when absent. */
DM_API const char* dm_response_header(const dm_response* r, const char* name);
DM_API void dm_response_free(dm_response* r);

/* Waits until queued uploads are parsed. */
DM_API int dm_service_wait_idle(dm_service* svc);

/* Serves HTTP until dm_service_stop(). on_ready (may be NULL) receives the
 * bound port. */
DM_API int dm_service_serve(dm_service* svc, void (*on_ready)(int port, void* user), void* user);
DM_API void dm_service_stop(dm_service* svc);

/* Synthetic corpus: PDF bytes and the ground-truth sidecar (JSON text). */
DM_API int dm_fixture_generate(int index, unsigned long long seed, char** pdf, size_t* pdf_len,
                               char** sidecar_json);
DM_API int dm_fixture_write_corpus(const char* dir, int count, unsigned long long seed);

/* Parses a PDF and runs every detector with default settings. *out is JSON:
 * {checksum, page_count, meta, sections, tables, maps}. */
DM_API int dm_analyze_pdf(const void* bytes, size_t len, char** out);

#ifdef __cplusplus
}
#endif

#endif
