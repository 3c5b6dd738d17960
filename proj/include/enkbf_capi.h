/* C interface to the enkbf simulation library.
 *
 * All entry points are exception-free and communicate failure through
 * enkbf_status codes plus optional malloc'd message strings.  Configurations
 * are opaque handles created by the load/parse functions and released with
 * enkbf_config_free.  Every char* returned to the caller (messages, canonical
 * text, hashes) must be released with enkbf_string_free.
 */
#ifndef ENKBF_CAPI_H
#define ENKBF_CAPI_H

#include <stdint.h>

#if defined(_WIN32)
#if defined(ENKBF_CAPI_BUILD)
#define ENKBF_API __declspec(dllexport)
#else
#define ENKBF_API __declspec(dllimport)
#endif
#else
#define ENKBF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct enkbf_config enkbf_config; /* opaque */

typedef enum enkbf_status {
    ENKBF_OK = 0,
    ENKBF_ERR_INVALID = 1,    /* null pointer / bad argument */
    ENKBF_ERR_VALIDATION = 2, /* config rejected (CLI exit 2) */
    ENKBF_ERR_DIVERGED = 3,   /* numerical divergence (CLI exit 3) */
    ENKBF_ERR_IO = 4          /* filesystem failure */
} enkbf_status;

/* Semantic version of the library, static storage (do not free). */
ENKBF_API const char* enkbf_version(void);

/* Parse a config file / in-memory text.  Syntax and schema problems yield
 * NULL; if err is non-NULL, *err receives the full multi-line error list.
 * The result is NOT yet semantically validated: the experiment kind may
 * still be unset (enkbf_config_set_kind) and overrides applied before
 * enkbf_validate / enkbf_run. */
ENKBF_API enkbf_config* enkbf_config_load(const char* path, char** err);
ENKBF_API enkbf_config* enkbf_config_parse(const char* text, char** err);
ENKBF_API void enkbf_config_free(enkbf_config* cfg);

/* Overrides.  set_kind accepts "signal", "enkbf", "kalman-bucy", "coupling",
 * "sweep", "expmoment", "fpf" and fails with ENKBF_ERR_INVALID otherwise.
 * get_kind returns "" while unset. */
ENKBF_API enkbf_status enkbf_config_set_kind(enkbf_config* cfg, const char* kind);
ENKBF_API enkbf_status enkbf_config_set_seed(enkbf_config* cfg, uint64_t seed);
ENKBF_API enkbf_status enkbf_config_set_out(enkbf_config* cfg, const char* dir);
ENKBF_API char* enkbf_config_get_kind(const enkbf_config* cfg);
ENKBF_API char* enkbf_config_get_out(const enkbf_config* cfg);

/* Canonical serialized form and config fingerprint (hex).  Both require a
 * semantically valid config and return NULL otherwise. */
ENKBF_API char* enkbf_config_canonical(const enkbf_config* cfg);
ENKBF_API char* enkbf_config_hash(const enkbf_config* cfg);

/* Full semantic validation.  ENKBF_OK or ENKBF_ERR_VALIDATION with the
 * complete problem list in *err (one per line). */
ENKBF_API enkbf_status enkbf_validate(const enkbf_config* cfg, char** err);

/* Run the experiment and write its artifacts plus manifest under the
 * configured output directory.  threads <= 0 keeps the current default
 * (hardware concurrency).  Artifact bytes do not depend on threads. */
ENKBF_API enkbf_status enkbf_run(const enkbf_config* cfg, int threads, char** err);

ENKBF_API void enkbf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* ENKBF_CAPI_H */
