#ifndef COMO_COMO_H
#define COMO_COMO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COMO_API __declspec(dllexport)
#else
#define COMO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum como_status {
    COMO_OK = 0,
    COMO_ERR_ARGUMENT = 1,
    COMO_ERR_CONFIG = 2,
    COMO_ERR_DATA = 3,
    COMO_ERR_DEGENERATE = 4,
    COMO_ERR_STAGE = 5,
    COMO_ERR_IO = 6,
    COMO_ERR_INTERNAL = 7
} como_status;

typedef struct como_config como_config;
typedef struct como_runner como_runner;

/* Receives progress lines; `user` is passed through unchanged. */
typedef void (*como_log_fn)(const char* line, void* user);

COMO_API const char* como_version(void);
COMO_API const char* como_status_name(como_status s);
/* Message of the last failure on the calling thread; empty after success. */
COMO_API const char* como_last_error(void);

COMO_API como_status como_config_new(como_config** out);
COMO_API como_status como_config_load(const char* path, como_config** out);
/* Paths given here resolve against the working directory. */
COMO_API como_status como_config_set(como_config* cfg, const char* key, const char* value);
COMO_API como_status como_config_validate(const como_config* cfg);
/* Copies the canonical text into buf (NUL-terminated, truncated to cap) and
   stores the full length, without NUL, in *needed when non-null. */
COMO_API como_status como_config_text(const como_config* cfg, char* buf, size_t cap, size_t* needed);
COMO_API como_status como_config_keys(char* buf, size_t cap, size_t* needed);
COMO_API void como_config_free(como_config* cfg);

COMO_API como_status como_runner_new(const como_config* cfg, int resume, como_log_fn log, void* user,
                                     como_runner** out);
/* Stage names: ingest features graph train explain symbolize analyze. */
COMO_API como_status como_runner_run_stage(como_runner* r, const char* stage, int* cached);
COMO_API como_status como_runner_run_all(como_runner* r);
COMO_API como_status como_runner_evaluate(como_runner* r);
COMO_API como_status como_runner_write_manifest(como_runner* r);
COMO_API void como_runner_free(como_runner* r);

/* Writes a synthetic dataset and a ready-to-run pipeline.conf into dir. */
COMO_API como_status como_synth_write(const char* dir, unsigned classes, unsigned blocks_per_class, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
