#ifndef DETFORM_DETFORM_H
#define DETFORM_DETFORM_H

/* C interface to the detform library. Every object is an opaque handle
 * created by a *_new / *_load / *_parse call and released by the matching
 * *_free. Calls that can fail return df_status; on failure df_last_error()
 * holds a message for the calling thread until its next failing call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DF_API __declspec(dllexport)
#else
#define DF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum df_status {
  DF_OK = 0,
  DF_INVALID_ARGUMENT = 1,
  DF_GRID_MISMATCH = 2,
  DF_PRECONDITION = 3,
  DF_BLOW_UP = 4,
  DF_NON_CONVERGENCE = 5,
  DF_UNDEFINED_BOUND = 6,
  DF_CONFIG = 7,
  DF_IO = 8,
  DF_INTERNAL = 99
} df_status;

typedef struct df_config df_config;
typedef struct df_run df_run;
typedef struct df_flow df_flow;
typedef struct df_field df_field;

DF_API const char* df_version(void);
DF_API const char* df_last_error(void);
DF_API const char* df_status_name(df_status s);
DF_API df_status df_set_threads(int n);

/* Configuration. parse/load leave the document open for df_config_set;
 * df_config_finalize installs defaults and checks mandatory keys. */
DF_API df_status df_config_parse(const char* text, df_config** out);
DF_API df_status df_config_load(const char* path, df_config** out);
DF_API df_status df_config_set(df_config* c, const char* key, const char* value);
DF_API df_status df_config_finalize(df_config* c);
/* Effective value of key, or NULL when unset. Valid until the next set. */
DF_API const char* df_config_get(const df_config* c, const char* key);
DF_API void df_config_free(df_config* c);

/* Runs a finalized configuration; writes outputs and manifest.json. */
DF_API df_status df_experiment_run(const df_config* c, df_run** out);
DF_API int df_run_passed(const df_run* r);
/* One "PASS name: value rel threshold" or "FAIL ..." line per assertion. */
DF_API const char* df_run_summary(const df_run* r);
DF_API const char* df_run_manifest_path(const df_run* r);
DF_API size_t df_run_note_count(const df_run* r);
DF_API const char* df_run_note(const df_run* r, size_t i);
DF_API void df_run_free(df_run* r);

/* *ok is 1 when every listed digest matches; mismatches go to df_last_error. */
DF_API df_status df_manifest_verify(const char* manifest_path, int* ok);

/* Flow problem built from the [flow] and [constants] sections. */
DF_API df_status df_flow_new(const df_config* c, df_flow** out);
DF_API double df_flow_grashof(const df_flow* f);
DF_API void df_flow_free(df_flow* f);

DF_API df_status df_field_zero(const df_flow* f, df_field** out);
/* Unit-L2 random divergence-free field with |u_k| ~ |k|^-decay. */
DF_API df_status df_field_random(const df_flow* f, uint64_t seed, double decay, df_field** out);
DF_API df_status df_field_load(const char* path, df_field** out);
DF_API df_status df_field_save(const df_field* u, const char* path);
DF_API df_status df_field_norms(const df_field* u, double* l2, double* h1, double* h2);
DF_API void df_field_free(df_field* u);

/* Advances u by steps time steps of the flow's dt. */
DF_API df_status df_step(const df_flow* f, df_field* u, int steps);
DF_API df_status df_steady_state(const df_flow* f, df_field** out, double* residual);

/* Bound report for (G, N) with unit constants except those given:
 * key=value lines written to buf (NUL-terminated, truncated to len);
 * *needed receives the full length including the NUL. */
DF_API df_status df_bounds_text(double G, int64_t N, double ratio_hf, char* buf, size_t len,
                                size_t* needed);

#ifdef __cplusplus
}
#endif

#endif
