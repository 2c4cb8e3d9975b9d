/* C interface to the obstacle-detection pipeline.
 *
 * Every function returns OBDET_OK (0) on success or a nonzero status; the
 * message for the most recent failure on the calling thread is available via
 * obdet_last_error(). Strings returned through char** out-parameters are
 * heap-allocated and must be released with obdet_string_free().
 */
#ifndef OBDET_OBDET_H_
#define OBDET_OBDET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#ifdef OBDET_BUILD
#define OBDET_API __declspec(dllexport)
#else
#define OBDET_API __declspec(dllimport)
#endif
#else
#define OBDET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum obdet_status {
  OBDET_OK = 0,
  OBDET_ERR_INVALID_ARGUMENT = 1, /* caller-supplied value violates a precondition */
  OBDET_ERR_IO = 2,               /* filesystem failure, including missing inputs */
  OBDET_ERR_FORMAT = 3,           /* malformed or inconsistent file content */
  OBDET_ERR_GEOMETRY = 4,         /* point not representable in the camera model */
  OBDET_ERR_INTERNAL = 5          /* broken internal invariant */
} obdet_status;

OBDET_API const char* obdet_version(void);

/* Message of the last failing call on this thread; empty after a success. */
OBDET_API const char* obdet_last_error(void);

OBDET_API void obdet_string_free(char* s);

/* ------------------------------------------------------------------------- */
/* Pipeline parameters (opaque)                                              */
/* ------------------------------------------------------------------------- */

typedef struct obdet_params obdet_params;

/* Creates parameters with built-in defaults. */
OBDET_API obdet_status obdet_params_create(obdet_params** out);
/* Loads parameters from a JSON file. */
OBDET_API obdet_status obdet_params_load(const char* path, obdet_params** out);
/* Sets one field by dotted key ("stereo.max_disparity", "detector.cell_size_m",
 * "source", ...). A bare field name works when unambiguous. */
OBDET_API obdet_status obdet_params_set(obdet_params* params, const char* key,
                                        const char* value);
OBDET_API obdet_status obdet_params_to_json(const obdet_params* params, char** out_text);
OBDET_API void obdet_params_free(obdet_params* params);

/* ------------------------------------------------------------------------- */
/* Pipeline entry points                                                     */
/* ------------------------------------------------------------------------- */

/* Renders the synthetic suite described by suite_json_path into out_dir
 * (manifest.json, calibration.json, annotations.json, frames/...). When
 * has_seed_override is nonzero, seed_override replaces the suite seed. If
 * out_manifest_path is non-NULL it receives the path of the written manifest. */
OBDET_API obdet_status obdet_generate_dataset(const char* suite_json_path, const char* out_dir,
                                              int has_seed_override, uint64_t seed_override,
                                              int jobs, char** out_manifest_path);

/* Runs obstacle detection over every frame of a dataset and writes one
 * detections JSON file. calib_path, when non-NULL, replaces the calibration
 * referenced by the manifest; params NULL means defaults. */
OBDET_API obdet_status obdet_run_detect(const char* manifest_path, const char* calib_path,
                                        const obdet_params* params,
                                        const char* out_detections_path, int jobs);

typedef struct obdet_summary {
  int n_tps; /* frames that required a stop and got one */
  int n_fps; /* frames stopped for no reason */
  int n_fns; /* frames that required a stop and missed it */
  int n_tn;  /* frames correctly left alone */
  double tpr; /* NaN when no frame required a stop */
  double fpr; /* NaN when every frame required a stop */
} obdet_summary;

/* Detection + stop-decision scoring. Writes the per-frame report CSV to
 * out_report_path unless it is NULL; fills *out_summary unless it is NULL. */
OBDET_API obdet_status obdet_run_evaluate(const char* manifest_path, const char* calib_path,
                                          const obdet_params* params,
                                          const char* out_report_path, int jobs,
                                          obdet_summary* out_summary);

/* Exhaustive parameter grid sweep. The config file defines the axes, the
 * FPR budget and optionally the dataset (manifest_path overrides it when
 * non-NULL). overrides is an array of "key=value" strings applied to the
 * config's base parameters. Writes sweep.csv, frontier.csv and selected.json
 * into out_dir. cache_depths reuses depth maps across grid points that share
 * depth-affecting parameters; it never changes any output byte. If
 * out_frontier_size is non-NULL it receives the number of frontier points
 * (0 means no grid point had both rates defined). */
OBDET_API obdet_status obdet_run_sweep(const char* manifest_path, const char* calib_path,
                                       const char* config_path, const char* const* overrides,
                                       size_t n_overrides, const char* out_dir, int jobs,
                                       int cache_depths, int* out_frontier_size);

/* Renders a report CSV as "csv" (canonical form) or "json". */
OBDET_API obdet_status obdet_report_render(const char* report_csv_path, const char* format,
                                           char** out_text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OBDET_OBDET_H_ */
