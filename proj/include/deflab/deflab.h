#ifndef DEFLAB_H
#define DEFLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DFL_API __declspec(dllexport)
#else
#define DFL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as process exit codes for the command-line tool. */
typedef enum dfl_status {
  DFL_OK = 0,
  DFL_ERR_INTERNAL = 1,
  DFL_ERR_INVALID_CONFIG = 2,
  DFL_ERR_STRICT = 3,
  DFL_ERR_INVALID_ARGUMENT = 4
} dfl_status;

typedef struct dfl_experiment dfl_experiment;
typedef struct dfl_field dfl_field;

DFL_API const char* dfl_version(void);

/* Message for the most recent failure on the calling thread ("" if none). */
DFL_API const char* dfl_last_error(void);

DFL_API dfl_status dfl_experiment_create_from_file(const char* config_path, dfl_experiment** out);
DFL_API dfl_status dfl_experiment_create_from_json(const char* config_json, dfl_experiment** out);
DFL_API dfl_status dfl_experiment_set_seed(dfl_experiment* exp, uint64_t seed);
DFL_API dfl_status dfl_experiment_set_workers(dfl_experiment* exp, int workers);

/* Runs one of: deform, minimax, oracle, pscheck, proof-trace, geometry.
   Writes report.json and CSV artifacts into out_dir. With strict != 0, a
   failed invariant check yields DFL_ERR_STRICT (the report is still written). */
DFL_API dfl_status dfl_experiment_run(dfl_experiment* exp, const char* subcommand, const char* out_dir, int strict);

/* Report JSON of the last successful run, owned by the handle; NULL before. */
DFL_API const char* dfl_experiment_report(const dfl_experiment* exp);

/* Normalized config JSON, owned by the handle. */
DFL_API const char* dfl_experiment_config(const dfl_experiment* exp);

DFL_API void dfl_experiment_destroy(dfl_experiment* exp);

/* functional_json takes the "functional" config object; box_json may be NULL
   for the default box, else {"lo": [...], "hi": [...]}. */
DFL_API dfl_status dfl_field_create(const char* functional_json, const char* box_json, dfl_field** out);
DFL_API int dfl_field_dim(const dfl_field* field);
DFL_API dfl_status dfl_field_evaluate(const dfl_field* field, const double* u, size_t dim, double* out);
DFL_API dfl_status dfl_field_gradient(const dfl_field* field, const double* u, size_t dim, double* out);
DFL_API void dfl_field_destroy(dfl_field* field);

#ifdef __cplusplus
}
#endif

#endif
