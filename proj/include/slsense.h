/* slsense — multi-angle mmWave gesture sensing over simulated NR sidelink.
 *
 * C interface of the shared library. All heavy state lives behind opaque
 * handles; every fallible call returns an sls_code and leaves a
 * human-readable message in sls_last_error() (thread-local).
 */
#ifndef SLSENSE_H
#define SLSENSE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int sls_code;
#define SLS_OK 0
#define SLS_ERR_CONFIG 2  /* bad config / arguments */
#define SLS_ERR_DATA 3    /* missing or malformed inputs */
#define SLS_ERR_RUNTIME 4 /* numeric or internal failure */

typedef struct sls_dataset sls_dataset;
typedef struct sls_model sls_model;

const char* sls_version(void);

/* Message for the most recent failing call on this thread. */
const char* sls_last_error(void);

/* Runs one pipeline command: generate, preprocess, train, evaluate,
 * dropout, pairs, permute, importance, federate, simulate.
 * config_json is a full run-config document (unknown keys rejected);
 * out_dir overrides the config's out_dir when non-NULL. On success and
 * when summary_json is non-NULL, *summary_json receives a malloc'd JSON
 * summary; release it with sls_string_free. */
sls_code sls_run(const char* command, const char* config_json, const char* out_dir,
                 char** summary_json);

/* ---- dataset handles ---- */
sls_dataset* sls_dataset_open(const char* manifest_path);
void sls_dataset_close(sls_dataset* dataset);
int sls_dataset_sample_count(const sls_dataset* dataset);
int sls_dataset_class_count(const sls_dataset* dataset);
int sls_dataset_angle_count(const sls_dataset* dataset);
/* Angle ids in ascending order; returns the count written (<= cap). */
int sls_dataset_angles(const sls_dataset* dataset, int* out, int cap);
const char* sls_dataset_class_name(const sls_dataset* dataset, int class_id);

/* ---- model handles ---- */
sls_model* sls_model_load(const char* checkpoint_path);
void sls_model_free(sls_model* model);
sls_code sls_model_save(const sls_model* model, const char* path);
int sls_model_class_count(const sls_model* model);

/* Class probabilities for one dataset sample, using `angles` (NULL for
 * all recorded angles). probs must hold sls_model_class_count values. */
sls_code sls_model_predict(const sls_model* model, const sls_dataset* dataset, int sample_index,
                           const int* angles, int n_angles, double* probs, int probs_cap);

/* Full evaluation of a split ("train"/"val"/"test") restricted to an
 * optional angle subset; *report_json receives a malloc'd EvalReport. */
sls_code sls_model_evaluate(const sls_model* model, const sls_dataset* dataset, const char* split,
                            const int* angles, int n_angles, char** report_json);

void sls_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SLSENSE_H */
