/* Copyright 2026 The cvsense Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License. */

/**
 * @file cvsense.h
 * C interface of libcvsense.
 *
 * Objects are opaque handles released with the matching *_free function
 * (passing NULL is allowed). Every fallible call returns a cvs_status; on
 * failure cvs_last_error() describes the most recent error of the calling
 * thread. Strings returned by the library stay valid until the owning
 * handle is freed or, for cvs_last_error, until the next failing call.
 */
#ifndef CVSENSE_H
#define CVSENSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CVS_API __declspec(dllexport)
#else
#define CVS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cvs_status {
    CVS_OK = 0,
    CVS_ERR_INVALID_ARGUMENT = 1,
    CVS_ERR_NUMERICAL = 2,
    CVS_ERR_CONFIG = 3,
    CVS_ERR_IO = 4,
    CVS_ERR_FORMAT = 5,
    CVS_ERR_OPTIMIZER = 6,
    CVS_ERR_INTERNAL = 7
} cvs_status;

typedef struct cvs_campaign cvs_campaign;
typedef struct cvs_trace cvs_trace;
typedef struct cvs_bench cvs_bench;

typedef struct cvs_bench_params {
    double r;
    double alpha;
    double eta;
    double n_bar;
    double phase_noise_rms;
    long long samples_per_measurement;
    uint64_t seed;
} cvs_bench_params;

typedef struct cvs_summary {
    int epochs;
    double best_cost;
    int best_epoch;
    double final_phi_hd;
    double final_phi_alpha;
    long long total_measurements;
    double shot_noise_limit;
    int below_shot_noise_limit;
    int kicks;
    int kicks_recovered;
} cvs_summary;

CVS_API const char *cvs_version(void);
CVS_API const char *cvs_last_error(void);
CVS_API const char *cvs_status_name(cvs_status status);

/* Campaigns */
CVS_API cvs_status cvs_campaign_load(const char *path, cvs_campaign **out);
CVS_API cvs_status cvs_campaign_parse(const char *json_text, cvs_campaign **out);
CVS_API cvs_status cvs_campaign_set_seeds(cvs_campaign *campaign, const uint64_t *seeds, size_t count);
CVS_API cvs_status cvs_campaign_set_out_dir(cvs_campaign *campaign, const char *dir);
/* mode: "gd", "bo", "gd-then-bo" or "landscape". */
CVS_API cvs_status cvs_campaign_set_mode(cvs_campaign *campaign, const char *mode);
/* Runs every seed, up to `parallel` at once. Returns the status of the
   first failed run, CVS_OK if all succeeded. */
CVS_API cvs_status cvs_campaign_run(cvs_campaign *campaign, int parallel);
CVS_API size_t cvs_campaign_run_count(const cvs_campaign *campaign);
/* Any output pointer may be NULL. */
CVS_API cvs_status cvs_campaign_run_result(const cvs_campaign *campaign, size_t index, uint64_t *seed,
                                           cvs_status *status, const char **dir, const char **message);
CVS_API void cvs_campaign_free(cvs_campaign *campaign);

/* Traces */
CVS_API cvs_status cvs_trace_load(const char *path, cvs_trace **out);
CVS_API cvs_status cvs_trace_summary(const cvs_trace *trace, cvs_summary *out);
/* Writes the text report with its terminating NUL if it fits in `capacity`;
   `needed` (may be NULL) receives the size including the NUL. */
CVS_API cvs_status cvs_trace_report(const cvs_trace *trace, char *buffer, size_t capacity, size_t *needed);
CVS_API void cvs_trace_free(cvs_trace *trace);

/* Virtual bench */
CVS_API void cvs_bench_default_params(cvs_bench_params *params);
CVS_API cvs_status cvs_bench_create(const cvs_bench_params *params, cvs_bench **out);
CVS_API cvs_status cvs_bench_measure(cvs_bench *bench, double phi_hd, double phi_alpha, double *mean,
                                     double *variance);
/* Five-measurement cost estimate; +inf when the Fisher information vanishes. */
CVS_API cvs_status cvs_bench_estimate_cost(cvs_bench *bench, double phi_hd, double phi_alpha, double *cost);
CVS_API void cvs_bench_free(cvs_bench *bench);
CVS_API cvs_status cvs_true_cost(const cvs_bench_params *params, double phi_hd, double phi_alpha, double *cost);
CVS_API cvs_status cvs_shot_noise_limit(const cvs_bench_params *params, double *cost);

#ifdef __cplusplus
}
#endif

#endif /* CVSENSE_H */
