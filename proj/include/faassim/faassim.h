/* Copyright 2026 The faassim Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the faassim simulator. All handles are opaque and owned by
 * the caller once returned; release them with the matching *_free function.
 * Functions return FAASSIM_OK or an error status; the message for the last
 * failure on the calling thread is available from faassim_last_error().
 * Strings returned through char** outputs are released with faassim_string_free.
 */
#ifndef FAASSIM_FAASSIM_H_
#define FAASSIM_FAASSIM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FAASSIM_API __declspec(dllexport)
#else
#define FAASSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum faassim_status {
  FAASSIM_OK = 0,
  FAASSIM_E_PARSE = 1,
  FAASSIM_E_MISSING_COLUMN = 2,
  FAASSIM_E_UNKNOWN_FUNCTION_ID = 3,
  FAASSIM_E_NON_MONOTONE_PERCENTILES = 4,
  FAASSIM_E_NEGATIVE_COUNT = 5,
  FAASSIM_E_INVALID_PROFILE = 6,
  FAASSIM_E_INSUFFICIENT_FUNCTIONS = 7,
  FAASSIM_E_SCHEDULING_IN_PAST = 8,
  FAASSIM_E_HANDLER_PANIC = 9,
  FAASSIM_E_CLUSTER_OUT_OF_MEMORY = 10,
  FAASSIM_E_TERMINATE_BUSY_INSTANCE = 11,
  FAASSIM_E_CONCURRENCY_EXCEEDED = 12,
  FAASSIM_E_ILLEGAL_TRANSITION = 13,
  FAASSIM_E_BINDING_VIOLATION = 14,
  FAASSIM_E_EMPTY_FUNCTION = 15,
  FAASSIM_E_NON_POSITIVE_SLOWDOWN = 16,
  FAASSIM_E_ZERO_BUSY_INTEGRAL = 17,
  FAASSIM_E_ZERO_USEFUL_WORK = 18,
  FAASSIM_E_UNKNOWN_KEY = 19,
  FAASSIM_E_INVARIANT_VIOLATION = 20,
  FAASSIM_E_IO = 21,
  FAASSIM_E_INVALID_ARGUMENT = 22,
  FAASSIM_E_UNDEFINED = 23, /* metric has no value for this run */
  FAASSIM_E_INTERNAL = 24
} faassim_status;

typedef struct faassim_config faassim_config;
typedef struct faassim_report faassim_report;
typedef struct faassim_sweep faassim_sweep;
typedef struct faassim_sweep_result faassim_sweep_result;

FAASSIM_API const char* faassim_version(void);
FAASSIM_API const char* faassim_status_name(faassim_status status);
/* Message of the last failed call on this thread ("" when none). */
FAASSIM_API const char* faassim_last_error(void);
FAASSIM_API void faassim_string_free(char* s);

/* --- experiment configs --- */
FAASSIM_API faassim_status faassim_config_load(const char* path, faassim_config** out);
/* base_dir resolves relative paths; may be NULL. */
FAASSIM_API faassim_status faassim_config_parse(const char* json, const char* base_dir, faassim_config** out);
/* Dotted-path override, "policy.keepalive_ms=30000". Revalidates. */
FAASSIM_API faassim_status faassim_config_set(faassim_config* config, const char* assignment);
FAASSIM_API faassim_status faassim_config_seed(const faassim_config* config, uint64_t* out);
FAASSIM_API faassim_status faassim_config_output_dir(const faassim_config* config, char** out);
FAASSIM_API faassim_status faassim_config_to_json(const faassim_config* config, char** out);
FAASSIM_API void faassim_config_free(faassim_config* config);

/* --- single runs --- */
/* event_log_path may be NULL; otherwise every processed event is logged there. */
FAASSIM_API faassim_status faassim_run(const faassim_config* config, const char* event_log_path,
                                       faassim_report** out);
FAASSIM_API faassim_status faassim_scale(const faassim_config* config, faassim_report** out);

/* Metric names: "slowdown", "normalized_memory", "creation_rate", "teardown_rate",
 * "cpu_overhead", "worker_share", "cold_start_fraction", "invocations",
 * "measured_invocations", "events_processed", "peak_node_utilization".
 * Returns FAASSIM_E_UNDEFINED when the run has no value for the metric. */
FAASSIM_API faassim_status faassim_report_metric(const faassim_report* report, const char* name, double* out);
FAASSIM_API faassim_status faassim_report_json(const faassim_report* report, char** out);
/* Default file stem, "{policy}_{params}_{seed}". */
FAASSIM_API faassim_status faassim_report_basename(const faassim_report* report, char** out);
/* Writes <basename>.json, <basename>_cdf.csv and <basename>_nodes.csv under dir. */
FAASSIM_API faassim_status faassim_report_write(const faassim_report* report, const char* dir, const char* basename);
FAASSIM_API void faassim_report_free(faassim_report* report);

/* --- sweeps --- */
FAASSIM_API faassim_status faassim_sweep_load(const char* path, faassim_sweep** out);
/* Override applied to the base config of every point. */
FAASSIM_API faassim_status faassim_sweep_set(faassim_sweep* sweep, const char* assignment);
FAASSIM_API faassim_status faassim_sweep_point_count(const faassim_sweep* sweep, size_t* out);
/* parallelism <= 0 uses the sweep file's value, then the core count. */
FAASSIM_API faassim_status faassim_sweep_run(const faassim_sweep* sweep, const char* out_dir, int parallelism,
                                             faassim_sweep_result** out);
FAASSIM_API void faassim_sweep_free(faassim_sweep* sweep);

FAASSIM_API size_t faassim_sweep_result_points(const faassim_sweep_result* result);
FAASSIM_API size_t faassim_sweep_result_failed(const faassim_sweep_result* result);
/* Borrowed strings, valid until the result is freed; error is "" on success. */
FAASSIM_API faassim_status faassim_sweep_result_point(const faassim_sweep_result* result, size_t index,
                                                      const char** basename, const char** error);
/* Borrowed report, NULL for a failed point. */
FAASSIM_API const faassim_report* faassim_sweep_result_report(const faassim_sweep_result* result, size_t index);
FAASSIM_API void faassim_sweep_result_free(faassim_sweep_result* result);

/* --- synthetic traces --- */
/* spec_path holds a synthetic-trace spec (the workload.synthetic object) or a
 * JSON array of such specs, generated as a mixture of classes. Writes
 * invocations.csv, durations.csv and memory.csv under out_dir. */
FAASSIM_API faassim_status faassim_gen_trace(const char* spec_path, uint64_t seed, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* FAASSIM_FAASSIM_H_ */
