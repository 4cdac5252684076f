#ifndef EDRAM_DCR_H
#define EDRAM_DCR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EdrStatus {
  EDR_STATUS_OK = 0,
  EDR_STATUS_NULL_ARGUMENT = 1,
  EDR_STATUS_INVALID_UTF8 = 2,
  EDR_STATUS_CONFIG = 3,
  EDR_STATUS_TRACE = 4,
  EDR_STATUS_SIMULATION = 5,
  EDR_STATUS_NOT_FOUND = 6,
  EDR_STATUS_PANIC = 7,
} EdrStatus;

typedef enum EdrScheme {
  EDR_SCHEME_BASELINE = 0,
  EDR_SCHEME_SRAM = 1,
  EDR_SCHEME_RPV = 2,
  EDR_SCHEME_DCR = 3,
} EdrScheme;

typedef enum EdrMetric {
  EDR_METRIC_TOTAL_ENERGY_J = 0,
  EDR_METRIC_CYCLES = 1,
  EDR_METRIC_RPKI = 2,
  EDR_METRIC_MPKI = 3,
  EDR_METRIC_ACTIVE_RATIO_PCT = 4,
  // Comparison only.
  EDR_METRIC_ENERGY_SAVING_PCT = 5,
  // Comparison only.
  EDR_METRIC_PERF_IMPROVEMENT_PCT = 6,
  // Comparison only.
  EDR_METRIC_DELTA_RPKI = 7,
  // Comparison only.
  EDR_METRIC_DELTA_MPKI = 8,
} EdrMetric;

typedef struct EdrComparison EdrComparison;

// Validated configuration with its trace source.
typedef struct EdrConfig EdrConfig;

typedef struct EdrRunReport EdrRunReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. Empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *edr_last_error(void);

// Loads and validates a TOML config file. Relative paths inside it resolve
// against the file's directory.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum EdrStatus edr_config_load(const char *path, struct EdrConfig **out);

// Parses config text. `base_dir` anchors relative paths and may be null
// for the current directory.
//
// # Safety
// `text` must be a NUL-terminated string, `base_dir` null or one; `out`
// must be writable.
enum EdrStatus edr_config_parse(const char *text, const char *base_dir, struct EdrConfig **out);

// # Safety
// `config` must come from `edr_config_load`/`edr_config_parse` or be null.
void edr_config_free(struct EdrConfig *config);

// Runs one scheme. The scheme must be listed in the config.
//
// # Safety
// `config` must be a live handle; `out` must be writable.
enum EdrStatus edr_run(const struct EdrConfig *config,
                       enum EdrScheme scheme,
                       struct EdrRunReport **out);

// Runs every configured scheme and compares each with the baseline.
//
// # Safety
// `config` must be a live handle; `out` must be writable.
enum EdrStatus edr_compare(const struct EdrConfig *config, struct EdrComparison **out);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum EdrStatus edr_run_metric(const struct EdrRunReport *report,
                              enum EdrMetric metric,
                              double *out);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum EdrStatus edr_comparison_metric(const struct EdrComparison *report,
                                     enum EdrScheme scheme,
                                     enum EdrMetric metric,
                                     double *out);

// Serializes a run report as JSON.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum EdrStatus edr_run_to_json(const struct EdrRunReport *report, char **out);

// Serializes the comparison table as JSON.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum EdrStatus edr_comparison_to_json(const struct EdrComparison *report, char **out);

// # Safety
// `report` must come from `edr_run` or be null.
void edr_run_free(struct EdrRunReport *report);

// # Safety
// `report` must come from `edr_compare` or be null.
void edr_comparison_free(struct EdrComparison *report);

// # Safety
// `s` must come from this library or be null.
void edr_string_free(char *s);

// Number of page colors of a cache geometry.
//
// # Safety
// `out` must be writable.
enum EdrStatus edr_color_count(uint64_t size_bytes,
                               uint32_t associativity,
                               uint64_t block_bytes,
                               uint64_t page_bytes,
                               uint32_t *out);

// ABI revision of this library.
uint32_t edr_abi_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDRAM_DCR_H */
