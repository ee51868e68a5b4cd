#ifndef ANNOCART_H
#define ANNOCART_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AnnocartMode {
  ANNOCART_MODE_SINGLE = 0,
  ANNOCART_MODE_MULTI = 1,
} AnnocartMode;

/**
 * Result code of every fallible call.
 */
typedef enum AnnocartStatus {
  ANNOCART_STATUS_OK = 0,
  ANNOCART_STATUS_NULL_POINTER = 1,
  ANNOCART_STATUS_INVALID_UTF8 = 2,
  ANNOCART_STATUS_PARSE = 3,
  ANNOCART_STATUS_INVALID_INPUT = 4,
  ANNOCART_STATUS_CONFIG = 5,
  ANNOCART_STATUS_TRAINING = 6,
  ANNOCART_STATUS_STATISTICS = 7,
  ANNOCART_STATUS_IO = 8,
  ANNOCART_STATUS_OUT_OF_RANGE = 9,
  ANNOCART_STATUS_PANIC = 10,
} AnnocartStatus;

/**
 * Opaque validated corpus.
 */
typedef struct AnnocartCorpus AnnocartCorpus;

/**
 * Opaque data map.
 */
typedef struct AnnocartDataMap AnnocartDataMap;

/**
 * Opaque per-epoch training dynamics.
 */
typedef struct AnnocartDynamics AnnocartDynamics;

/**
 * Training hyperparameters; start from [`annocart_train_config_default`].
 */
typedef struct AnnocartTrainConfig {
  size_t epochs;
  double learning_rate;
  size_t batch_size;
  uint64_t seed;
  size_t annotator_dim;
  double l2_penalty;
  size_t dim;
  size_t ngram_order;
} AnnocartTrainConfig;

/**
 * One data-map point; `gold` indexes the label vocabulary of its dynamics.
 */
typedef struct AnnocartPoint {
  double confidence;
  double variability;
  double correctness;
  uint32_t gold;
} AnnocartPoint;

typedef struct AnnocartCorrelation {
  size_t n_pairs;
  double r;
  double p_value;
} AnnocartCorrelation;

typedef struct AnnocartTestResult {
  double statistic;
  double p_value;
  size_t n1;
  size_t n2;
  /**
   * True when the p-value comes from exact enumeration.
   */
  bool exact;
} AnnocartTestResult;

typedef struct AnnocartSummary {
  size_t n;
  double min;
  double q1;
  double median;
  double q3;
  double max;
  double mean;
} AnnocartSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if the last call
 * succeeded. Release with [`annocart_string_free`].
 */
char *annocart_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void annocart_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *annocart_version(void);

/**
 * Parse and validate a corpus in the JSON-lines ingestion format.
 *
 * # Safety
 * `jsonl` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AnnocartStatus annocart_corpus_parse(const char *jsonl, struct AnnocartCorpus **out);

/**
 * # Safety
 * `corpus` must be NULL or a handle from [`annocart_corpus_parse`] not yet freed.
 */
void annocart_corpus_free(struct AnnocartCorpus *corpus);

/**
 * Item, annotator, annotation and label counts. Any output may be NULL.
 *
 * # Safety
 * `corpus` must be a live handle; non-NULL outputs must be writable.
 */
enum AnnocartStatus annocart_corpus_counts(const struct AnnocartCorpus *corpus,
                                           size_t *items,
                                           size_t *annotators,
                                           size_t *annotations,
                                           size_t *labels);

/**
 * Name of label `index`. Release with [`annocart_string_free`].
 *
 * # Safety
 * `corpus` must be a live handle and `out` writable.
 */
enum AnnocartStatus annocart_corpus_label(const struct AnnocartCorpus *corpus,
                                          size_t index,
                                          char **out);

struct AnnocartTrainConfig annocart_train_config_default(void);

/**
 * Train on the whole corpus and return the recorded dynamics.
 * `config` may be NULL for defaults.
 *
 * # Safety
 * `corpus` must be a live handle, `config` NULL or readable, `out` writable.
 */
enum AnnocartStatus annocart_train(const struct AnnocartCorpus *corpus,
                                   enum AnnocartMode mode,
                                   const struct AnnocartTrainConfig *config,
                                   struct AnnocartDynamics **out);

/**
 * Parse a dynamics file in the JSON-lines format written by `annocart train`.
 *
 * # Safety
 * `jsonl` must be a NUL-terminated string and `out` writable.
 */
enum AnnocartStatus annocart_dynamics_parse(const char *jsonl, struct AnnocartDynamics **out);

/**
 * Serialize dynamics as JSON lines, without a metadata header.
 *
 * # Safety
 * `dynamics` must be a live handle and `out` writable.
 */
enum AnnocartStatus annocart_dynamics_to_jsonl(const struct AnnocartDynamics *dynamics, char **out);

/**
 * # Safety
 * `dynamics` must be NULL or a live handle.
 */
void annocart_dynamics_free(struct AnnocartDynamics *dynamics);

/**
 * Reduce dynamics to confidence, variability and correctness per key.
 *
 * # Safety
 * `dynamics` must be a live handle and `out` writable.
 */
enum AnnocartStatus annocart_datamap_build(const struct AnnocartDynamics *dynamics,
                                           struct AnnocartDataMap **out);

/**
 * # Safety
 * `map` must be NULL or a live handle.
 */
void annocart_datamap_free(struct AnnocartDataMap *map);

/**
 * Number of points, or 0 for a NULL handle.
 *
 * # Safety
 * `map` must be NULL or a live handle.
 */
size_t annocart_datamap_len(const struct AnnocartDataMap *map);

/**
 * Point `index` in key order, with optional copies of its item and
 * annotator ids. `item_id` and `annotator_id` may be NULL.
 *
 * # Safety
 * `map` must be a live handle; non-NULL outputs must be writable.
 */
enum AnnocartStatus annocart_datamap_point(const struct AnnocartDataMap *map,
                                           size_t index,
                                           struct AnnocartPoint *point,
                                           char **item_id,
                                           char **annotator_id);

/**
 * Serialize the map in the TSV data-map format, without a metadata header.
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
enum AnnocartStatus annocart_datamap_to_tsv(const struct AnnocartDataMap *map, char **out);

/**
 * Pearson correlation between data-map confidence and agreement level,
 * with a permutation p-value.
 *
 * # Safety
 * `map` and `corpus` must be live handles and `out` writable.
 */
enum AnnocartStatus annocart_correlate_confidence_agreement(const struct AnnocartDataMap *map,
                                                            const struct AnnocartCorpus *corpus,
                                                            size_t permutations,
                                                            uint64_t seed,
                                                            bool exclude_ties,
                                                            struct AnnocartCorrelation *out);

/**
 * # Safety
 * `xs` and `ys` must each point to `n` readable values; `out` writable.
 */
enum AnnocartStatus annocart_pearson(const double *xs, const double *ys, size_t n, double *out);

/**
 * Two-sided permutation p-value for the Pearson correlation.
 *
 * # Safety
 * `xs` and `ys` must each point to `n` readable values; `out` writable.
 */
enum AnnocartStatus annocart_pearson_pvalue(const double *xs,
                                            const double *ys,
                                            size_t n,
                                            size_t permutations,
                                            uint64_t seed,
                                            double *out);

/**
 * Two-sided Mann-Whitney U test; exact for small samples.
 *
 * # Safety
 * `xs` must point to `n1` values, `ys` to `n2`; `out` writable.
 */
enum AnnocartStatus annocart_mann_whitney(const double *xs,
                                          size_t n1,
                                          const double *ys,
                                          size_t n2,
                                          struct AnnocartTestResult *out);

/**
 * Five-number summary (type 7 quantiles) and mean.
 *
 * # Safety
 * `values` must point to `n` readable values; `out` writable.
 */
enum AnnocartStatus annocart_summarize(const double *values, size_t n, struct AnnocartSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANNOCART_H */
