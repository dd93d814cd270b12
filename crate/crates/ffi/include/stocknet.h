#ifndef STOCKNET_H
#define STOCKNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum SnCalendarPolicy {
  SN_CALENDAR_POLICY_UNION = 0,
  SN_CALENDAR_POLICY_INTERSECTION = 1,
} SnCalendarPolicy;

typedef enum SnExportFormat {
  SN_EXPORT_FORMAT_GEXF = 0,
  SN_EXPORT_FORMAT_GRAPHML = 1,
  SN_EXPORT_FORMAT_DOT = 2,
  SN_EXPORT_FORMAT_EDGE_CSV = 3,
} SnExportFormat;

typedef enum SnReturnMode {
  SN_RETURN_MODE_SIMPLE = 0,
  SN_RETURN_MODE_DIFF = 1,
  SN_RETURN_MODE_LOG = 2,
} SnReturnMode;

/**
 * Result codes. Values 2 through 6 and 70 match the command-line exit codes.
 */
typedef enum SnStatus {
  SN_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SN_STATUS_NULL_POINTER = 1,
  SN_STATUS_USAGE = 2,
  SN_STATUS_PARSE = 3,
  SN_STATUS_DATA = 4,
  SN_STATUS_UNKNOWN_TICKER = 5,
  SN_STATUS_IO = 6,
  /**
   * A string argument was not valid UTF-8.
   */
  SN_STATUS_INVALID_UTF8 = 7,
  /**
   * Rust code panicked; the handle arguments are left untouched.
   */
  SN_STATUS_PANIC = 8,
  SN_STATUS_INTERNAL = 70,
} SnStatus;

typedef struct SnGraph SnGraph;

typedef struct SnMatrix SnMatrix;

typedef struct SnPanel SnPanel;

typedef struct SnReturns SnReturns;

typedef struct SnTable SnTable;

typedef struct SnTransferReport SnTransferReport;

/**
 * Column names for CSV parsing. NULL fields take the defaults
 * (`ticker`, `date`, `close`, `%Y-%m-%d`).
 */
typedef struct SnSchema {
  const char *ticker;
  const char *date;
  const char *close;
  const char *date_format;
} SnSchema;

/**
 * One transfer result. `target` is borrowed from the report handle.
 */
typedef struct SnTransferRow {
  const char *target;
  double rmse;
  double mae;
  size_t n_predictions;
  /**
   * Graph hops from the source; -1 when unreachable.
   */
  int64_t hop_distance;
} SnTransferRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *sn_last_error(void);

/**
 * Library version as a static string.
 */
const char *sn_version(void);

/**
 * # Safety
 * `s` must come from a stocknet function returning `char *` ownership, and
 * must not be freed twice.
 */
void sn_string_free(char *s);

/**
 * Parses EoD CSV bytes into a table. `schema` may be NULL.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `schema`, if not NULL, must
 * point to a valid `SnSchema` whose non-NULL fields are NUL-terminated.
 */
enum SnStatus sn_table_parse_csv(const uint8_t *data,
                                 size_t len,
                                 const struct SnSchema *schema,
                                 struct SnTable **out);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum SnStatus sn_table_ticker_count(const struct SnTable *table, size_t *out);

/**
 * Keeps tickers listed over the whole window and not excluded. Dates are
 * `YYYY-MM-DD`.
 *
 * # Safety
 * `table` must be a live handle; `exclude` must hold `n_exclude` valid C
 * strings (or be NULL when `n_exclude` is 0).
 */
enum SnStatus sn_table_prune(const struct SnTable *table,
                             const char *window_start,
                             const char *window_end,
                             const char *const *exclude,
                             size_t n_exclude,
                             struct SnTable **out);

/**
 * # Safety
 * `table` must be NULL or a handle not yet freed.
 */
void sn_table_free(struct SnTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum SnStatus sn_panel_build(const struct SnTable *table,
                             enum SnCalendarPolicy policy,
                             struct SnPanel **out);

/**
 * Dates, tickers and missing cells of a panel. Any out-pointer may be NULL.
 *
 * # Safety
 * `panel` must be a live handle.
 */
enum SnStatus sn_panel_shape(const struct SnPanel *panel,
                             size_t *dates,
                             size_t *tickers,
                             size_t *missing);

/**
 * # Safety
 * `panel` must be NULL or a handle not yet freed.
 */
void sn_panel_free(struct SnPanel *panel);

/**
 * # Safety
 * `panel` must be a live handle and `out` writable.
 */
enum SnStatus sn_returns_compute(const struct SnPanel *panel,
                                 enum SnReturnMode mode,
                                 struct SnReturns **out);

/**
 * # Safety
 * `returns` must be NULL or a handle not yet freed.
 */
void sn_returns_free(struct SnReturns *returns);

/**
 * # Safety
 * `returns` must be a live handle and `out` writable.
 */
enum SnStatus sn_matrix_compute(const struct SnReturns *returns,
                                size_t min_overlap,
                                struct SnMatrix **out);

/**
 * Number of tickers (rows and columns).
 *
 * # Safety
 * `matrix` must be a live handle or NULL (which yields 0).
 */
size_t sn_matrix_size(const struct SnMatrix *matrix);

/**
 * Ticker of row `i`, borrowed from the handle; NULL when out of range.
 *
 * # Safety
 * `matrix` must be a live handle or NULL.
 */
const char *sn_matrix_ticker(const struct SnMatrix *matrix, size_t i);

/**
 * Coefficient at `(i, j)`. `*defined` is 0 when the coefficient is absent,
 * in which case `*rho` is NaN.
 *
 * # Safety
 * `matrix` must be a live handle; `rho` and `defined` writable.
 */
enum SnStatus sn_matrix_get(const struct SnMatrix *matrix,
                            size_t i,
                            size_t j,
                            double *rho,
                            bool *defined);

/**
 * # Safety
 * `matrix` must be NULL or a handle not yet freed.
 */
void sn_matrix_free(struct SnMatrix *matrix);

/**
 * Thresholded graph: edge iff rho > `threshold`.
 *
 * # Safety
 * `matrix` must be a live handle and `out` writable.
 */
enum SnStatus sn_graph_build(const struct SnMatrix *matrix, double threshold, struct SnGraph **out);

/**
 * # Safety
 * `graph` must be a live handle or NULL (which yields 0).
 */
size_t sn_graph_node_count(const struct SnGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle or NULL (which yields 0).
 */
size_t sn_graph_edge_count(const struct SnGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle or NULL (which yields 0).
 */
size_t sn_graph_component_count(const struct SnGraph *graph);

/**
 * Node `i` in lexicographic order, borrowed from the handle; NULL when out
 * of range.
 *
 * # Safety
 * `graph` must be a live handle or NULL.
 */
const char *sn_graph_node(const struct SnGraph *graph, size_t i);

/**
 * Shortest-path hops between two tickers; -1 when either is absent or they
 * are disconnected.
 *
 * # Safety
 * `graph` must be a live handle; `a`, `b` NUL-terminated; `out` writable.
 */
enum SnStatus sn_graph_hops(const struct SnGraph *graph,
                            const char *a,
                            const char *b,
                            int64_t *out);

/**
 * Serializes the graph; the caller frees `*out` with [`sn_string_free`].
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum SnStatus sn_graph_export(const struct SnGraph *graph, enum SnExportFormat format, char **out);

/**
 * # Safety
 * `graph` must be NULL or a handle not yet freed.
 */
void sn_graph_free(struct SnGraph *graph);

/**
 * Fits the autoregressive baseline on `source` and evaluates it on each
 * target. Rows are ordered by rmse.
 *
 * # Safety
 * `returns` and `graph` must be live handles; `source` NUL-terminated;
 * `targets` must hold `n_targets` valid C strings; `out` writable.
 */
enum SnStatus sn_transfer_run(const struct SnReturns *returns,
                              const struct SnGraph *graph,
                              const char *source,
                              const char *const *targets,
                              size_t n_targets,
                              size_t window,
                              double split,
                              struct SnTransferReport **out);

/**
 * # Safety
 * `report` must be a live handle or NULL (which yields 0).
 */
size_t sn_transfer_len(const struct SnTransferReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum SnStatus sn_transfer_row(const struct SnTransferReport *report,
                              size_t i,
                              struct SnTransferRow *out);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void sn_transfer_free(struct SnTransferReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOCKNET_H */
