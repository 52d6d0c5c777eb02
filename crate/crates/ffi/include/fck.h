#ifndef FCK_H
#define FCK_H

#include <stdbool.h>
#include <stddef.h>

typedef enum FckPenalty {
  FCK_PENALTY_FLAT = 0,
  FCK_PENALTY_GEOMETRIC = 1,
  FCK_PENALTY_SUPER_GEOMETRIC = 2,
} FckPenalty;

typedef enum FckStatus {
  FCK_STATUS_OK = 0,
  /*
   A fit finished but the duality gap is above tolerance. The model
   output is still written.
   */
  FCK_STATUS_NOT_CONVERGED = 1,
  FCK_STATUS_NULL_POINTER = 2,
  FCK_STATUS_INVALID_ARGUMENT = 3,
  FCK_STATUS_IO = 4,
  FCK_STATUS_PARSE = 5,
  FCK_STATUS_INTERNAL = 6,
} FckStatus;

typedef struct FckMatrix FckMatrix;

typedef struct FckModel FckModel;

/*
 Shared fitting options. A `lambda` of zero or less runs a path of
 `n_lambdas` points down to `lambda_min_ratio · λ_max` and returns the
 last model.
 */
typedef struct FckFitOptions {
  double lambda;
  size_t n_lambdas;
  double lambda_min_ratio;
  enum FckPenalty penalty;
  double penalty_base;
  double penalty_exponent;
  size_t max_order;
  double kkt_tol;
} FckFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. Valid until the
 next call into the library from this thread.
 */
const char *fck_last_error(void);

struct FckFitOptions fck_fit_options_default(void);

/*
 Builds a matrix from row-major `n_rows × n_cols` values in `[0, 1]`.
 All-binary input is stored sparsely.

 # Safety
 `values` must point to `n_rows * n_cols` doubles and `out` must be valid
 for writes.
 */
enum FckStatus fck_matrix_from_dense(const double *values,
                                     size_t n_rows,
                                     size_t n_cols,
                                     struct FckMatrix **out);

/*
 Reads a whitespace-separated transaction file.

 # Safety
 `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum FckStatus fck_matrix_from_transactions(const char *path, struct FckMatrix **out);

/*
 # Safety
 `m` must be null or a live handle.
 */
size_t fck_matrix_n_rows(const struct FckMatrix *m);

/*
 # Safety
 `m` must be null or a live handle.
 */
size_t fck_matrix_n_cols(const struct FckMatrix *m);

/*
 # Safety
 `m` must be null or a handle not yet freed.
 */
void fck_matrix_free(struct FckMatrix *m);

/*
 # Safety
 Handles must be live; `opts` and `out` must be valid pointers.
 */
enum FckStatus fck_fit_basket(const struct FckMatrix *m,
                              double tau,
                              double gamma,
                              const struct FckFitOptions *opts,
                              struct FckModel **out);

/*
 `labels` holds one 0/1 value per row.

 # Safety
 Handles must be live; `labels` must hold `n_rows` doubles.
 */
enum FckStatus fck_fit_logistic(const struct FckMatrix *m,
                                const double *labels,
                                double tau,
                                const struct FckFitOptions *opts,
                                struct FckModel **out);

/*
 `responses` is column-major `n_rows × n_tasks`.

 # Safety
 Handles must be live; `responses` must hold `n_rows * n_tasks` doubles.
 */
enum FckStatus fck_fit_matrix(const struct FckMatrix *m,
                              const double *responses,
                              size_t n_tasks,
                              double rho,
                              double eta,
                              bool fit_intercept,
                              const struct FckFitOptions *opts,
                              struct FckModel **out);

/*
 # Safety
 `model` must be null or a live handle.
 */
size_t fck_model_n_active(const struct FckModel *model);

/*
 # Safety
 `model` must be null or a live handle.
 */
size_t fck_model_n_tasks(const struct FckModel *model);

/*
 Writes `n_rows · n_tasks` predictions, column-major, into `out`.

 # Safety
 Handles must be live; `out` must have room for `out_len` doubles.
 */
enum FckStatus fck_predict(const struct FckModel *model,
                           const struct FckMatrix *m,
                           double *out,
                           size_t out_len);

/*
 Serializes a model to JSON. Release the string with [`fck_string_free`].

 # Safety
 `model` must be live and `out` valid for writes.
 */
enum FckStatus fck_model_to_json(const struct FckModel *model, char **out);

/*
 # Safety
 `json` must be NUL-terminated and `out` valid for writes.
 */
enum FckStatus fck_model_from_json(const char *json, struct FckModel **out);

/*
 # Safety
 `model` must be null or a handle not yet freed.
 */
void fck_model_free(struct FckModel *model);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void fck_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCK_H */
