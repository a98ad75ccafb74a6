#ifndef INTERSECTIONAL_IRS_H
#define INTERSECTIONAL_IRS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum IrsStatus {
  IRS_STATUS_OK = 0,
  /**
   * A null pointer or a string that is not UTF-8.
   */
  IRS_STATUS_NULL_OR_ENCODING = 1,
  IRS_STATUS_PARSE = 2,
  IRS_STATUS_INVALID = 3,
  IRS_STATUS_CONTRACT = 4,
  IRS_STATUS_BUDGET = 5,
  IRS_STATUS_INDETERMINATE = 6,
  IRS_STATUS_OVERFLOW = 7,
  IRS_STATUS_IO = 8,
  IRS_STATUS_PANIC = 9,
} IrsStatus;

/**
 * A glued Schreier graph.
 */
typedef struct IrsGlued IrsGlued;

/**
 * A finitely supported step measure on the free group.
 */
typedef struct IrsMeasure IrsMeasure;

/**
 * A reduced word in the free group.
 */
typedef struct IrsWord IrsWord;

typedef struct IrsGlueDepth {
  size_t ell;
  size_t n;
  double q;
} IrsGlueDepth;

typedef struct IrsFixingReport {
  size_t k;
  size_t n;
  double alpha_lower;
  double alpha_upper;
  double std_error;
  size_t horizon;
  size_t walks;
} IrsFixingReport;

typedef struct IrsEntropyEstimate {
  /**
   * `H_t / t`, nats.
   */
  double value;
  double std_error;
  size_t t;
  size_t theta_samples;
  /**
   * 0 exact, 1 Monte Carlo, 2 sampled.
   */
  int32_t mode;
} IrsEntropyEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last error message on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *irs_last_error_message(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void irs_string_free(char *s);

/**
 * Parses a word such as `"abAB"` (capitals are inverses).
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum IrsStatus irs_word_parse(const char *text, struct IrsWord **out);

/**
 * # Safety
 * `w` must come from this library and not be freed twice.
 */
void irs_word_free(struct IrsWord *w);

/**
 * # Safety
 * `w` must be a valid handle or null.
 */
size_t irs_word_len(const struct IrsWord *w);

/**
 * # Safety
 * Handles must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_word_mul(const struct IrsWord *a, const struct IrsWord *b, struct IrsWord **out);

/**
 * # Safety
 * `w` must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_word_inv(const struct IrsWord *w, struct IrsWord **out);

/**
 * Writes a newly allocated string; free it with [`irs_string_free`].
 *
 * # Safety
 * `w` must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_word_to_string(const struct IrsWord *w, char **out);

/**
 * The simple random walk on the free group of rank `rank`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum IrsStatus irs_measure_srw(size_t rank, struct IrsMeasure **out);

/**
 * Parses `word weight` lines; weights are normalised.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum IrsStatus irs_measure_parse(size_t rank, const char *text, struct IrsMeasure **out);

/**
 * # Safety
 * `m` must come from this library and not be freed twice.
 */
void irs_measure_free(struct IrsMeasure *m);

/**
 * Shannon entropy of the step measure, nats.
 *
 * # Safety
 * `m` must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_measure_entropy(const struct IrsMeasure *m, double *out);

/**
 * Glues quotient copies at depth `n` along the edge from the identity
 * labelled `mark` (`'a'` or `'b'`, capitals for inverses). `base` is
 * `"heisenberg"` or `"abelian:<r>"`.
 *
 * # Safety
 * `base` must be a nul-terminated string and `out` a valid pointer.
 */
enum IrsStatus irs_glued_new(const char *base, char mark, size_t n, struct IrsGlued **out);

/**
 * # Safety
 * `g` must come from this library and not be freed twice.
 */
void irs_glued_free(struct IrsGlued *g);

/**
 * Norm of a word over the glued graph; `-1` encodes an infinite norm.
 *
 * # Safety
 * Handles must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_glued_norm(const struct IrsGlued *g, const struct IrsWord *w, int64_t *out);

/**
 * # Safety
 * `g` must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_glued_is_tree_like(const struct IrsGlued *g, size_t n, bool *out);

/**
 * `(1 - p)^norm`; a negative `norm` means infinite.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum IrsStatus irs_membership_probability(double p, int64_t norm, double *out);

/**
 * Exact `H(mu^t)` for `t = 1..=t_max` into `h[0..t_max]`, on the free group
 * or, when `quotient` is non-null, on that quotient.
 *
 * # Safety
 * `m` must be valid, `quotient` null or a nul-terminated string, and `h`
 * must hold `t_max` doubles.
 */
enum IrsStatus irs_rw_entropy(const struct IrsMeasure *m,
                              const char *quotient,
                              size_t t_max,
                              double *h);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum IrsStatus irs_fano_bound(double alpha, size_t k, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum IrsStatus irs_choose_glue_depth(size_t k,
                                     double epsilon,
                                     size_t r,
                                     double beta,
                                     double eta,
                                     double delta,
                                     struct IrsGlueDepth *out);

/**
 * Fixing estimate on the glued graph at its own depth.
 *
 * # Safety
 * Handles must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_glued_fixing(const struct IrsGlued *g,
                                const struct IrsMeasure *m,
                                size_t k,
                                size_t horizon,
                                size_t walks,
                                uint64_t seed,
                                struct IrsFixingReport *out);

/**
 * Bundle entropy `(1/t) H_t(p)` on the glued graph; `theta_samples = 0`
 * requests exact mode.
 *
 * # Safety
 * Handles must be valid and `out` a valid pointer.
 */
enum IrsStatus irs_glued_bundle_entropy(const struct IrsGlued *g,
                                        const struct IrsMeasure *m,
                                        double p,
                                        size_t t,
                                        size_t theta_samples,
                                        uint64_t seed,
                                        struct IrsEntropyEstimate *out);

/**
 * Runs a CLI command (`"entropy-curve"`, `"fixing"`, ...) from a config
 * file, writing into `out_dir`. `threads = 0` uses all cores.
 *
 * # Safety
 * Strings must be nul-terminated.
 */
enum IrsStatus irs_run_config(const char *command,
                              const char *config_path,
                              const char *out_dir,
                              size_t threads);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTERSECTIONAL_IRS_H */
