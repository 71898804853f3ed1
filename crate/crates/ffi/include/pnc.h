#ifndef PNC_H
#define PNC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PncStatus {
  PNC_STATUS_OK = 0,
  PNC_STATUS_NULL_ARGUMENT = 1,
  PNC_STATUS_INVALID_UTF8 = 2,
  PNC_STATUS_INVALID_DATA = 3,
  PNC_STATUS_INVALID_CONFIG = 4,
  PNC_STATUS_IO = 5,
  PNC_STATUS_PROVIDER = 6,
  PNC_STATUS_BACKBONE = 7,
  PNC_STATUS_UNDEFINED = 8,
  PNC_STATUS_PANIC = 9,
} PncStatus;

/**
 * Accumulates (gold, prediction) pairs for a corpus-level report.
 */
typedef struct PncEvaluator PncEvaluator;

/**
 * A trained interpretation checkpoint with its knowledge provider.
 */
typedef struct PncModel PncModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *pnc_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pnc_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *pnc_version(void);

/**
 * Sem/Ex-Match score of one pair with the n-gram matcher.
 *
 * # Safety
 * String arguments are null or valid NUL-terminated strings; `out` is valid.
 */
enum PncStatus pnc_score_pair(const char *gold, const char *pred, double *out);

/**
 * Kendall's τ-b of two series of length `n`. Undefined inputs (constant
 * series, n < 2) return `Undefined`.
 *
 * # Safety
 * `x` and `y` point at `n` doubles; `out` is valid.
 */
enum PncStatus pnc_kendall_tau_b(const double *x, const double *y, size_t n, double *out);

/**
 * # Safety
 * `out` is valid.
 */
enum PncStatus pnc_evaluator_new(struct PncEvaluator **out);

/**
 * # Safety
 * `ev` comes from [`pnc_evaluator_new`]; strings are null or valid.
 */
enum PncStatus pnc_evaluator_add(struct PncEvaluator *ev, const char *gold, const char *pred);

/**
 * JSON evaluation report over the pairs added so far.
 *
 * # Safety
 * `ev` comes from [`pnc_evaluator_new`]; `out_json` is valid.
 */
enum PncStatus pnc_evaluator_report(const struct PncEvaluator *ev, char **out_json);

/**
 * # Safety
 * `ev` is null or comes from [`pnc_evaluator_new`] and is not used again.
 */
void pnc_evaluator_free(struct PncEvaluator *ev);

/**
 * Compounds in a dependency parse given as JSON
 * (`{"text", "tokens": [{"text","pos","head","dep","start","end"}]}`),
 * returned as a JSON array.
 *
 * # Safety
 * `parse_json` is a valid string; `out_json` is valid.
 */
enum PncStatus pnc_detect(const char *parse_json, char **out_json);

/**
 * Knowledge prompt for one source name (`none`, `sentence`, `wordnet-nn`,
 * `wiki-nnp`, `ner-nnp`). `knowledge_json` is null or
 * `{"gloss": {..}, "wiki": {..}, "ner": {..}}`; `sentence` may be null.
 *
 * # Safety
 * String arguments are valid or null where allowed; `out` is valid.
 */
enum PncStatus pnc_build_prompt(const char *proper_noun,
                                const char *common_noun,
                                const char *sentence,
                                const char *source,
                                const char *knowledge_json,
                                char **out);

/**
 * Load a UniGen or MtGen checkpoint directory.
 *
 * # Safety
 * `dir` is valid; `knowledge_json` is null or valid; `out` is valid.
 */
enum PncStatus pnc_model_load(const char *dir, const char *knowledge_json, struct PncModel **out);

/**
 * Interpret one compound. On success `*out_compositional` is 1 and
 * `*out_paraphrase` holds the paraphrase, or it is 0 and `*out_paraphrase`
 * is null.
 *
 * # Safety
 * `model` comes from [`pnc_model_load`]; strings are valid (`sentence` may
 * be null); out-parameters are valid.
 */
enum PncStatus pnc_model_interpret(const struct PncModel *model,
                                   const char *proper_noun,
                                   const char *common_noun,
                                   const char *sentence,
                                   int32_t *out_compositional,
                                   char **out_paraphrase);

/**
 * # Safety
 * `model` is null or comes from [`pnc_model_load`] and is not used again.
 */
void pnc_model_free(struct PncModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNC_H */
