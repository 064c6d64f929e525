#ifndef BCTK_H
#define BCTK_H

#include <stdbool.h>
#include <stdint.h>

/**
 * Status codes returned by every function.
 */
typedef enum BctkStatus {
  BCTK_STATUS_OK = 0,
  BCTK_STATUS_NULL_POINTER = 1,
  BCTK_STATUS_INVALID_UTF8 = 2,
  BCTK_STATUS_INVALID_INPUT = 3,
  BCTK_STATUS_SHAPE_MISMATCH = 4,
  BCTK_STATUS_VERIFICATION_FAILED = 5,
  BCTK_STATUS_NO_VIOLATION = 6,
  BCTK_STATUS_PANIC = 7,
} BctkStatus;

/**
 * Opaque transformation tensor with exact rational weights.
 */
typedef struct BctkTensor BctkTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *bctk_last_error(void);

/**
 * Parses `{"in":[..],"out":[..],"terms":[{"i0","l","tau","w"}]}`.
 *
 * # Safety
 * `json_text` must be a valid C string; `out` must be writable.
 */
enum BctkStatus bctk_tensor_from_json(const char *json_text, struct BctkTensor **out);

/**
 * # Safety
 * `t` must come from this library and not be freed twice. Null is a no-op.
 */
void bctk_tensor_free(struct BctkTensor *t);

/**
 * `second` after `first`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum BctkStatus bctk_tensor_compose_seq(const struct BctkTensor *first,
                                        const struct BctkTensor *second,
                                        struct BctkTensor **out);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum BctkStatus bctk_tensor_compose_par(const struct BctkTensor *left,
                                        const struct BctkTensor *right,
                                        struct BctkTensor **out);

/**
 * # Safety
 * `t` must be live; `out` must be writable.
 */
enum BctkStatus bctk_tensor_is_channel(const struct BctkTensor *t, bool *out);

/**
 * # Safety
 * `t` must be live; `out` must be writable. Free the result with
 * [`bctk_string_free`].
 */
enum BctkStatus bctk_tensor_to_json(const struct BctkTensor *t, char **out);

/**
 * Ontic image of the tensor as JSON.
 *
 * # Safety
 * `t` must be live; `out` must be writable.
 */
enum BctkStatus bctk_tensor_embed_json(const struct BctkTensor *t, char **out);

/**
 * Runs a verification suite with the exact backend. The report is written
 * even when checks fail, in which case the status is `VerificationFailed`.
 *
 * # Safety
 * `suite` must be a valid C string; `out` must be writable.
 */
enum BctkStatus bctk_verify(const char *suite,
                            uint64_t seed,
                            uint32_t trials,
                            uint32_t max_dim,
                            char **out);

/**
 * Tests a candidate model against the default latent instance. The
 * certificate is always written; `NoViolation` means it is empty.
 *
 * # Safety
 * `model_json` must be a valid C string; `out` must be writable.
 */
enum BctkStatus bctk_lct_refute_json(const char *model_json, char **out);

/**
 * Compiles circuit source and evaluates `name` on both backends.
 *
 * # Safety
 * `source` and `name` must be valid C strings; `out` must be writable.
 */
enum BctkStatus bctk_eval_source(const char *source, const char *name, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is a no-op.
 */
void bctk_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BCTK_H */
