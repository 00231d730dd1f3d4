#ifndef HJF_H
#define HJF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HjfStatus {
  HjfStatus_Ok = 0,
  HjfStatus_NullPointer = 1,
  HjfStatus_Parse = 2,
  HjfStatus_Precondition = 3,
  HjfStatus_NotFound = 4,
  HjfStatus_Overflow = 5,
  HjfStatus_Panic = 6,
} HjfStatus;

/**
 * A truncated q-expansion.
 */
typedef struct HjfQExp HjfQExp;

/**
 * A Jacobi coefficient system.
 */
typedef struct HjfSystem HjfSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call on the same thread.
 */
const char *hjf_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be NULL.
 */
void hjf_string_free(char *s);

/**
 * Norm of an element written `a+b*w@D`.
 *
 * # Safety
 * `elem` is a NUL-terminated string; `out` is writable.
 */
enum HjfStatus hjf_ring_norm(const char *elem, int64_t *out);

/**
 * Seeded random admissible system.
 *
 * # Safety
 * `out` is writable.
 */
enum HjfStatus hjf_system_random(int64_t d,
                                 int64_t weight,
                                 uint64_t index,
                                 uint64_t disc_bound,
                                 uint64_t seed,
                                 struct HjfSystem **out);

/**
 * Parses a system from its JSON file format.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum HjfStatus hjf_system_from_json(const char *json, struct HjfSystem **out);

/**
 * JSON text of a system; free with `hjf_string_free`.
 *
 * # Safety
 * `sys` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_system_to_json(const struct HjfSystem *sys, char **out);

/**
 * # Safety
 * `sys` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_system_is_spez(const struct HjfSystem *sys, bool *out);

/**
 * # Safety
 * `sys` is a handle from this library or NULL; it is invalid afterwards.
 */
void hjf_system_free(struct HjfSystem *sys);

/**
 * Untwisted Eichler-Zagier image.
 *
 * # Safety
 * `sys` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_ez_map(const struct HjfSystem *sys, struct HjfQExp **out);

/**
 * Twisted image for the `eta`-th character of G and its `ext`-th extension.
 * An index past the end gives `NotFound`.
 *
 * # Safety
 * `sys` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_twisted_ez_map(const struct HjfSystem *sys,
                                  uintptr_t eta,
                                  uintptr_t ext,
                                  uint64_t group_cap,
                                  struct HjfQExp **out);

/**
 * Eta quotient from a spec like `1^-4,2^10,4^-4`.
 *
 * # Safety
 * `spec` is a NUL-terminated string; `out` is writable.
 */
enum HjfStatus hjf_eta_quotient(const char *spec, uintptr_t precision, struct HjfQExp **out);

/**
 * Hecke operator T_n.
 *
 * # Safety
 * `f` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_hecke_t(const struct HjfQExp *f, uint64_t n, struct HjfQExp **out);

/**
 * Weight, level and precision.
 *
 * # Safety
 * `f` is a live handle; the out-pointers are writable.
 */
enum HjfStatus hjf_qexp_info(const struct HjfQExp *f,
                             int64_t *weight,
                             uint64_t *level,
                             uintptr_t *precision);

/**
 * a(n) as a 64-bit integer; `Overflow` if it is not one.
 *
 * # Safety
 * `f` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_qexp_coeff_i64(const struct HjfQExp *f, uintptr_t n, int64_t *out);

/**
 * a(n) in the text form of the q-expansion files; free with `hjf_string_free`.
 *
 * # Safety
 * `f` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_qexp_coeff_string(const struct HjfQExp *f, uintptr_t n, char **out);

/**
 * #{1 <= n <= x : a(n) != 0}, optionally over square-free n only.
 *
 * # Safety
 * `f` is a live handle; `out` is writable.
 */
enum HjfStatus hjf_nonvanish_count(const struct HjfQExp *f,
                                   uintptr_t x,
                                   bool squarefree,
                                   uint64_t *out);

/**
 * # Safety
 * `f` is a handle from this library or NULL; it is invalid afterwards.
 */
void hjf_qexp_free(struct HjfQExp *f);

/**
 * Whether the sieve lower-bound constant is provably positive.
 *
 * # Safety
 * `out` is writable.
 */
enum HjfStatus hjf_lower_bound_positive(uint64_t level,
                                        uint64_t cutoff,
                                        uint64_t truncation,
                                        bool *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HJF_H */
