#ifndef HEFIR_H
#define HEFIR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The positive values match the command-line exit codes.
 */
typedef enum HefirStatus {
  HEFIR_STATUS_OK = 0,
  HEFIR_STATUS_ERROR = 1,
  HEFIR_STATUS_FORMAT = 2,
  HEFIR_STATUS_MISMATCH = 3,
  HEFIR_STATUS_CAPACITY = 4,
  HEFIR_STATUS_NULL_POINTER = 5,
  HEFIR_STATUS_INVALID_ARGUMENT = 6,
  HEFIR_STATUS_PANIC = 7,
} HefirStatus;

typedef struct HefirCiphertext HefirCiphertext;

typedef struct HefirParams HefirParams;

typedef struct HefirPublicKey HefirPublicKey;

typedef struct HefirRelinKey HefirRelinKey;

typedef struct HefirSecretKey HefirSecretKey;

/**
 * Bytes owned by the library; release with [`hefir_buffer_free`].
 */
typedef struct HefirBuffer {
  uint8_t *data;
  size_t len;
} HefirBuffer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hefir_version(void);

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call on the same thread.
 */
const char *hefir_last_error(void);

/**
 * Parameters of channel `channel` of a named preset (`"toy"`, `"1"`, ...).
 */
enum HefirStatus hefir_params_from_preset(const char *id, size_t channel, struct HefirParams **out);

/**
 * Parameters from explicit NTT-friendly primes and plaintext modulus.
 */
enum HefirStatus hefir_params_new(size_t degree,
                                  const uint64_t *primes,
                                  size_t prime_count,
                                  uint64_t plain_modulus,
                                  struct HefirParams **out);

size_t hefir_params_degree(const struct HefirParams *params);

uint64_t hefir_params_plain_modulus(const struct HefirParams *params);

/**
 * Number of SIMD slots, or 0 when `t` does not support slot encoding.
 */
size_t hefir_params_slot_count(const struct HefirParams *params);

/**
 * Generates a key triple. `seed` may be null for OS entropy.
 */
enum HefirStatus hefir_keygen(const struct HefirParams *params,
                              const uint64_t *seed,
                              struct HefirSecretKey **sk_out,
                              struct HefirPublicKey **pk_out,
                              struct HefirRelinKey **rlk_out);

/**
 * Encrypts up to N slot values (missing slots are 0). `seed` may be null.
 */
enum HefirStatus hefir_encrypt(const struct HefirPublicKey *pk,
                               const uint64_t *slots,
                               size_t len,
                               const uint64_t *seed,
                               struct HefirCiphertext **out);

/**
 * Encrypts `value` in the constant coefficient; works for any `t`.
 */
enum HefirStatus hefir_encrypt_scalar(const struct HefirPublicKey *pk,
                                      uint64_t value,
                                      const uint64_t *seed,
                                      struct HefirCiphertext **out);

/**
 * Decrypts and writes the first `len` slots to `out`.
 */
enum HefirStatus hefir_decrypt(const struct HefirSecretKey *sk,
                               const struct HefirCiphertext *ct,
                               uint64_t *out,
                               size_t len);

/**
 * Decrypts the constant coefficient.
 */
enum HefirStatus hefir_decrypt_scalar(const struct HefirSecretKey *sk,
                                      const struct HefirCiphertext *ct,
                                      uint64_t *out);

/**
 * Remaining noise budget in bits.
 */
enum HefirStatus hefir_noise_budget(const struct HefirSecretKey *sk,
                                    const struct HefirCiphertext *ct,
                                    uint32_t *out);

enum HefirStatus hefir_add(const struct HefirCiphertext *a,
                           const struct HefirCiphertext *b,
                           struct HefirCiphertext **out);

enum HefirStatus hefir_sub(const struct HefirCiphertext *a,
                           const struct HefirCiphertext *b,
                           struct HefirCiphertext **out);

/**
 * Product with relinearization.
 */
enum HefirStatus hefir_multiply(const struct HefirCiphertext *a,
                                const struct HefirCiphertext *b,
                                const struct HefirRelinKey *rlk,
                                struct HefirCiphertext **out);

enum HefirStatus hefir_square(const struct HefirCiphertext *a,
                              const struct HefirRelinKey *rlk,
                              struct HefirCiphertext **out);

/**
 * Slot-wise product with plaintext slot values.
 */
enum HefirStatus hefir_multiply_plain(const struct HefirCiphertext *a,
                                      const uint64_t *slots,
                                      size_t len,
                                      struct HefirCiphertext **out);

/**
 * Product with a signed integer scalar.
 */
enum HefirStatus hefir_multiply_scalar(const struct HefirCiphertext *a,
                                       int64_t scalar,
                                       struct HefirCiphertext **out);

void hefir_buffer_free(struct HefirBuffer buffer);

void hefir_secret_key_free(struct HefirSecretKey *p);

/**
 * HFIR encoding; release the buffer with `hefir_buffer_free`.
 */
enum HefirStatus hefir_secret_key_serialize(const struct HefirSecretKey *p,
                                            struct HefirBuffer *out);

enum HefirStatus hefir_secret_key_deserialize(const uint8_t *data,
                                              size_t len,
                                              struct HefirSecretKey **out);

void hefir_public_key_free(struct HefirPublicKey *p);

/**
 * HFIR encoding; release the buffer with `hefir_buffer_free`.
 */
enum HefirStatus hefir_public_key_serialize(const struct HefirPublicKey *p,
                                            struct HefirBuffer *out);

enum HefirStatus hefir_public_key_deserialize(const uint8_t *data,
                                              size_t len,
                                              struct HefirPublicKey **out);

void hefir_relin_key_free(struct HefirRelinKey *p);

/**
 * HFIR encoding; release the buffer with `hefir_buffer_free`.
 */
enum HefirStatus hefir_relin_key_serialize(const struct HefirRelinKey *p, struct HefirBuffer *out);

enum HefirStatus hefir_relin_key_deserialize(const uint8_t *data,
                                             size_t len,
                                             struct HefirRelinKey **out);

void hefir_ciphertext_free(struct HefirCiphertext *p);

/**
 * HFIR encoding; release the buffer with `hefir_buffer_free`.
 */
enum HefirStatus hefir_ciphertext_serialize(const struct HefirCiphertext *p,
                                            struct HefirBuffer *out);

enum HefirStatus hefir_ciphertext_deserialize(const uint8_t *data,
                                              size_t len,
                                              struct HefirCiphertext **out);

void hefir_params_free(struct HefirParams *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEFIR_H */
