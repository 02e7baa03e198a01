#include <stdio.h>
#include <string.h>
#include "hefir.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        HefirStatus st_ = (call);                                          \
        if (st_ != HEFIR_STATUS_OK) {                                      \
            fprintf(stderr, "%s -> %d: %s\n", #call, st_, hefir_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    HefirParams *params = NULL;
    HefirSecretKey *sk = NULL;
    HefirPublicKey *pk = NULL;
    HefirRelinKey *rlk = NULL;
    HefirCiphertext *a = NULL, *b = NULL, *prod = NULL, *back = NULL;
    uint64_t seed = 5;
    uint64_t xs[4] = {3, 5, 7, 11};
    uint64_t ys[4] = {2, 4, 6, 8};
    uint64_t out[4];
    HefirBuffer buf;

    CHECK(hefir_params_from_preset("toy", 0, &params));
    CHECK(hefir_keygen(params, &seed, &sk, &pk, &rlk));
    CHECK(hefir_encrypt(pk, xs, 4, NULL, &a));
    CHECK(hefir_encrypt(pk, ys, 4, NULL, &b));
    CHECK(hefir_multiply(a, b, rlk, &prod));
    CHECK(hefir_ciphertext_serialize(prod, &buf));
    CHECK(hefir_ciphertext_deserialize(buf.data, buf.len, &back));
    hefir_buffer_free(buf);
    CHECK(hefir_decrypt(sk, back, out, 4));
    for (int i = 0; i < 4; i++) {
        if (out[i] != xs[i] * ys[i]) {
            fprintf(stderr, "slot %d: %llu\n", i, (unsigned long long)out[i]);
            return 1;
        }
    }
    if (hefir_add(NULL, b, &prod) != HEFIR_STATUS_NULL_POINTER || strlen(hefir_last_error()) == 0) {
        return 1;
    }
    hefir_ciphertext_free(a);
    hefir_ciphertext_free(b);
    hefir_ciphertext_free(prod);
    hefir_ciphertext_free(back);
    hefir_secret_key_free(sk);
    hefir_public_key_free(pk);
    hefir_relin_key_free(rlk);
    hefir_params_free(params);
    printf("ok %s\n", hefir_version());
    return 0;
}
