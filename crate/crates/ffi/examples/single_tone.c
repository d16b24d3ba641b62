/* Estimate one complex sinusoid from a fully observed, noiseless signal. */
#include <math.h>
#include <stdio.h>

#include "valse.h"

#define N 24

int main(void) {
    size_t idx[N];
    double re[N], im[N];
    const double omega = 0.7;
    for (size_t i = 0; i < N; i++) {
        idx[i] = i;
        re[i] = cos(omega * (double)i) + 0.01 * sin(3.1 * (double)i * i);
        im[i] = sin(omega * (double)i) + 0.01 * cos(1.7 * (double)i * i);
    }

    ValseConfig *cfg = valse_config_new();
    valse_config_set_max_iters(cfg, 1000);
    ValseResult *res = NULL;
    ValseStatus st = valse_estimate(cfg, idx, re, im, N, N, &res);
    valse_config_free(cfg);
    if (st != VALSE_STATUS_OK) {
        fprintf(stderr, "valse_estimate: %s\n", valse_last_error_message());
        return 1;
    }

    size_t k = valse_result_k_hat(res);
    double freqs[8];
    if (k == 0 || k > 8 || valse_result_frequencies(res, freqs, 8) != VALSE_STATUS_OK) {
        fprintf(stderr, "unexpected k_hat %zu\n", k);
        valse_result_free(res);
        return 1;
    }
    printf("k_hat %zu theta %.6f\n", k, freqs[0]);
    valse_result_free(res);
    return 0;
}
