#include <math.h>
#include <stdio.h>
#include <string.h>

#include "geodsig.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,    \
                    __LINE__, #cond);                                 \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    const double rows[8] = {1, 0, 0, 1, -1, 0, 0, -1};
    GeodsigMatrix *z = NULL;
    CHECK(geodsig_matrix_new(4, 2, rows, &z) == GEODSIG_STATUS_OK);

    double d = 0;
    bool degenerate = true;
    CHECK(geodsig_effdim(z, &d, &degenerate) == GEODSIG_STATUS_OK);
    CHECK(d == 2.0 && !degenerate);
    CHECK(geodsig_last_error_kind() == NULL);

    GeodsigMatrix *noisy = NULL;
    CHECK(geodsig_perturb(z, GEODSIG_NOISE_KIND_GAUSSIAN, 0.0, 1, &noisy) == GEODSIG_STATUS_OK);
    double back[8];
    CHECK(geodsig_matrix_read(noisy, back, 8) == GEODSIG_STATUS_OK);
    CHECK(memcmp(back, rows, sizeof rows) == 0);

    const GeodsigMatrix *layers[1] = {z};
    GeodsigSignature *sig = NULL;
    CHECK(geodsig_signature_from_layers(layers, 1, &sig) == GEODSIG_STATUS_MALFORMED_INPUT);
    CHECK(strcmp(geodsig_last_error_kind(), "TooFewLayers") == 0);

    const GeodsigMatrix *pair[2] = {z, noisy};
    CHECK(geodsig_signature_from_layers(pair, 2, &sig) == GEODSIG_STATUS_OK);
    GeodsigSummary summary;
    CHECK(geodsig_signature_summary(sig, &summary) == GEODSIG_STATUS_OK);
    CHECK(summary.depth == 2 && summary.total_compression == 0.0);

    char *json = NULL;
    CHECK(geodsig_signature_to_json(sig, &json) == GEODSIG_STATUS_OK);
    CHECK(strstr(json, "per_layer_effdim") != NULL);
    geodsig_string_free(json);

    double x[3] = {1, 2, 3}, y[3] = {1, 2, 4}, r = 0;
    CHECK(geodsig_pearson(x, y, 3, &r) == GEODSIG_STATUS_OK);
    CHECK(fabs(r - 0.98198) < 1e-5);

    GeodsigDump *dump = NULL;
    CHECK(geodsig_dump_open("/nonexistent", &dump) == GEODSIG_STATUS_IO);
    CHECK(geodsig_last_error_message() != NULL);

    geodsig_signature_free(sig);
    geodsig_matrix_free(noisy);
    geodsig_matrix_free(z);
    printf("ok %s\n", geodsig_version());
    return 0;
}
