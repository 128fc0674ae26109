/* Exercises the public C surface: parse, measure, simulate, score, and
 * the error paths. Exits nonzero on the first mismatch. */

#include <stdio.h>
#include <string.h>

#include "qas.h"

int main(void) {
    if (strlen(qas_version()) == 0) return 1;
    if (strlen(qas_last_error()) != 0) return 2; /* clean slate */

    QasAnsatz *a = qas_ansatz_parse("improved_ansatz_list = [2, 4, 2]");
    if (!a) {
        fprintf(stderr, "parse: %s\n", qas_last_error());
        return 3;
    }
    if (qas_ansatz_block_count(a) != 3) return 4;

    size_t params = 0, depth = 0;
    if (qas_ansatz_param_count(a, 3, &params) != QasStatus_Ok) return 5;
    if (qas_ansatz_depth(a, 3, &depth) != QasStatus_Ok) return 6;
    if (params != 12 || depth == 0) return 7;

    /* All-zero angles leave the plus state untouched: uniform output. */
    double theta[12] = {0};
    double probs[8] = {0};
    if (qas_ansatz_probabilities(a, 3, theta, params, probs, 8) != QasStatus_Ok) return 8;
    double total = 0.0;
    for (int i = 0; i < 8; i++) total += probs[i];
    if (total < 0.999999 || total > 1.000001) return 9;

    double uniform[8];
    for (int i = 0; i < 8; i++) uniform[i] = 0.125;
    double kl = -1.0;
    if (qas_kl_divergence(probs, uniform, 8, &kl) != QasStatus_Ok) return 10;
    if (kl < 0.0 || kl > 1e-12) return 11;

    char *rendered = qas_ansatz_render(a);
    if (!rendered || strstr(rendered, "improved_ansatz_list = [2, 4, 2]") == NULL) return 12;
    qas_string_free(rendered);
    qas_ansatz_free(a);

    if (qas_ansatz_parse("no list in this reply") != NULL) return 13;
    if (strlen(qas_last_error()) == 0) return 14;
    if (qas_kl_divergence(NULL, uniform, 8, &kl) != QasStatus_NullPointer) return 15;

    puts("ok");
    return 0;
}
