#include <stdio.h>
#include <string.h>
#include "intersectional_irs.h"

int main(void) {
    IrsWord *w = NULL, *wi = NULL, *e = NULL;
    if (irs_word_parse("abAB", &w) != IRS_STATUS_OK) return 10;
    if (irs_word_inv(w, &wi) != IRS_STATUS_OK) return 11;
    if (irs_word_mul(w, wi, &e) != IRS_STATUS_OK) return 12;
    if (irs_word_len(e) != 0) return 13;

    IrsGlued *g = NULL;
    if (irs_glued_new("heisenberg", 'a', 2, &g) != IRS_STATUS_OK) return 20;
    int64_t norm = 0;
    if (irs_glued_norm(g, w, &norm) != IRS_STATUS_OK || norm != -1) return 21;

    double fano = 0.0;
    if (irs_fano_bound(0.5, 1, &fano) != IRS_STATUS_OK) return 30;
    if (fano < 2.7725 || fano > 2.7726) return 31;

    IrsWord *bad = NULL;
    if (irs_word_parse("ab?", &bad) != IRS_STATUS_PARSE) return 40;
    if (irs_last_error_message() == NULL) return 41;

    printf("ok %s\n", irs_last_error_message());
    irs_glued_free(g);
    irs_word_free(w);
    irs_word_free(wi);
    irs_word_free(e);
    return 0;
}
