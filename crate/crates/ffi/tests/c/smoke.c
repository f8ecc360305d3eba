#include <stdio.h>
#include <string.h>
#include "cantor.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (line %d): %s\n", #cond, __LINE__, cantor_last_error()); return 1; } } while (0)

int main(int argc, char **argv) {
    CantorRecord *rec = NULL;
    CHECK(cantor_enumerate(82, CANTOR_METHOD_AUTO, &rec) == CANTOR_STATUS_OK);
    CHECK(cantor_record_n_q(rec) == 16);
    CHECK(cantor_record_ell(rec) == 8);
    uint64_t mlo = 0;
    CHECK(cantor_record_mlo(rec, &mlo) && mlo == 3);
    size_t len = 0;
    const uint64_t *p = cantor_record_numerators(rec, &len);
    CHECK(p != NULL && len == 16 && p[0] == 1);
    cantor_record_free(rec);

    CHECK(cantor_enumerate_with_budget(1001523179, CANTOR_METHOD_ALGORITHM1, 1, 1000, &rec) == CANTOR_STATUS_BUDGET);
    CHECK(rec == NULL && strlen(cantor_last_error()) > 0);
    CHECK(cantor_enumerate(1, CANTOR_METHOD_AUTO, &rec) == CANTOR_STATUS_DOMAIN);

    if (argc > 1) {
        CantorStore *store = NULL;
        CHECK(cantor_store_open(argv[1], &store) == CANTOR_STATUS_OK);
        CantorCounts counts;
        CHECK(cantor_store_counts(store, 100, 0.5, true, &counts) == CANTOR_STATUS_OK);
        printf("%llu %llu\n", (unsigned long long)counts.n_tilde_star, (unsigned long long)counts.n_star);
        cantor_store_free(store);
    }
    printf("ok %s\n", cantor_version());
    return 0;
}
