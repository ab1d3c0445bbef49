#include <stdio.h>
#include <string.h>

#include "lsasim.h"

static int check(lsasim_status st, const char *what) {
    if (st != LSASIM_STATUS_OK) {
        const char *msg = lsasim_last_error();
        fprintf(stderr, "%s: status %d: %s\n", what, (int)st, msg ? msg : "?");
        return 1;
    }
    return 0;
}

int main(void) {
    lsasim_scenario *sc = NULL;
    lsasim_run *run = NULL;
    int32_t passed = 0;
    double goodput = 0.0;

    if (check(lsasim_scenario_bundled("mocn_shared", &sc), "bundled")) return 1;
    if (check(lsasim_scenario_set_seed(sc, 11), "seed")) return 1;
    if (check(lsasim_scenario_run(sc, &run), "run")) return 1;
    if (check(lsasim_run_passed(run, &passed), "passed")) return 1;
    if (check(lsasim_run_metric(run, "goodput_bps.B", &goodput), "metric")) return 1;

    if (lsasim_scenario_bundled("nowhere", &sc) != LSASIM_STATUS_NOT_FOUND) return 2;
    if (strstr(lsasim_last_error(), "nowhere") == NULL) return 3;

    printf("passed=%d goodput_bps.B=%.0f\n", (int)passed, goodput);
    lsasim_run_free(run);
    lsasim_scenario_free(sc);
    return passed == 1 && goodput > 0.0 ? 0 : 4;
}
