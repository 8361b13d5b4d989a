#include <math.h>
#include <stdio.h>
#include <string.h>

#include "fedexprox.h"

#define CHECK(cond)                                                        \
    do {                                                                   \
        if (!(cond)) {                                                     \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    fx_last_error());                                      \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    FxProblem *p = NULL;
    CHECK(fx_problem_example1(4, 1.0, &p) == FX_STATUS_OK);
    CHECK(fx_problem_dim(p) == 4);

    double x[4] = {2.0, 0.0, 0.0, 0.0};
    double z[4];
    CHECK(fx_prox(p, 0, 1.0, x, 4, z) == FX_STATUS_OK);
    CHECK(fabs(z[0] - 1.0) < 1e-15);

    const char *cfg =
        "{\"label\":\"opt\",\"gamma\":1.0,\"alpha\":{\"policy\":\"optimal\"},"
        "\"iterations\":10,\"x0\":[1.0,1.0,1.0,1.0]}";
    FxTrace *t = NULL;
    CHECK(fx_run(p, cfg, &t) == FX_STATUS_OK);
    FxTraceRow row;
    CHECK(fx_trace_row(t, 1, &row) == FX_STATUS_OK);
    CHECK(fabs(row.alpha - 8.0) < 1e-9);
    CHECK(row.dist_sq < 1e-20);

    CHECK(fx_run(p, "{\"label\":1}", &t) == FX_STATUS_VALIDATION);
    CHECK(strlen(fx_last_error()) > 0);

    fx_trace_free(t);
    fx_problem_free(p);
    puts("ok");
    return 0;
}
