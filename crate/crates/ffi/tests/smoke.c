#include <stdio.h>
#include <string.h>

#include "magenta.h"

#define CHECK(call)                                                             \
    do {                                                                        \
        enum MagentaStatus s_ = (call);                                         \
        if (s_ != MAGENTA_STATUS_OK) {                                          \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, magenta_last_error()); \
            return 1;                                                           \
        }                                                                       \
    } while (0)

int main(void) {
    MagentaGraph *g = NULL;
    MagentaMixing *w = NULL;
    MagentaProblem *p = NULL;
    MagentaRun *run = NULL;
    MagentaRunInfo info;
    double x0[2] = {10.0, 10.0};

    CHECK(magenta_graph_path(2, &g));
    CHECK(magenta_mixing_new(g, MAGENTA_MIXING_RULE_LAPLACIAN_SHIFT, 0.0, &w));
    CHECK(magenta_problem_cubic_pair(&p));
    CHECK(magenta_run_gradient_tracking(p, w, x0, 2, 0.1, 1000, &run));
    CHECK(magenta_run_info(run, &info));
    printf("gradient tracking: class %d after %llu iterations\n", (int)info.run_class,
           (unsigned long long)info.iterations);
    if (info.run_class != MAGENTA_RUN_CLASS_DIVERGED) {
        return 2;
    }
    magenta_run_free(run);

    if (magenta_graph_path(1, &g) != MAGENTA_STATUS_GRAPH || strstr(magenta_last_error(), "agents") == NULL) {
        return 3;
    }

    magenta_problem_free(p);
    magenta_mixing_free(w);
    magenta_graph_free(g);
    printf("version %s\n", magenta_version());
    return 0;
}
