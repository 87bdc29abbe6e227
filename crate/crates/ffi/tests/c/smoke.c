#include <stdio.h>
#include <string.h>
#include "scbo.h"

int main(void) {
    ScboObjective *obj = NULL;
    if (scbo_objective_new("f2", 2, SCBO_SMOOTHER_LOG_EXP, &obj) != SCBO_STATUS_OK) {
        fprintf(stderr, "%s\n", scbo_last_error_message());
        return 1;
    }
    double x[2] = {1.0, -2.0};
    double f = 0.0;
    if (scbo_objective_value(obj, x, 2, &f) != SCBO_STATUS_OK || f != 5.0) return 2;

    ScboSolverConfig cfg;
    scbo_solver_config_default(&cfg);
    cfg.n_particles = 50;
    cfg.t_max = 5.0;
    cfg.seed = 3;
    ScboRunReport *rep = NULL;
    if (scbo_run(obj, &cfg, &rep) != SCBO_STATUS_OK) return 3;
    ScboRunSummary s;
    if (scbo_run_report_summary(rep, &s) != SCBO_STATUS_OK) return 4;
    char *json = NULL;
    if (scbo_run_report_json(rep, &json) != SCBO_STATUS_OK || strstr(json, "x_inf") == NULL) return 5;
    scbo_string_free(json);
    scbo_run_report_free(rep);

    ScboObjective *bad = NULL;
    if (scbo_objective_new("nope", 2, SCBO_SMOOTHER_SQRT, &bad) != SCBO_STATUS_UNKNOWN_BENCHMARK) return 6;
    if (strstr(scbo_last_error_message(), "nope") == NULL) return 7;
    scbo_objective_free(obj);
    printf("steps=%llu f=%g\n", (unsigned long long)s.steps, s.f_x_inf);
    return 0;
}
