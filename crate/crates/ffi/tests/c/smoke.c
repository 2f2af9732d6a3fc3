#include <math.h>
#include <stdio.h>
#include <string.h>

#include "shsade.h"

static int shifted_sphere(const double *x, size_t dim, void *user_data, double *out) {
    const double shift = *(const double *)user_data;
    double s = 0.0;
    for (size_t i = 0; i < dim; i++) {
        s += (x[i] - shift) * (x[i] - shift);
    }
    *out = s;
    return 0;
}

int main(void) {
    ShsadeConfigHandle *cfg = shsade_config_new();
    if (shsade_config_set_population_size(cfg, 20) != SHSADE_STATUS_OK) return 1;
    if (shsade_config_set_population_size(cfg, 2) != SHSADE_STATUS_INVALID_CONFIG) return 2;
    if (shsade_last_error() == NULL) return 3;

    double lower[3] = {-5, -5, -5}, upper[3] = {5, 5, 5}, best[3];
    double shift = 1.5;
    ShsadeRunSummary summary;
    if (shsade_minimize(cfg, lower, upper, 3, shifted_sphere, &shift, 6000, 1, best, 3, &summary) != SHSADE_STATUS_OK)
        return 4;
    if (!(summary.best_fitness < 1e-6) || fabs(best[0] - 1.5) > 1e-3) return 5;

    ShsadeSpaceHandle *space = NULL;
    const char *json = "{\"axes\": [{\"name\": \"w\", \"values\": [16, 32, 64]}, {\"name\": \"k\", \"values\": [\"a\", \"b\"]}]}";
    if (shsade_space_from_json(json, &space) != SHSADE_STATUS_OK) return 6;
    size_t idx[2] = {1, 1}, back[2];
    double u[2];
    if (shsade_space_encode(space, idx, 2, u) != SHSADE_STATUS_OK || u[0] != 0.5 || u[1] != 1.0) return 7;
    if (shsade_space_decode(space, u, 2, back) != SHSADE_STATUS_OK || back[0] != 1 || back[1] != 1) return 8;

    char *result = NULL;
    if (shsade_nas_run(space, 3, 100.0, 1.0, 20, 2, &result) != SHSADE_STATUS_OK) return 9;
    if (strstr(result, "best_genotype") == NULL) return 10;
    shsade_string_free(result);

    shsade_space_free(space);
    shsade_config_free(cfg);
    printf("ok\n");
    return 0;
}
