#include <stdio.h>
#include "otima.h"

int main(int argc, char **argv) {
    OtimaScenario *s = NULL;
    if (argc < 2 || otima_scenario_from_file(argv[1], &s) != OTIMA_STATUS_OK) {
        fprintf(stderr, "load: %s\n", otima_last_error_message());
        return 1;
    }
    OtimaCurve *c = NULL;
    if (otima_scan(s, &c) != OTIMA_STATUS_OK) return 2;
    OtimaFringeFit fit;
    if (otima_fit_fringe(c, 200e-9, true, &fit) != OTIMA_STATUS_OK) return 3;
    printf("%zu %.4f\n", otima_curve_len(c), fit.v0);
    otima_curve_free(c);
    otima_scenario_free(s);
    return otima_scenario_from_file("/nonexistent", &s) == OTIMA_STATUS_IO ? 0 : 4;
}
