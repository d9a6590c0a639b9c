#include <math.h>
#include <stdio.h>
#include "topo_superatom.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); return 1; } } while (0)

int main(void) {
    TsLattice *lat = NULL;
    TsDissipation *diss = NULL;
    TsResponse *resp = NULL;
    char msg[256];
    int winding = -1;
    int dark = -1;
    double gamma_eff = -1.0;
    double energies[200];

    CHECK(ts_version()[0] != '\0');
    CHECK(ts_lattice_new(0.12, -0.1, -0.1, 100, &lat) == TS_STATUS_OK);
    CHECK(ts_lattice_dim(lat) == 200);
    CHECK(ts_winding_number(lat, 256, &winding) == TS_STATUS_OK && winding == 1);
    CHECK(ts_spectrum(lat, energies, 10) == TS_STATUS_BUFFER_TOO_SMALL);
    CHECK(ts_last_error_message(msg, sizeof msg) > 0);
    CHECK(ts_spectrum(lat, energies, 200) == TS_STATUS_OK);
    CHECK(fabs(energies[0] + energies[199]) < 1e-12);

    CHECK(ts_dissipation_new(0.1, 0.1, 0.5, 1.0, &diss) == TS_STATUS_INVALID_PARAM);
    CHECK(diss == NULL);
    CHECK(ts_dissipation_new(0.1, 0.1, 0.09, 1.0, &diss) == TS_STATUS_OK);
    CHECK(ts_response_new(lat, diss, TS_TARGET_RIGHT_EDGE, 0, 0.01, &resp) == TS_STATUS_OK);
    CHECK(ts_effective_decay(resp, &gamma_eff, &dark) == TS_STATUS_OK);
    CHECK(dark == 0 && fabs(gamma_eff - 0.19) < 1e-3);

    ts_response_free(resp);
    ts_dissipation_free(diss);
    ts_lattice_free(lat);
    ts_lattice_free(NULL);
    printf("ok\n");
    return 0;
}
