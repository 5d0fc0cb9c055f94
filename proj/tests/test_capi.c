/* Exercises the shared library through its C header only. */

#include "porosplit/porosplit.h"

#include <math.h>
#include <stdio.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static const char* config =
    "{\"scenario\": \"contraction-study\","
    " \"mesh\": {\"nx\": 4, \"ny\": 4},"
    " \"material\": {\"mu\": 1, \"lambda\": 1, \"alpha\": 1, \"c0\": 0.25},"
    " \"time\": {\"dt\": 0.01},"
    " \"boundary\": {\"bottom\": {\"displacement\": \"fixed\"},"
    "              \"top\": {\"flow\": \"drained\"}},"
    " \"loads\": {\"source\": {\"value\": 1.0}}}";

int main(int argc, char** argv) {
  const char* out_dir = argc > 1 ? argv[1] : "capi_out";
  double C[9], x = 0, rate = 0;
  char kind[64];
  porosplit_scenario* sc = NULL;
  porosplit_run* run = NULL;
  porosplit_stage* st = NULL;
  size_t nu = 0, np = 0, nq = 0, i;
  const double biot[4] = {1, 0, 0, 1};

  EXPECT(strlen(porosplit_version()) > 0);
  EXPECT(porosplit_isotropic_elasticity(1, 1, C) == POROSPLIT_OK);
  EXPECT(C[0] == 3 && C[1] == 1 && C[8] == 2);
  EXPECT(porosplit_alpha_c_inv_alpha(C, biot, &x) == POROSPLIT_OK);
  EXPECT(fabs(x - 0.5) < 1e-15);
  EXPECT(porosplit_contraction_rate(0.5, 0.25, &rate) == POROSPLIT_OK);
  EXPECT(fabs(rate - 2.0 / 3.0) < 1e-15);

  EXPECT(porosplit_isotropic_elasticity(0, 1, C) == POROSPLIT_E_MATERIAL);
  EXPECT(strlen(porosplit_last_error()) > 0);
  EXPECT(porosplit_contraction_rate(1, 0, &rate) == POROSPLIT_E_MATERIAL);
  EXPECT(porosplit_isotropic_elasticity(1, 1, NULL) == POROSPLIT_E_INVALID_ARGUMENT);
  EXPECT(porosplit_scenario_from_json("{", &sc) == POROSPLIT_E_CONFIG);
  EXPECT(sc == NULL);
  EXPECT(porosplit_scenario_from_json("{\"scenario\": \"column\", \"mesh\": {\"nx\": -1}}", &sc) ==
         POROSPLIT_E_CONFIG);
  EXPECT(strstr(porosplit_last_error(), "mesh.nx") != NULL);
  EXPECT(porosplit_scenario_from_file("/nonexistent/config.json", &sc) == POROSPLIT_E_IO);

  EXPECT(porosplit_scenario_from_json(config, &sc) == POROSPLIT_OK);
  EXPECT(porosplit_scenario_kind(sc, kind, sizeof kind) == POROSPLIT_OK);
  EXPECT(strcmp(kind, "contraction-study") == 0);
  EXPECT(porosplit_scenario_kind(sc, kind, 4) == POROSPLIT_E_SIZE_MISMATCH);
  EXPECT(porosplit_scenario_theoretical_rate(sc, &rate) == POROSPLIT_OK);
  EXPECT(fabs(rate - 2.0 / 3.0) < 1e-15);

  EXPECT(porosplit_scenario_run(sc, NULL, &run) == POROSPLIT_E_CONFIG);
  EXPECT(run == NULL);
  EXPECT(strstr(porosplit_last_error(), "output") != NULL);
  EXPECT(porosplit_scenario_run(sc, out_dir, &run) == POROSPLIT_OK);
  EXPECT(porosplit_run_passed(run) == 1);
  EXPECT(porosplit_run_file_count(run) >= 2);
  EXPECT(porosplit_run_file(run, 1000) == NULL);
  EXPECT(strstr(porosplit_run_manifest_path(run), "manifest.json") != NULL);
  for (i = 0; i < porosplit_run_gate_count(run); ++i) {
    const char* name = NULL;
    const char* detail = NULL;
    int passed = 0;
    EXPECT(porosplit_run_gate(run, i, &name, &passed, &detail) == POROSPLIT_OK);
    EXPECT(passed == 1 && name && detail);
  }
  EXPECT(strstr(porosplit_run_summary(run), "runs") != NULL);
  porosplit_run_destroy(run);

  EXPECT(porosplit_stage_create(sc, &st) == POROSPLIT_OK);
  EXPECT(porosplit_stage_dof_counts(st, &nu, &np, &nq) == POROSPLIT_OK);
  EXPECT(nu > 0 && np == 32 && nq > 0);
  {
    double u[256], p[64], q[128], um[256];
    EXPECT(nu <= 256 && nq <= 128);
    EXPECT(porosplit_stage_solve(st, POROSPLIT_MONOLITHIC, um, NULL, NULL) == POROSPLIT_OK);
    EXPECT(porosplit_stage_solve(st, POROSPLIT_UNDRAINED_SPLIT, u, p, q) == POROSPLIT_OK);
    EXPECT(porosplit_stage_iterations(st) > 1);
    EXPECT(strncmp(porosplit_stage_report_csv(st), "k,energy_gap,err_norm,factor,theory_rate\n",
                   41) == 0);
    EXPECT(strstr(porosplit_stage_report_json(st), "theory_rate") != NULL);
    {
      double diff = 0, norm = 0;
      for (i = 0; i < nu; ++i) {
        diff += (u[i] - um[i]) * (u[i] - um[i]);
        norm += um[i] * um[i];
      }
      EXPECT(sqrt(diff) <= 1e-8 * sqrt(norm));
    }
    EXPECT(porosplit_stage_solve(st, (porosplit_coupling)7, NULL, NULL, NULL) ==
           POROSPLIT_E_INVALID_ARGUMENT);
  }
  porosplit_stage_destroy(st);
  porosplit_scenario_destroy(sc);

  EXPECT(porosplit_run_passed(NULL) == 0);
  EXPECT(strcmp(porosplit_status_string(POROSPLIT_E_GATE_FAILED), "acceptance gate failed") == 0);

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("all C API checks passed\n");
  return failures ? 1 : 0;
}
