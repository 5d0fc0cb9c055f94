#ifndef POROSPLIT_H
#define POROSPLIT_H

/* C interface to the porosplit library. Every function returns a status
 * code; on failure porosplit_last_error() describes the problem (per thread).
 * Handles are opaque and must be released with their destroy function. */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(POROSPLIT_BUILDING)
#    define POROSPLIT_API __declspec(dllexport)
#  else
#    define POROSPLIT_API __declspec(dllimport)
#  endif
#else
#  define POROSPLIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum porosplit_status {
  POROSPLIT_OK = 0,
  POROSPLIT_E_INVALID_ARGUMENT = 1,
  POROSPLIT_E_CONFIG = 2,
  POROSPLIT_E_MATERIAL = 3,
  POROSPLIT_E_SOLVER = 4,
  POROSPLIT_E_NOT_CONVERGED = 5,
  POROSPLIT_E_IO = 6,
  POROSPLIT_E_SIZE_MISMATCH = 7,
  POROSPLIT_E_GATE_FAILED = 8,
  POROSPLIT_E_INTERNAL = 99
} porosplit_status;

typedef enum porosplit_coupling {
  POROSPLIT_MONOLITHIC = 0,
  POROSPLIT_UNDRAINED_SPLIT = 1,
  POROSPLIT_ALTERNATING_MINIMIZATION = 2
} porosplit_coupling;

typedef struct porosplit_scenario porosplit_scenario;
typedef struct porosplit_run porosplit_run;
typedef struct porosplit_stage porosplit_stage;

POROSPLIT_API const char* porosplit_version(void);
/* Message of the last failed call on this thread; "" if none. */
POROSPLIT_API const char* porosplit_last_error(void);
POROSPLIT_API const char* porosplit_status_string(porosplit_status status);

/* Material helpers. Voigt ordering (xx, yy, sqrt(2) xy), row-major. */
POROSPLIT_API porosplit_status porosplit_isotropic_elasticity(double mu, double lambda,
                                                              double voigt_out[9]);
POROSPLIT_API porosplit_status porosplit_alpha_c_inv_alpha(const double voigt[9],
                                                           const double biot[4], double* out);
POROSPLIT_API porosplit_status porosplit_contraction_rate(double coupling_strength, double c0,
                                                          double* out);

/* Scenario configuration (JSON text or file). Validation problems are joined
 * into porosplit_last_error(), one per line. */
POROSPLIT_API porosplit_status porosplit_scenario_from_json(const char* json,
                                                            porosplit_scenario** out);
POROSPLIT_API porosplit_status porosplit_scenario_from_file(const char* path,
                                                            porosplit_scenario** out);
POROSPLIT_API void porosplit_scenario_destroy(porosplit_scenario* sc);
/* Writes the scenario name ("contraction-study", ...) into buf. */
POROSPLIT_API porosplit_status porosplit_scenario_kind(const porosplit_scenario* sc, char* buf,
                                                       size_t size);
POROSPLIT_API porosplit_status porosplit_scenario_theoretical_rate(const porosplit_scenario* sc,
                                                                   double* out);
/* Validation without constructing a scenario: *issue_count receives the
 * number of problems, listed in porosplit_last_error(). */
POROSPLIT_API porosplit_status porosplit_validate_file(const char* path, size_t* issue_count);

/* Runs the scenario into out_dir, or into the config's "output" directory
 * when out_dir is NULL or empty. A run whose gates fail still returns
 * POROSPLIT_OK; query porosplit_run_passed. */
POROSPLIT_API porosplit_status porosplit_scenario_run(const porosplit_scenario* sc,
                                                      const char* out_dir, porosplit_run** out);
POROSPLIT_API void porosplit_run_destroy(porosplit_run* run);
POROSPLIT_API int porosplit_run_passed(const porosplit_run* run);
POROSPLIT_API const char* porosplit_run_manifest_path(const porosplit_run* run);
POROSPLIT_API size_t porosplit_run_file_count(const porosplit_run* run);
POROSPLIT_API const char* porosplit_run_file(const porosplit_run* run, size_t index);
POROSPLIT_API size_t porosplit_run_gate_count(const porosplit_run* run);
/* name and detail stay valid for the lifetime of the run. */
POROSPLIT_API porosplit_status porosplit_run_gate(const porosplit_run* run, size_t index,
                                                  const char** name, int* passed,
                                                  const char** detail);
/* Summary document as JSON text. */
POROSPLIT_API const char* porosplit_run_summary(const porosplit_run* run);

/* The first stage problem of a scenario (step from rest). */
POROSPLIT_API porosplit_status porosplit_stage_create(const porosplit_scenario* sc,
                                                      porosplit_stage** out);
POROSPLIT_API void porosplit_stage_destroy(porosplit_stage* st);
POROSPLIT_API porosplit_status porosplit_stage_dof_counts(const porosplit_stage* st, size_t* nu,
                                                          size_t* np, size_t* nq);
/* Solves the stage with the given method; buffers may be NULL, otherwise
 * they must hold nu, np, nq doubles. The iteration report of the last solve
 * is kept on the handle (empty for the monolithic method). */
POROSPLIT_API porosplit_status porosplit_stage_solve(porosplit_stage* st,
                                                     porosplit_coupling method, double* u,
                                                     double* p, double* q);
POROSPLIT_API const char* porosplit_stage_report_csv(const porosplit_stage* st);
POROSPLIT_API const char* porosplit_stage_report_json(const porosplit_stage* st);
POROSPLIT_API int porosplit_stage_iterations(const porosplit_stage* st);

#ifdef __cplusplus
}
#endif

#endif
