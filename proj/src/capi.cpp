#include "porosplit/porosplit.h"

#include "porosplit/error.hpp"
#include "porosplit/report.hpp"
#include "porosplit/scenario.hpp"

#include <cstring>
#include <memory>
#include <new>

struct porosplit_scenario {
  porosplit::ScenarioConfig config;
};

struct porosplit_run {
  porosplit::RunArtifacts artifacts;
  std::string manifest;
  std::vector<std::string> files;
  std::string summary;
};

struct porosplit_stage {
  porosplit::StageSetup setup;
  std::unique_ptr<porosplit::StageSolver> solver;
  std::string csv;
  std::string json;
  int iterations = 0;
};

namespace {

thread_local std::string last_error;

porosplit_status status_of(porosplit::ErrorCode code) {
  using porosplit::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return POROSPLIT_E_INVALID_ARGUMENT;
    case ErrorCode::InvalidMaterial: return POROSPLIT_E_MATERIAL;
    case ErrorCode::Config: return POROSPLIT_E_CONFIG;
    case ErrorCode::Solver: return POROSPLIT_E_SOLVER;
    case ErrorCode::NotConverged: return POROSPLIT_E_NOT_CONVERGED;
    case ErrorCode::SizeMismatch: return POROSPLIT_E_SIZE_MISMATCH;
    case ErrorCode::Io: return POROSPLIT_E_IO;
  }
  return POROSPLIT_E_INTERNAL;
}

porosplit_status fail(porosplit_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
porosplit_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const porosplit::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(POROSPLIT_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(POROSPLIT_E_INTERNAL, e.what());
  }
}

porosplit_status null_argument(const char* name) {
  return fail(POROSPLIT_E_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

porosplit::ScenarioConfig parse_text(const char* text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw porosplit::ConfigError(e.what());
  }
  return porosplit::parse_scenario(doc);
}

void copy_out(const porosplit::Vector& v, double* dst) {
  if (dst && v.size() > 0) std::memcpy(dst, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

}  // namespace

extern "C" {

const char* porosplit_version(void) { return PROJECT_VERSION_STRING; }

const char* porosplit_last_error(void) { return last_error.c_str(); }

const char* porosplit_status_string(porosplit_status status) {
  switch (status) {
    case POROSPLIT_OK: return "ok";
    case POROSPLIT_E_INVALID_ARGUMENT: return "invalid argument";
    case POROSPLIT_E_CONFIG: return "configuration error";
    case POROSPLIT_E_MATERIAL: return "invalid material";
    case POROSPLIT_E_SOLVER: return "solver failure";
    case POROSPLIT_E_NOT_CONVERGED: return "not converged";
    case POROSPLIT_E_IO: return "i/o error";
    case POROSPLIT_E_SIZE_MISMATCH: return "size mismatch";
    case POROSPLIT_E_GATE_FAILED: return "acceptance gate failed";
    case POROSPLIT_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

porosplit_status porosplit_isotropic_elasticity(double mu, double lambda, double voigt_out[9]) {
  if (!voigt_out) return null_argument("voigt_out");
  return guarded([&] {
    const auto C = porosplit::isotropic_elasticity(mu, lambda);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) voigt_out[3 * i + j] = C.voigt(i, j);
    return POROSPLIT_OK;
  });
}

porosplit_status porosplit_alpha_c_inv_alpha(const double voigt[9], const double biot[4],
                                             double* out) {
  if (!voigt) return null_argument("voigt");
  if (!biot) return null_argument("biot");
  if (!out) return null_argument("out");
  return guarded([&] {
    porosplit::ElasticityTensor C;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) C.voigt(i, j) = voigt[3 * i + j];
    porosplit::BiotTensor a;
    a.value << biot[0], biot[1], biot[2], biot[3];
    *out = porosplit::alpha_C_inv_alpha(C, a);
    return POROSPLIT_OK;
  });
}

porosplit_status porosplit_contraction_rate(double coupling_strength, double c0, double* out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = porosplit::contraction_rate(coupling_strength, c0);
    return POROSPLIT_OK;
  });
}

porosplit_status porosplit_scenario_from_json(const char* json, porosplit_scenario** out) {
  if (!json) return null_argument("json");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new porosplit_scenario{parse_text(json)};
    return POROSPLIT_OK;
  });
}

porosplit_status porosplit_scenario_from_file(const char* path, porosplit_scenario** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new porosplit_scenario{porosplit::load_scenario(path)};
    return POROSPLIT_OK;
  });
}

void porosplit_scenario_destroy(porosplit_scenario* sc) { delete sc; }

porosplit_status porosplit_scenario_kind(const porosplit_scenario* sc, char* buf, size_t size) {
  if (!sc) return null_argument("scenario");
  if (!buf) return null_argument("buf");
  const std::string name = porosplit::to_string(sc->config.kind);
  if (size < name.size() + 1)
    return fail(POROSPLIT_E_SIZE_MISMATCH, "buffer too small for scenario name");
  std::memcpy(buf, name.c_str(), name.size() + 1);
  return POROSPLIT_OK;
}

porosplit_status porosplit_scenario_theoretical_rate(const porosplit_scenario* sc, double* out) {
  if (!sc) return null_argument("scenario");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = porosplit::theoretical_rate(porosplit::MaterialField::homogeneous(sc->config.material));
    return POROSPLIT_OK;
  });
}

porosplit_status porosplit_validate_file(const char* path, size_t* issue_count) {
  if (!path) return null_argument("path");
  if (!issue_count) return null_argument("issue_count");
  return guarded([&] {
    const std::string text = porosplit::read_text_file(path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      *issue_count = 1;
      return fail(POROSPLIT_E_CONFIG, std::string("$: ") + e.what());
    }
    const auto issues = porosplit::validate_scenario(doc);
    *issue_count = issues.size();
    if (issues.empty()) return POROSPLIT_OK;
    std::string msg;
    for (const auto& i : issues) msg += (msg.empty() ? "" : "\n") + i;
    return fail(POROSPLIT_E_CONFIG, msg);
  });
}

porosplit_status porosplit_scenario_run(const porosplit_scenario* sc, const char* out_dir,
                                        porosplit_run** out) {
  if (!sc) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto run = std::make_unique<porosplit_run>();
    run->artifacts = porosplit::run_scenario(sc->config, out_dir ? out_dir : "");
    run->manifest = run->artifacts.manifest.string();
    for (const auto& f : run->artifacts.files) run->files.push_back(f.string());
    run->summary = run->artifacts.summary.dump(2);
    *out = run.release();
    return POROSPLIT_OK;
  });
}

void porosplit_run_destroy(porosplit_run* run) { delete run; }

int porosplit_run_passed(const porosplit_run* run) { return run && run->artifacts.passed() ? 1 : 0; }

const char* porosplit_run_manifest_path(const porosplit_run* run) {
  return run ? run->manifest.c_str() : "";
}

size_t porosplit_run_file_count(const porosplit_run* run) { return run ? run->files.size() : 0; }

const char* porosplit_run_file(const porosplit_run* run, size_t index) {
  if (!run || index >= run->files.size()) return nullptr;
  return run->files[index].c_str();
}

size_t porosplit_run_gate_count(const porosplit_run* run) {
  return run ? run->artifacts.gates.size() : 0;
}

porosplit_status porosplit_run_gate(const porosplit_run* run, size_t index, const char** name,
                                    int* passed, const char** detail) {
  if (!run) return null_argument("run");
  if (index >= run->artifacts.gates.size())
    return fail(POROSPLIT_E_INVALID_ARGUMENT, "gate index out of range");
  const auto& g = run->artifacts.gates[index];
  if (name) *name = g.name.c_str();
  if (passed) *passed = g.passed ? 1 : 0;
  if (detail) *detail = g.detail.c_str();
  return POROSPLIT_OK;
}

const char* porosplit_run_summary(const porosplit_run* run) {
  return run ? run->summary.c_str() : "";
}

porosplit_status porosplit_stage_create(const porosplit_scenario* sc, porosplit_stage** out) {
  if (!sc) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto st = std::make_unique<porosplit_stage>();
    st->setup = porosplit::first_stage(sc->config);
    st->solver = std::make_unique<porosplit::StageSolver>(st->setup.problem.ops,
                                                          st->setup.rhs.params, sc->config.solver);
    st->solver->set_theory_rate(st->setup.theory_rate);
    *out = st.release();
    return POROSPLIT_OK;
  });
}

void porosplit_stage_destroy(porosplit_stage* st) { delete st; }

porosplit_status porosplit_stage_dof_counts(const porosplit_stage* st, size_t* nu, size_t* np,
                                            size_t* nq) {
  if (!st) return null_argument("stage");
  const auto& ops = st->setup.problem.ops;
  if (nu) *nu = ops.nu();
  if (np) *np = ops.np();
  if (nq) *nq = ops.nq();
  return POROSPLIT_OK;
}

porosplit_status porosplit_stage_solve(porosplit_stage* st, porosplit_coupling method, double* u,
                                       double* p, double* q) {
  if (!st) return null_argument("stage");
  return guarded([&] {
    const auto& rhs = st->setup.rhs;
    porosplit::StageState state;
    porosplit::IterationReport report;
    report.theory_rate = st->setup.theory_rate;
    switch (method) {
      case POROSPLIT_MONOLITHIC:
        state = st->solver->monolithic_solve(rhs);
        break;
      case POROSPLIT_UNDRAINED_SPLIT:
      case POROSPLIT_ALTERNATING_MINIMIZATION: {
        const auto init = st->solver->initial_state(
            porosplit::Vector::Zero(static_cast<Eigen::Index>(st->setup.problem.ops.nu())), rhs);
        std::tie(state, report) = method == POROSPLIT_UNDRAINED_SPLIT
                                      ? st->solver->undrained_split_solve(init, rhs)
                                      : st->solver->alternating_minimization_solve(init, rhs);
        break;
      }
      default:
        return fail(POROSPLIT_E_INVALID_ARGUMENT, "unknown coupling method");
    }
    st->csv = porosplit::report_to_csv(report);
    st->json = porosplit::report_to_json(report).dump(2);
    st->iterations = report.iterations();
    copy_out(state.u, u);
    copy_out(state.p, p);
    copy_out(state.q, q);
    if (method != POROSPLIT_MONOLITHIC && !report.converged())
      return fail(POROSPLIT_E_NOT_CONVERGED,
                  "stage iteration stopped after " + std::to_string(report.sweeps) + " sweeps");
    return POROSPLIT_OK;
  });
}

const char* porosplit_stage_report_csv(const porosplit_stage* st) {
  return st ? st->csv.c_str() : "";
}

const char* porosplit_stage_report_json(const porosplit_stage* st) {
  return st ? st->json.c_str() : "";
}

int porosplit_stage_iterations(const porosplit_stage* st) { return st ? st->iterations : 0; }

}  // extern "C"
