#include "deflab/deflab.h"

#include <exception>
#include <string>

#include "deflab/experiment.hpp"
#include "json.hpp"

struct dfl_experiment {
  deflab::ExperimentConfig config;
  std::string config_text;
  std::string report;
  bool has_report = false;
};

struct dfl_field {
  deflab::ScalarField field;
};

namespace {

thread_local std::string last_error;

dfl_status fail(dfl_status status, const std::string& msg) {
  last_error = msg;
  return status;
}

dfl_status classify(const deflab::Error& e) {
  switch (e.code()) {
    case deflab::ErrorCode::InvalidConfig:
    case deflab::ErrorCode::InvalidM:
    case deflab::ErrorCode::InvalidInstance:
      return DFL_ERR_INVALID_CONFIG;
    default:
      return DFL_ERR_INTERNAL;
  }
}

template <typename Fn>
dfl_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const deflab::Error& e) {
    return fail(classify(e), e.what());
  } catch (const std::exception& e) {
    return fail(DFL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DFL_ERR_INTERNAL, "unknown error");
  }
}

dfl_status create(deflab::ExperimentConfig cfg, dfl_experiment** out) {
  auto* exp = new dfl_experiment{std::move(cfg), {}, {}, false};
  exp->config_text = deflab::config_echo(exp->config);
  *out = exp;
  return DFL_OK;
}

}  // namespace

extern "C" {

const char* dfl_version(void) { return deflab::kVersion; }

const char* dfl_last_error(void) { return last_error.c_str(); }

dfl_status dfl_experiment_create_from_file(const char* config_path, dfl_experiment** out) {
  if (!config_path || !out) return fail(DFL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return create(deflab::load_config(config_path), out); });
}

dfl_status dfl_experiment_create_from_json(const char* config_json, dfl_experiment** out) {
  if (!config_json || !out) return fail(DFL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return create(deflab::parse_config(config_json), out); });
}

dfl_status dfl_experiment_set_seed(dfl_experiment* exp, uint64_t seed) {
  if (!exp) return fail(DFL_ERR_INVALID_ARGUMENT, "null experiment");
  exp->config.seed = seed;
  exp->config_text = deflab::config_echo(exp->config);
  return DFL_OK;
}

dfl_status dfl_experiment_set_workers(dfl_experiment* exp, int workers) {
  if (!exp || workers < 0) return fail(DFL_ERR_INVALID_ARGUMENT, "bad experiment or worker count");
  exp->config.workers = workers;
  exp->config_text = deflab::config_echo(exp->config);
  return DFL_OK;
}

dfl_status dfl_experiment_run(dfl_experiment* exp, const char* subcommand, const char* out_dir, int strict) {
  if (!exp || !subcommand || !out_dir) return fail(DFL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto res = deflab::run_experiment(exp->config, subcommand, out_dir);
    exp->report = res.report;
    exp->has_report = true;
    if (strict && !res.checks_passed) return fail(DFL_ERR_STRICT, "one or more invariant checks failed");
    return DFL_OK;
  });
}

const char* dfl_experiment_report(const dfl_experiment* exp) {
  return exp && exp->has_report ? exp->report.c_str() : nullptr;
}

const char* dfl_experiment_config(const dfl_experiment* exp) { return exp ? exp->config_text.c_str() : nullptr; }

void dfl_experiment_destroy(dfl_experiment* exp) { delete exp; }

dfl_status dfl_field_create(const char* functional_json, const char* box_json, dfl_field** out) {
  if (!functional_json || !out) return fail(DFL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::string text = std::string("{\"functional\":") + functional_json;
    if (box_json) text += std::string(",\"box\":") + box_json;
    text += "}";
    const auto cfg = deflab::parse_config(text);
    *out = new dfl_field{deflab::make_field(cfg.functional, cfg.box)};
    return DFL_OK;
  });
}

int dfl_field_dim(const dfl_field* field) { return field ? field->field.dim() : 0; }

dfl_status dfl_field_evaluate(const dfl_field* field, const double* u, size_t dim, double* out) {
  if (!field || !u || !out) return fail(DFL_ERR_INVALID_ARGUMENT, "null argument");
  if (dim != static_cast<size_t>(field->field.dim())) return fail(DFL_ERR_INVALID_ARGUMENT, "dimension mismatch");
  return guarded([&] {
    *out = field->field.evaluate(deflab::Point::from_span({u, dim}));
    return DFL_OK;
  });
}

dfl_status dfl_field_gradient(const dfl_field* field, const double* u, size_t dim, double* out) {
  if (!field || !u || !out) return fail(DFL_ERR_INVALID_ARGUMENT, "null argument");
  if (dim != static_cast<size_t>(field->field.dim())) return fail(DFL_ERR_INVALID_ARGUMENT, "dimension mismatch");
  return guarded([&] {
    const auto g = field->field.gradient(deflab::Point::from_span({u, dim}));
    for (int i = 0; i < g.dim(); ++i) out[i] = g[i];
    return DFL_OK;
  });
}

void dfl_field_destroy(dfl_field* field) { delete field; }

}  // extern "C"
