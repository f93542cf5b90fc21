#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "sdcam/cli.hpp"

namespace sdcam::cli {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: '" + where + "' must be an object");
}

void reject_unknown(const json& j, const std::string& where, std::set<std::string> allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw UsageError("config: unknown key '" + key + "' in " + where + " (allowed: " + list + ")");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

QcqpParams qcqp_params(const json& j) {
  QcqpParams p;
  reject_unknown(j, "problem.params", {"n", "m", "alpha", "p", "scale0"});
  read(j, "n", p.n, "problem.params");
  read(j, "m", p.m, "problem.params");
  read(j, "alpha", p.alpha, "problem.params");
  read(j, "p", p.p, "problem.params");
  read(j, "scale0", p.scale0, "problem.params");
  return p;
}

MimoParams mimo_params(const json& j) {
  MimoParams p;
  reject_unknown(j, "problem.params", {"n", "m", "p_psk", "lambda1", "lambda2", "r_lo", "noise"});
  read(j, "n", p.n, "problem.params");
  read(j, "m", p.m, "problem.params");
  read(j, "p_psk", p.p_psk, "problem.params");
  read(j, "lambda1", p.lambda1, "problem.params");
  read(j, "lambda2", p.lambda2, "problem.params");
  read(j, "r_lo", p.r_lo, "problem.params");
  read(j, "noise", p.noise, "problem.params");
  return p;
}

MlpParams mlp_params(const json& j) {
  MlpParams p;
  reject_unknown(j, "problem.params",
                 {"layer_dims", "activation", "n_samples", "p", "lambda", "source", "idx_images",
                  "idx_labels"});
  read(j, "layer_dims", p.layer_dims, "problem.params");
  std::string act = to_string(p.activation);
  read(j, "activation", act, "problem.params");
  p.activation = parse_activation(act);
  read(j, "n_samples", p.n_samples, "problem.params");
  read(j, "p", p.p, "problem.params");
  read(j, "lambda", p.lambda, "problem.params");
  read(j, "source", p.source, "problem.params");
  read(j, "idx_images", p.idx_images, "problem.params");
  read(j, "idx_labels", p.idx_labels, "problem.params");
  return p;
}

std::string default_summary_path(const std::string& trace) {
  const auto dot = trace.rfind(".csv");
  const std::string stem = dot != std::string::npos && dot + 4 == trace.size() ? trace.substr(0, dot) : trace;
  return stem + ".summary.json";
}

}  // namespace

Regime default_regime(const std::string& family) {
  if (family == "mimo") return Regime::lipschitz_h;
  if (family == "mlp") return Regime::full_domain_h;
  return Regime::bounded_domains;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  require_object(doc, "top level");
  reject_unknown(doc, "the top level",
                 {"schema_version", "seed", "assert_level", "problem", "solver", "schedule",
                  "output", "regime"});
  if (!doc.contains("schema_version")) throw UsageError("config: missing 'schema_version'");
  int version = 0;
  read(doc, "schema_version", version, "config");
  if (version != kConfigSchemaVersion)
    throw UsageError("config: unsupported schema_version " + std::to_string(version) +
                     " (expected " + std::to_string(kConfigSchemaVersion) + ")");

  RunConfig cfg;
  if (!doc.contains("problem")) throw UsageError("config: missing 'problem'");
  const json& prob = doc.at("problem");
  require_object(prob, "problem");
  reject_unknown(prob, "problem", {"family", "instance", "params"});
  read(prob, "family", cfg.family, "problem");
  if (cfg.family != "qcqp" && cfg.family != "mimo" && cfg.family != "mlp")
    throw UsageError("config: problem.family must be one of qcqp, mimo, mlp");
  read(doc, "seed", cfg.seed, "config");

  try {
    if (prob.contains("instance")) {
      if (prob.contains("params"))
        throw UsageError("config: give either problem.instance or problem.params, not both");
      std::string path;
      read(prob, "instance", path, "problem");
      cfg.instance_path = path;
    } else {
      const json params = prob.value("params", json::object());
      require_object(params, "problem.params");
      if (cfg.family == "qcqp") cfg.generated = qcqp_generate(cfg.seed, qcqp_params(params));
      if (cfg.family == "mimo") cfg.generated = mimo_generate(cfg.seed, mimo_params(params));
      if (cfg.family == "mlp") cfg.generated = mlp_generate(cfg.seed, mlp_params(params));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  cfg.solver = default_solver_config(cfg.family);
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    require_object(s, "solver");
    reject_unknown(s, "solver",
                   {"mu_max", "mu_init", "rho", "eta", "max_successful_iters", "max_total_trials",
                    "stop_residual", "stop_gap", "tol_cond_rel"});
    read(s, "mu_max", cfg.solver.mu_max, "solver");
    read(s, "mu_init", cfg.solver.mu_init, "solver");
    read(s, "rho", cfg.solver.rho, "solver");
    read(s, "eta", cfg.solver.eta, "solver");
    read(s, "max_successful_iters", cfg.solver.max_successful_iters, "solver");
    read(s, "max_total_trials", cfg.solver.max_total_trials, "solver");
    read_opt(s, "stop_residual", cfg.solver.stop_residual, "solver");
    read_opt(s, "stop_gap", cfg.solver.stop_gap, "solver");
    read(s, "tol_cond_rel", cfg.solver.tol_cond_rel, "solver");
  }
  if (doc.contains("schedule")) {
    const json& s = doc.at("schedule");
    require_object(s, "schedule");
    reject_unknown(s, "schedule", {"family", "beta0", "delta", "K"});
    std::string fam = to_string(cfg.solver.schedule.family);
    read(s, "family", fam, "schedule");
    try {
      cfg.solver.schedule.family = parse_schedule_family(fam);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    read(s, "beta0", cfg.solver.schedule.beta0, "schedule");
    read(s, "delta", cfg.solver.schedule.delta, "schedule");
    read(s, "K", cfg.solver.schedule.K, "schedule");
  }
  if (doc.contains("assert_level")) {
    std::string level;
    read(doc, "assert_level", level, "config");
    try {
      cfg.solver.assert_level = parse_assert_level(level);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }
  if (doc.contains("regime")) {
    std::string r;
    read(doc, "regime", r, "config");
    try {
      cfg.regime = parse_regime(r);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }

  if (!doc.contains("output")) throw UsageError("config: missing 'output'");
  const json& out = doc.at("output");
  require_object(out, "output");
  reject_unknown(out, "output", {"trace", "summary"});
  read(out, "trace", cfg.trace_path, "output");
  if (cfg.trace_path.empty()) throw UsageError("config: output.trace is required");
  cfg.summary_path = default_summary_path(cfg.trace_path);
  read(out, "summary", cfg.summary_path, "output");

  if (cfg.solver.max_successful_iters < 1 || cfg.solver.max_total_trials < 1)
    throw UsageError("config: iteration and trial budgets must be at least 1");
  try {
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

Instance config_instance(const RunConfig& cfg) {
  if (!cfg.instance_path) return cfg.generated;
  Instance inst;
  try {
    inst = load_instance(*cfg.instance_path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (family_of(inst) != cfg.family)
    throw UsageError("config: instance file holds a " + family_of(inst) +
                     " instance but problem.family is " + cfg.family);
  return inst;
}

}  // namespace sdcam::cli
