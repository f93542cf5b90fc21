#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "sdcam/problems.hpp"

namespace sdcam {

using nlohmann::json;

namespace {

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(M.cols()));
    for (Index j = 0; j < M.cols(); ++j) row[static_cast<std::size_t>(j)] = M(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from(const json& j, const std::string& name) {
  if (!j.is_array()) throw std::invalid_argument("instance: '" + name + "' must be a list");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = j[k].get<double>();
  return v;
}

Matrix matrix_from(const json& j, const std::string& name) {
  if (!j.is_array()) throw std::invalid_argument("instance: '" + name + "' must be a list of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument("instance: '" + name + "' has ragged rows");
    for (Index k = 0; k < cols; ++k) M(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return M;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("instance: missing field '") + key + "'");
  return j.at(key);
}

json encode(const QcqpInstance& q) {
  json params = {{"n", q.params.n},         {"m", q.params.m},
                 {"alpha", q.params.alpha}, {"p", q.params.p},
                 {"scale0", q.params.scale0}};
  json Q = json::array(), b = json::array(), eig = json::array();
  for (const auto& M : q.Q) Q.push_back(to_json(M));
  for (const auto& v : q.b) b.push_back(to_json(v));
  for (const auto& v : q.eigenvalues) eig.push_back(to_json(v));
  json data = {{"Q0", to_json(q.Q0)}, {"b0", to_json(q.b0)}, {"Q", Q},
               {"b", b},              {"r_i", to_json(q.r_i)}, {"r", q.r},
               {"xbar", to_json(q.xbar)}, {"eigenvalues", eig}};
  return {{"params", params}, {"data", data}};
}

json encode(const MimoInstance& mi) {
  json params = {{"n", mi.params.n},         {"m", mi.params.m},
                 {"p_psk", mi.params.p_psk}, {"lambda1", mi.params.lambda1},
                 {"lambda2", mi.params.lambda2}, {"r_lo", mi.params.r_lo},
                 {"noise", mi.params.noise}};
  json data = {{"A", to_json(mi.A)}, {"yhat", to_json(mi.yhat)},
               {"theta_true", to_json(mi.theta_true)}};
  return {{"params", params}, {"data", data}};
}

json encode(const MlpInstance& ml) {
  json params = {{"layer_dims", ml.params.layer_dims},
                 {"activation", to_string(ml.params.activation)},
                 {"n_samples", ml.params.n_samples},
                 {"p", ml.params.p},
                 {"lambda", ml.params.lambda},
                 {"source", ml.params.source},
                 {"idx_images", ml.params.idx_images},
                 {"idx_labels", ml.params.idx_labels}};
  json data = {{"features", to_json(ml.features)},
               {"targets", to_json(ml.targets)},
               {"C_radius", ml.C_radius}};
  return {{"params", params}, {"data", data}};
}

QcqpInstance decode_qcqp(const json& j) {
  QcqpInstance q;
  const json& pr = field(j, "params");
  q.params.n = field(pr, "n").get<Index>();
  q.params.m = field(pr, "m").get<Index>();
  q.params.alpha = field(pr, "alpha").get<double>();
  q.params.p = field(pr, "p").get<double>();
  q.params.scale0 = field(pr, "scale0").get<double>();
  const json& d = field(j, "data");
  q.Q0 = matrix_from(field(d, "Q0"), "Q0");
  q.b0 = vector_from(field(d, "b0"), "b0");
  for (const auto& M : field(d, "Q")) q.Q.push_back(matrix_from(M, "Q"));
  for (const auto& v : field(d, "b")) q.b.push_back(vector_from(v, "b"));
  q.r_i = vector_from(field(d, "r_i"), "r_i");
  q.r = field(d, "r").get<double>();
  q.xbar = vector_from(field(d, "xbar"), "xbar");
  if (d.contains("eigenvalues"))
    for (const auto& v : d.at("eigenvalues")) q.eigenvalues.push_back(vector_from(v, "eigenvalues"));
  return q;
}

MimoInstance decode_mimo(const json& j) {
  MimoInstance mi;
  const json& pr = field(j, "params");
  mi.params.n = field(pr, "n").get<Index>();
  mi.params.m = field(pr, "m").get<Index>();
  mi.params.p_psk = field(pr, "p_psk").get<int>();
  mi.params.lambda1 = field(pr, "lambda1").get<double>();
  mi.params.lambda2 = field(pr, "lambda2").get<double>();
  mi.params.r_lo = field(pr, "r_lo").get<double>();
  mi.params.noise = field(pr, "noise").get<double>();
  const json& d = field(j, "data");
  mi.A = matrix_from(field(d, "A"), "A");
  mi.yhat = vector_from(field(d, "yhat"), "yhat");
  mi.theta_true = vector_from(field(d, "theta_true"), "theta_true");
  return mi;
}

MlpInstance decode_mlp(const json& j) {
  MlpInstance ml;
  const json& pr = field(j, "params");
  ml.params.layer_dims = field(pr, "layer_dims").get<std::vector<Index>>();
  ml.params.activation = parse_activation(field(pr, "activation").get<std::string>());
  ml.params.n_samples = field(pr, "n_samples").get<Index>();
  ml.params.p = field(pr, "p").get<double>();
  ml.params.lambda = field(pr, "lambda").get<double>();
  ml.params.source = field(pr, "source").get<std::string>();
  ml.params.idx_images = pr.value("idx_images", "");
  ml.params.idx_labels = pr.value("idx_labels", "");
  const json& d = field(j, "data");
  ml.features = matrix_from(field(d, "features"), "features");
  ml.targets = vector_from(field(d, "targets"), "targets");
  ml.C_radius = field(d, "C_radius").get<double>();
  return ml;
}

}  // namespace

std::string family_of(const Instance& inst) {
  switch (inst.index()) {
    case 0: return "qcqp";
    case 1: return "mimo";
    default: return "mlp";
  }
}

std::string write_instance_json(const Instance& inst) {
  json doc = std::visit([](const auto& x) { return encode(x); }, inst);
  doc["format_version"] = kInstanceFormatVersion;
  doc["family"] = family_of(inst);
  doc["seed"] = std::visit([](const auto& x) { return x.seed; }, inst);
  return doc.dump();
}

Instance read_instance_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("instance: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("instance: top level must be an object");
  const int version = field(doc, "format_version").get<int>();
  if (version != kInstanceFormatVersion)
    throw std::invalid_argument("instance: unsupported format_version " + std::to_string(version));
  const std::string family = field(doc, "family").get<std::string>();
  const auto seed = field(doc, "seed").get<std::uint64_t>();
  try {
    if (family == "qcqp") {
      QcqpInstance q = decode_qcqp(doc);
      q.seed = seed;
      q.validate();
      return q;
    }
    if (family == "mimo") {
      MimoInstance mi = decode_mimo(doc);
      mi.seed = seed;
      mi.validate();
      return mi;
    }
    if (family == "mlp") {
      MlpInstance ml = decode_mlp(doc);
      ml.seed = seed;
      ml.validate();
      return ml;
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("instance: malformed field: ") + e.what());
  }
  throw std::invalid_argument("instance: unknown family '" + family + "'");
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << write_instance_json(inst) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_instance_json(ss.str());
}

RunSetup make_setup(const Instance& inst) {
  RunSetup s;
  if (const auto* q = std::get_if<QcqpInstance>(&inst)) {
    s.problem = qcqp_problem(*q);
    s.x0 = qcqp_initial_point(*q);
    auto shared = std::make_shared<QcqpInstance>(*q);
    s.metric = [shared](const Vector& x) { return relative_feasibility(*shared, x); };
  } else if (const auto* mi = std::get_if<MimoInstance>(&inst)) {
    s.problem = mimo_problem(*mi);
    s.x0 = mimo_initial_point(*mi);
  } else {
    const auto& ml = std::get<MlpInstance>(inst);
    s.problem = mlp_problem(ml);
    s.x0 = mlp_initial_point(ml);
  }
  s.y0 = Vector::Zero(s.problem.m);
  return s;
}

SolverConfig default_solver_config(const std::string& family) {
  SolverConfig cfg;
  cfg.mu_max = 1e7;
  cfg.schedule.family = ScheduleFamily::power;
  if (family == "qcqp") {
    cfg.mu_init = 1.0;
    cfg.rho = 0.8;
    cfg.eta = 1.2;
    cfg.schedule.beta0 = 1.0;
    cfg.schedule.delta = 0.3;
    cfg.max_successful_iters = 3000;
  } else if (family == "mlp") {
    cfg.mu_init = 0.01;
    cfg.rho = 0.5;
    cfg.eta = 2.0;
    cfg.schedule.beta0 = 0.1;
    cfg.schedule.delta = 0.5;
    cfg.max_successful_iters = 3000;
  } else if (family == "mimo") {
    cfg.mu_init = 1.0;
    cfg.rho = 0.5;
    cfg.eta = 2.0;
    cfg.schedule.beta0 = 1.0;
    cfg.schedule.delta = 1.0 / 3.0;
    cfg.max_successful_iters = 1000;
  } else {
    throw std::invalid_argument("unknown problem family '" + family + "' (expected qcqp|mimo|mlp)");
  }
  return cfg;
}

}  // namespace sdcam
