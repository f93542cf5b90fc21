#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <openssl/evp.h>
#include <sstream>
#include <spdlog/spdlog.h>

#include "sdcam/cli.hpp"
#include "sdcam/prox.hpp"
#include "sdcam/rng.hpp"

namespace sdcam::cli {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  return os.str();
}

// ---------------------------------------------------------------------------
// run

namespace {

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string summary_json(const RunConfig& cfg, const SolveResult& res, const RateConstants& k,
                         const RateReport& report) {
  json doc;
  doc["family"] = cfg.family;
  doc["seed"] = cfg.seed;
  doc["instance"] = cfg.instance_path ? json(*cfg.instance_path) : json(nullptr);
  doc["status"] = to_string(res.status);
  const auto& st = res.final_state;
  doc["successful_iterations"] = res.trace.size();
  doc["total_trials"] = st.trial_count;
  doc["total_unsuccessful"] = st.unsuccessful_count;
  doc["final_mu"] = st.mu;

  if (!res.trace.empty()) {
    const TraceRow& r = res.trace.back();
    doc["final"] = {{"t", r.t},
                    {"step_norm", r.step_norm},
                    {"scaled_step", r.scaled_step},
                    {"gap", r.gap},
                    {"prev_gap", r.prev_gap},
                    {"residual", r.residual},
                    {"fg_value", r.fg_value},
                    {"h_at_y", r.h_at_y},
                    {"H_value", r.H_value},
                    {"Theta_value", number_or_null(r.Theta_value)},
                    {"rel_feas", number_or_null(r.rel_feas)}};
    double mi = r.margin_i, mii = r.margin_ii;
    for (const auto& row : res.trace) {
      mi = std::min(mi, row.margin_i);
      mii = std::min(mii, row.margin_ii);
    }
    doc["min_condition_margins"] = {{"margin_i", mi}, {"margin_ii", mii}};
  } else {
    doc["final"] = nullptr;
  }

  json consts = json::object();
  for (const auto& [name, c] : k.items()) {
    consts[name] = {{"value", number_or_null(c->value)},
                    {"provenance", to_string(c->provenance)},
                    {"missing", c->missing}};
  }
  doc["constants"] = consts;

  json rb;
  rb["regime"] = to_string(report.regime);
  rb["checkable"] = report.checkable();
  rb["ok"] = report.ok();
  rb["checked"] = report.checked;
  rb["evaluations"] = report.evaluations;
  json skipped = json::array();
  for (const auto& s : report.skipped)
    skipped.push_back({{"inequality", s.inequality}, {"missing", s.missing}});
  rb["skipped"] = skipped;
  json viol = json::array();
  for (std::size_t i = 0; i < report.violations.size() && i < 100; ++i) {
    const auto& v = report.violations[i];
    viol.push_back({{"inequality", v.inequality}, {"T", v.T}, {"lhs", v.lhs}, {"rhs", v.rhs}});
  }
  rb["violations"] = viol;
  rb["violation_count"] = report.violations.size();
  doc["rate_bound_check"] = rb;
  return doc.dump(2);
}

RunOutcome execute_run(const RunConfig& cfg) {
  const Instance inst = config_instance(cfg);
  const RunSetup setup = make_setup(inst);
  spdlog::info("run: {} seed {} n={} m={} beta0={} delta={} budget={}", cfg.family, cfg.seed,
               setup.problem.n, setup.problem.m, cfg.solver.schedule.beta0,
               cfg.solver.schedule.delta, cfg.solver.max_successful_iters);

  RunOutcome out;
  try {
    out.result = solve(setup.problem, cfg.solver, setup.x0, setup.y0, setup.metric);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("run: ") + e.what());
  }
  spdlog::debug("run: {} trials, {} unsuccessful", out.result.final_state.trial_count,
                out.result.final_state.unsuccessful_count);

  const Regime regime = cfg.regime.value_or(default_regime(cfg.family));
  if (!out.result.trace.empty()) {
    out.constants = rate_constants(setup.problem, cfg.solver, out.result);
    out.report = rate_bound_check(out.result.trace, out.constants, regime);
  } else {
    out.report.regime = regime;
  }
  for (const auto& s : out.report.skipped) {
    std::string miss;
    for (const auto& m : s.missing) miss += (miss.empty() ? "" : ", ") + m;
    spdlog::info("rate check {} not checkable: missing {}", s.inequality, miss);
  }
  for (std::size_t i = 0; i < out.report.violations.size() && i < 5; ++i) {
    const auto& v = out.report.violations[i];
    spdlog::error("rate check {} violated at T={}: {} > {}", v.inequality, v.T, v.lhs, v.rhs);
  }

  save_trace_csv(cfg.trace_path, out.result.trace);
  out.summary_json = summary_json(cfg, out.result, out.constants, out.report);
  {
    std::ofstream sf(cfg.summary_path, std::ios::binary);
    if (!sf) throw std::runtime_error("cannot open " + cfg.summary_path + " for writing");
    sf << out.summary_json << '\n';
  }
  out.exit_code = out.report.ok() ? kExitOk : kExitVerification;
  return out;
}

// ---------------------------------------------------------------------------
// check

namespace {

// Grid search on [lo, hi] refined by golden section on the best cell.
double grid_argmin(const std::function<double(double)>& phi, double lo, double hi, int cells) {
  double best_u = lo, best = phi(lo);
  const double h = (hi - lo) / cells;
  for (int k = 1; k <= cells; ++k) {
    const double u = lo + k * h, v = phi(u);
    if (v < best) {
      best = v;
      best_u = u;
    }
  }
  double a = std::max(lo, best_u - h), b = std::min(hi, best_u + h);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (phi(c) < phi(d)) b = d;
    else a = c;
  }
  const double u = 0.5 * (a + b);
  return phi(u) < best ? u : best_u;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

// Prox inequality of `op` at random centers against random competitors in its domain.
CheckLine prox_inequality(const std::string& name, const ProxOracle& op, Index dim,
                          const Vector& anchor, CounterRng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const Vector z = anchor + rng.normal_vector(dim);
    const Vector pz = op.prox(z, gamma);
    const ExtendedReal fp = op.eval(pz);
    if (!fp.is_finite())
      return {name, false, "prox left the domain at trial " + std::to_string(trial)};
    const double lhs = (z - pz).squaredNorm() / (2.0 * gamma) + fp.value();
    for (int k = 0; k < 50; ++k) {
      const Vector u = op.prox(anchor + 2.0 * rng.normal_vector(dim), std::pow(10.0, rng.uniform(-3.0, 1.0)));
      const ExtendedReal fu = op.eval(u);
      if (!fu.is_finite()) continue;
      const double rhs = (z - u).squaredNorm() / (2.0 * gamma) + fu.value();
      worst = std::max(worst, (lhs - rhs) / (1.0 + std::abs(rhs)));
    }
  }
  return {name, worst <= 1e-9, "worst relative excess " + fmt(worst)};
}

double spectral_by_power_iteration(const Matrix& M) {
  Vector v = Vector::Ones(M.rows()).normalized();
  double lam = 0.0;
  for (int k = 0; k < 3000; ++k) {
    const Vector w = M * v;
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
  }
  return lam;
}

}  // namespace

std::vector<CheckLine> run_checks(const CheckOptions& opt) {
  std::vector<CheckLine> lines;
  Instance inst;
  if (opt.instance_path) {
    inst = load_instance(*opt.instance_path);
  } else if (opt.family == "qcqp") {
    inst = qcqp_generate(opt.seed, {});
  } else if (opt.family == "mimo") {
    inst = mimo_generate(opt.seed, {});
  } else if (opt.family == "mlp") {
    inst = mlp_generate(opt.seed, {});
  } else {
    throw UsageError("check: family must be qcqp, mimo or mlp");
  }
  const std::string family = family_of(inst);
  RunSetup setup = make_setup(inst);
  Problem& p = setup.problem;
  if (opt.corrupt_gradient) {
    auto grad = p.f.grad;
    p.f.grad = [grad](const Vector& x) {
      Vector g = grad(x);
      const Index k = g.size() / 2;
      g(k) += 1e-2 * (1.0 + std::abs(g(k)));
      return g;
    };
  }

  CounterRng rng(opt.seed, streams::kChecks);
  std::vector<Vector> points;
  for (int k = 0; k < opt.points; ++k)
    points.push_back(p.g.prox(setup.x0 + 0.5 * rng.normal_vector(p.n), 1e-3));

  {
    double worst = 0.0;
    std::string where = "none", first_failure;
    bool pass = true;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto rep = check_gradient(p.f, points[k], std::nullopt, opt.seed + k);
      if (rep.max_rel_error >= worst) {
        worst = rep.max_rel_error;
        where = "point " + std::to_string(k) + " index " + std::to_string(rep.worst_index);
      }
      if (!rep.pass && pass) {
        pass = false;
        first_failure = "; first failure at point " + std::to_string(k) + ": " + rep.message;
      }
    }
    lines.push_back({"gradient", pass, "max rel error " + fmt(worst) + " at " + where + first_failure});
  }
  {
    double worst = 0.0, lin = 0.0;
    bool pass = true;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto rep = check_vjp(p.c, points[k], 5, std::nullopt, opt.seed + k);
      worst = std::max(worst, rep.max_rel_error);
      lin = std::max(lin, rep.max_linearity_error);
      pass = pass && rep.pass;
    }
    lines.push_back({"vjp", pass, "max rel error " + fmt(worst) + ", linearity " + fmt(lin)});
  }

  lines.push_back(prox_inequality("g prox inequality", p.g, p.n, setup.x0, rng));
  lines.push_back(prox_inequality("h prox inequality", p.h, p.m, p.c.eval(setup.x0), rng));

  {
    // Scalar lp prox against a grid for the exponents used by the families.
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double pexp = k % 2 == 0 ? 0.5 : 0.8;
      const LpProxParams prm{pexp, rng.uniform(0.01, 2.0), std::pow(10.0, rng.uniform(-3.0, 3.0))};
      const double z = rng.uniform(-10.0, 10.0);
      const double u = prox_lp_power(z, prm);
      const double lo = std::min(0.0, z), hi = std::max(0.0, z);
      const double g = grid_argmin([&](double v) { return lp_prox_objective(v, z, prm); }, lo, hi, 20000);
      worst = std::max(worst, lp_prox_objective(u, z, prm) - lp_prox_objective(g, z, prm));
    }
    lines.push_back({"lp prox vs grid", worst <= 1e-8, "worst excess " + fmt(worst)});
  }
  {
    const SolverConfig cfg = default_solver_config(family);
    bool pass = true;
    std::string detail;
    for (std::int64_t K : {1, 3, 10}) {
      ScheduleSpec s = cfg.schedule;
      s.family = ScheduleFamily::blocked;
      s.K = K;
      double prev = 0.0;
      for (std::int64_t t = 0; t <= 100000; ++t) {
        // alpha0 (t+1)^delta as beta0 ((t+1)/K)^delta, exact at the attained t = K-1.
        const double b = beta_at(s, t);
        const double lower = s.beta0 * std::pow(double(t + 1) / double(K), s.delta);
        const double upper = s.beta0 * std::pow(double(t + 1), s.delta);
        if (!(lower <= b && b <= upper) || b < prev) {
          pass = false;
          detail = "K=" + std::to_string(K) + " fails at t=" + std::to_string(t);
          break;
        }
        prev = b;
      }
    }
    lines.push_back({"schedule sandwich", pass, pass ? "K in {1,3,10}, t <= 1e5" : detail});
  }

  if (const auto* q = std::get_if<QcqpInstance>(&inst)) {
    double min_eig = INFINITY;
    for (const auto& Q : q->Q) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    const bool psd = min_eig >= -1e-10 && (q->r_i.array() < 0.0).all() && q->r > 0.0;
    lines.push_back({"qcqp PSD blocks", psd, "min eigenvalue " + fmt(min_eig) + ", r = " + fmt(q->r)});
    double mc = 0.0, lc = 0.0;
    const double sqrt_n = std::sqrt(double(q->params.n));
    for (const auto& Q : q->Q) {
      const double qn = spectral_by_power_iteration(Q);
      mc += std::pow(qn * q->r * sqrt_n, 2);
      lc += qn * qn;
    }
    mc = std::sqrt(mc);
    lc = std::sqrt(lc);
    const double L_pi = spectral_by_power_iteration(q->Q0);
    const bool ok = std::abs(mc - *p.c.jac_norm_bound) <= 1e-6 * mc &&
                    std::abs(lc - *p.c.jac_lipschitz_bound) <= 1e-6 * lc &&
                    std::abs(L_pi - *p.f.lipschitz_bound) <= 1e-9;
    lines.push_back({"qcqp constants", ok,
                     "L = " + fmt(*p.f.lipschitz_bound) + ", M_c = " + fmt(*p.c.jac_norm_bound) +
                         ", L_c = " + fmt(*p.c.jac_lipschitz_bound) + " (power iteration " +
                         fmt(L_pi) + ", " + fmt(mc) + ", " + fmt(lc) + ")"});
  }
  if (const auto* ml = std::get_if<MlpInstance>(&inst)) {
    const bool ok = ml->C_radius > 0.0 && setup.x0.lpNorm<Eigen::Infinity>() <= ml->C_radius;
    lines.push_back({"mlp x0 in C", ok, "C_radius = " + fmt(ml->C_radius)});
  }
  if (const auto* mi = std::get_if<MimoInstance>(&inst)) {
    const double r = mi->params.r_lo, below = std::nextafter(r, 0.0);
    const bool ok = std::abs(mimo_gamma(r, r) - mimo_gamma(below, r)) <= 1e-12 &&
                    std::abs(mimo_gamma_derivative(r, r) - mimo_gamma_derivative(below, r)) <= 1e-9;
    lines.push_back({"mimo gamma C1 at r_lo", ok, "r_lo = " + fmt(r)});
  }
  return lines;
}

}  // namespace sdcam::cli
