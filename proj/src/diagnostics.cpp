#include "sdcam/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "sdcam/solver.hpp"

namespace sdcam {

// ---------------------------------------------------------------------------
// Stationarity

double stationarity_norm(const Vector& grad_f_x, const Vector& psi, const Vector& jt_xi) {
  return (grad_f_x + psi + jt_xi).norm();
}

StationarityWitness subproblem_witnesses(const Problem& p, const Vector& x_t,
                                         const Vector& x_next, const Vector& y_t, double mu_t,
                                         double beta_t, double beta_prev) {
  const Vector c_t = p.c.eval(x_t);
  const Vector jtr = p.c.vjp(x_t, c_t - y_t);
  const Vector delta = x_next - x_t;
  StationarityWitness w;
  w.psi = -p.f.grad(x_t) - beta_t * jtr - (2.0 / mu_t) * delta;
  w.xi = beta_prev * (c_t - y_t);
  return w;
}

double stationarity_residual(const Problem& p, const Vector& x_t, const Vector& x_next,
                             const Vector& y_t, double mu_t, double beta_t, double beta_prev) {
  const StationarityWitness w =
      subproblem_witnesses(p, x_t, x_next, y_t, mu_t, beta_t, beta_prev);
  return stationarity_norm(p.f.grad(x_next), w.psi, p.c.vjp(x_t, w.xi));
}

Certificate certificate(const Problem& p, const Vector& x, const Vector& y, const Vector& z,
                        const Vector& psi, const Vector& xi, double eps1, double eps2,
                        double eps3) {
  Certificate cert;
  cert.d1 = stationarity_norm(p.f.grad(x), psi, p.c.vjp(z, xi));
  cert.d2 = (p.c.eval(x) - y).norm();
  cert.d3 = (x - z).norm();
  cert.pass = cert.d1 <= eps1 && cert.d2 <= eps2 && cert.d3 <= eps3;
  return cert;
}

// ---------------------------------------------------------------------------
// Merit functions

namespace {

double fg_at(const Problem& p, const Vector& x, const char* who) {
  const ExtendedReal gx = p.g.eval(x);
  if (gx.is_infinite()) throw std::invalid_argument(std::string(who) + ": x outside dom g");
  return p.f.eval(x) + gx.value();
}

double h_at(const Problem& p, const Vector& y, const char* who) {
  const ExtendedReal hy = p.h.eval(y);
  if (hy.is_infinite()) throw std::invalid_argument(std::string(who) + ": y outside dom h");
  return hy.value();
}

}  // namespace

double H_value(const Problem& p, const Vector& x, double beta, const Vector& y) {
  const double fg = fg_at(p, x, "H_value");
  const double hy = h_at(p, y, "H_value");
  return fg + 0.5 * beta * (p.c.eval(x) - y).squaredNorm() + hy;
}

double theta_value(const Problem& p, const Vector& x, double beta, const Vector& y,
                   double inf_fg) {
  const double fg = fg_at(p, x, "theta_value");
  const double hy = h_at(p, y, "theta_value");
  return (fg - inf_fg) / beta + 0.5 * (p.c.eval(x) - y).squaredNorm() + hy / beta;
}

bool theta_nonincreasing(double previous, double current) {
  return current <= previous + 1e-7 * std::abs(previous) + 1e-300;
}

// ---------------------------------------------------------------------------
// Subsequence selection

std::vector<double> running_averages(std::span<const double> a) {
  std::vector<double> b;
  b.reserve(a.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sum += a[k];
    b.push_back(sum / static_cast<double>(k + 1));
  }
  return b;
}

std::vector<std::int64_t> select_subsequence(std::span<const double> a) {
  const std::vector<double> b = running_averages(a);
  std::vector<std::int64_t> out;
  // b_T <= b_{T-1} is equivalent to a_T <= b_{T-1}; testing the latter keeps
  // the returned indices consistent with the certified relation.
  for (std::size_t T = 2; T <= a.size(); ++T) {
    if (a[T - 1] <= b[T - 2]) out.push_back(static_cast<std::int64_t>(T));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delta selection

double suggest_delta(double eps1, double eps2) {
  if (!(eps1 > 0.0 && eps1 < 1.0) || !(eps2 > 0.0 && eps2 < 1.0))
    throw std::invalid_argument("suggest_delta: eps1 and eps2 must lie in (0,1)");
  const double ratio = std::log(1.0 / eps1) / std::log(1.0 / eps2);
  return 1.0 / (2.0 * ratio + 1.0);
}

// ---------------------------------------------------------------------------
// Rate constants

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::user_supplied: return "user_supplied";
    case Provenance::computed: return "computed";
    case Provenance::unavailable: return "unavailable";
  }
  return "?";
}

std::vector<std::pair<std::string, const Constant*>> RateConstants::items() const {
  return {{"L", &L},           {"L_c", &L_c},         {"M_c", &M_c},         {"M_h", &M_h},
          {"alpha0", &alpha0}, {"gamma0", &gamma0},   {"eta0", &eta0},       {"delta", &delta},
          {"M0", &M0},         {"K0", &K0},           {"M1", &M1},           {"M2", &M2},
          {"M3", &M3},         {"lambda1", &lambda1}, {"lambda2", &lambda2}, {"lambda3", &lambda3},
          {"lambda4", &lambda4}, {"lambda5", &lambda5}, {"lambda6", &lambda6},
          {"lambda7", &lambda7}, {"lambda8", &lambda8}};
}

RunStart run_start(const SolveResult& result) {
  if (result.trace.empty()) throw std::invalid_argument("run_start: empty trace");
  RunStart s;
  s.initial_gap = result.initial_gap;
  s.h_y0 = result.h_y0;
  s.fg_x1 = result.trace.front().fg_value;
  s.gap_x1_y0 = result.trace.front().prev_gap;
  return s;
}

namespace {

Constant user(const std::optional<double>& v, const std::string& name) {
  Constant c;
  if (v) {
    c.value = *v;
    c.provenance = Provenance::user_supplied;
  } else {
    c.missing = {name};
  }
  return c;
}

Constant computed(double v) {
  Constant c;
  c.value = v;
  c.provenance = Provenance::computed;
  return c;
}

// Builds a computed constant when every dependency is available; otherwise
// collects the missing inputs of the dependencies.
Constant derive(std::initializer_list<std::pair<const char*, const Constant*>> deps,
                const std::function<double()>& formula) {
  Constant c;
  for (const auto& [name, dep] : deps) {
    if (dep->available()) continue;
    if (dep->missing.empty()) {
      c.missing.emplace_back(name);
    } else {
      for (const auto& m : dep->missing)
        if (std::find(c.missing.begin(), c.missing.end(), m) == c.missing.end())
          c.missing.push_back(m);
    }
  }
  if (c.missing.empty()) {
    c.value = formula();
    c.provenance = Provenance::computed;
  }
  return c;
}

}  // namespace

RateConstants rate_constants(const Problem& p, const ScheduleSpec& s, double rho, double mu_max,
                             const RunStart& start) {
  s.validate();
  RateConstants k;
  k.rho = rho;
  k.mu_max = mu_max;
  k.beta0 = s.beta0;

  k.L = user(p.f.lipschitz_bound, "L");
  k.L_c = user(p.c.jac_lipschitz_bound, "L_c");
  k.M_c = user(p.c.jac_norm_bound, "M_c");
  k.M_h = user(p.h_lipschitz_bound, "M_h");
  const Constant inf_fg = user(p.inf_fg_lower_bound, "inf_fg_lower_bound");
  const Constant fg_sup = user(p.fg_abs_sup_bound, "fg_abs_sup_bound");
  const Constant h_sup = user(p.h_sup_on_image_bound, "h_sup_on_image_bound");

  k.alpha0 = computed(s.alpha0());
  k.gamma0 = computed(s.gamma0());
  k.eta0 = computed(s.eta0());
  k.delta = computed(s.delta);

  const double b0 = s.beta0;
  const double a0 = *k.alpha0;
  const double g0 = *k.gamma0;
  const double e0 = *k.eta0;
  const double d = s.delta;

  k.M0 = derive({{"inf_fg_lower_bound", &inf_fg}}, [&] {
    const double inner = 4.0 / b0 * (start.fg_x1 - *inf_fg) +
                         2.0 * start.gap_x1_y0 * start.gap_x1_y0 + 4.0 / b0 * start.h_y0;
    return std::max(start.initial_gap, std::sqrt(std::max(inner, 0.0)));
  });
  k.M1 = derive({{"inf_fg_lower_bound", &inf_fg}}, [&] {
    return start.fg_x1 + 0.5 * b0 * start.gap_x1_y0 * start.gap_x1_y0 + start.h_y0 - *inf_fg;
  });
  k.K0 = derive({{"M1", &k.M1}, {"M_h", &k.M_h}}, [&] {
    const double mh = *k.M_h;
    return *k.M1 + g0 * (1.0 + d) * mh * mh / (2.0 * a0 * b0);
  });
  k.M3 = derive({{"fg_abs_sup_bound", &fg_sup}, {"h_sup_on_image_bound", &h_sup}},
                [&] { return 2.0 * *fg_sup + *h_sup; });
  k.M2 = derive({{"M3", &k.M3}}, [&] { return *k.M3 * e0 / a0; });

  k.lambda1 = derive({{"L", &k.L}, {"M_h", &k.M_h}, {"L_c", &k.L_c}},
                     [&] { return *k.L + std::pow(2.0, d) * g0 / a0 * *k.M_h * *k.L_c; });
  k.lambda2 = derive({{"L", &k.L}, {"M1", &k.M1}, {"M_c", &k.M_c}, {"M2", &k.M2}}, [&] {
    const double L = *k.L, m1 = *k.M1, mc = *k.M_c;
    return 32.0 / rho * L * m1 + 32.0 * m1 + 8.0 * mu_max * m1 * L * L +
           16.0 * e0 * mc * mc * *k.M2 / (1.0 - d) + 4.0 * mu_max * m1;
  });
  k.lambda3 = derive({{"L", &k.L}, {"M2", &k.M2}}, [&] {
    const double L = *k.L, m2 = *k.M2;
    return 32.0 / rho * L * m2 + 32.0 * m2 + 8.0 * mu_max * m2 * L * L + 4.0 * mu_max * m2;
  });
  k.lambda4 = derive({{"L_c", &k.L_c}, {"M0", &k.M0}, {"M_c", &k.M_c}}, [&] {
    return 32.0 / rho * (*k.L_c * *k.M0 + *k.M_c * *k.M_c) * g0;
  });
  k.lambda5 = derive({{"L", &k.L}, {"L_c", &k.L_c}, {"M0", &k.M0}, {"M_c", &k.M_c}}, [&] {
    return *k.L / rho + (*k.L_c * *k.M0 + *k.M_c * *k.M_c) * g0 / rho;
  });
  if (d < 0.5) {
    k.lambda6 = derive({{"L", &k.L}, {"M1", &k.M1}, {"M_c", &k.M_c}, {"M0", &k.M0}}, [&] {
      const double L = *k.L, m0 = *k.M0, mc = *k.M_c;
      return (8.0 * L * L + 4.0) * mu_max * *k.M1 + 32.0 * *k.M1 +
             8.0 * e0 * e0 * mc * mc * m0 * m0 / (1.0 - 2.0 * d);
    });
  } else {
    k.lambda6.missing = {"delta < 1/2"};
  }
  k.lambda7 = derive({{"L", &k.L}, {"M0", &k.M0}, {"M1", &k.M1}, {"lambda5", &k.lambda5}}, [&] {
    const double L = *k.L, m0 = *k.M0;
    return (8.0 * L * L + 4.0) * mu_max * m0 * m0 * g0 + 32.0 * m0 * m0 * g0 +
           32.0 * *k.lambda5 * *k.M1;
  });
  k.lambda8 = derive({{"lambda5", &k.lambda5}, {"M0", &k.M0}},
                     [&] { return 32.0 * *k.lambda5 * *k.M0 * *k.M0 * g0; });
  return k;
}

RateConstants rate_constants(const Problem& p, const SolverConfig& cfg,
                             const SolveResult& result) {
  return rate_constants(p, cfg.schedule, cfg.rho, cfg.mu_max, run_start(result));
}

// ---------------------------------------------------------------------------
// Rate inequality checks

Regime parse_regime(const std::string& name) {
  if (name == "lipschitz_h") return Regime::lipschitz_h;
  if (name == "full_domain_h") return Regime::full_domain_h;
  if (name == "bounded_domains") return Regime::bounded_domains;
  throw std::invalid_argument("unknown regime '" + name +
                              "' (expected lipschitz_h|full_domain_h|bounded_domains)");
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::lipschitz_h: return "lipschitz_h";
    case Regime::full_domain_h: return "full_domain_h";
    case Regime::bounded_domains: return "bounded_domains";
  }
  return "?";
}

bool RateReport::was_checked(const std::string& name) const {
  return std::find(checked.begin(), checked.end(), name) != checked.end();
}

namespace {

bool holds(double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-9) + 1e-12; }

// Running sums over rows 1..T, indexed by T (entry 0 unused).
struct Sums {
  std::vector<double> inv_mu_sq, inv_mu, step_sq, prev_gap, res_next_sq, res_sq;
  std::vector<double> min_lip, min_fd, min_bd;
};

Sums accumulate(const Trace& trace) {
  const std::size_t N = trace.size();
  Sums s;
  for (auto* v : {&s.inv_mu_sq, &s.inv_mu, &s.step_sq, &s.prev_gap, &s.res_next_sq, &s.res_sq})
    v->assign(N, 0.0);
  for (auto* v : {&s.min_lip, &s.min_fd, &s.min_bd}) v->assign(N, HUGE_VAL);
  for (std::size_t T = 1; T < N; ++T) {
    const TraceRow& r = trace[T];
    const double sq = r.step_norm * r.step_norm;
    s.inv_mu_sq[T] = s.inv_mu_sq[T - 1] + sq / (r.mu_t * r.mu_t);
    s.inv_mu[T] = s.inv_mu[T - 1] + sq / r.mu_t;
    s.step_sq[T] = s.step_sq[T - 1] + sq;
    s.prev_gap[T] = s.prev_gap[T - 1] + r.prev_gap;
    s.res_next_sq[T] = s.res_next_sq[T - 1] + r.residual_next * r.residual_next;
    s.res_sq[T] = s.res_sq[T - 1] + r.residual * r.residual;
    s.min_lip[T] = std::min(s.min_lip[T - 1], r.residual_next * r.residual_next + r.prev_gap);
    s.min_fd[T] = std::min(s.min_fd[T - 1],
                           r.residual * r.residual + sq + r.prev_gap * r.prev_gap);
    s.min_bd[T] = std::min(s.min_bd[T - 1], r.residual * r.residual + sq);
  }
  return s;
}

struct Inequality {
  std::string name;
  std::vector<std::string> needs;
  // Evaluates one instance (horizon T or iteration t); returns (lhs, rhs).
  std::function<std::pair<double, double>(std::size_t)> eval;
  bool per_row_from_zero = false;  // iterate over all rows t >= 0 instead of T >= 1
};

class Checker {
 public:
  Checker(const Trace& trace, const RateConstants& k, RateReport& report)
      : trace_(trace), report_(report) {
    for (const auto& [name, c] : k.items()) consts_[name] = c;
  }

  void run(const Inequality& q) {
    std::vector<std::string> missing;
    for (const auto& need : q.needs) {
      const Constant* c = consts_.at(need);
      if (c->available()) continue;
      if (c->missing.empty()) missing.push_back(need);
      for (const auto& m : c->missing)
        if (std::find(missing.begin(), missing.end(), m) == missing.end()) missing.push_back(m);
    }
    if (!missing.empty()) {
      report_.skipped.push_back({q.name, missing});
      return;
    }
    report_.checked.push_back(q.name);
    const std::size_t first = q.per_row_from_zero ? 0 : 1;
    for (std::size_t i = first; i < trace_.size(); ++i) {
      const auto [lhs, rhs] = q.eval(i);
      ++report_.evaluations;
      if (!holds(lhs, rhs)) {
        report_.violations.push_back({q.name, static_cast<std::int64_t>(i), lhs, rhs});
      }
    }
  }

 private:
  const Trace& trace_;
  RateReport& report_;
  std::map<std::string, const Constant*> consts_;
};

void validate_trace(const Trace& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].t != static_cast<std::int64_t>(i))
      throw std::invalid_argument("rate_bound_check: trace rows must be t = 0, 1, 2, ... (row " +
                                  std::to_string(i) + " has t = " + std::to_string(trace[i].t) +
                                  ")");
  }
}

Inequality mu_lower_bound_inequality(const Trace& trace, const RateConstants& k) {
  return {"mu_lower_bound",
          {"L", "L_c", "M_c", "M0"},
          [&trace, &k](std::size_t t) {
            const TraceRow& r = trace[t];
            const double rhs = k.rho / (*k.L + (*k.L_c * *k.M0 + *k.M_c * *k.M_c) * r.beta_t);
            // Stated as rhs <= mu_t; flipped into lhs <= rhs form on reciprocals.
            return std::pair{1.0 / r.mu_t, 1.0 / rhs};
          },
          true};
}

}  // namespace

RateReport mu_lower_bound_check(const Trace& trace, const RateConstants& consts) {
  validate_trace(trace);
  RateReport report;
  Checker checker(trace, consts, report);
  checker.run(mu_lower_bound_inequality(trace, consts));
  return report;
}

RateReport rate_bound_check(const Trace& trace, const RateConstants& k, Regime regime) {
  validate_trace(trace);
  RateReport report;
  report.regime = regime;
  const Sums s = accumulate(trace);
  Checker checker(trace, k, report);

  const double rho_inv = 1.0 / k.rho;
  const double mu_max = k.mu_max;
  auto dT = [](std::size_t T) { return static_cast<double>(T); };
  auto lip_c = [&k] { return *k.L_c * *k.M0 + *k.M_c * *k.M_c; };
  auto omega = [&k](std::size_t T) { return *k.M1 + *k.M2 * (std::log(double(T)) + 1.0); };

  std::vector<Inequality> list;
  list.push_back(mu_lower_bound_inequality(trace, k));

  if (regime == Regime::lipschitz_h) {
    auto prev_gap_rhs = [&k](std::size_t T) {
      const double a0 = *k.alpha0, d = *k.delta, Tp = double(T) + 1.0;
      return 2.0 * *k.M_h / (a0 * (1.0 - d)) * std::pow(Tp, -d) +
             std::sqrt(8.0 * *k.K0 / (a0 * (1.0 - d)) * std::pow(Tp, -1.0 - d));
    };
    auto upsilon = [&k, rho_inv, mu_max, lip_c](std::size_t T) {
      const double Tp = double(T) + 1.0, K0 = *k.K0, d = *k.delta;
      const double l1 = *k.lambda1, mh = *k.M_h, mc = *k.M_c, e0 = *k.eta0, a0 = *k.alpha0;
      return 6.0 * mu_max * K0 * l1 * l1 / double(T) + 48.0 * rho_inv * *k.L * K0 / Tp +
             48.0 * rho_inv * lip_c() * K0 * *k.gamma0 / std::pow(Tp, 1.0 - d) +
             12.0 * mh * mh * mc * mc * e0 * e0 / (a0 * a0 * Tp);
    };
    list.push_back({"lip_avg_inv_mu_sq", {"L", "L_c", "M_c", "M0", "K0"}, [&, lip_c](std::size_t T) {
                      const double Tp = dT(T) + 1.0, K0 = *k.K0;
                      return std::pair{s.inv_mu_sq[T] / dT(T),
                                       4.0 * rho_inv * *k.L * K0 / Tp +
                                           4.0 * rho_inv * lip_c() * K0 * *k.gamma0 /
                                               std::pow(Tp, 1.0 - *k.delta)};
                    }});
    list.push_back({"lip_avg_inv_mu", {"K0"}, [&](std::size_t T) {
                      return std::pair{s.inv_mu[T] / dT(T), 2.0 * *k.K0 / dT(T)};
                    }});
    list.push_back({"lip_avg_step_sq", {"K0"}, [&](std::size_t T) {
                      return std::pair{s.step_sq[T] / dT(T), 2.0 * mu_max * *k.K0 / dT(T)};
                    }});
    list.push_back({"lip_avg_prev_gap", {"M_h", "K0"}, [&, prev_gap_rhs](std::size_t T) {
                      return std::pair{s.prev_gap[T] / dT(T), prev_gap_rhs(T)};
                    }});
    list.push_back({"lip_avg_residual_sq",
                    {"L", "L_c", "M_c", "M_h", "M0", "K0", "lambda1"},
                    [&, upsilon](std::size_t T) {
                      return std::pair{s.res_next_sq[T] / dT(T), upsilon(T)};
                    }});
    list.push_back({"lip_min_residual",
                    {"L", "L_c", "M_c", "M_h", "M0", "K0", "lambda1"},
                    [&, upsilon, prev_gap_rhs](std::size_t T) {
                      return std::pair{s.min_lip[T], upsilon(T) + prev_gap_rhs(T)};
                    }});
  } else if (regime == Regime::full_domain_h) {
    list.push_back({"fd_avg_inv_mu_sq", {"L", "L_c", "M_c", "M0", "M1", "M2"},
                    [&, lip_c, omega](std::size_t T) {
                      const double Tp = dT(T) + 1.0, om = omega(T);
                      return std::pair{s.inv_mu_sq[T] / dT(T),
                                       4.0 * rho_inv * *k.L * om / Tp +
                                           4.0 * rho_inv * lip_c() * *k.gamma0 * om /
                                               std::pow(Tp, 1.0 - *k.delta)};
                    }});
    list.push_back({"fd_avg_inv_mu", {"M1", "M2"}, [&, omega](std::size_t T) {
                      return std::pair{s.inv_mu[T] / dT(T), 4.0 * omega(T) / (dT(T) + 1.0)};
                    }});
    list.push_back({"fd_avg_step_sq", {"M1", "M2"}, [&, omega](std::size_t T) {
                      return std::pair{s.step_sq[T] / dT(T),
                                       4.0 * mu_max * omega(T) / (dT(T) + 1.0)};
                    }});
    list.push_back({"fd_prev_gap_sq", {"M3", "M0"}, [&](std::size_t t) {
                      const double tp = dT(t) + 1.0, m0 = *k.M0;
                      const double pg = trace[t].prev_gap;
                      return std::pair{pg * pg,
                                       *k.M3 / (*k.alpha0 * std::pow(tp, *k.delta)) +
                                           2.0 * m0 * m0 * *k.eta0 / (*k.alpha0 * tp)};
                    }});
    // ||c(x^t) - y^t|| is the gap logged on row t-1, whose beta is beta_{t-1}.
    list.push_back({"fd_gap_sq", {"M3"}, [&](std::size_t t) {
                      const TraceRow& r = trace[t - 1];
                      return std::pair{r.gap * r.gap, 2.0 * *k.M3 / r.beta_t};
                    }});
    list.push_back({"fd_gap_sq_schedule", {"M3"}, [&](std::size_t t) {
                      const TraceRow& r = trace[t - 1];
                      return std::pair{r.gap * r.gap,
                                       2.0 * *k.M3 / (*k.alpha0 * std::pow(dT(t), *k.delta))};
                    }});
    list.push_back({"fd_avg_residual_sq", {"L", "L_c", "M_c", "M0", "M1", "M2"},
                    [&, lip_c, omega](std::size_t T) {
                      const double Tp = dT(T) + 1.0, om = omega(T), L = *k.L, mc = *k.M_c;
                      const double rhs =
                          (32.0 * (rho_inv * L + 1.0) + 8.0 * mu_max * L * L) / Tp * om +
                          32.0 * rho_inv * lip_c() * *k.gamma0 / std::pow(Tp, 1.0 - *k.delta) *
                              om +
                          16.0 * *k.eta0 * mc * mc * *k.M2 / ((1.0 - *k.delta) * Tp);
                      return std::pair{s.res_sq[T] / dT(T), rhs};
                    }});
    list.push_back({"fd_min_residual", {"lambda2", "lambda3", "lambda4", "M1", "M2", "M3", "M0"},
                    [&](std::size_t T) {
                      const double Tp = dT(T) + 1.0, lg = std::log(dT(T)) + 1.0, m0 = *k.M0;
                      const double rhs =
                          (*k.lambda2 + *k.lambda3 * lg) / Tp +
                          *k.lambda4 * (*k.M1 + *k.M2 * lg) / std::pow(Tp, 1.0 - *k.delta) +
                          *k.M3 / (*k.alpha0 * std::pow(Tp, *k.delta)) +
                          2.0 * m0 * m0 * *k.eta0 / (*k.alpha0 * Tp);
                      return std::pair{s.min_fd[T], rhs};
                    }});
  } else {
    list.push_back({"bd_avg_inv_mu_sq", {"lambda5", "M1", "M0"}, [&](std::size_t T) {
                      const double Tp = dT(T) + 1.0, d = *k.delta, m0 = *k.M0;
                      return std::pair{s.inv_mu_sq[T] / dT(T),
                                       4.0 * *k.lambda5 * *k.M1 / std::pow(Tp, 1.0 - d) +
                                           4.0 * *k.lambda5 * m0 * m0 * *k.gamma0 /
                                               std::pow(Tp, 1.0 - 2.0 * d)};
                    }});
    list.push_back({"bd_avg_inv_mu", {"M1", "M0"}, [&](std::size_t T) {
                      const double Tp = dT(T) + 1.0, m0 = *k.M0;
                      return std::pair{s.inv_mu[T] / dT(T),
                                       4.0 * *k.M1 / Tp + 4.0 * m0 * m0 * *k.gamma0 /
                                                              std::pow(Tp, 1.0 - *k.delta)};
                    }});
    list.push_back({"bd_avg_step_sq", {"M1", "M0"}, [&](std::size_t T) {
                      const double Tp = dT(T) + 1.0, m0 = *k.M0;
                      return std::pair{s.step_sq[T] / dT(T),
                                       4.0 * mu_max * *k.M1 / Tp +
                                           4.0 * mu_max * m0 * m0 * *k.gamma0 /
                                               std::pow(Tp, 1.0 - *k.delta)};
                    }});
    list.push_back({"bd_min_residual", {"lambda6", "lambda7", "lambda8"}, [&](std::size_t T) {
                      const double Tp = dT(T) + 1.0, d = *k.delta;
                      return std::pair{s.min_bd[T], *k.lambda6 / Tp +
                                                        *k.lambda7 / std::pow(Tp, 1.0 - d) +
                                                        *k.lambda8 / std::pow(Tp, 1.0 - 2.0 * d)};
                    }});
  }

  for (const auto& q : list) checker.run(q);
  return report;
}

}  // namespace sdcam
