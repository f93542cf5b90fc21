#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sdcam/problems.hpp"
#include "sdcam/rng.hpp"

using namespace sdcam;

namespace {

// Largest |eigenvalue| of a symmetric matrix by power iteration.
double power_iteration(const Matrix& M, int iters = 2000) {
  Vector v = Vector::Ones(M.rows()).normalized();
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = M * v;
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
  }
  return lam;
}

Vector random_point(CounterRng& rng, Index n, double lo, double hi) {
  return rng.uniform_vector(n, lo, hi);
}

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("qcqp defaults and structure") {
  const QcqpParams d;
  CHECK(d.alpha == 0.05);
  CHECK(d.p == 0.8);
  CHECK(d.scale0 == 5.0);

  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    const auto inst = qcqp_generate(seed, d);
    CHECK(inst.Q0.isIdentity(0.0));
    CHECK((inst.r_i.array() < 0.0).all());
    CHECK(inst.r > 0.0);
    for (const auto& b : inst.b) CHECK(b.isZero(0.0));
  }
}

TEST_CASE("qcqp seed 7 n=4 m=2: PSD blocks by an independent eigen solve") {
  const auto inst = qcqp_generate(7, {4, 2, 0.05, 0.8, 5.0});
  REQUIRE(inst.Q.size() == 2);
  for (const auto& Q : inst.Q) {
    CHECK((Q - Q.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  CHECK((inst.r_i.array() < 0.0).all());
  CHECK(inst.r > 0.0);
}

TEST_CASE("qcqp generation is reproducible and seed dependent") {
  const auto a = qcqp_generate(5, {});
  const auto b = qcqp_generate(5, {});
  const auto c = qcqp_generate(6, {});
  CHECK(a.b0 == b.b0);
  CHECK(a.Q[3] == b.Q[3]);
  CHECK(a.b0 != c.b0);
}

TEST_CASE("qcqp n=1 rejected") {
  QcqpParams prm;
  prm.n = 1;
  CHECK(error_of([&] { qcqp_generate(1, prm); }).find("n ≥ 2 required") != std::string::npos);
}

TEST_CASE("qcqp reference point is the per-coordinate minimizer") {
  const auto inst = qcqp_generate(1, {6, 2, 0.05, 0.8, 5.0});
  for (Index j = 0; j < inst.params.n; ++j) {
    const double b = inst.b0(j);
    auto phi = [&](double u) {
      return 0.5 * (u + b) * (u + b) + 0.05 * std::pow(std::abs(u), 0.8);
    };
    // Grid over [-|b|-1, |b|+1].
    const double lo = -std::abs(b) - 1.0, hi = std::abs(b) + 1.0;
    double best = phi(0.0);
    for (int k = 0; k <= 200000; ++k) best = std::min(best, phi(lo + (hi - lo) * k / 200000.0));
    CHECK(phi(inst.xbar(j)) <= best + 1e-8);
  }
  CHECK(inst.r == inst.xbar.lpNorm<Eigen::Infinity>());
}

TEST_CASE("qcqp problem: c(0) strictly feasible, vjp at 0 vanishes") {
  const auto inst = qcqp_generate(1, {});
  const Problem p = qcqp_problem(inst);
  const Vector c0 = p.c.eval(Vector::Zero(p.n));
  CHECK((c0 - inst.r_i).norm() == 0.0);
  CHECK((c0.array() < 0.0).all());
  Vector e1 = Vector::Zero(p.m);
  e1(0) = 1.0;
  CHECK(p.c.vjp(Vector::Zero(p.n), e1).isZero(0.0));
}

TEST_CASE("qcqp constants against power iteration") {
  const auto inst = qcqp_generate(1, {});
  const Problem p = qcqp_problem(inst);
  CHECK(*p.f.lipschitz_bound == doctest::Approx(power_iteration(inst.Q0)).epsilon(1e-12));
  double mc = 0.0, lc = 0.0;
  const double sqrt_n = std::sqrt(static_cast<double>(inst.params.n));
  for (const auto& Q : inst.Q) {
    const double qn = power_iteration(Q);
    mc += std::pow(qn * inst.r * sqrt_n, 2);
    lc += qn * qn;
  }
  CHECK(*p.c.jac_norm_bound == doctest::Approx(std::sqrt(mc)).epsilon(1e-6));
  CHECK(*p.c.jac_lipschitz_bound == doctest::Approx(std::sqrt(lc)).epsilon(1e-6));
}

TEST_CASE("qcqp bounds hold at random box points") {
  const auto inst = qcqp_generate(2, {10, 3, 0.05, 0.8, 5.0});
  const Problem p = qcqp_problem(inst);
  CounterRng rng(11, 0);
  // ||J(x)|| <= M_c on the box.
  for (int k = 0; k < 200; ++k) {
    const Vector x = random_point(rng, p.n, -inst.r, inst.r);
    const double fg = p.f.eval(x) + p.g.eval(x).value();
    CHECK(fg >= *p.inf_fg_lower_bound);
    CHECK(std::abs(fg) <= *p.fg_abs_sup_bound);
    Matrix J(p.m, p.n);
    for (Index i = 0; i < p.m; ++i) J.row(i) = (inst.Q[i] * x).transpose();
    Eigen::JacobiSVD<Matrix> svd(J);
    CHECK(svd.singularValues()(0) <= *p.c.jac_norm_bound);
  }
  // The bound is attained up to slack at the exact separable minimizer.
  const double lp = 0.05;
  Vector u(p.n);
  for (Index j = 0; j < p.n; ++j) {
    const double b = inst.b0(j);
    double best_u = 0.0, best = 0.0;
    for (int k = 0; k <= 400000; ++k) {
      const double t = -inst.r + 2.0 * inst.r * k / 400000.0;
      const double v = 0.5 * t * t + b * t + lp * std::pow(std::abs(t), 0.8);
      if (v < best) {
        best = v;
        best_u = t;
      }
    }
    u(j) = best_u;
  }
  const double grid_min = p.f.eval(u) + p.g.eval(u).value();
  CHECK(*p.inf_fg_lower_bound <= grid_min);
  CHECK(*p.inf_fg_lower_bound >= grid_min - 1e-5 * (1.0 + std::abs(grid_min)));
}

TEST_CASE("qcqp objective equals an independent scalar recomputation") {
  const auto inst = qcqp_generate(1, {});
  const Problem p = qcqp_problem(inst);
  const Vector x0 = qcqp_initial_point(inst);
  CHECK(x0.lpNorm<Eigen::Infinity>() <= inst.r);
  const Index n = inst.params.n;
  double f = 0.0, g = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) f += 0.5 * x0(i) * inst.Q0(i, j) * x0(j);
    f += inst.b0(i) * x0(i);
    g += 0.05 * std::pow(std::abs(x0(i)), 0.8);
  }
  bool feasible = true;
  for (Index k = 0; k < inst.params.m; ++k) {
    double ck = inst.r_i(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) ck += 0.5 * x0(i) * inst.Q[k](i, j) * x0(j);
    feasible = feasible && ck <= 0.0;
  }
  const ExtendedReal val = objective(p, x0);
  if (feasible) {
    REQUIRE(val.is_finite());
    CHECK(val.value() == doctest::Approx(f + g).epsilon(1e-12));
  } else {
    CHECK(!val.is_finite());
  }
  // The origin is feasible for every seed.
  const ExtendedReal v0 = objective(p, Vector::Zero(n));
  REQUIRE(v0.is_finite());
  CHECK(v0.value() == 0.0);
}

TEST_CASE("relative feasibility examples") {
  QcqpInstance inst;
  inst.params.n = 2;
  inst.params.m = 2;
  inst.Q0 = Matrix::Identity(2, 2);
  inst.b0 = Vector::Zero(2);
  inst.Q = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  inst.b = {Vector::Zero(2), Vector::Zero(2)};
  inst.r_i = Vector(2);
  inst.r = 1.0;
  inst.xbar = Vector::Zero(2);
  // c(x) = b_i'x + r_i; choose b so that c(e1) = (-1, 2) with r_ref = (0.5, 3).
  inst.r_i << -0.5, -3.0;
  inst.b[0] << -0.5, 0.0;
  inst.b[1] << 5.0, 0.0;
  Vector x(2);
  x << 1.0, 0.0;
  CHECK(relative_feasibility(inst, x) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(relative_feasibility(inst, Vector::Zero(2)) == 0.0);
}

TEST_CASE("oracle soundness on all families at random points") {
  CounterRng rng(2024, 0);
  SUBCASE("qcqp") {
    const auto inst = qcqp_generate(1, {});
    const Problem p = qcqp_problem(inst);
    for (int k = 0; k < 10; ++k) {
      const Vector x = random_point(rng, p.n, -inst.r, inst.r);
      CHECK(check_gradient(p.f, x).pass);
      CHECK(check_vjp(p.c, x, 5, std::nullopt, static_cast<std::uint64_t>(k)).pass);
    }
  }
  SUBCASE("mimo") {
    const auto inst = mimo_generate(0, {});
    const Problem p = mimo_problem(inst);
    for (int k = 0; k < 10; ++k) {
      Vector x(p.n);
      x.head(inst.params.n) = random_point(rng, inst.params.n, inst.params.r_lo, 1.0);
      x.tail(inst.params.n) = random_point(rng, inst.params.n, -std::numbers::pi, std::numbers::pi);
      const auto rep = check_gradient(p.f, x);
      CHECK_MESSAGE(rep.pass, rep.max_rel_error);
      CHECK(check_vjp(p.c, x, 5, std::nullopt, static_cast<std::uint64_t>(k)).pass);
    }
  }
  SUBCASE("mlp") {
    MlpParams prm;
    prm.layer_dims = {4, 3, 2, 1};
    prm.n_samples = 12;
    const auto inst = mlp_generate(0, prm);
    const Problem p = mlp_problem(inst);
    for (int k = 0; k < 10; ++k) {
      const Vector v = random_point(rng, p.n, -1.0, 1.0);
      const auto rep = check_vjp(p.c, v, 5, std::nullopt, static_cast<std::uint64_t>(k));
      CHECK_MESSAGE(rep.pass, rep.max_rel_error);
    }
  }
}

TEST_CASE("mimo examples") {
  Vector r(1), th(1);
  r << 1.0;
  th << 0.0;
  const Vector ph = mimo_phi(r, th);
  CHECK(ph(0) == 1.0);
  CHECK(ph(1) == 0.0);

  const auto inst = mimo_generate(3, {});
  const Problem p = mimo_problem(inst);
  Vector x = Vector::Ones(p.n);
  x.tail(inst.params.n).setZero();
  CHECK(p.c.eval(x).isZero(0.0));
  CHECK(p.h.eval(p.c.eval(x)).value() == 0.0);
  CHECK(*p.h_lipschitz_bound == doctest::Approx(0.1 * std::sqrt(8.0)));

  for (double r_lo : {0.25, 0.5, 1.0}) {
    const double below = std::nextafter(r_lo, 0.0);
    CHECK(mimo_gamma(r_lo, r_lo) == doctest::Approx(1.0 / r_lo));
    CHECK(mimo_gamma(below, r_lo) == doctest::Approx(1.0 / r_lo));
    CHECK(mimo_gamma_derivative(r_lo, r_lo) == doctest::Approx(-1.0 / (r_lo * r_lo)));
    CHECK(mimo_gamma_derivative(below, r_lo) == doctest::Approx(-1.0 / (r_lo * r_lo)));
  }
}

TEST_CASE("mimo gradient passes below r_lo and on the boundary") {
  const auto inst = mimo_generate(0, {});
  const Problem p = mimo_problem(inst);
  Vector x(p.n);
  x.head(inst.params.n).setConstant(0.3);
  x.tail(inst.params.n).setLinSpaced(-1.0, 2.0);
  CHECK(check_gradient(p.f, x).pass);
  x.head(inst.params.n).setConstant(inst.params.r_lo);
  CHECK(check_gradient(p.f, x).pass);
}

TEST_CASE("mimo initial point lies in dom g") {
  const auto inst = mimo_generate(4, {});
  const Problem p = mimo_problem(inst);
  CHECK(p.g.eval(mimo_initial_point(inst)).is_finite());
}

TEST_CASE("mimo ground truth on the PSK grid") {
  const auto inst = mimo_generate(9, {});
  for (Index i = 0; i < inst.params.n; ++i) {
    const double k = inst.theta_true(i) * inst.params.p_psk / (2.0 * std::numbers::pi);
    CHECK(std::abs(k - std::round(k)) < 1e-12);
  }
}

TEST_CASE("mlp zero weights give zero output and the closed-form radius") {
  for (auto act : {Activation::tanh, Activation::sigmoid}) {
    MlpParams prm;
    prm.activation = act;
    const auto inst = mlp_generate(0, prm);
    CHECK(mlp_forward(inst, Vector::Zero(inst.num_params())).isZero(0.0));
    double sum = 0.0;
    for (Index i = 0; i < inst.targets.size(); ++i)
      sum += std::pow(std::abs(inst.targets(i)), 0.5) / 0.5;
    CHECK(inst.C_radius == doctest::Approx(sum / (0.05 * 100.0)).epsilon(1e-13));
    CHECK(inst.C_radius > 0.0);
    CHECK((inst.targets.array().abs() <= 1.0).all());
  }
}

TEST_CASE("mlp initial point lies in C") {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto inst = mlp_generate(seed, {});
    const Vector x0 = mlp_initial_point(inst);
    CHECK(x0.size() == inst.num_params());
    CHECK(x0.lpNorm<Eigen::Infinity>() <= inst.C_radius);
    CHECK(mlp_problem(inst).g.eval(x0).is_finite());
  }
}

TEST_CASE("mlp forward matches a scalar loop") {
  MlpParams prm;
  prm.layer_dims = {3, 2, 1};
  prm.n_samples = 4;
  const auto inst = mlp_generate(5, prm);
  CounterRng rng(1, 1);
  const Vector v = rng.uniform_vector(inst.num_params(), -1.0, 1.0);
  // Layout: W1 (2x3 row-major), b1 (2), W2 (1x2), b2 (1).
  const Vector out = mlp_forward(inst, v);
  for (Index s = 0; s < 4; ++s) {
    double hidden[2];
    for (int j = 0; j < 2; ++j) {
      double z = v(6 + j);
      for (int k = 0; k < 3; ++k) z += v(3 * j + k) * inst.features(s, k);
      hidden[j] = std::tanh(z);
    }
    const double y = v(8) * hidden[0] + v(9) * hidden[1] + v(10);
    CHECK(out(s) == doctest::Approx(y).epsilon(1e-14));
  }
}

TEST_CASE("mlp bounds: h on the image and |f + g| over the box") {
  const auto inst = mlp_generate(1, {});
  const Problem p = mlp_problem(inst);
  CounterRng rng(3, 3);
  for (int k = 0; k < 50; ++k) {
    const Vector v = rng.uniform_vector(p.n, -inst.C_radius, inst.C_radius);
    CHECK(p.h.eval(p.c.eval(v)).value() <= *p.h_sup_on_image_bound);
    CHECK(std::abs(p.f.eval(v) + p.g.eval(v).value()) <= *p.fg_abs_sup_bound);
  }
}

TEST_CASE("idx parsing") {
  SUBCASE("1x1 image with pixel 255") {
    std::vector<std::uint8_t> bytes = be32(0x00000803);
    for (int k = 0; k < 3; ++k) {
      auto d = be32(1);
      bytes.insert(bytes.end(), d.begin(), d.end());
    }
    bytes.push_back(255);
    REQUIRE(bytes.size() == 17);
    const IdxData d = parse_idx(bytes);
    CHECK(d.dims == std::vector<std::int64_t>{1, 1, 1});
    CHECK(d.data == std::vector<std::uint8_t>{255});
  }
  SUBCASE("three labels") {
    std::vector<std::uint8_t> bytes = be32(0x00000801);
    auto d3 = be32(3);
    bytes.insert(bytes.end(), d3.begin(), d3.end());
    for (std::uint8_t v : {0, 4, 9}) bytes.push_back(v);
    const IdxData d = parse_idx(bytes);
    CHECK(d.dims == std::vector<std::int64_t>{3});
    CHECK(d.data == std::vector<std::uint8_t>{0, 4, 9});
  }
  SUBCASE("empty file") {
    CHECK(error_of([] { parse_idx({}); }).find("truncated header at offset 0") != std::string::npos);
  }
  SUBCASE("bad magic") {
    std::vector<std::uint8_t> bytes = be32(0x12345678);
    CHECK(error_of([&] { parse_idx(bytes); }).find("bad magic") != std::string::npos);
    CHECK(error_of([&] { parse_idx(bytes); }).find("offset 0") != std::string::npos);
  }
  SUBCASE("truncated payload") {
    std::vector<std::uint8_t> bytes = be32(0x00000801);
    auto d = be32(5);
    bytes.insert(bytes.end(), d.begin(), d.end());
    bytes.push_back(1);
    CHECK(error_of([&] { parse_idx(bytes); }).find("truncated payload at offset 9") !=
          std::string::npos);
  }
}

TEST_CASE("mlp from idx files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto img = (dir / "sdcam_unit_images.idx").string();
  const auto lab = (dir / "sdcam_unit_labels.idx").string();
  {
    std::vector<std::uint8_t> bytes = be32(0x00000803);
    for (std::uint32_t d : {5u, 2u, 2u}) {
      auto b = be32(d);
      bytes.insert(bytes.end(), b.begin(), b.end());
    }
    for (int k = 0; k < 20; ++k) bytes.push_back(static_cast<std::uint8_t>(k * 12));
    std::ofstream(img, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                               static_cast<std::streamsize>(bytes.size()));
    std::vector<std::uint8_t> lb = be32(0x00000801);
    auto b = be32(5);
    lb.insert(lb.end(), b.begin(), b.end());
    for (std::uint8_t v : {0, 9, 4, 7, 1}) lb.push_back(v);
    std::ofstream(lab, std::ios::binary).write(reinterpret_cast<const char*>(lb.data()),
                                               static_cast<std::streamsize>(lb.size()));
  }
  MlpParams prm;
  prm.layer_dims = {4, 3, 1};
  prm.n_samples = 3;
  prm.source = "idx_files";
  prm.idx_images = img;
  prm.idx_labels = lab;
  const auto inst = mlp_generate(0, prm);
  CHECK(inst.features.rows() == 3);
  CHECK((inst.features.array() >= 0.0).all());
  CHECK((inst.features.array() <= 1.0).all());
  for (Index i = 0; i < 3; ++i) {
    // Every target is (label - 4.5) / 4.5 for one of the stored labels.
    bool found = false;
    for (double l : {0.0, 9.0, 4.0, 7.0, 1.0}) found = found || inst.targets(i) == (l - 4.5) / 4.5;
    CHECK(found);
  }
  std::remove(img.c_str());
  std::remove(lab.c_str());
}

TEST_CASE("instance json round trip is exact") {
  const Instance items[] = {qcqp_generate(1, {}), mimo_generate(2, {}), mlp_generate(3, {})};
  for (const auto& inst : items) {
    const std::string text = write_instance_json(inst);
    const Instance back = read_instance_json(text);
    REQUIRE(back.index() == inst.index());
    CHECK(write_instance_json(back) == text);
    CHECK(family_of(back) == family_of(inst));
  }
  const auto q = std::get<QcqpInstance>(read_instance_json(write_instance_json(items[0])));
  const auto& q0 = std::get<QcqpInstance>(items[0]);
  CHECK(q.b0 == q0.b0);
  CHECK(q.Q[4] == q0.Q[4]);
  CHECK(q.r == q0.r);
  CHECK(q.seed == q0.seed);
}

TEST_CASE("instance json rejects bad documents") {
  CHECK_THROWS_AS(read_instance_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(read_instance_json("{\"format_version\": 2, \"family\": \"qcqp\", \"seed\": 1}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(read_instance_json("{\"format_version\": 1, \"family\": \"lasso\", \"seed\": 1}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(read_instance_json("{\"format_version\": 1, \"family\": \"mimo\", \"seed\": 1}"),
                  std::invalid_argument);
}

TEST_CASE("default solver configs") {
  const auto q = default_solver_config("qcqp");
  CHECK(q.mu_max == 1e7);
  CHECK(q.mu_init == 1.0);
  CHECK(q.rho == 0.8);
  CHECK(q.eta == 1.2);
  CHECK(q.schedule.delta == 0.3);
  const auto m = default_solver_config("mlp");
  CHECK(m.mu_init == 0.01);
  CHECK(m.rho == 0.5);
  CHECK(m.schedule.delta == 0.5);
  CHECK(default_solver_config("mimo").schedule.delta == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(default_solver_config("lasso"), std::invalid_argument);
}
