#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sdcam/core.hpp"
#include "sdcam/solver.hpp"

namespace sdcam {

// ---------------------------------------------------------------------------
// QCQP with an lp penalty:
//   min 1/2 x'Q0x + b0'x + alpha ||x||_p^p  s.t.  1/2 x'Qi x + bi'x + ri <= 0,  ||x||_inf <= r

struct QcqpParams {
  Index n = 20;
  Index m = 5;
  double alpha = 0.05;
  double p = 0.8;
  double scale0 = 5.0;

  void validate() const;
};

struct QcqpInstance {
  std::uint64_t seed = 0;
  QcqpParams params;
  Matrix Q0;
  Vector b0;
  std::vector<Matrix> Q;  // m PSD matrices
  std::vector<Vector> b;  // zero vectors
  Vector r_i;             // constraint offsets, all negative
  double r = 0.0;         // box radius
  Vector xbar;            // reference minimizer used for r_i and r
  std::vector<Vector> eigenvalues;  // spectrum of each Q_i as generated

  void validate() const;
};

QcqpInstance qcqp_generate(std::uint64_t seed, const QcqpParams& params);
Problem qcqp_problem(const QcqpInstance& inst);

/// || max(c(x), 0) ./ max(|r_i|, 1) ||.
double relative_feasibility(const QcqpInstance& inst, const Vector& x);
/// c(x) for the instance, without building a Problem.
Vector qcqp_constraints(const QcqpInstance& inst, const Vector& x);

/// clamp(-b0, [-r, r]).
Vector qcqp_initial_point(const QcqpInstance& inst);

// ---------------------------------------------------------------------------
// MIMO detection in polar coordinates x = (r, theta).

struct MimoParams {
  Index n = 8;
  Index m = 16;
  int p_psk = 4;
  double lambda1 = 0.05;
  double lambda2 = 0.1;
  double r_lo = 0.5;
  double noise = 0.05;

  void validate() const;
};

struct MimoInstance {
  std::uint64_t seed = 0;
  MimoParams params;
  Matrix A;      // 2m x 2n
  Vector yhat;   // 2m
  Vector theta_true;

  void validate() const;
};

MimoInstance mimo_generate(std::uint64_t seed, const MimoParams& params);
Problem mimo_problem(const MimoInstance& inst);

/// [r .* cos(theta); r .* sin(theta)].
Vector mimo_phi(const Vector& r, const Vector& theta);
/// 1/t above r_lo, tangent line below.
double mimo_gamma(double t, double r_lo);
double mimo_gamma_derivative(double t, double r_lo);

/// r = 1 and theta from the matched filter A' yhat.
Vector mimo_initial_point(const MimoInstance& inst);

// ---------------------------------------------------------------------------
// Sparse MLP regression with an lp loss.

enum class Activation { tanh, sigmoid };
Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct MlpParams {
  std::vector<Index> layer_dims{20, 8, 4, 1};
  Activation activation = Activation::tanh;
  Index n_samples = 100;
  double p = 0.5;
  double lambda = 0.05;
  std::string source = "synthetic";  // synthetic | idx_files
  std::string idx_images;
  std::string idx_labels;

  void validate() const;
};

struct MlpInstance {
  std::uint64_t seed = 0;
  MlpParams params;
  Matrix features;  // n_samples x n0
  Vector targets;
  double C_radius = 0.0;

  void validate() const;
  [[nodiscard]] Index num_params() const;
};

MlpInstance mlp_generate(std::uint64_t seed, const MlpParams& params);
Problem mlp_problem(const MlpInstance& inst);

/// MLP outputs for all samples at parameters v.
Vector mlp_forward(const MlpInstance& inst, const Vector& v);
/// J^T w for c(v) = MLP(a_i; v) - y_i, by reverse accumulation.
Vector mlp_vjp(const MlpInstance& inst, const Vector& v, const Vector& w);

/// Xavier-uniform weights, zero biases, projected onto the box of radius C_radius.
Vector mlp_initial_point(const MlpInstance& inst);

// ---------------------------------------------------------------------------
// IDX files (MNIST).

struct IdxData {
  std::vector<std::int64_t> dims;
  std::vector<std::uint8_t> data;
};

IdxData read_idx(const std::string& path);
IdxData parse_idx(const std::vector<std::uint8_t>& bytes);

// ---------------------------------------------------------------------------
// Instances as a closed set, serialization, and run setup.

using Instance = std::variant<QcqpInstance, MimoInstance, MlpInstance>;

std::string family_of(const Instance& inst);

inline constexpr int kInstanceFormatVersion = 1;

/// Versioned JSON: {format_version, family, seed, params, data}.
std::string write_instance_json(const Instance& inst);
Instance read_instance_json(const std::string& text);
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

struct RunSetup {
  Problem problem;
  Vector x0;
  Vector y0;
  RowMetric metric;  // empty unless the family defines one
};

RunSetup make_setup(const Instance& inst);

/// Solver settings used for each family when a config does not override them.
SolverConfig default_solver_config(const std::string& family);

}  // namespace sdcam
