#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "sdcam/problems.hpp"
#include "sdcam/prox.hpp"
#include "sdcam/rng.hpp"

namespace sdcam {

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + name + "' (expected tanh|sigmoid)");
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "sigmoid"; }

void MlpParams::validate() const {
  if (layer_dims.size() < 3)
    throw std::invalid_argument("mlp: layer_dims needs an input, at least one hidden layer and the output");
  if (layer_dims.back() != 1) throw std::invalid_argument("mlp: layer_dims must end in 1");
  for (Index d : layer_dims)
    if (d < 1) throw std::invalid_argument("mlp: layer sizes must be positive");
  if (n_samples < 1) throw std::invalid_argument("mlp: n_samples >= 1 required");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("mlp: p must lie in (0,1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("mlp: lambda must be positive");
  if (source != "synthetic" && source != "idx_files")
    throw std::invalid_argument("mlp: source must be synthetic or idx_files");
  if (source == "idx_files" && (idx_images.empty() || idx_labels.empty()))
    throw std::invalid_argument("mlp: idx_files source needs idx_images and idx_labels");
}

Index MlpInstance::num_params() const {
  Index total = 0;
  const auto& dims = params.layer_dims;
  for (std::size_t l = 1; l < dims.size(); ++l) total += dims[l] * dims[l - 1] + dims[l];
  return total;
}

void MlpInstance::validate() const {
  params.validate();
  if (features.rows() != params.n_samples || features.cols() != params.layer_dims.front())
    throw std::invalid_argument("mlp instance: features must be n_samples x n0");
  if (targets.size() != params.n_samples)
    throw std::invalid_argument("mlp instance: targets must have length n_samples");
  if (!(C_radius > 0.0)) throw std::invalid_argument("mlp instance: C_radius must be positive");
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

struct Layer {
  Index in = 0, out = 0;
  Index w_offset = 0, b_offset = 0;
};

std::vector<Layer> layout(const std::vector<Index>& dims) {
  std::vector<Layer> layers;
  Index offset = 0;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    Layer ly{dims[l - 1], dims[l], offset, offset + dims[l] * dims[l - 1]};
    offset = ly.b_offset + ly.out;
    layers.push_back(ly);
  }
  return layers;
}

Matrix activate(const Matrix& pre, Activation a) {
  if (a == Activation::tanh) return pre.array().tanh();
  return (1.0 + (-pre.array()).exp()).inverse();
}

// sigma'(pre) expressed through the activation value s = sigma(pre).
Matrix activation_slope(const Matrix& s, Activation a) {
  if (a == Activation::tanh) return 1.0 - s.array().square();
  return s.array() * (1.0 - s.array());
}

// Forward pass over all samples; columns are samples. Keeps hidden activations.
struct Forward {
  std::vector<Matrix> z;  // z[0] = inputs, z[l] = hidden layer l
  Vector out;
};

Forward forward(const MlpInstance& inst, const std::vector<Layer>& layers, const Vector& v) {
  Forward fw;
  fw.z.push_back(inst.features.transpose());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& ly = layers[l];
    ConstRowMap W(v.data() + ly.w_offset, ly.out, ly.in);
    const auto b = v.segment(ly.b_offset, ly.out);
    Matrix pre = W * fw.z.back();
    pre.colwise() += b;
    if (l + 1 == layers.size()) {
      fw.out = pre.row(0).transpose();
    } else {
      fw.z.push_back(activate(pre, inst.params.activation));
    }
  }
  return fw;
}

}  // namespace

Vector mlp_forward(const MlpInstance& inst, const Vector& v) {
  const auto layers = layout(inst.params.layer_dims);
  if (v.size() != inst.num_params()) throw std::invalid_argument("mlp_forward: wrong parameter length");
  return forward(inst, layers, v).out;
}

Vector mlp_vjp(const MlpInstance& inst, const Vector& v, const Vector& w) {
  const auto layers = layout(inst.params.layer_dims);
  if (v.size() != inst.num_params()) throw std::invalid_argument("mlp_vjp: wrong parameter length");
  if (w.size() != inst.params.n_samples) throw std::invalid_argument("mlp_vjp: wrong weight length");
  const Forward fw = forward(inst, layers, v);
  Vector grad(v.size());

  // delta holds d<w, out>/d(pre-activation) of the current layer, one column per sample.
  Matrix delta = w.transpose();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& ly = layers[l];
    const Matrix& input = fw.z[l];
    Eigen::Map<RowMatrix> gW(grad.data() + ly.w_offset, ly.out, ly.in);
    gW = delta * input.transpose();
    grad.segment(ly.b_offset, ly.out) = delta.rowwise().sum();
    if (l == 0) break;
    ConstRowMap W(v.data() + ly.w_offset, ly.out, ly.in);
    delta = (W.transpose() * delta).cwiseProduct(activation_slope(input, inst.params.activation));
  }
  return grad;
}

namespace {

Vector xavier(const std::vector<Index>& dims, CounterRng& rng, double gain) {
  const auto layers = layout(dims);
  Index total = 0;
  for (const auto& ly : layers) total = ly.b_offset + ly.out;
  Vector v = Vector::Zero(total);
  for (const auto& ly : layers) {
    const double s = gain * std::sqrt(6.0 / static_cast<double>(ly.in + ly.out));
    for (Index k = 0; k < ly.in * ly.out; ++k) v(ly.w_offset + k) = rng.uniform(-s, s);
  }
  return v;
}

double c_radius(const MlpInstance& inst) {
  // MLP(a; 0) = 0 since the output layer is affine with zero weights and bias.
  const double m = static_cast<double>(inst.params.n_samples);
  const double p = inst.params.p;
  double sum = 0.0;
  const Vector zero_out = mlp_forward(inst, Vector::Zero(inst.num_params()));
  for (Index i = 0; i < inst.targets.size(); ++i)
    sum += std::pow(std::abs(zero_out(i) - inst.targets(i)), p) / p;
  return sum / (inst.params.lambda * m);
}

}  // namespace

MlpInstance mlp_generate(std::uint64_t seed, const MlpParams& params) {
  params.validate();
  MlpInstance inst;
  inst.seed = seed;
  inst.params = params;
  const Index N = params.n_samples;
  const Index n0 = params.layer_dims.front();

  if (params.source == "synthetic") {
    CounterRng rf(seed, streams::kMlpFeatures);
    inst.features.resize(N, n0);
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < n0; ++j) inst.features(i, j) = rf.uniform();
    CounterRng rt(seed, streams::kMlpTeacher);
    MlpInstance teacher = inst;
    teacher.targets = Vector::Zero(N);
    const Vector tv = xavier(params.layer_dims, rt, 2.0);
    const Vector raw = mlp_forward(teacher, tv);
    const Vector noise = CounterRng(seed, streams::kMlpNoise).normal_vector(N);
    inst.targets = (raw.array().tanh() + 0.05 * noise.array()).cwiseMax(-1.0).cwiseMin(1.0);
  } else {
    const IdxData images = read_idx(params.idx_images);
    const IdxData labels = read_idx(params.idx_labels);
    if (images.dims.size() != 3) throw std::runtime_error("mlp: image file must be 3-dimensional");
    if (labels.dims.size() != 1) throw std::runtime_error("mlp: label file must be 1-dimensional");
    const std::int64_t count = images.dims[0];
    const std::int64_t pixels = images.dims[1] * images.dims[2];
    if (labels.dims[0] != count) throw std::runtime_error("mlp: image and label counts differ");
    if (pixels != n0)
      throw std::runtime_error("mlp: layer_dims[0] must equal " + std::to_string(pixels));
    if (N > count) throw std::runtime_error("mlp: n_samples exceeds the number of images");
    // Partial Fisher-Yates on the sample indices.
    std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) idx[static_cast<std::size_t>(k)] = k;
    CounterRng rs(seed, streams::kMlpSubsample);
    for (Index k = 0; k < N; ++k) {
      const auto span = static_cast<std::uint64_t>(count - k);
      const auto j = static_cast<std::size_t>(k + static_cast<std::int64_t>(rs.next_u64() % span));
      std::swap(idx[static_cast<std::size_t>(k)], idx[j]);
    }
    inst.features.resize(N, n0);
    inst.targets.resize(N);
    for (Index i = 0; i < N; ++i) {
      const std::int64_t s = idx[static_cast<std::size_t>(i)];
      for (Index j = 0; j < n0; ++j)
        inst.features(i, j) = images.data[static_cast<std::size_t>(s * pixels + j)] / 255.0;
      inst.targets(i) = (labels.data[static_cast<std::size_t>(s)] - 4.5) / 4.5;
    }
  }
  inst.C_radius = c_radius(inst);
  if (!(inst.C_radius > 0.0))
    throw std::runtime_error("mlp: all targets are zero, the box radius would vanish");
  return inst;
}

Vector mlp_initial_point(const MlpInstance& inst) {
  CounterRng rng(inst.seed, streams::kMlpInit);
  const Vector v = xavier(inst.params.layer_dims, rng, 1.0);
  return v.cwiseMax(-inst.C_radius).cwiseMin(inst.C_radius);
}

namespace {

struct MlpData {
  MlpInstance inst;
  double h_weight = 0.0;  // 1 / (p m)
};

}  // namespace

Problem mlp_problem(const MlpInstance& inst) {
  inst.validate();
  auto d = std::make_shared<MlpData>();
  d->inst = inst;
  const double p = inst.params.p;
  const double m = static_cast<double>(inst.params.n_samples);
  d->h_weight = 1.0 / (p * m);

  Problem pr;
  pr.n = inst.num_params();
  pr.m = inst.params.n_samples;

  pr.f.eval = [](const Vector&) { return 0.0; };
  pr.f.grad = [](const Vector& x) { return Vector(Vector::Zero(x.size())); };
  pr.f.lipschitz_bound = 0.0;

  const double R = inst.C_radius;
  const double lambda = inst.params.lambda;
  pr.g.eval = [R, lambda](const Vector& v) {
    if (v.lpNorm<Eigen::Infinity>() > R) return ExtendedReal::infinity();
    return ExtendedReal(lambda * v.lpNorm<1>());
  };
  pr.g.prox = [R, lambda](const Vector& z, double gamma) { return prox_l1_box(z, gamma * lambda, R); };
  pr.g.domain_description = "box ||v||_inf <= C_radius";

  pr.c.eval = [d](const Vector& v) { return Vector(mlp_forward(d->inst, v) - d->inst.targets); };
  pr.c.vjp = [d](const Vector& v, const Vector& w) { return mlp_vjp(d->inst, v, w); };

  pr.h.eval = [d, p](const Vector& u) {
    return ExtendedReal(d->h_weight * u.array().abs().pow(p).sum());
  };
  pr.h.prox = [d, p](const Vector& u, double gamma) {
    return prox_lp_power(u, LpProxParams{p, d->h_weight, gamma});
  };
  pr.h.domain_description = "R^m";

  pr.inf_fg_lower_bound = 0.0;
  const double n_params = static_cast<double>(pr.n);
  pr.fg_abs_sup_bound = lambda * n_params * R;
  // |MLP(a; v)| <= R (n_{L-1} + 1) on the box since hidden activations lie in [-1, 1].
  const double fan_in = static_cast<double>(inst.params.layer_dims[inst.params.layer_dims.size() - 2]);
  const double out_bound = R * (fan_in + 1.0);
  const double y_max = inst.targets.cwiseAbs().maxCoeff();
  pr.h_sup_on_image_bound = std::pow(out_bound + y_max, p) / p;
  return pr;
}

}  // namespace sdcam
