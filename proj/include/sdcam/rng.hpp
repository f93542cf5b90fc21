#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace sdcam {

/// Counter-based 64-bit generator.
///
/// Draw k of stream s under seed S is mix(key(S, s) + k * 0x9E3779B97F4A7C15),
/// where mix is the SplitMix64 finalizer and key(S, s) = mix(S ^ mix(s)).
/// Every draw is a pure function of (seed, stream, counter), so streams can be
/// split per field of a generated instance and reproduced in any language.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; one normal per two uniforms, no caching.
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi);

  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream identifiers used by the instance generators. Indexed streams
/// (one per matrix) add the index to the base.
namespace streams {
inline constexpr std::uint64_t kQcqpB0 = 1;
inline constexpr std::uint64_t kQcqpU = 1'000;      // + i
inline constexpr std::uint64_t kQcqpD = 100'000;    // + i
inline constexpr std::uint64_t kQcqpResample = 10;  // + attempt, reseeds all of the above
inline constexpr std::uint64_t kMimoA = 2;
inline constexpr std::uint64_t kMimoTheta = 3;
inline constexpr std::uint64_t kMimoNoise = 4;
inline constexpr std::uint64_t kMlpFeatures = 5;
inline constexpr std::uint64_t kMlpTeacher = 6;
inline constexpr std::uint64_t kMlpNoise = 7;
inline constexpr std::uint64_t kMlpInit = 8;
inline constexpr std::uint64_t kMlpSubsample = 9;
inline constexpr std::uint64_t kChecks = 50;
}  // namespace streams

}  // namespace sdcam
