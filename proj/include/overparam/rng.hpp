#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace overparam {

// Identifies one random stream. (seed, stream) fully determines every draw,
// so parallel trials indexed by stream reproduce serial runs exactly.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngSeed derive(std::uint64_t offset) const { return {seed, stream + offset}; }
};

// Counter-based generator in the SplitMix64 family: the state advances by a
// fixed odd constant and each output is a bijective mix of the counter, so a
// stream is a pure function of (seed, stream, draw index).
class SplitRng {
 public:
  explicit SplitRng(RngSeed s)
      : state_(mix(mix(s.seed + kGolden) ^ mix(s.stream + kStreamSalt))) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Shift into (0, 1] so log() is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // +1 or -1 with equal probability.
  double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // Integer uniform on [0, bound) by rejection, bias-free.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index n, double stddev = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = stddev * gaussian();
    return v;
  }

  // Rows are independent N(0, stddev^2 I) draws.
  Eigen::MatrixXd gaussian_rows(Eigen::Index rows, Eigen::Index cols,
                                double stddev = 1.0) {
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = stddev * gaussian();
    return w;
  }

  Eigen::VectorXd unit_vector(Eigen::Index n) {
    for (;;) {
      Eigen::VectorXd v = gaussian_vector(n);
      double norm = v.norm();
      if (norm > 1e-12) return v / norm;
    }
  }

  // Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<Eigen::Index> permutation(Eigen::Index n) {
    std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = n - 1; i > 0; --i) {
      auto j = static_cast<Eigen::Index>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace overparam
