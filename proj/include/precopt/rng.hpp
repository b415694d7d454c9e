#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace precopt {

// Deterministic, replayable randomness. Every draw is a pure function of a key
// (seed, stream, step, index, word), so trajectories can be recomputed for any
// (seed, step, coordinate) without storing generator state, and seed-parallel
// execution produces bit-identical output to sequential execution.

namespace detail {

// SplitMix64 finalizer (public-domain mixer by Steele/Lea/Flood).
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Distinct stream tags keep draws for different purposes decorrelated even at
// equal (seed, step, index).
enum class RngStream : std::uint64_t {
  kNoise = 0x6e6f6973,       // per-step noise vectors
  kProblemSetup = 0x73657475, // random rotations, offsets baked into a problem
  kValidation = 0x76616c69,  // property-test instance generation
  kGeneric = 0x67656e72,
};

// 64 mixed bits for the given key.
inline std::uint64_t keyed_bits(std::uint64_t seed, RngStream stream, std::uint64_t step,
                                std::uint64_t index, std::uint64_t word = 0) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = detail::splitmix64(h ^ step);
  h = detail::splitmix64(h ^ index);
  h = detail::splitmix64(h ^ word);
  return h;
}

// Uniform double in [0, 1) with 53-bit resolution.
inline double keyed_uniform(std::uint64_t seed, RngStream stream, std::uint64_t step,
                            std::uint64_t index, std::uint64_t word = 0) {
  return static_cast<double>(keyed_bits(seed, stream, step, index, word) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes words (2*word, 2*word+1).
inline double keyed_normal(std::uint64_t seed, RngStream stream, std::uint64_t step,
                           std::uint64_t index, std::uint64_t word = 0) {
  const double u1 = 1.0 - keyed_uniform(seed, stream, step, index, 2 * word);      // (0, 1]
  const double u2 = keyed_uniform(seed, stream, step, index, 2 * word + 1);        // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline bool keyed_bernoulli(double theta, std::uint64_t seed, RngStream stream,
                            std::uint64_t step, std::uint64_t index, std::uint64_t word = 0) {
  return keyed_uniform(seed, stream, step, index, word) < theta;
}

// Sequential convenience generator for test-instance construction (not used in
// optimizer dynamics, which key draws by step/coordinate explicitly).
class SeqRng {
 public:
  explicit SeqRng(std::uint64_t seed, RngStream stream = RngStream::kGeneric)
      : seed_(seed), stream_(stream) {}

  double uniform() { return keyed_uniform(seed_, stream_, 0, ctr_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return keyed_normal(seed_, stream_, 0, ctr_++); }
  std::uint64_t bits() { return keyed_bits(seed_, stream_, 0, ctr_++); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return bits() % n; }

  Eigen::VectorXd normal_vector(int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::uint64_t seed_;
  RngStream stream_;
  std::uint64_t ctr_ = 0;
};

// Numerically careful sum: pairwise reduction, O(log n) error growth.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = x[0];
    for (std::size_t i = 1; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

}  // namespace precopt
