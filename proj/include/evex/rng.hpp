#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace evex {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable derivation of stream seeds (per cluster, per epoch, ...).
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc908ULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(gen_);
  }

  Eigen::VectorXd normal_vec(int n, double mean = 0.0, double stddev = 1.0) {
    Eigen::VectorXd v(n);
    std::normal_distribution<double> d(mean, stddev);
    for (int i = 0; i < n; ++i) v[i] = d(gen_);
    return v;
  }

  // index in [0, n)
  int uniform_int(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen_); }

  // draw from a probability vector by inverse CDF
  int multinomial(const Eigen::VectorXd& probs) {
    double u = uniform();
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  Eigen::VectorXd dirichlet(int n, double concentration) {
    std::gamma_distribution<double> g(concentration, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = std::max(g(gen_), 1e-300);
    return v / v.sum();
  }

  // portable Fisher-Yates, independent of std::shuffle internals
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(std::uniform_int_distribution<uint64_t>(0, i - 1)(gen_));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace evex
