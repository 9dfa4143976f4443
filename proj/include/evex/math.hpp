#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace evex {

constexpr double kLog2Pi = 1.8378770664093454836;

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

inline Eigen::VectorXd softplus(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return softplus(v); });
}

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

inline double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a NaN propagates)
  return m + std::log((x.array() - m).exp().sum());
}

// log N(x; mean, var) with var = exp(log_var)
inline double log_normal(double x, double mean, double log_var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + log_var + d * d * std::exp(-log_var));
}

// sum over dimensions of independent Gaussians
inline double log_normal_diag(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& log_var) {
  const Eigen::ArrayXd d = (x - mean).array();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_var.sum() +
                 (d.square() * (-log_var).array().exp()).sum());
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& z) {
  return z.array() - log_sum_exp(z);
}

inline bool is_simplex(const Eigen::VectorXd& p, double tol = 1e-6) {
  if ((p.array() < -tol).any()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

}  // namespace evex
