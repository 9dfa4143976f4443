#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "evex/features.hpp"
#include "evex/model.hpp"

namespace evex {

struct BatchNorm {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double eps = 1e-5;
  double update = 0.1;  // running-stats EMA weight

  void init(int dim) {
    gamma = Eigen::VectorXd::Ones(dim);
    beta = Eigen::VectorXd::Zero(dim);
    running_mean = Eigen::VectorXd::Zero(dim);
    running_var = Eigen::VectorXd::Ones(dim);
  }

  Eigen::VectorXd eval_forward(const Eigen::VectorXd& a) const {
    return (gamma.array() * (a - running_mean).array() /
            (running_var.array() + eps).sqrt()) .matrix() + beta;
  }
};

// Amortized posterior q(t) over a news cluster. Input is the L1-normalized
// head-word histogram concatenated with the mean-pooled entity features; one
// softplus hidden layer; two linear heads (mu, log sigma^2), batch-normalized
// during training.
struct InferenceNet {
  int V = 0;
  int m = 0;
  int hidden = 0;
  int n_t = 0;
  bool use_batch_norm = true;

  Eigen::MatrixXd w_hist;  // hidden x V
  Eigen::MatrixXd w_feat;  // hidden x m
  Eigen::VectorXd b_h;
  Eigen::MatrixXd w_mu;    // n_t x hidden
  Eigen::VectorXd b_mu;
  Eigen::MatrixXd w_lv;    // n_t x hidden
  Eigen::VectorXd b_lv;
  BatchNorm bn_mu;
  BatchNorm bn_lv;

  bool empty() const { return hidden == 0; }
};

InferenceNet init_inference_net(int V, int m, int hidden, int n_t, uint64_t seed,
                                bool use_batch_norm = true);

// Sparse encoder input for one cluster.
struct EncoderInput {
  std::vector<std::pair<int, double>> hist;  // (vocab index, L1-normalized weight)
  Eigen::VectorXd pooled;                    // m
};

EncoderInput make_encoder_input(const ClusterObservation& obs);

// hidden pre-activation b_h + W_hist x_hist + W_feat x_feat
Eigen::VectorXd encoder_hidden_preact(const InferenceNet& net, const EncoderInput& in);

// Eval-mode encode (dropout off, batch norm on running statistics):
// returns (mu, sigma^2). Throws on V / feature-dimension mismatch.
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const InferenceNet& net,
                                                   const ClusterObservation& obs);

// D_KL[N(mu, sigma2) || N(prior)]; throws on nonpositive variance.
double kl_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2,
                   const GlobalPrior& prior);

// log-variance parameterization used by the trainer
double kl_gaussian_logvar(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                          const GlobalPrior& prior);

struct KlGrad {
  Eigen::VectorXd d_mu;
  Eigen::VectorXd d_log_var;
  Eigen::VectorXd d_prior_mean;     // filled when prior is learnable
  Eigen::VectorXd d_prior_log_var;
};

KlGrad kl_gaussian_logvar_grad(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                               const GlobalPrior& prior);

}  // namespace evex
