#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "evex/features.hpp"
#include "evex/model.hpp"
#include "evex/nets.hpp"
#include "evex/parallel.hpp"

namespace evex {

// Gradients of the ELBO with respect to every trainable tensor. Shapes
// mirror ModelParams / InferenceNet; unused blocks stay empty.
struct Gradients {
  Eigen::MatrixXd lambda_logits;
  Eigen::MatrixXd beta_mean;
  Eigen::MatrixXd beta_log_var;
  Eigen::MatrixXd th_w1, th_w2;
  Eigen::VectorXd th_b1, th_b2;
  Eigen::VectorXd alpha_mean, alpha_log_var;

  Eigen::MatrixXd w_hist, w_feat;
  Eigen::VectorXd b_h;
  Eigen::MatrixXd w_mu, w_lv;
  Eigen::VectorXd b_mu, b_lv;
  Eigen::VectorXd bn_mu_gamma, bn_mu_beta, bn_lv_gamma, bn_lv_beta;

  static Gradients zeros_like(const ModelParams& params, const InferenceNet* net);
  void set_zero();
  void add(const Gradients& other);
  void scale(double factor);
};

struct TrainOptions {
  bool train_mode = true;  // dropout active, batch norm on batch statistics
  double dropout = 0.2;
  bool mlp_dropout = true; // also drop the slot-MLP hidden layer
  int mc_samples = 1;
  uint64_t seed = 0;       // base of the per-cluster random streams
  uint64_t salt = 0;       // epoch/batch tag mixed into per-cluster seeds
  const Eigen::VectorXd* fixed_eps = nullptr;  // gradient-check hook
};

// Per-batch outputs. elbo/kl/recon are per cluster (batch order); the bn_*
// fields carry the batch statistics used, for the running-average update.
struct BatchStats {
  Eigen::VectorXd elbo, kl, recon;
  Eigen::VectorXd bn_mu_mean, bn_mu_var, bn_lv_mean, bn_lv_var;
  bool has_bn_stats = false;
};

using ClusterBatch = std::vector<const ClusterObservation*>;

// Serial reference implementation.
BatchStats batch_elbo_grad_serial(const ModelParams& params, const InferenceNet* net,
                                  const ClusterBatch& batch, const TrainOptions& opt,
                                  Gradients* grads);

// OpenMP implementation; identical per-cluster arithmetic, gradients reduced
// over per-thread buffers (order differs from serial only in the final sums).
BatchStats batch_elbo_grad_omp(const ModelParams& params, const InferenceNet* net,
                               const ClusterBatch& batch, const TrainOptions& opt,
                               Gradients* grads, int num_threads = 0);

BatchStats batch_elbo_grad(const ModelParams& params, const InferenceNet* net,
                           const ClusterBatch& batch, const TrainOptions& opt,
                           const ExecPolicy& policy, Gradients* grads);

struct ClusterAssignment {
  Eigen::VectorXd mu, sigma2;    // empty for variant F
  std::vector<int> slots;
  Eigen::MatrixXd posteriors;    // entities x S
};

ClusterAssignment assign_cluster(const ModelParams& params, const InferenceNet* net,
                                 const ClusterObservation& obs);

std::vector<ClusterAssignment> assign_batch_serial(const ModelParams& params,
                                                   const InferenceNet* net,
                                                   const ClusterBatch& batch);
std::vector<ClusterAssignment> assign_batch_omp(const ModelParams& params,
                                                const InferenceNet* net,
                                                const ClusterBatch& batch,
                                                int num_threads = 0);
std::vector<ClusterAssignment> assign_batch(const ModelParams& params, const InferenceNet* net,
                                            const ClusterBatch& batch, const ExecPolicy& policy);

}  // namespace evex
