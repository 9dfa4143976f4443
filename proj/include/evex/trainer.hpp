#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "evex/kernels.hpp"
#include "evex/model.hpp"
#include "evex/nets.hpp"
#include "evex/parallel.hpp"

namespace evex {

struct TrainConfig {
  int S = 30;
  int n = 256;
  int n_t = 0;          // 0 = same as n
  int hidden = 100;     // fully connected layer size
  int mlp_layers = 1;
  std::string activation = "softplus";
  double learning_rate = 0.002;
  double momentum = 0.99;  // first-moment coefficient of the optimizer
  double dropout = 0.2;
  int batch_size = 200;
  int epochs = 100;
  int mc_samples = 1;
  uint64_t seed = 42;
  bool batch_norm = true;
  bool mlp_dropout = true;
  bool learnable_alpha = false;
  double early_stop_rel = 1e-4;  // stop when the epoch-mean ELBO improves
  int early_stop_patience = 10;  // less than this for this many epochs
  ExecPolicy policy;

  int resolved_n_t() const { return n_t > 0 ? n_t : n; }
  void validate() const;
};

// first-moment-heavy adaptive gradient ascent
struct AdamState {
  double lr = 0.002;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;
  std::vector<Eigen::VectorXd> m, v;
};

// Named view over a tensor's storage; the registry order is the contract for
// the optimizer state and the checkpoint layout.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index size = 0;
};

std::vector<TensorRef> trainable_tensors(ModelParams& params, InferenceNet* net);
std::vector<TensorRef> gradient_tensors(Gradients& grads, const ModelParams& params,
                                        const InferenceNet* net);
// trainable + batch-norm running statistics (for checkpointing)
std::vector<TensorRef> state_tensors(ModelParams& params, InferenceNet* net);

void adam_init(AdamState& adam, const std::vector<TensorRef>& params);
void adam_ascent_step(AdamState& adam, const std::vector<TensorRef>& params,
                      const std::vector<TensorRef>& grads);

struct EpochLog {
  int epoch = 0;
  double mean_elbo = 0.0;
  double mean_kl = 0.0;
  double mean_recon = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  InferenceNet net;  // empty for variant F
  std::vector<EpochLog> log;
  int64_t steps = 0;
  int epochs_run = 0;
};

TrainResult train(const std::vector<ClusterObservation>& corpus, Variant variant,
                  const TrainConfig& config);

struct ClusterPosterior {
  std::string cluster_id;
  Eigen::VectorXd mu, sigma2;  // empty for variant F and the clustering baseline
  std::vector<std::string> entity_ids;
  std::vector<int> slots;
  Eigen::MatrixXd posteriors;  // entities x S
};

struct PosteriorState {
  int S = 0;
  std::vector<ClusterPosterior> clusters;
};

PosteriorState assign_corpus(const ModelParams& params, const InferenceNet* net,
                             const std::vector<ClusterObservation>& corpus,
                             const ExecPolicy& policy = ExecPolicy());

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences (default step 1e-5) against the analytic ELBO
// gradients on every trainable tensor; dropout off, batch norm on running
// statistics, one fixed epsilon draw. Relative error is
// |ga - gn| / max(1, |ga|, |gn|).
GradientCheckReport gradient_check(const ModelParams& params, const InferenceNet& net,
                                   const ClusterObservation& obs, double step = 1e-5,
                                   uint64_t eps_seed = 7);

}  // namespace evex
