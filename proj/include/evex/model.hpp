#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "evex/features.hpp"

namespace evex {

enum class Variant { F, FE, FER };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
inline bool has_event_type(Variant v) { return v != Variant::F; }
inline bool has_redundancy(Variant v) { return v == Variant::FER; }

// prior over the latent event type vector t
struct GlobalPrior {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;
  bool learnable = false;
};

// one hidden layer, softplus; logits over slots
struct SlotMlp {
  Eigen::MatrixXd w1;  // hidden x n_t
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // S x hidden
  Eigen::VectorXd b2;  // S

  int hidden() const { return static_cast<int>(b1.size()); }
  Eigen::VectorXd logits(const Eigen::VectorXd& t) const;
};

struct ModelParams {
  Variant variant = Variant::FER;
  int S = 0;
  int V = 0;
  int n = 0;    // feature dimension
  int n_t = 0;  // event type dimension
  uint64_t seed = 0;

  GlobalPrior alpha;             // FE/FER only
  SlotMlp theta;                 // FE/FER only
  Eigen::MatrixXd lambda_logits; // S x V
  Eigen::MatrixXd beta_mean;     // S x m
  Eigen::MatrixXd beta_log_var;  // S x m

  // emission dimension: n, or n+1 when the redundancy ratio is modeled
  int m() const { return has_redundancy(variant) ? n + 1 : n; }

  Eigen::MatrixXd lambda() const;          // row-wise softmax of the logits
  Eigen::VectorXd log_lambda_row(int s) const;
};

ModelParams init_model_params(Variant variant, int S, int V, int n, int n_t, uint64_t seed,
                              int mlp_hidden = 100, bool learnable_alpha = false);

struct SampledCluster {
  Eigen::VectorXd t;        // empty for variant F
  std::vector<int> slots;
  std::vector<int> heads;
  Eigen::MatrixXd f;        // num_entities x n
  Eigen::VectorXd r;        // empty unless FER; clamped to (0, 1]
};

SampledCluster sample_cluster(const ModelParams& params, int num_entities, uint64_t rng_seed);

// log p(s, h, f) for variant F  (uniform slot prior)
double entity_log_joint_f(const ModelParams& params, const EntityObservation& obs, int s);

// log p(t, slots, heads, features) for FE/FER
double cluster_log_joint(const ModelParams& params, const ClusterObservation& cluster_obs,
                         const Eigen::VectorXd& t, const std::vector<int>& slots);

// log p(c | t) with the discrete slot variable marginalized out, log-sum-exp
// per entity over slots
double reconstruction_log_prob(const ModelParams& params, const ClusterObservation& cluster_obs,
                               const Eigen::VectorXd& t);

// normalized posterior over slots for one entity; pass an empty t for
// variant F (uniform slot prior)
Eigen::VectorXd slot_posterior(const ModelParams& params, const EntityObservation& obs,
                               const Eigen::VectorXd& t);

// argmax with ties broken toward the lowest slot index
int argmax_slot(const Eigen::VectorXd& posterior);

}  // namespace evex
