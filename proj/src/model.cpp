#include "evex/model.hpp"

#include <algorithm>
#include <cmath>

#include "evex/math.hpp"
#include "evex/rng.hpp"
#include "evex/util.hpp"

namespace evex {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::F: return "f";
    case Variant::FE: return "fe";
    case Variant::FER: return "fer";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  const std::string n = lowercase(name);
  if (n == "f") return Variant::F;
  if (n == "fe") return Variant::FE;
  if (n == "fer") return Variant::FER;
  throw ValidationError("unknown model variant '" + name + "' (expected f, fe or fer)");
}

Eigen::VectorXd SlotMlp::logits(const Eigen::VectorXd& t) const {
  return w2 * softplus((w1 * t + b1).eval()) + b2;
}

Eigen::MatrixXd ModelParams::lambda() const {
  Eigen::MatrixXd out(S, V);
  for (int s = 0; s < S; ++s) out.row(s) = softmax(lambda_logits.row(s).transpose()).transpose();
  return out;
}

Eigen::VectorXd ModelParams::log_lambda_row(int s) const {
  return log_softmax(lambda_logits.row(s).transpose());
}

namespace {

// Glorot-style init for the network weights; the emission/assignment
// parameters use the small symmetric init.
Eigen::MatrixXd glorot(Rng& rng, int rows, int cols) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = rng.normal(0.0, stddev);
  return w;
}

Eigen::MatrixXd small_normal(Rng& rng, int rows, int cols, double stddev = 0.01) {
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = rng.normal(0.0, stddev);
  return w;
}

}  // namespace

ModelParams init_model_params(Variant variant, int S, int V, int n, int n_t, uint64_t seed,
                              int mlp_hidden, bool learnable_alpha) {
  if (S < 1 || V < 1 || n < 1) throw ValidationError("model dimensions must be positive");
  if (n_t <= 0) n_t = n;

  ModelParams p;
  p.variant = variant;
  p.S = S;
  p.V = V;
  p.n = n;
  p.n_t = n_t;
  p.seed = seed;

  Rng rng(derive_seed(seed, 0xA11CE));
  p.lambda_logits = small_normal(rng, S, V);
  p.beta_mean = small_normal(rng, S, p.m());
  p.beta_log_var = Eigen::MatrixXd::Zero(S, p.m());

  if (has_event_type(variant)) {
    p.alpha.mean = Eigen::VectorXd::Zero(n_t);
    p.alpha.log_var = Eigen::VectorXd::Zero(n_t);
    p.alpha.learnable = learnable_alpha;
    p.theta.w1 = glorot(rng, mlp_hidden, n_t);
    p.theta.b1 = Eigen::VectorXd::Zero(mlp_hidden);
    p.theta.w2 = glorot(rng, S, mlp_hidden);
    p.theta.b2 = Eigen::VectorXd::Zero(S);
  }
  return p;
}

SampledCluster sample_cluster(const ModelParams& params, int num_entities, uint64_t rng_seed) {
  if (num_entities < 1) throw ValidationError("num_entities must be >= 1");
  Rng rng(rng_seed);
  SampledCluster out;
  out.slots.resize(num_entities);
  out.heads.resize(num_entities);
  out.f.resize(num_entities, params.n);
  if (has_redundancy(params.variant)) out.r.resize(num_entities);

  Eigen::VectorXd slot_probs;
  if (has_event_type(params.variant)) {
    out.t = params.alpha.mean.array() +
            (0.5 * params.alpha.log_var.array()).exp() *
                rng.normal_vec(params.n_t).array();
    slot_probs = softmax(params.theta.logits(out.t));
  } else {
    slot_probs = Eigen::VectorXd::Constant(params.S, 1.0 / params.S);
  }

  const Eigen::MatrixXd lambda = params.lambda();
  for (int e = 0; e < num_entities; ++e) {
    const int s = rng.multinomial(slot_probs);
    out.slots[e] = s;
    out.heads[e] = rng.multinomial(lambda.row(s).transpose());
    for (int d = 0; d < params.n; ++d)
      out.f(e, d) = rng.normal(params.beta_mean(s, d),
                               std::exp(0.5 * params.beta_log_var(s, d)));
    if (has_redundancy(params.variant)) {
      const int rd = params.n;  // last emission column holds r
      double r = rng.normal(params.beta_mean(s, rd), std::exp(0.5 * params.beta_log_var(s, rd)));
      out.r[e] = std::clamp(r, 1e-6, 1.0);
    }
  }
  return out;
}

namespace {

void check_head(const ModelParams& params, int h) {
  if (h < 0 || h >= params.V)
    throw ValidationError("head index " + std::to_string(h) + " outside vocabulary of size " +
                          std::to_string(params.V));
}

// log lambda_{s,h} + log Normal(f'; beta'_s) for one entity
double emission_log_prob(const ModelParams& params, const Eigen::VectorXd& log_lambda_s, int s,
                         const EntityObservation& obs) {
  check_head(params, obs.h);
  return log_lambda_s[obs.h] + log_normal_diag(obs.f_prime, params.beta_mean.row(s).transpose(),
                                               params.beta_log_var.row(s).transpose());
}

}  // namespace

double entity_log_joint_f(const ModelParams& params, const EntityObservation& obs, int s) {
  if (s < 0 || s >= params.S) throw ValidationError("slot index out of range");
  return -std::log(static_cast<double>(params.S)) +
         emission_log_prob(params, params.log_lambda_row(s), s, obs);
}

double cluster_log_joint(const ModelParams& params, const ClusterObservation& cluster_obs,
                         const Eigen::VectorXd& t, const std::vector<int>& slots) {
  if (!has_event_type(params.variant))
    throw ValidationError("cluster_log_joint requires a variant with an event type vector");
  if (static_cast<int>(slots.size()) != cluster_obs.num_entities())
    throw ValidationError("slot assignment length mismatch");

  double lp = log_normal_diag(t, params.alpha.mean, params.alpha.log_var);
  const Eigen::VectorXd log_pi = log_softmax(params.theta.logits(t));
  for (int e = 0; e < cluster_obs.num_entities(); ++e) {
    const int s = slots[e];
    if (s < 0 || s >= params.S) throw ValidationError("slot index out of range");
    lp += log_pi[s] + emission_log_prob(params, params.log_lambda_row(s), s,
                                        cluster_obs.observations[e]);
  }
  return lp;
}

double reconstruction_log_prob(const ModelParams& params, const ClusterObservation& cluster_obs,
                               const Eigen::VectorXd& t) {
  if (!has_event_type(params.variant))
    throw ValidationError("reconstruction_log_prob requires a variant with an event type vector");
  const Eigen::VectorXd log_pi = log_softmax(params.theta.logits(t));

  std::vector<Eigen::VectorXd> log_lambda(params.S);
  for (int s = 0; s < params.S; ++s) log_lambda[s] = params.log_lambda_row(s);

  double total = 0.0;
  Eigen::VectorXd scores(params.S);
  for (const auto& obs : cluster_obs.observations) {
    for (int s = 0; s < params.S; ++s)
      scores[s] = log_pi[s] + emission_log_prob(params, log_lambda[s], s, obs);
    total += log_sum_exp(scores);
  }
  return total;
}

Eigen::VectorXd slot_posterior(const ModelParams& params, const EntityObservation& obs,
                               const Eigen::VectorXd& t) {
  Eigen::VectorXd scores(params.S);
  const bool with_t = has_event_type(params.variant) && t.size() > 0;
  const Eigen::VectorXd log_pi =
      with_t ? log_softmax(params.theta.logits(t))
             : Eigen::VectorXd::Constant(params.S, -std::log(static_cast<double>(params.S)));
  for (int s = 0; s < params.S; ++s)
    scores[s] = log_pi[s] + emission_log_prob(params, params.log_lambda_row(s), s, obs);
  const double lse = log_sum_exp(scores);
  return (scores.array() - lse).exp();
}

int argmax_slot(const Eigen::VectorXd& posterior) {
  int best = 0;
  for (int s = 1; s < posterior.size(); ++s)
    if (posterior[s] > posterior[best]) best = s;
  return best;
}

}  // namespace evex
