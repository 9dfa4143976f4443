#include "evex/nets.hpp"

#include <cmath>

#include "evex/math.hpp"
#include "evex/rng.hpp"
#include "evex/util.hpp"

namespace evex {

namespace {

Eigen::MatrixXd glorot(Rng& rng, int rows, int cols) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = rng.normal(0.0, stddev);
  return w;
}

}  // namespace

InferenceNet init_inference_net(int V, int m, int hidden, int n_t, uint64_t seed,
                                bool use_batch_norm) {
  InferenceNet net;
  net.V = V;
  net.m = m;
  net.hidden = hidden;
  net.n_t = n_t;
  net.use_batch_norm = use_batch_norm;
  Rng rng(derive_seed(seed, 0xE2C0DE));
  net.w_hist = glorot(rng, hidden, V);
  net.w_feat = glorot(rng, hidden, m);
  net.b_h = Eigen::VectorXd::Zero(hidden);
  net.w_mu = glorot(rng, n_t, hidden);
  net.b_mu = Eigen::VectorXd::Zero(n_t);
  net.w_lv = glorot(rng, n_t, hidden);
  net.b_lv = Eigen::VectorXd::Zero(n_t);
  net.bn_mu.init(n_t);
  net.bn_lv.init(n_t);
  return net;
}

EncoderInput make_encoder_input(const ClusterObservation& obs) {
  EncoderInput in;
  const auto hist = obs.histogram();
  double total = 0.0;
  for (const auto& [idx, cnt] : hist) total += cnt;
  in.hist.reserve(hist.size());
  for (const auto& [idx, cnt] : hist)
    in.hist.emplace_back(idx, total > 0 ? cnt / total : 0.0);
  in.pooled = obs.pooled_features();
  return in;
}

Eigen::VectorXd encoder_hidden_preact(const InferenceNet& net, const EncoderInput& in) {
  Eigen::VectorXd pre = net.b_h + net.w_feat * in.pooled;
  for (const auto& [idx, wt] : in.hist) pre += net.w_hist.col(idx) * wt;
  return pre;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const InferenceNet& net,
                                                   const ClusterObservation& obs) {
  if (obs.V != net.V)
    throw ValidationError("histogram size " + std::to_string(obs.V) +
                          " does not match inference net input " + std::to_string(net.V));
  if (obs.m() != net.m)
    throw ValidationError("feature dimension " + std::to_string(obs.m()) +
                          " does not match inference net input " + std::to_string(net.m));
  if (obs.num_entities() < 1)
    throw ValidationError("cannot encode cluster '" + obs.cluster_id + "' with no entities");

  const EncoderInput in = make_encoder_input(obs);
  const Eigen::VectorXd u = softplus(encoder_hidden_preact(net, in));
  Eigen::VectorXd mu = net.w_mu * u + net.b_mu;
  Eigen::VectorXd lv = net.w_lv * u + net.b_lv;
  if (net.use_batch_norm) {
    mu = net.bn_mu.eval_forward(mu);
    lv = net.bn_lv.eval_forward(lv);
  }
  return {mu, lv.array().exp().matrix()};
}

double kl_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2,
                   const GlobalPrior& prior) {
  if ((sigma2.array() <= 0.0).any()) throw ValidationError("kl_gaussian: nonpositive variance");
  return kl_gaussian_logvar(mu, sigma2.array().log().matrix(), prior);
}

double kl_gaussian_logvar(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                          const GlobalPrior& prior) {
  if (mu.size() != prior.mean.size() || log_var.size() != prior.log_var.size() ||
      mu.size() != log_var.size())
    throw ValidationError("kl_gaussian: shape mismatch");
  const Eigen::ArrayXd d = (mu - prior.mean).array();
  const Eigen::ArrayXd ratio = (log_var - prior.log_var).array().exp();
  return 0.5 * (ratio + d.square() * (-prior.log_var.array()).exp() - 1.0 +
                prior.log_var.array() - log_var.array())
                   .sum();
}

KlGrad kl_gaussian_logvar_grad(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                               const GlobalPrior& prior) {
  KlGrad g;
  const Eigen::ArrayXd inv_pvar = (-prior.log_var.array()).exp();
  const Eigen::ArrayXd d = (mu - prior.mean).array();
  const Eigen::ArrayXd ratio = (log_var - prior.log_var).array().exp();
  g.d_mu = (d * inv_pvar).matrix();
  g.d_log_var = (0.5 * (ratio - 1.0)).matrix();
  if (prior.learnable) {
    g.d_prior_mean = (-d * inv_pvar).matrix();
    g.d_prior_log_var = (0.5 * (1.0 - ratio - d.square() * inv_pvar)).matrix();
  }
  return g;
}

}  // namespace evex
