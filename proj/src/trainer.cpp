#include "evex/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "evex/math.hpp"
#include "evex/rng.hpp"
#include "evex/util.hpp"

namespace evex {

void TrainConfig::validate() const {
  if (momentum <= 0.8)
    throw ValidationError("momentum must exceed 0.8 (got " + std::to_string(momentum) + ")");
  if (learning_rate < 0.001 || learning_rate > 0.1)
    throw ValidationError("learning rate must lie in [0.001, 0.1]");
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must lie in [0, 1)");
  if (batch_size < 1 || epochs < 1 || mc_samples < 1)
    throw ValidationError("batch_size, epochs and mc_samples must be positive");
  if (mlp_layers != 1) throw ValidationError("only a single hidden MLP layer is supported");
  if (activation != "softplus") throw ValidationError("only softplus activation is supported");
}

namespace {

void push(std::vector<TensorRef>& out, const std::string& name, Eigen::MatrixXd& t) {
  if (t.size() > 0) out.push_back({name, t.data(), t.size()});
}
void push(std::vector<TensorRef>& out, const std::string& name, Eigen::VectorXd& t) {
  if (t.size() > 0) out.push_back({name, t.data(), t.size()});
}

}  // namespace

std::vector<TensorRef> trainable_tensors(ModelParams& params, InferenceNet* net) {
  std::vector<TensorRef> out;
  push(out, "lambda_logits", params.lambda_logits);
  push(out, "beta_mean", params.beta_mean);
  push(out, "beta_log_var", params.beta_log_var);
  if (has_event_type(params.variant)) {
    push(out, "theta_w1", params.theta.w1);
    push(out, "theta_b1", params.theta.b1);
    push(out, "theta_w2", params.theta.w2);
    push(out, "theta_b2", params.theta.b2);
    if (params.alpha.learnable) {
      push(out, "alpha_mean", params.alpha.mean);
      push(out, "alpha_log_var", params.alpha.log_var);
    }
  }
  if (net && !net->empty()) {
    push(out, "enc_w_hist", net->w_hist);
    push(out, "enc_w_feat", net->w_feat);
    push(out, "enc_b_h", net->b_h);
    push(out, "enc_w_mu", net->w_mu);
    push(out, "enc_b_mu", net->b_mu);
    push(out, "enc_w_lv", net->w_lv);
    push(out, "enc_b_lv", net->b_lv);
    if (net->use_batch_norm) {
      push(out, "bn_mu_gamma", net->bn_mu.gamma);
      push(out, "bn_mu_beta", net->bn_mu.beta);
      push(out, "bn_lv_gamma", net->bn_lv.gamma);
      push(out, "bn_lv_beta", net->bn_lv.beta);
    }
  }
  return out;
}

std::vector<TensorRef> gradient_tensors(Gradients& g, const ModelParams& params,
                                        const InferenceNet* net) {
  std::vector<TensorRef> out;
  push(out, "lambda_logits", g.lambda_logits);
  push(out, "beta_mean", g.beta_mean);
  push(out, "beta_log_var", g.beta_log_var);
  if (has_event_type(params.variant)) {
    push(out, "theta_w1", g.th_w1);
    push(out, "theta_b1", g.th_b1);
    push(out, "theta_w2", g.th_w2);
    push(out, "theta_b2", g.th_b2);
    if (params.alpha.learnable) {
      push(out, "alpha_mean", g.alpha_mean);
      push(out, "alpha_log_var", g.alpha_log_var);
    }
  }
  if (net && !net->empty()) {
    push(out, "enc_w_hist", g.w_hist);
    push(out, "enc_w_feat", g.w_feat);
    push(out, "enc_b_h", g.b_h);
    push(out, "enc_w_mu", g.w_mu);
    push(out, "enc_b_mu", g.b_mu);
    push(out, "enc_w_lv", g.w_lv);
    push(out, "enc_b_lv", g.b_lv);
    if (net->use_batch_norm) {
      push(out, "bn_mu_gamma", g.bn_mu_gamma);
      push(out, "bn_mu_beta", g.bn_mu_beta);
      push(out, "bn_lv_gamma", g.bn_lv_gamma);
      push(out, "bn_lv_beta", g.bn_lv_beta);
    }
  }
  return out;
}

std::vector<TensorRef> state_tensors(ModelParams& params, InferenceNet* net) {
  std::vector<TensorRef> out = trainable_tensors(params, net);
  if (has_event_type(params.variant) && !params.alpha.learnable) {
    push(out, "alpha_mean", params.alpha.mean);
    push(out, "alpha_log_var", params.alpha.log_var);
  }
  if (net && !net->empty() && net->use_batch_norm) {
    push(out, "bn_mu_running_mean", net->bn_mu.running_mean);
    push(out, "bn_mu_running_var", net->bn_mu.running_var);
    push(out, "bn_lv_running_mean", net->bn_lv.running_mean);
    push(out, "bn_lv_running_var", net->bn_lv.running_var);
  }
  return out;
}

void adam_init(AdamState& adam, const std::vector<TensorRef>& params) {
  adam.step_count = 0;
  adam.m.clear();
  adam.v.clear();
  for (const auto& p : params) {
    adam.m.push_back(Eigen::VectorXd::Zero(p.size));
    adam.v.push_back(Eigen::VectorXd::Zero(p.size));
  }
}

void adam_ascent_step(AdamState& adam, const std::vector<TensorRef>& params,
                      const std::vector<TensorRef>& grads) {
  if (params.size() != grads.size()) throw RuntimeError("optimizer tensor count mismatch");
  adam.step_count++;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step_count));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size) throw RuntimeError("optimizer tensor size mismatch");
    Eigen::Map<Eigen::VectorXd> p(params[i].data, params[i].size);
    Eigen::Map<const Eigen::VectorXd> g(grads[i].data, grads[i].size);
    Eigen::VectorXd& m = adam.m[i];
    Eigen::VectorXd& v = adam.v[i];
    m = adam.beta1 * m + (1.0 - adam.beta1) * g;
    v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
    p.array() += adam.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + adam.eps);
  }
}

namespace {

void update_running_stats(BatchNorm& bn, const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
  bn.running_mean = (1.0 - bn.update) * bn.running_mean + bn.update * mean;
  bn.running_var = (1.0 - bn.update) * bn.running_var + bn.update * var;
}

}  // namespace

TrainResult train(const std::vector<ClusterObservation>& corpus, Variant variant,
                  const TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw ValidationError("training corpus is empty");

  std::vector<const ClusterObservation*> usable;
  for (const auto& c : corpus)
    if (c.num_entities() > 0) usable.push_back(&c);
  if (usable.empty()) throw ValidationError("no cluster carries entities");

  const int V = usable.front()->V;
  const int n = usable.front()->n;
  const bool with_r = usable.front()->with_r;
  if (with_r != has_redundancy(variant))
    throw ValidationError("observations were featurized " + std::string(with_r ? "with" : "without") +
                          " the redundancy ratio, which does not match variant " +
                          variant_name(variant));
  for (const auto* c : usable)
    if (c->V != V || c->n != n || c->with_r != with_r)
      throw ValidationError("cluster '" + c->cluster_id + "' has inconsistent dimensions");

  TrainResult result;
  result.params = init_model_params(variant, config.S, V, n, config.resolved_n_t(), config.seed,
                                    config.hidden, config.learnable_alpha);
  if (has_event_type(variant))
    result.net = init_inference_net(V, result.params.m(), config.hidden,
                                    config.resolved_n_t(), config.seed, config.batch_norm);
  InferenceNet* net = has_event_type(variant) ? &result.net : nullptr;

  auto params_refs = trainable_tensors(result.params, net);
  Gradients grads = Gradients::zeros_like(result.params, net);
  auto grads_refs = gradient_tensors(grads, result.params, net);

  AdamState adam;
  adam.lr = config.learning_rate;
  adam.beta1 = config.momentum;
  adam_init(adam, params_refs);

  Rng shuffle_rng(derive_seed(config.seed, 0x5F0FF1E));
  std::vector<int> order(usable.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  double best_elbo = -std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    double sum_elbo = 0.0, sum_kl = 0.0, sum_recon = 0.0;
    int64_t seen = 0;
    const int num_batches =
        static_cast<int>((order.size() + config.batch_size - 1) / config.batch_size);
    for (int b = 0; b < num_batches; ++b) {
      ClusterBatch batch;
      const size_t lo = static_cast<size_t>(b) * config.batch_size;
      const size_t hi = std::min(order.size(), lo + config.batch_size);
      for (size_t i = lo; i < hi; ++i) batch.push_back(usable[order[i]]);

      TrainOptions opt;
      opt.train_mode = true;
      opt.dropout = config.dropout;
      opt.mlp_dropout = config.mlp_dropout;
      opt.mc_samples = config.mc_samples;
      opt.seed = config.seed;
      opt.salt = derive_seed(0xBA7C4, static_cast<uint64_t>(epoch), static_cast<uint64_t>(b));

      const BatchStats stats =
          batch_elbo_grad(result.params, net, batch, opt, config.policy, &grads);

      const double batch_elbo = stats.elbo.sum();
      if (!std::isfinite(batch_elbo)) {
        std::string offender = "?";
        for (int i = 0; i < stats.elbo.size(); ++i)
          if (!std::isfinite(stats.elbo[i])) { offender = batch[i]->cluster_id; break; }
        throw RuntimeError("non-finite loss at step " + std::to_string(adam.step_count + 1) +
                           " (epoch " + std::to_string(epoch) + ", cluster '" + offender + "')");
      }

      grads.scale(1.0 / static_cast<double>(batch.size()));
      adam_ascent_step(adam, params_refs, grads_refs);
      if (stats.has_bn_stats && net) {
        update_running_stats(net->bn_mu, stats.bn_mu_mean, stats.bn_mu_var);
        update_running_stats(net->bn_lv, stats.bn_lv_mean, stats.bn_lv_var);
      }

      sum_elbo += batch_elbo;
      sum_kl += stats.kl.sum();
      sum_recon += stats.recon.sum();
      seen += static_cast<int64_t>(batch.size());
    }

    EpochLog row;
    row.epoch = epoch;
    row.mean_elbo = sum_elbo / seen;
    row.mean_kl = sum_kl / seen;
    row.mean_recon = sum_recon / seen;
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(row);
    result.epochs_run = epoch + 1;

    const double denom = std::max(std::abs(best_elbo), 1e-12);
    if (row.mean_elbo > best_elbo + config.early_stop_rel * denom) {
      best_elbo = row.mean_elbo;
      stall = 0;
    } else if (++stall >= config.early_stop_patience) {
      break;
    }
  }
  result.steps = adam.step_count;
  return result;
}

PosteriorState assign_corpus(const ModelParams& params, const InferenceNet* net,
                             const std::vector<ClusterObservation>& corpus,
                             const ExecPolicy& policy) {
  PosteriorState state;
  state.S = params.S;
  ClusterBatch batch;
  std::vector<const ClusterObservation*> kept;
  for (const auto& c : corpus)
    if (c.num_entities() > 0) {
      batch.push_back(&c);
      kept.push_back(&c);
    }
  auto assignments = assign_batch(params, net, batch, policy);
  for (size_t i = 0; i < assignments.size(); ++i) {
    ClusterPosterior cp;
    cp.cluster_id = kept[i]->cluster_id;
    cp.mu = std::move(assignments[i].mu);
    cp.sigma2 = std::move(assignments[i].sigma2);
    cp.slots = std::move(assignments[i].slots);
    cp.posteriors = std::move(assignments[i].posteriors);
    for (const auto& o : kept[i]->observations) cp.entity_ids.push_back(o.entity_id);
    state.clusters.push_back(std::move(cp));
  }
  return state;
}

GradientCheckReport gradient_check(const ModelParams& params, const InferenceNet& net,
                                   const ClusterObservation& obs, double step,
                                   uint64_t eps_seed) {
  ModelParams p = params;  // local mutable copies
  InferenceNet nt = net;

  Rng rng(eps_seed);
  const Eigen::VectorXd eps_draw = rng.normal_vec(p.n_t);

  TrainOptions opt;
  opt.train_mode = false;  // dropout off, batch norm on running statistics
  opt.mc_samples = 1;
  opt.fixed_eps = &eps_draw;

  ClusterBatch batch{&obs};

  Gradients grads = Gradients::zeros_like(p, &nt);
  batch_elbo_grad_serial(p, &nt, batch, opt, &grads);

  auto params_refs = trainable_tensors(p, &nt);
  auto grads_refs = gradient_tensors(grads, p, &nt);

  GradientCheckReport report;
  for (size_t ti = 0; ti < params_refs.size(); ++ti) {
    for (Eigen::Index j = 0; j < params_refs[ti].size; ++j) {
      double& x = params_refs[ti].data[j];
      const double saved = x;
      x = saved + step;
      const double up = batch_elbo_grad_serial(p, &nt, batch, opt, nullptr).elbo[0];
      x = saved - step;
      const double down = batch_elbo_grad_serial(p, &nt, batch, opt, nullptr).elbo[0];
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads_refs[ti].data[j];
      const double rel =
          std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = params_refs[ti].name;
        report.worst_index = j;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace evex
