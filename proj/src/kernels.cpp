#include "evex/kernels.hpp"

#include <cmath>

#include "evex/math.hpp"
#include "evex/rng.hpp"
#include "evex/util.hpp"

namespace evex {

Gradients Gradients::zeros_like(const ModelParams& params, const InferenceNet* net) {
  Gradients g;
  g.lambda_logits = Eigen::MatrixXd::Zero(params.S, params.V);
  g.beta_mean = Eigen::MatrixXd::Zero(params.S, params.m());
  g.beta_log_var = Eigen::MatrixXd::Zero(params.S, params.m());
  if (has_event_type(params.variant)) {
    g.th_w1 = Eigen::MatrixXd::Zero(params.theta.w1.rows(), params.theta.w1.cols());
    g.th_b1 = Eigen::VectorXd::Zero(params.theta.b1.size());
    g.th_w2 = Eigen::MatrixXd::Zero(params.theta.w2.rows(), params.theta.w2.cols());
    g.th_b2 = Eigen::VectorXd::Zero(params.theta.b2.size());
    if (params.alpha.learnable) {
      g.alpha_mean = Eigen::VectorXd::Zero(params.n_t);
      g.alpha_log_var = Eigen::VectorXd::Zero(params.n_t);
    }
  }
  if (net && !net->empty()) {
    g.w_hist = Eigen::MatrixXd::Zero(net->hidden, net->V);
    g.w_feat = Eigen::MatrixXd::Zero(net->hidden, net->m);
    g.b_h = Eigen::VectorXd::Zero(net->hidden);
    g.w_mu = Eigen::MatrixXd::Zero(net->n_t, net->hidden);
    g.b_mu = Eigen::VectorXd::Zero(net->n_t);
    g.w_lv = Eigen::MatrixXd::Zero(net->n_t, net->hidden);
    g.b_lv = Eigen::VectorXd::Zero(net->n_t);
    if (net->use_batch_norm) {
      g.bn_mu_gamma = Eigen::VectorXd::Zero(net->n_t);
      g.bn_mu_beta = Eigen::VectorXd::Zero(net->n_t);
      g.bn_lv_gamma = Eigen::VectorXd::Zero(net->n_t);
      g.bn_lv_beta = Eigen::VectorXd::Zero(net->n_t);
    }
  }
  return g;
}

namespace {

template <typename T>
void add_block(T& dst, const T& src) {
  if (src.size() > 0) dst += src;
}
template <typename T>
void scale_block(T& blk, double f) {
  if (blk.size() > 0) blk *= f;
}

}  // namespace

void Gradients::set_zero() {
  for (Eigen::MatrixXd* m : {&lambda_logits, &beta_mean, &beta_log_var, &th_w1, &th_w2, &w_hist,
                             &w_feat, &w_mu, &w_lv})
    if (m->size() > 0) m->setZero();
  for (Eigen::VectorXd* v : {&th_b1, &th_b2, &alpha_mean, &alpha_log_var, &b_h, &b_mu, &b_lv,
                             &bn_mu_gamma, &bn_mu_beta, &bn_lv_gamma, &bn_lv_beta})
    if (v->size() > 0) v->setZero();
}

void Gradients::add(const Gradients& o) {
  add_block(lambda_logits, o.lambda_logits);
  add_block(beta_mean, o.beta_mean);
  add_block(beta_log_var, o.beta_log_var);
  add_block(th_w1, o.th_w1);
  add_block(th_w2, o.th_w2);
  add_block(th_b1, o.th_b1);
  add_block(th_b2, o.th_b2);
  add_block(alpha_mean, o.alpha_mean);
  add_block(alpha_log_var, o.alpha_log_var);
  add_block(w_hist, o.w_hist);
  add_block(w_feat, o.w_feat);
  add_block(b_h, o.b_h);
  add_block(w_mu, o.w_mu);
  add_block(b_mu, o.b_mu);
  add_block(w_lv, o.w_lv);
  add_block(b_lv, o.b_lv);
  add_block(bn_mu_gamma, o.bn_mu_gamma);
  add_block(bn_mu_beta, o.bn_mu_beta);
  add_block(bn_lv_gamma, o.bn_lv_gamma);
  add_block(bn_lv_beta, o.bn_lv_beta);
}

void Gradients::scale(double f) {
  for (Eigen::MatrixXd* m : {&lambda_logits, &beta_mean, &beta_log_var, &th_w1, &th_w2, &w_hist,
                             &w_feat, &w_mu, &w_lv})
    scale_block(*m, f);
  for (Eigen::VectorXd* v : {&th_b1, &th_b2, &alpha_mean, &alpha_log_var, &b_h, &b_mu, &b_lv,
                             &bn_mu_gamma, &bn_mu_beta, &bn_lv_gamma, &bn_lv_beta})
    scale_block(*v, f);
}

namespace {

// shared read-only tables for one batch
struct BatchContext {
  Eigen::MatrixXd log_lambda;  // S x V
  Eigen::MatrixXd lambda;      // S x V
  Eigen::MatrixXd inv_var;     // S x m
  Eigen::VectorXd gauss_const; // per slot: -0.5 (m log 2pi + sum log var)
};

BatchContext make_context(const ModelParams& params) {
  BatchContext ctx;
  ctx.log_lambda.resize(params.S, params.V);
  ctx.lambda.resize(params.S, params.V);
  for (int s = 0; s < params.S; ++s) {
    Eigen::VectorXd ll = log_softmax(params.lambda_logits.row(s).transpose());
    ctx.log_lambda.row(s) = ll.transpose();
    ctx.lambda.row(s) = ll.array().exp().transpose();
  }
  ctx.inv_var = (-params.beta_log_var).array().exp();
  const int m = params.m();
  ctx.gauss_const =
      -0.5 * (m * kLog2Pi + params.beta_log_var.rowwise().sum().array()).matrix();
  return ctx;
}

double entity_scores(const ModelParams& params, const BatchContext& ctx,
                     const Eigen::VectorXd& log_pi, const EntityObservation& obs,
                     Eigen::VectorXd& scores) {
  if (obs.h < 0 || obs.h >= params.V)
    throw ValidationError("head index " + std::to_string(obs.h) +
                          " outside vocabulary of size " + std::to_string(params.V));
  for (int s = 0; s < params.S; ++s) {
    const Eigen::ArrayXd d = obs.f_prime.array() - params.beta_mean.row(s).transpose().array();
    const double gauss =
        ctx.gauss_const[s] - 0.5 * (d.square() * ctx.inv_var.row(s).transpose().array()).sum();
    scores[s] = log_pi[s] + ctx.log_lambda(s, obs.h) + gauss;
  }
  return log_sum_exp(scores);
}

// Collapsed reconstruction term and its gradients for one cluster at a given
// event type vector t. Accumulates lambda/beta/theta gradients into `g` (plus
// the per-slot responsibility sums for the dense lambda fixup) and dL/dt into
// `dt`. For variant F pass an empty t and no mlp mask.
double decode_cluster(const ModelParams& params, const BatchContext& ctx,
                      const ClusterObservation& obs, const Eigen::VectorXd& t,
                      const Eigen::VectorXd* mlp_mask, Gradients* g,
                      Eigen::VectorXd* lambda_wsum, Eigen::VectorXd* dt) {
  const int S = params.S;
  const bool with_t = has_event_type(params.variant);

  Eigen::VectorXd log_pi;
  Eigen::VectorXd pre1, hid;
  if (with_t) {
    pre1 = params.theta.w1 * t + params.theta.b1;
    hid = softplus(pre1);
    if (mlp_mask) hid.array() *= mlp_mask->array();
    log_pi = log_softmax((params.theta.w2 * hid + params.theta.b2).eval());
  } else {
    log_pi = Eigen::VectorXd::Constant(S, -std::log(static_cast<double>(S)));
  }

  double recon = 0.0;
  Eigen::VectorXd scores(S);
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(S);
  for (const auto& e : obs.observations) {
    const double lse = entity_scores(params, ctx, log_pi, e, scores);
    recon += lse;
    if (!g && !dt) continue;
    const Eigen::VectorXd w = (scores.array() - lse).exp();
    wsum += w;
    if (g) {
      for (int s = 0; s < S; ++s) {
        g->lambda_logits(s, e.h) += w[s];
        const Eigen::ArrayXd d = e.f_prime.array() - params.beta_mean.row(s).transpose().array();
        const Eigen::ArrayXd dv = d * ctx.inv_var.row(s).transpose().array();
        g->beta_mean.row(s) += (w[s] * dv).matrix().transpose();
        g->beta_log_var.row(s) += (0.5 * w[s] * (d * dv - 1.0)).matrix().transpose();
      }
    }
  }
  if (lambda_wsum) *lambda_wsum += wsum;

  if (with_t && (g || dt)) {
    const Eigen::VectorXd pi = log_pi.array().exp();
    const Eigen::VectorXd dz = wsum - static_cast<double>(obs.num_entities()) * pi;
    Eigen::VectorXd dhid = params.theta.w2.transpose() * dz;
    if (g) {
      g->th_w2 += dz * hid.transpose();
      g->th_b2 += dz;
    }
    if (mlp_mask) dhid.array() *= mlp_mask->array();
    const Eigen::VectorXd dpre1 = dhid.array() * sigmoid(pre1).array();
    if (g) {
      g->th_w1 += dpre1 * t.transpose();
      g->th_b1 += dpre1;
    }
    if (dt) *dt += params.theta.w1.transpose() * dpre1;
  }
  return recon;
}

struct ClusterWork {
  EncoderInput input;
  Eigen::VectorXd mask;     // dropout multiplier on the hidden layer; empty = off
  Eigen::VectorXd pre_h, u;
  Eigen::VectorXd a_mu, a_lv;       // head pre-activations (pre-BN)
  Eigen::VectorXd xhat_mu, xhat_lv; // BN-normalized (batch or running stats)
  Eigen::VectorXd mu, lv;
  Eigen::VectorXd dy_mu, dy_lv;     // dELBO / d(mu, log var)
  uint64_t seed = 0;
};

Eigen::VectorXd draw_mask(Rng& rng, int dim, double dropout) {
  Eigen::VectorXd mask(dim);
  const double keep = 1.0 - dropout;
  for (int i = 0; i < dim; ++i) mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

template <typename F>
void parallel_over(int count, bool parallel, int num_threads, F&& f) {
#ifdef _OPENMP
  if (parallel) {
#pragma omp parallel for schedule(static) num_threads(num_threads)
    for (int i = 0; i < count; ++i) f(i, omp_get_thread_num());
    return;
  }
#endif
  for (int i = 0; i < count; ++i) f(i, 0);
}

BatchStats run_batch(const ModelParams& params, const InferenceNet* net,
                     const ClusterBatch& batch, const TrainOptions& opt, Gradients* grads,
                     bool parallel, int num_threads) {
  const int B = static_cast<int>(batch.size());
  const bool with_t = has_event_type(params.variant);
  if (with_t && (!net || net->empty()))
    throw ValidationError("variant requires an inference net");
#ifndef _OPENMP
  parallel = false;
#endif
#ifdef _OPENMP
  if (num_threads <= 0) num_threads = omp_get_max_threads();
#endif
  if (num_threads <= 0) num_threads = 1;
  const int T = parallel ? num_threads : 1;

  BatchStats stats;
  stats.elbo = Eigen::VectorXd::Zero(B);
  stats.kl = Eigen::VectorXd::Zero(B);
  stats.recon = Eigen::VectorXd::Zero(B);

  // validate up front; nothing may throw inside the parallel regions
  for (const ClusterObservation* c : batch) {
    if (c->num_entities() < 1)
      throw ValidationError("cluster '" + c->cluster_id + "' has no entities");
    if (c->m() != params.m())
      throw ValidationError("cluster '" + c->cluster_id + "' feature dimension " +
                            std::to_string(c->m()) + " does not match model " +
                            std::to_string(params.m()));
    if (with_t && (c->V != net->V || c->m() != net->m))
      throw ValidationError("cluster '" + c->cluster_id + "' does not match net input size");
    for (const auto& e : c->observations)
      if (e.h < 0 || e.h >= params.V)
        throw ValidationError("head index " + std::to_string(e.h) +
                              " outside vocabulary of size " + std::to_string(params.V));
  }

  const BatchContext ctx = make_context(params);

  std::vector<Gradients> buffers;
  std::vector<Eigen::VectorXd> wsums;
  if (grads) {
    buffers.assign(T, Gradients::zeros_like(params, with_t ? net : nullptr));
    wsums.assign(T, Eigen::VectorXd::Zero(params.S));
  }
  auto buf = [&](int tid) -> Gradients* { return grads ? &buffers[tid] : nullptr; };
  auto wsum_buf = [&](int tid) -> Eigen::VectorXd* { return grads ? &wsums[tid] : nullptr; };

  if (!with_t) {
    // variant F: per-entity collapsed likelihood, no encoder, no KL
    parallel_over(B, parallel, num_threads, [&](int i, int tid) {
      const double recon = decode_cluster(params, ctx, *batch[i], Eigen::VectorXd(), nullptr,
                                          buf(tid), wsum_buf(tid), nullptr);
      stats.recon[i] = recon;
      stats.elbo[i] = recon;
    });
  } else {
    const bool train_bn = net->use_batch_norm && opt.train_mode;
    const double keep_dropout = opt.train_mode ? opt.dropout : 0.0;
    std::vector<ClusterWork> work(B);

    // encoder forward up to the head pre-activations
    parallel_over(B, parallel, num_threads, [&](int i, int tid) {
      (void)tid;
      const ClusterObservation& obs = *batch[i];
      ClusterWork& w = work[i];
      w.seed = derive_seed(opt.seed, opt.salt, static_cast<uint64_t>(i));
      Rng rng(w.seed);
      w.input = make_encoder_input(obs);
      w.pre_h = encoder_hidden_preact(*net, w.input);
      w.u = softplus(w.pre_h);
      if (keep_dropout > 0.0) {
        w.mask = draw_mask(rng, net->hidden, keep_dropout);
        w.u.array() *= w.mask.array();
      }
      w.a_mu = net->w_mu * w.u + net->b_mu;
      w.a_lv = net->w_lv * w.u + net->b_lv;
    });

    // batch statistics (fixed order, cheap)
    Eigen::VectorXd mean_mu, var_mu, mean_lv, var_lv;
    if (train_bn) {
      mean_mu = Eigen::VectorXd::Zero(net->n_t);
      mean_lv = Eigen::VectorXd::Zero(net->n_t);
      for (const auto& w : work) {
        mean_mu += w.a_mu;
        mean_lv += w.a_lv;
      }
      mean_mu /= B;
      mean_lv /= B;
      var_mu = Eigen::VectorXd::Zero(net->n_t);
      var_lv = Eigen::VectorXd::Zero(net->n_t);
      for (const auto& w : work) {
        var_mu.array() += (w.a_mu - mean_mu).array().square();
        var_lv.array() += (w.a_lv - mean_lv).array().square();
      }
      var_mu /= B;
      var_lv /= B;
      stats.bn_mu_mean = mean_mu;
      stats.bn_mu_var = var_mu;
      stats.bn_lv_mean = mean_lv;
      stats.bn_lv_var = var_lv;
      stats.has_bn_stats = true;
    }

    // normalization, sampling, reconstruction and its backward
    parallel_over(B, parallel, num_threads, [&](int i, int tid) {
      const ClusterObservation& obs = *batch[i];
      ClusterWork& w = work[i];
      if (net->use_batch_norm) {
        const Eigen::VectorXd& m_mu = train_bn ? mean_mu : net->bn_mu.running_mean;
        const Eigen::VectorXd& v_mu = train_bn ? var_mu : net->bn_mu.running_var;
        const Eigen::VectorXd& m_lv = train_bn ? mean_lv : net->bn_lv.running_mean;
        const Eigen::VectorXd& v_lv = train_bn ? var_lv : net->bn_lv.running_var;
        w.xhat_mu = (w.a_mu - m_mu).array() / (v_mu.array() + net->bn_mu.eps).sqrt();
        w.xhat_lv = (w.a_lv - m_lv).array() / (v_lv.array() + net->bn_lv.eps).sqrt();
        w.mu = (net->bn_mu.gamma.array() * w.xhat_mu.array()).matrix() + net->bn_mu.beta;
        w.lv = (net->bn_lv.gamma.array() * w.xhat_lv.array()).matrix() + net->bn_lv.beta;
      } else {
        w.mu = w.a_mu;
        w.lv = w.a_lv;
      }

      Rng rng(derive_seed(w.seed, 0x5A17));
      const Eigen::VectorXd sigma = (0.5 * w.lv.array()).exp();
      const int K = std::max(1, opt.mc_samples);
      double recon_sum = 0.0;
      w.dy_mu = Eigen::VectorXd::Zero(net->n_t);
      w.dy_lv = Eigen::VectorXd::Zero(net->n_t);
      const bool want_grads = grads != nullptr;
      for (int k = 0; k < K; ++k) {
        Eigen::VectorXd eps =
            opt.fixed_eps ? *opt.fixed_eps : rng.normal_vec(net->n_t);
        Eigen::VectorXd mlp_mask;
        const Eigen::VectorXd* mask_ptr = nullptr;
        if (opt.train_mode && opt.mlp_dropout && opt.dropout > 0.0) {
          mlp_mask = draw_mask(rng, params.theta.hidden(), opt.dropout);
          mask_ptr = &mlp_mask;
        }
        const Eigen::VectorXd t = w.mu.array() + sigma.array() * eps.array();
        Eigen::VectorXd dt = Eigen::VectorXd::Zero(net->n_t);
        recon_sum += decode_cluster(params, ctx, obs, t, mask_ptr, buf(tid), wsum_buf(tid),
                                    want_grads ? &dt : nullptr);
        if (want_grads) {
          w.dy_mu += dt / K;
          w.dy_lv.array() += dt.array() * 0.5 * sigma.array() * eps.array() / K;
        }
      }
      const double recon = recon_sum / K;
      const double kl = kl_gaussian_logvar(w.mu, w.lv, params.alpha);
      stats.recon[i] = recon;
      stats.kl[i] = kl;
      stats.elbo[i] = recon - kl;
      if (want_grads) {
        const KlGrad kg = kl_gaussian_logvar_grad(w.mu, w.lv, params.alpha);
        w.dy_mu -= kg.d_mu;
        w.dy_lv -= kg.d_log_var;
        if (params.alpha.learnable) {
          buffers[tid].alpha_mean -= kg.d_prior_mean;
          buffers[tid].alpha_log_var -= kg.d_prior_log_var;
        }
      }
    });

    if (grads) {
      // batch-norm backward needs batch-level sums; keep them in cluster
      // order so results do not depend on the thread count
      Eigen::VectorXd s1_mu, s2_mu, s1_lv, s2_lv;
      Eigen::VectorXd dg_mu, db_mu, dg_lv, db_lv;
      if (net->use_batch_norm) {
        s1_mu = Eigen::VectorXd::Zero(net->n_t);
        s2_mu = Eigen::VectorXd::Zero(net->n_t);
        s1_lv = Eigen::VectorXd::Zero(net->n_t);
        s2_lv = Eigen::VectorXd::Zero(net->n_t);
        dg_mu = Eigen::VectorXd::Zero(net->n_t);
        db_mu = Eigen::VectorXd::Zero(net->n_t);
        dg_lv = Eigen::VectorXd::Zero(net->n_t);
        db_lv = Eigen::VectorXd::Zero(net->n_t);
        for (const auto& w : work) {
          dg_mu.array() += w.dy_mu.array() * w.xhat_mu.array();
          db_mu += w.dy_mu;
          dg_lv.array() += w.dy_lv.array() * w.xhat_lv.array();
          db_lv += w.dy_lv;
          const Eigen::ArrayXd dx_mu = w.dy_mu.array() * net->bn_mu.gamma.array();
          const Eigen::ArrayXd dx_lv = w.dy_lv.array() * net->bn_lv.gamma.array();
          s1_mu.array() += dx_mu;
          s2_mu.array() += dx_mu * w.xhat_mu.array();
          s1_lv.array() += dx_lv;
          s2_lv.array() += dx_lv * w.xhat_lv.array();
        }
      }

      // head and encoder backward
      parallel_over(B, parallel, num_threads, [&](int i, int tid) {
        ClusterWork& w = work[i];
        Gradients& g = buffers[tid];
        Eigen::VectorXd da_mu, da_lv;
        if (!net->use_batch_norm) {
          da_mu = w.dy_mu;
          da_lv = w.dy_lv;
        } else if (train_bn) {
          const Eigen::ArrayXd dx_mu = w.dy_mu.array() * net->bn_mu.gamma.array();
          const Eigen::ArrayXd dx_lv = w.dy_lv.array() * net->bn_lv.gamma.array();
          da_mu = ((B * dx_mu - s1_mu.array() - w.xhat_mu.array() * s2_mu.array()) /
                   (B * (var_mu.array() + net->bn_mu.eps).sqrt()))
                      .matrix();
          da_lv = ((B * dx_lv - s1_lv.array() - w.xhat_lv.array() * s2_lv.array()) /
                   (B * (var_lv.array() + net->bn_lv.eps).sqrt()))
                      .matrix();
        } else {
          da_mu = (w.dy_mu.array() * net->bn_mu.gamma.array() /
                   (net->bn_mu.running_var.array() + net->bn_mu.eps).sqrt())
                      .matrix();
          da_lv = (w.dy_lv.array() * net->bn_lv.gamma.array() /
                   (net->bn_lv.running_var.array() + net->bn_lv.eps).sqrt())
                      .matrix();
        }
        g.w_mu += da_mu * w.u.transpose();
        g.b_mu += da_mu;
        g.w_lv += da_lv * w.u.transpose();
        g.b_lv += da_lv;
        Eigen::VectorXd du = net->w_mu.transpose() * da_mu + net->w_lv.transpose() * da_lv;
        if (w.mask.size() > 0) du.array() *= w.mask.array();
        const Eigen::VectorXd dpre = du.array() * sigmoid(w.pre_h).array();
        g.w_feat += dpre * w.input.pooled.transpose();
        g.b_h += dpre;
        for (const auto& [idx, wt] : w.input.hist) g.w_hist.col(idx) += dpre * wt;
      });

      if (net->use_batch_norm) {
        grads->bn_mu_gamma = dg_mu;
        grads->bn_mu_beta = db_mu;
        grads->bn_lv_gamma = dg_lv;
        grads->bn_lv_beta = db_lv;
      }
    }
  }

  if (grads) {
    Eigen::VectorXd wsum_total = Eigen::VectorXd::Zero(params.S);
    for (int t = 0; t < T; ++t) {
      grads->add(buffers[t]);
      wsum_total += wsums[t];
    }
    // dense part of d(recon)/d(lambda logits): -sum_e w_{e,s} * lambda_{s,v}
    grads->lambda_logits -= wsum_total.asDiagonal() * ctx.lambda;
  }
  return stats;
}

}  // namespace

BatchStats batch_elbo_grad_serial(const ModelParams& params, const InferenceNet* net,
                                  const ClusterBatch& batch, const TrainOptions& opt,
                                  Gradients* grads) {
  if (grads) grads->set_zero();
  return run_batch(params, net, batch, opt, grads, false, 1);
}

BatchStats batch_elbo_grad_omp(const ModelParams& params, const InferenceNet* net,
                               const ClusterBatch& batch, const TrainOptions& opt,
                               Gradients* grads, int num_threads) {
  if (grads) grads->set_zero();
  return run_batch(params, net, batch, opt, grads, true, num_threads);
}

BatchStats batch_elbo_grad(const ModelParams& params, const InferenceNet* net,
                           const ClusterBatch& batch, const TrainOptions& opt,
                           const ExecPolicy& policy, Gradients* grads) {
  if (policy.parallel)
    return batch_elbo_grad_omp(params, net, batch, opt, grads, policy.num_threads);
  return batch_elbo_grad_serial(params, net, batch, opt, grads);
}

namespace {

ClusterAssignment assign_with_context(const ModelParams& params, const InferenceNet* net,
                                      const BatchContext& ctx, const ClusterObservation& obs) {
  ClusterAssignment out;
  Eigen::VectorXd log_pi;
  if (has_event_type(params.variant)) {
    auto [mu, sigma2] = encode(*net, obs);
    out.mu = mu;
    out.sigma2 = sigma2;
    log_pi = log_softmax(params.theta.logits(mu));
  } else {
    log_pi = Eigen::VectorXd::Constant(params.S, -std::log(static_cast<double>(params.S)));
  }
  const int E = obs.num_entities();
  out.posteriors.resize(E, params.S);
  out.slots.resize(E);
  Eigen::VectorXd scores(params.S);
  for (int e = 0; e < E; ++e) {
    const double lse = entity_scores(params, ctx, log_pi, obs.observations[e], scores);
    out.posteriors.row(e) = (scores.array() - lse).exp().transpose();
    out.slots[e] = argmax_slot(out.posteriors.row(e).transpose());
  }
  return out;
}

}  // namespace

ClusterAssignment assign_cluster(const ModelParams& params, const InferenceNet* net,
                                 const ClusterObservation& obs) {
  return assign_with_context(params, net, make_context(params), obs);
}

std::vector<ClusterAssignment> assign_batch_serial(const ModelParams& params,
                                                   const InferenceNet* net,
                                                   const ClusterBatch& batch) {
  const BatchContext ctx = make_context(params);
  std::vector<ClusterAssignment> out(batch.size());
  for (size_t i = 0; i < batch.size(); ++i)
    out[i] = assign_with_context(params, net, ctx, *batch[i]);
  return out;
}

std::vector<ClusterAssignment> assign_batch_omp(const ModelParams& params,
                                                const InferenceNet* net,
                                                const ClusterBatch& batch, int num_threads) {
  for (const ClusterObservation* c : batch) {
    if (c->num_entities() < 1)
      throw ValidationError("cluster '" + c->cluster_id + "' has no entities");
    if (has_event_type(params.variant) && (c->V != net->V || c->m() != net->m))
      throw ValidationError("cluster '" + c->cluster_id + "' does not match net input size");
    for (const auto& e : c->observations)
      if (e.h < 0 || e.h >= params.V)
        throw ValidationError("head index out of vocabulary range");
  }
  const BatchContext ctx = make_context(params);
  std::vector<ClusterAssignment> out(batch.size());
  const int count = static_cast<int>(batch.size());
#ifdef _OPENMP
  if (num_threads <= 0) num_threads = omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(num_threads)
#endif
  for (int i = 0; i < count; ++i) out[i] = assign_with_context(params, net, ctx, *batch[i]);
  return out;
}

std::vector<ClusterAssignment> assign_batch(const ModelParams& params, const InferenceNet* net,
                                            const ClusterBatch& batch, const ExecPolicy& policy) {
  if (policy.parallel) return assign_batch_omp(params, net, batch, policy.num_threads);
  return assign_batch_serial(params, net, batch);
}

}  // namespace evex
