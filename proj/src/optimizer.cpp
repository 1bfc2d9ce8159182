#include "curvrec/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace curvrec {
namespace {

bool uses_near_surface(Regularizer r) {
  return r == Regularizer::gauss_dt || r == Regularizer::gauss_plain;
}

bool needs_pq_hessian(Regularizer r) {
  return r == Regularizer::hessian_l2 || r == Regularizer::hessian_l1;
}

std::vector<Vec3> to_native(std::span<const Vec3> a, std::span<const Vec3> b, double s) {
  std::vector<Vec3> out;
  out.reserve(a.size() + b.size());
  for (const Vec3& p : a) out.push_back(s * p);
  for (const Vec3& p : b) out.push_back(s * p);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations <= 0) throw std::invalid_argument("iterations must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (sampling.batch_manifold < 1 || sampling.batch_uniform < 1 || sampling.batch_omega < 1)
    throw std::invalid_argument("batch sizes must be at least 1");
  if (knn_k < 1) throw std::invalid_argument("knn_k must be at least 1");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (weights.lambda_e < 0 || weights.lambda_dm < 0 || weights.lambda_dnm < 0 ||
      weights.lambda_gauss < 0 || weights.alpha < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  if (!(weights.dt_a > 0.0 && weights.dt_a < M_PI / 4.0))
    throw std::invalid_argument("dt_a must lie in (0, pi/4)");
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam_step: length mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

std::pair<LossBreakdown, std::vector<double>> total_loss_with_gradient(
    const FieldNetwork& net, const SampleBatch& batch, const LossWeights& w, double tau,
    int threads) {
  const double s = net.input_scale();
  const std::size_t n_m = batch.manifold.size();
  const std::size_t n_u = batch.uniform.size();
  const std::size_t n_pq = n_m + n_u;
  if (n_pq == 0) throw std::invalid_argument("batch has no manifold or uniform points");

  std::vector<double> grad(net.param_count(), 0.0);
  LossBreakdown bd;
  bd.tau = tau;

  const std::vector<Vec3> pq = to_native(batch.manifold, batch.uniform, s);
  const int pq_order = needs_pq_hessian(w.regularizer) ? 2 : 1;
  const bool alt_reg = needs_pq_hessian(w.regularizer) ||
                       w.regularizer == Regularizer::dirichlet_energy;

  const JetObjective pq_objective = [&](std::span<const Jet2> jets,
                                        std::span<JetAdjoint> adj) -> double {
    double value = 0.0;
    bd.eikonal = eikonal_term(jets);
    eikonal_adjoint(jets, w.lambda_e / static_cast<double>(n_pq), adj);
    value += w.lambda_e * bd.eikonal;
    if (n_m > 0) {
      const auto mj = jets.first(n_m);
      bd.dirichlet_manifold = dirichlet_manifold(mj);
      dirichlet_manifold_adjoint(mj, w.lambda_dm / static_cast<double>(n_m), adj.first(n_m));
      value += w.lambda_dm * bd.dirichlet_manifold;
    }
    if (n_u > 0) {
      const auto uj = jets.subspan(n_m);
      bd.dirichlet_nonmanifold = dirichlet_nonmanifold(uj, w.alpha);
      dirichlet_nonmanifold_adjoint(uj, w.alpha, w.lambda_dnm / static_cast<double>(n_u),
                                    adj.subspan(n_m));
      value += w.lambda_dnm * bd.dirichlet_nonmanifold;
    }
    if (alt_reg) {
      bd.regularizer = alt_energy(jets, w.regularizer);
      alt_energy_adjoint(jets, w.regularizer,
                         tau * w.lambda_gauss / static_cast<double>(n_pq), adj);
      value += tau * w.lambda_gauss * bd.regularizer;
    }
    return value;
  };
  net.objective_param_gradient(pq, pq_order, pq_objective, grad, threads);

  if (uses_near_surface(w.regularizer)) {
    const std::vector<Vec3> om = to_native(batch.near_surface, batch.projected, s);
    if (!om.empty()) {
      const bool use_dt = w.regularizer == Regularizer::gauss_dt;
      const DoubleTrough dt =
          (w.dt_a == 0.25) ? DoubleTrough() : DoubleTrough::with_valley_depth(w.dt_a);
      const JetObjective om_objective = [&](std::span<const Jet2> jets,
                                            std::span<JetAdjoint> adj) -> double {
        const GaussTermResult r = gauss_term(jets, use_dt, dt);
        bd.regularizer = r.value;
        if (r.used_count > 0)
          gauss_adjoint(jets, use_dt, dt,
                        tau * w.lambda_gauss / static_cast<double>(r.used_count), adj);
        return tau * w.lambda_gauss * r.value;
      };
      net.objective_param_gradient(om, 2, om_objective, grad, threads);
    }
  }

  bd.total = w.lambda_e * bd.eikonal + w.lambda_dm * bd.dirichlet_manifold +
             w.lambda_dnm * bd.dirichlet_nonmanifold + tau * w.lambda_gauss * bd.regularizer;
  return {bd, std::move(grad)};
}

LossBreakdown total_loss_eval(const FieldNetwork& net, const SampleBatch& batch,
                              const LossWeights& w, double tau, int threads) {
  const double s = net.input_scale();
  BatchJets jets;
  const int pq_order = needs_pq_hessian(w.regularizer) ? 2 : 1;
  auto eval_part = [&](std::span<const Vec3> pts, int order, std::vector<Jet2>& out) {
    out.resize(pts.size());
    if (pts.empty()) return;
    std::vector<Vec3> native(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) native[i] = s * pts[i];
    net.forward_jets_native(native, order, out, threads);
  };
  eval_part(batch.manifold, pq_order, jets.manifold);
  eval_part(batch.uniform, pq_order, jets.uniform);
  if (uses_near_surface(w.regularizer)) {
    eval_part(batch.near_surface, 2, jets.near_surface);
    eval_part(batch.projected, 2, jets.projected);
  }
  return total_loss(jets, w, tau);
}

namespace {

void append_log_row(std::ofstream& os, const LogRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.iteration,
                row.loss.tau, row.loss.eikonal, row.loss.dirichlet_manifold,
                row.loss.dirichlet_nonmanifold, row.loss.regularizer, row.loss.total);
  os << buf;
}

}  // namespace

FitResult fit(const PointCloud& cloud, const TrainConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  if (cloud.points.empty()) throw std::invalid_argument("fit: empty point cloud");
  if (cfg.knn_k >= static_cast<int>(cloud.points.size()))
    throw std::invalid_argument("fit: knn_k must be smaller than the cloud size");

  FieldNetwork net = opts.resume
                         ? opts.resume->net
                         : FieldNetwork(cfg.layer_sizes, cfg.omega0, cfg.input_scale, cfg.seed);
  AdamState adam(net.param_count());
  int start = 0;
  if (opts.resume && opts.resume->train) {
    const TrainState& ts = *opts.resume->train;
    if (ts.adam_m.size() != net.param_count())
      throw std::invalid_argument("fit: resume state does not match the network");
    adam.m = ts.adam_m;
    adam.v = ts.adam_v;
    adam.step = ts.adam_step;
    start = static_cast<int>(ts.iteration);
  }
  if (start >= cfg.iterations)
    throw std::invalid_argument("fit: resume checkpoint is already past the iteration budget");

  const NeighborScales scales = knn_scales(cloud, cfg.knn_k);

  std::ofstream log_file;
  if (!opts.log_path.empty()) {
    log_file.open(opts.log_path, start == 0 ? std::ios::trunc : std::ios::app);
    if (!log_file) throw std::runtime_error("fit: cannot open log file " + opts.log_path.string());
    if (start == 0) log_file << "iteration,tau,eikonal,dm,dnm,reg,total\n";
  }

  auto save_state = [&](int next_iteration) {
    if (opts.checkpoint_path.empty()) return;
    TrainState ts;
    ts.iteration = static_cast<std::uint64_t>(next_iteration);
    ts.adam_step = adam.step;
    ts.adam_m = adam.m;
    ts.adam_v = adam.v;
    save_checkpoint(opts.checkpoint_path, net, opts.transform, &ts);
  };

  FitResult result{std::move(net), {}};
  result.log.reserve(cfg.iterations - start);
  for (int it = start; it < cfg.iterations; ++it) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(it)));
    const SampleBatch batch =
        make_batch(cloud, scales, cfg.sampling, result.net, rng, cfg.threads);
    const double tau = annealing_tau(it, cfg.iterations, cfg.annealing_mode);
    LossBreakdown bd;
    std::vector<double> grad;
    try {
      std::tie(bd, grad) = total_loss_with_gradient(result.net, batch, cfg.weights, tau,
                                                    cfg.threads);
      adam_step(result.net.params(), grad, adam, cfg.learning_rate, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps);
    } catch (const NonFiniteLossError& e) {
      throw TrainingError(it, e.what());
    } catch (const std::runtime_error& e) {
      throw TrainingError(it, e.what());
    }
    result.log.push_back({it, bd});
    if (log_file) append_log_row(log_file, result.log.back());
    if (opts.progress_every > 0 && (it % opts.progress_every == 0 || it + 1 == cfg.iterations))
      std::fprintf(stderr, "iter %6d  loss %.6g  tau %.3g\n", it, bd.total, tau);
    if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 &&
        it + 1 < cfg.iterations)
      save_state(it + 1);
  }
  save_state(cfg.iterations);
  return result;
}

}  // namespace curvrec
