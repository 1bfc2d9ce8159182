#include "curvrec/losses.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace curvrec {
namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_nonempty(std::span<const Jet2> jets, const char* what) {
  if (jets.empty()) throw std::invalid_argument(std::string(what) + " needs a non-empty jet list");
}

}  // namespace

double eikonal_term(std::span<const Jet2> jets) {
  require_nonempty(jets, "eikonal_term");
  double sum = 0.0;
  for (const Jet2& j : jets) sum += std::abs(1.0 - j.gradient.norm());
  return sum / static_cast<double>(jets.size());
}

void eikonal_adjoint(std::span<const Jet2> jets, double coeff, std::span<JetAdjoint> adj) {
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const double r = jets[i].gradient.norm();
    if (r == 0.0) continue;
    adj[i].gradient += (coeff * sgn(r - 1.0) / r) * jets[i].gradient;
  }
}

double dirichlet_manifold(std::span<const Jet2> jets) {
  require_nonempty(jets, "dirichlet_manifold");
  double sum = 0.0;
  for (const Jet2& j : jets) sum += std::abs(j.value);
  return sum / static_cast<double>(jets.size());
}

void dirichlet_manifold_adjoint(std::span<const Jet2> jets, double coeff,
                                std::span<JetAdjoint> adj) {
  for (std::size_t i = 0; i < jets.size(); ++i) adj[i].value += coeff * sgn(jets[i].value);
}

double dirichlet_nonmanifold(std::span<const Jet2> jets, double alpha) {
  require_nonempty(jets, "dirichlet_nonmanifold");
  double sum = 0.0;
  for (const Jet2& j : jets) sum += std::exp(-alpha * std::abs(j.value));
  return sum / static_cast<double>(jets.size());
}

void dirichlet_nonmanifold_adjoint(std::span<const Jet2> jets, double alpha, double coeff,
                                   std::span<JetAdjoint> adj) {
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const double v = jets[i].value;
    adj[i].value += coeff * (-alpha * sgn(v) * std::exp(-alpha * std::abs(v)));
  }
}

CurvatureResult gaussian_curvature(const Jet2& jet, double eps) {
  CurvatureResult r;
  const double gn = jet.gradient.norm();
  if (gn < eps) {
    r.guarded = true;
    return r;
  }
  Eigen::Matrix4d bordered = Eigen::Matrix4d::Zero();
  bordered.topLeftCorner<3, 3>() = jet.hessian;
  bordered.topRightCorner<3, 1>() = jet.gradient;
  bordered.bottomLeftCorner<1, 3>() = jet.gradient.transpose();
  const double g2 = gn * gn;
  r.k = -bordered.determinant() / (g2 * g2);
  return r;
}

void curvature_adjoint(const Jet2& jet, double coeff, JetAdjoint& adj, double eps) {
  const Vec3& g = jet.gradient;
  const Mat3& H = jet.hessian;
  const double g2 = g.squaredNorm();
  if (std::sqrt(g2) < eps) return;
  const double g4 = g2 * g2;
  const double trH = H.trace();
  const Mat3 H2 = H * H;
  const double sigma2 = 0.5 * (trH * trH - H2.trace());
  const Mat3 adjugate = H2 - trH * H + sigma2 * Mat3::Identity();
  const double numer = g.dot(adjugate * g);  // equals -det of the bordered matrix
  const Vec3 Hg = H * g;

  const Vec3 dk_dg = (2.0 / g4) * (adjugate * g) - (4.0 * numer / (g4 * g2)) * g;
  Mat3 dN_dH = g * Hg.transpose() + Hg * g.transpose();
  dN_dH -= g.dot(Hg) * Mat3::Identity();
  dN_dH -= trH * (g * g.transpose());
  dN_dH += g2 * (trH * Mat3::Identity() - H);
  adj.gradient += coeff * dk_dg;
  adj.hessian += (coeff / g4) * dN_dH;
}

namespace {

// Coefficients of the quartic through the interpolation conditions at pi/4
// and pi/2; for a = 1/4 they have closed forms.
std::array<double, 4> default_dt_coefficients() {
  const double pi = M_PI;
  const double pi2 = pi * pi;
  return {3.0 / pi, (16.0 * pi - 29.0) / pi2, -(64.0 * pi - 88.0) / (pi2 * pi),
          (64.0 * pi - 80.0) / (pi2 * pi2)};
}

}  // namespace

DoubleTrough::DoubleTrough() : c_(default_dt_coefficients()) {}

DoubleTrough DoubleTrough::with_valley_depth(double a) {
  if (!(a > 0.0 && a < M_PI / 4.0))
    throw std::invalid_argument("double-trough valley depth must lie in (0, pi/4)");
  const double t1 = M_PI / 4.0, t2 = M_PI / 2.0;
  Eigen::Matrix4d A;
  Eigen::Vector4d rhs;
  A << t1, t1 * t1, t1 * t1 * t1, t1 * t1 * t1 * t1,            //
      1.0, 2.0 * t1, 3.0 * t1 * t1, 4.0 * t1 * t1 * t1,         //
      t2, t2 * t2, t2 * t2 * t2, t2 * t2 * t2 * t2,             //
      1.0, 2.0 * t2, 3.0 * t2 * t2, 4.0 * t2 * t2 * t2;
  rhs << t1, 0.0, a, 0.0;
  const Eigen::Vector4d c = A.fullPivLu().solve(rhs);
  DoubleTrough dt;
  dt.c_ = {c[0], c[1], c[2], c[3]};
  return dt;
}

double double_trough(double t) { return DoubleTrough()(t); }

GaussTermResult gauss_term(std::span<const Jet2> jets, bool use_dt, const DoubleTrough& dt) {
  require_nonempty(jets, "gauss_term");
  GaussTermResult r;
  double sum = 0.0;
  for (const Jet2& j : jets) {
    const CurvatureResult c = gaussian_curvature(j);
    if (c.guarded) {
      ++r.guarded_count;
      continue;
    }
    ++r.used_count;
    const double t = std::abs(c.k);
    sum += use_dt ? dt(t) : t;
  }
  if (r.used_count > 0) r.value = sum / r.used_count;
  return r;
}

void gauss_adjoint(std::span<const Jet2> jets, bool use_dt, const DoubleTrough& dt, double coeff,
                   std::span<JetAdjoint> adj) {
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const CurvatureResult c = gaussian_curvature(jets[i]);
    if (c.guarded) continue;
    const double dk = use_dt ? dt.derivative(std::abs(c.k)) * sgn(c.k) : sgn(c.k);
    curvature_adjoint(jets[i], coeff * dk, adj[i]);
  }
}

double alt_energy(std::span<const Jet2> jets, Regularizer kind) {
  require_nonempty(jets, "alt_energy");
  double sum = 0.0;
  switch (kind) {
    case Regularizer::dirichlet_energy:
      for (const Jet2& j : jets) sum += 0.5 * j.gradient.squaredNorm();
      break;
    case Regularizer::hessian_l2:
      for (const Jet2& j : jets) sum += j.hessian.squaredNorm();
      break;
    case Regularizer::hessian_l1:
      for (const Jet2& j : jets) sum += j.hessian.cwiseAbs().sum();
      break;
    default:
      throw std::invalid_argument("alt_energy expects a smoothness-energy kind");
  }
  return sum / static_cast<double>(jets.size());
}

void alt_energy_adjoint(std::span<const Jet2> jets, Regularizer kind, double coeff,
                        std::span<JetAdjoint> adj) {
  switch (kind) {
    case Regularizer::dirichlet_energy:
      for (std::size_t i = 0; i < jets.size(); ++i) adj[i].gradient += coeff * jets[i].gradient;
      break;
    case Regularizer::hessian_l2:
      for (std::size_t i = 0; i < jets.size(); ++i)
        adj[i].hessian += (2.0 * coeff) * jets[i].hessian;
      break;
    case Regularizer::hessian_l1:
      for (std::size_t i = 0; i < jets.size(); ++i)
        adj[i].hessian += coeff * jets[i].hessian.unaryExpr([](double h) { return sgn(h); });
      break;
    default:
      throw std::invalid_argument("alt_energy expects a smoothness-energy kind");
  }
}

double annealing_tau(int iteration, int total_iterations, AnnealingMode mode) {
  if (mode == AnnealingMode::constant) return 1.0;
  if (mode == AnnealingMode::off) return 0.0;
  if (total_iterations <= 0) throw std::invalid_argument("total_iterations must be positive");
  if (iteration < 0 || iteration > total_iterations)
    throw std::invalid_argument("iteration outside [0, total_iterations]");
  const double u = static_cast<double>(iteration) / static_cast<double>(total_iterations);
  if (u <= 0.2) return 1.0;
  if (u <= 0.5) {
    const double s = (u - 0.2) / 0.3;
    return (1.0 - s) * 1.0 + s * 1e-4;
  }
  const double s = (u - 0.5) / 0.5;
  return (1.0 - s) * 1e-4;
}

LossBreakdown total_loss(const BatchJets& jets, const LossWeights& w, double tau) {
  LossBreakdown out;
  out.tau = tau;

  double eik_sum = 0.0;
  for (const Jet2& j : jets.manifold) eik_sum += std::abs(1.0 - j.gradient.norm());
  for (const Jet2& j : jets.uniform) eik_sum += std::abs(1.0 - j.gradient.norm());
  const std::size_t n_pq = jets.manifold.size() + jets.uniform.size();
  if (n_pq == 0) throw std::invalid_argument("total_loss needs manifold or uniform jets");
  out.eikonal = eik_sum / static_cast<double>(n_pq);
  out.dirichlet_manifold = jets.manifold.empty() ? 0.0 : dirichlet_manifold(jets.manifold);
  out.dirichlet_nonmanifold =
      jets.uniform.empty() ? 0.0 : dirichlet_nonmanifold(jets.uniform, w.alpha);

  switch (w.regularizer) {
    case Regularizer::gauss_dt:
    case Regularizer::gauss_plain: {
      const bool use_dt = w.regularizer == Regularizer::gauss_dt;
      const DoubleTrough dt = (w.dt_a == 0.25) ? DoubleTrough()
                                               : DoubleTrough::with_valley_depth(w.dt_a);
      double acc = 0.0;
      int used = 0, guarded = 0;
      auto fold = [&](std::span<const Jet2> part) {
        if (part.empty()) return;
        const GaussTermResult r = gauss_term(part, use_dt, dt);
        acc += r.value * r.used_count;
        used += r.used_count;
        guarded += r.guarded_count;
      };
      fold(jets.near_surface);
      fold(jets.projected);
      out.regularizer = used > 0 ? acc / used : 0.0;
      break;
    }
    case Regularizer::dirichlet_energy:
    case Regularizer::hessian_l2:
    case Regularizer::hessian_l1: {
      double acc = 0.0;
      if (!jets.manifold.empty()) acc += alt_energy(jets.manifold, w.regularizer) *
                                         static_cast<double>(jets.manifold.size());
      if (!jets.uniform.empty()) acc += alt_energy(jets.uniform, w.regularizer) *
                                        static_cast<double>(jets.uniform.size());
      out.regularizer = acc / static_cast<double>(n_pq);
      break;
    }
    case Regularizer::none:
      out.regularizer = 0.0;
      break;
  }

  out.total = w.lambda_e * out.eikonal + w.lambda_dm * out.dirichlet_manifold +
              w.lambda_dnm * out.dirichlet_nonmanifold + tau * w.lambda_gauss * out.regularizer;
  return out;
}

}  // namespace curvrec
