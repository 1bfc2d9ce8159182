#pragma once

#include <array>
#include <span>
#include <vector>

#include "curvrec/field_network.hpp"
#include "curvrec/geometry.hpp"

namespace curvrec {

enum class Regularizer { gauss_dt, gauss_plain, dirichlet_energy, hessian_l2, hessian_l1, none };

enum class AnnealingMode { staged, constant, off };

struct LossWeights {
  double lambda_e = 50.0;
  double lambda_dm = 7000.0;
  double lambda_dnm = 600.0;
  double lambda_gauss = 10.0;
  double alpha = 100.0;   // exponent of the off-surface repulsion term
  double dt_a = 0.25;     // valley depth of the double-trough penalty
  Regularizer regularizer = Regularizer::gauss_dt;
};

struct LossBreakdown {
  double eikonal = 0.0;
  double dirichlet_manifold = 0.0;
  double dirichlet_nonmanifold = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
  double tau = 1.0;
};

/// Mean of |1 - ||grad||| over the jets (gradients in the field's native frame).
double eikonal_term(std::span<const Jet2> jets);

/// Mean of |value|.
double dirichlet_manifold(std::span<const Jet2> jets);

/// Mean of exp(-alpha * |value|).
double dirichlet_nonmanifold(std::span<const Jet2> jets, double alpha);

/// Gaussian curvature of the implicit surface through a point, computed from
/// the bordered determinant
///
///   k = -det [ H   g ]  /  ||g||^4
///            [ g^T 0 ]
///
/// Points with ||g|| below eps are flagged instead of evaluated.
struct CurvatureResult {
  double k = 0.0;
  bool guarded = false;
};
CurvatureResult gaussian_curvature(const Jet2& jet, double eps = 1e-8);

/// Quartic with a zero at t=0, a peak at t=pi/4 of height pi/4, and a second
/// trough at t=pi/2 of depth `a`, so near-right-angle curvature magnitudes are
/// penalized almost as little as flat ones.
class DoubleTrough {
 public:
  DoubleTrough();  // valley depth 1/4, closed-form coefficients
  static DoubleTrough with_valley_depth(double a);

  double operator()(double t) const { return t * (c_[0] + t * (c_[1] + t * (c_[2] + t * c_[3]))); }
  double derivative(double t) const {
    return c_[0] + t * (2.0 * c_[1] + t * (3.0 * c_[2] + t * 4.0 * c_[3]));
  }
  const std::array<double, 4>& coefficients() const { return c_; }  // c1..c4

 private:
  std::array<double, 4> c_{};
};

double double_trough(double t);

/// Mean curvature penalty over near-surface jets: DT(|k|) when use_dt, else
/// |k|. Guarded points are excluded from the mean and counted.
struct GaussTermResult {
  double value = 0.0;
  int guarded_count = 0;
  int used_count = 0;
};
GaussTermResult gauss_term(std::span<const Jet2> jets, bool use_dt,
                           const DoubleTrough& dt = DoubleTrough());

/// Alternative smoothness energies: mean of 0.5*||g||^2, ||H||_F^2, or the
/// entrywise L1 norm of H.
double alt_energy(std::span<const Jet2> jets, Regularizer kind);

/// Annealing factor: 1 on the first 20% of iterations, linear to 1e-4 at 50%,
/// then linear to 0 at the end. Endpoints are exact.
double annealing_tau(int iteration, int total_iterations, AnnealingMode mode);

/// Per-iteration jets grouped the way the loss consumes them.
struct BatchJets {
  std::vector<Jet2> manifold;      // on-surface batch
  std::vector<Jet2> uniform;       // off-surface box samples
  std::vector<Jet2> near_surface;  // Gaussian shell samples
  std::vector<Jet2> projected;     // dynamically projected samples (may be empty)
};

/// total = lambda_e*E + lambda_dm*DM + lambda_dnm*DNM + tau*lambda_gauss*REG,
/// with E over manifold+uniform, REG over near_surface+projected for the
/// curvature kinds and over manifold+uniform for the smoothness kinds.
LossBreakdown total_loss(const BatchJets& jets, const LossWeights& w, double tau);

// Adjoint accumulators used by the training loop: each adds
// coeff * d(pointwise term)/d(jet) into the matching adjoint entry, where the
// caller folds the loss weight and the 1/N of the mean into coeff.
void eikonal_adjoint(std::span<const Jet2> jets, double coeff, std::span<JetAdjoint> adj);
void dirichlet_manifold_adjoint(std::span<const Jet2> jets, double coeff,
                                std::span<JetAdjoint> adj);
void dirichlet_nonmanifold_adjoint(std::span<const Jet2> jets, double alpha, double coeff,
                                   std::span<JetAdjoint> adj);
void alt_energy_adjoint(std::span<const Jet2> jets, Regularizer kind, double coeff,
                        std::span<JetAdjoint> adj);
/// coeff here multiplies d(DT(|k|))/d(jet) (or d|k|/d(jet)); the caller is
/// responsible for dividing by the number of unguarded points.
void gauss_adjoint(std::span<const Jet2> jets, bool use_dt, const DoubleTrough& dt, double coeff,
                   std::span<JetAdjoint> adj);

/// d(k)/d(gradient), d(k)/d(hessian) scaled by `coeff`, added into adj.
void curvature_adjoint(const Jet2& jet, double coeff, JetAdjoint& adj, double eps = 1e-8);

}  // namespace curvrec
