#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "curvrec/geometry.hpp"

namespace curvrec {

/// Adjoint seeds of a scalar objective with respect to one jet. The hessian
/// seed is read entrywise over the full 3x3 matrix, so a symmetric objective
/// must populate both off-diagonal slots.
struct JetAdjoint {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

/// Scalar objective over a list of jets. Fills one adjoint per jet and
/// returns the objective value.
using JetObjective = std::function<double(std::span<const Jet2>, std::span<JetAdjoint>)>;

/// Raised when an objective evaluates to NaN or infinity.
struct NonFiniteLossError : std::runtime_error {
  explicit NonFiniteLossError(double v)
      : std::runtime_error("objective evaluated to a non-finite value"), loss(v) {}
  double loss;
};

/// Sine-activated MLP representing a scalar field over R^3. World coordinates
/// are multiplied by input_scale before the first layer; all sine layers use
/// the omega0 frequency multiplier and the last layer is linear.
///
/// Spatial derivatives are propagated forward as second-order jets in the
/// three input dimensions; parameter gradients of jet-based objectives are
/// accumulated by a reverse pass over the same computation.
class FieldNetwork final : public Field {
 public:
  /// Draws parameters with the standard scheme for this architecture:
  /// first layer U(-1/in, 1/in), later layers U(-sqrt(6/in)/omega0,
  /// sqrt(6/in)/omega0), zero biases. layer_sizes must start at 3, end at 1,
  /// and contain at least one hidden layer of width >= 2.
  FieldNetwork(std::vector<int> layer_sizes, double omega0, double input_scale,
               std::uint64_t seed);

  static FieldNetwork from_params(std::vector<int> layer_sizes, double omega0,
                                  double input_scale, std::vector<double> params);

  // Field interface (world frame; chain rule through input_scale applied).
  double eval(const Vec3& x) const override;
  Jet2 eval_jet(const Vec3& x) const override;
  double frame_scale() const override { return input_scale_; }

  std::vector<Jet2> eval_jet_batch(std::span<const Vec3> xs, int threads = 0) const;
  void eval_jets1_many(std::span<const Vec3> xs, std::span<Jet2> out,
                       int threads = 0) const override;

  /// Jets with respect to the native coordinates u = input_scale * x_world.
  /// order 1 fills value and gradient, order 2 also the hessian.
  void forward_jets_native(std::span<const Vec3> us, int order, std::span<Jet2> out,
                           int threads = 0) const;
  Jet2 eval_jet_native(const Vec3& u) const;
  double eval_native(const Vec3& u) const;

  /// Evaluates jets for `us` (native frame), hands them to `objective`, then
  /// accumulates the objective's gradient with respect to every parameter
  /// into `grad`. The reduction order is a pure function of (|us|, threads).
  /// Throws NonFiniteLossError if the objective value is not finite.
  double objective_param_gradient(std::span<const Vec3> us, int order,
                                  const JetObjective& objective, std::span<double> grad,
                                  int threads = 0) const;

  /// Canonical flat parameter vector: per layer, the weight matrix in
  /// column-major order followed by the bias vector.
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  double omega0() const { return omega0_; }
  double input_scale() const { return input_scale_; }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }

 private:
  struct Uninitialized {};
  FieldNetwork(std::vector<int> sizes, double omega0, double input_scale, Uninitialized);

  struct Workspace;
  void forward_chunk(std::span<const Vec3> us, int order, Workspace& ws) const;
  void backward_chunk(std::span<const Vec3> us, int order, std::span<const JetAdjoint> adj,
                      Workspace& ws, std::span<double> grad) const;
  void extract_jets(const Workspace& ws, int n, int order, Jet2* out) const;

  std::vector<int> sizes_;
  double omega0_ = 30.0;
  double input_scale_ = 2.0;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;
};

/// Optimizer state carried alongside a checkpoint so training can resume.
struct TrainState {
  std::uint64_t iteration = 0;
  std::uint64_t adam_step = 0;
  std::vector<double> adam_m, adam_v;
};

struct Checkpoint {
  FieldNetwork net;
  bool has_transform = false;
  SimilarityTransform transform;  // original -> normalized coordinates
  std::optional<TrainState> train;
};

/// Binary checkpoint with a format-version header; round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const FieldNetwork& net,
                     const SimilarityTransform* transform = nullptr,
                     const TrainState* train = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace curvrec
