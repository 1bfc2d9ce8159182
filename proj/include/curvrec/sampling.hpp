#pragma once

#include <span>
#include <vector>

#include "curvrec/geometry.hpp"
#include "curvrec/rng.hpp"

namespace curvrec {

struct PointCloud {
  std::vector<Vec3> points;
  /// Optional unit normals, carried only for ground-truth evaluation; the
  /// training loss never reads them.
  std::vector<Vec3> normals;

  bool has_normals() const { return !normals.empty(); }
};

/// Per-point Gaussian radius: distance from each point to its k-th nearest
/// neighbor within the cloud.
struct NeighborScales {
  std::vector<double> sigma;
};

struct SamplingConfig {
  int batch_manifold = 10000;
  int batch_uniform = 15000;
  int batch_omega = 15000;
  bool dynamic_sampling = true;
};

struct SampleBatch {
  std::vector<Vec3> manifold;      // subset of the input cloud
  std::vector<Vec3> uniform;       // fresh draws from the unit box
  std::vector<Vec3> near_surface;  // Gaussian perturbations of cloud points
  std::vector<Vec3> projected;     // uniform points projected to the zero set
  int projection_guarded = 0;
};

/// Exact k-th nearest neighbor distances (self excluded). Rejects k outside
/// [1, |cloud|-1] and clouds containing exact duplicates (sigma would be 0).
NeighborScales knn_scales(const PointCloud& cloud, int k);

/// `count` points p_i + sigma_i * g with g a standard 3D Gaussian draw; the
/// source index cycles over the cloud.
std::vector<Vec3> sample_omega(const PointCloud& cloud, const NeighborScales& scales, int count,
                               Rng& rng);

/// `count` i.i.d. points uniform over [-0.5, 0.5]^3.
std::vector<Vec3> sample_uniform(int count, Rng& rng);

struct ProjectionResult {
  std::vector<Vec3> points;
  int guarded_count = 0;
};

/// One projection step x' = x - (grad/||grad||) * f(x) evaluated in the
/// field's native frame. Points with a native gradient norm below eps pass
/// through unchanged and are counted.
ProjectionResult project_to_surface(const Field& field, std::span<const Vec3> points,
                                    double eps = 1e-8, int threads = 0);

/// Draws all per-iteration point sets. The manifold part samples
/// min(|cloud|, batch_manifold) points without replacement; `projected` is
/// filled from the uniform set when dynamic sampling is enabled.
SampleBatch make_batch(const PointCloud& cloud, const NeighborScales& scales,
                       const SamplingConfig& cfg, const Field& field, Rng& rng,
                       int threads = 0);

}  // namespace curvrec
