#pragma once

#include <vector>

#include "curvrec/meshing.hpp"
#include "curvrec/rng.hpp"

namespace curvrec {

/// Area-weighted point samples of a surface with matching unit normals.
struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

struct MetricsReport {
  double nc = 0.0;         // normal consistency, x100
  double cd = 0.0;         // L1 chamfer distance, x1000
  double f1 = 0.0;         // F1 at the distance threshold, x100
  double hausdorff = 0.0;  // symmetric Hausdorff distance
  std::size_t sample_count = 0;
};

/// Points drawn with probability proportional to triangle area; each sample
/// carries the normal of its source triangle. Rejects zero-area meshes.
SurfaceSamples sample_mesh(const TriangleMesh& mesh, int count, Rng& rng);

/// 1000 * 0.5 * (mean_a min_b |a-b|_1 + mean_b min_a |a-b|_1), exact
/// nearest neighbors under the L1 metric.
double chamfer_l1(const SurfaceSamples& a, const SurfaceSamples& b, int threads = 0);

/// 100 * harmonic mean of precision and recall at the Euclidean threshold.
double f1_score(const SurfaceSamples& a, const SurfaceSamples& b, double threshold = 5e-3,
                int threads = 0);

/// 100 * mean absolute cosine between normals at Euclidean nearest neighbors,
/// averaged over both directions.
double normal_consistency(const SurfaceSamples& a, const SurfaceSamples& b, int threads = 0);

/// Max over both directed max-min Euclidean distances.
double hausdorff(const SurfaceSamples& a, const SurfaceSamples& b, int threads = 0);

MetricsReport evaluate_samples(const SurfaceSamples& recon, const SurfaceSamples& truth,
                               double f1_threshold = 5e-3, int threads = 0);

}  // namespace curvrec
