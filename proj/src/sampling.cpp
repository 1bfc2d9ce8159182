#include "curvrec/sampling.hpp"

#include <numeric>
#include <stdexcept>

#include "curvrec/kdtree.hpp"

namespace curvrec {

NeighborScales knn_scales(const PointCloud& cloud, int k) {
  const int n = static_cast<int>(cloud.points.size());
  if (k < 1) throw std::invalid_argument("knn_scales: k must be at least 1");
  if (k >= n) throw std::invalid_argument("knn_scales: k must be smaller than the cloud size");
  const KdTree tree(cloud.points);
  NeighborScales scales;
  scales.sigma.resize(n);
  for (int i = 0; i < n; ++i) {
    const double d = tree.kth_distance(cloud.points[i], k, i);
    if (d <= 0.0)
      throw std::runtime_error("knn_scales: duplicate points give a zero neighbor distance");
    scales.sigma[i] = d;
  }
  return scales;
}

std::vector<Vec3> sample_omega(const PointCloud& cloud, const NeighborScales& scales, int count,
                               Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_omega: count must be at least 1");
  if (scales.sigma.size() != cloud.points.size())
    throw std::invalid_argument("sample_omega: scales do not match the cloud");
  const int n = static_cast<int>(cloud.points.size());
  std::vector<Vec3> out(count);
  for (int j = 0; j < count; ++j) {
    const int i = j % n;
    const Vec3 g(rng.gaussian(), rng.gaussian(), rng.gaussian());
    out[j] = cloud.points[i] + scales.sigma[i] * g;
  }
  return out;
}

std::vector<Vec3> sample_uniform(int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_uniform: count must be at least 1");
  std::vector<Vec3> out(count);
  for (auto& p : out) {
    p[0] = rng.uniform(-0.5, 0.5);
    p[1] = rng.uniform(-0.5, 0.5);
    p[2] = rng.uniform(-0.5, 0.5);
  }
  return out;
}

ProjectionResult project_to_surface(const Field& field, std::span<const Vec3> points,
                                    double eps, int threads) {
  ProjectionResult out;
  out.points.resize(points.size());
  const double s = field.frame_scale();
  std::vector<Jet2> jets(points.size());
  field.eval_jets1_many(points, jets, threads);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& x = points[i];
    const Jet2& jet = jets[i];
    const double native_norm = jet.gradient.norm() / s;
    if (native_norm < eps) {
      ++out.guarded_count;
      out.points[i] = x;
      continue;
    }
    out.points[i] = x - jet.gradient.normalized() * (jet.value / s);
  }
  return out;
}

SampleBatch make_batch(const PointCloud& cloud, const NeighborScales& scales,
                       const SamplingConfig& cfg, const Field& field, Rng& rng, int threads) {
  SampleBatch batch;
  const int n = static_cast<int>(cloud.points.size());
  const int m = std::min(n, cfg.batch_manifold);

  // Partial Fisher-Yates: the first m slots become a without-replacement draw.
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  batch.manifold.resize(m);
  for (int i = 0; i < m; ++i) batch.manifold[i] = cloud.points[idx[i]];

  batch.uniform = sample_uniform(cfg.batch_uniform, rng);
  batch.near_surface = sample_omega(cloud, scales, cfg.batch_omega, rng);
  if (cfg.dynamic_sampling) {
    ProjectionResult proj = project_to_surface(field, batch.uniform, 1e-8, threads);
    batch.projected = std::move(proj.points);
    batch.projection_guarded = proj.guarded_count;
  }
  return batch;
}

}  // namespace curvrec
