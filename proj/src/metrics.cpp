#include "curvrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curvrec/kdtree.hpp"
#include "curvrec/parallel.hpp"

namespace curvrec {
namespace {

void require_samples(const SurfaceSamples& s, const char* what) {
  if (s.points.empty()) throw std::invalid_argument(std::string(what) + ": empty sample set");
}

// Mean nearest-neighbor distance from every point of `from` into `tree`.
double mean_nn(const std::vector<Vec3>& from, const KdTree& tree, Metric metric, int threads) {
  const int n = static_cast<int>(from.size());
  std::vector<double> dist(n);
  const int block = 2048;
  const int n_blocks = (n + block - 1) / block;
  parallel_blocks(n_blocks, resolve_threads(threads), [&](int b, int) {
    const int lo = b * block, hi = std::min(lo + block, n);
    for (int i = lo; i < hi; ++i) dist[i] = tree.nearest(from[i], metric).distance;
  });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / n;
}

}  // namespace

SurfaceSamples sample_mesh(const TriangleMesh& mesh, int count, Rng& rng) {
  if (mesh.triangles.empty()) throw std::invalid_argument("sample_mesh: empty mesh");
  if (count < 1) throw std::invalid_argument("sample_mesh: count must be at least 1");

  std::vector<double> cumulative(mesh.triangles.size());
  std::vector<Vec3> normals(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3 ab = mesh.vertices[tri[1]] - a;
    const Vec3 ac = mesh.vertices[tri[2]] - a;
    const Vec3 cross = ab.cross(ac);
    const double area = 0.5 * cross.norm();
    total += area;
    cumulative[t] = total;
    normals[t] = area > 0.0 ? Vec3(cross.normalized()) : Vec3::Zero();
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_mesh: mesh has zero total area");

  SurfaceSamples out;
  out.points.resize(count);
  out.normals.resize(count);
  for (int i = 0; i < count; ++i) {
    const double r = rng.uniform() * total;
    const std::size_t t =
        std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin();
    const auto& tri = mesh.triangles[std::min(t, mesh.triangles.size() - 1)];
    // uniform barycentric draw
    const double su = std::sqrt(rng.uniform());
    const double v = rng.uniform();
    const double w0 = 1.0 - su, w1 = su * (1.0 - v), w2 = su * v;
    out.points[i] = w0 * mesh.vertices[tri[0]] + w1 * mesh.vertices[tri[1]] +
                    w2 * mesh.vertices[tri[2]];
    out.normals[i] = normals[std::min(t, mesh.triangles.size() - 1)];
  }
  return out;
}

double chamfer_l1(const SurfaceSamples& a, const SurfaceSamples& b, int threads) {
  require_samples(a, "chamfer_l1");
  require_samples(b, "chamfer_l1");
  const KdTree tree_a(a.points), tree_b(b.points);
  const double ab = mean_nn(a.points, tree_b, Metric::l1, threads);
  const double ba = mean_nn(b.points, tree_a, Metric::l1, threads);
  return 1000.0 * 0.5 * (ab + ba);
}

double f1_score(const SurfaceSamples& a, const SurfaceSamples& b, double threshold, int threads) {
  require_samples(a, "f1_score");
  require_samples(b, "f1_score");
  const KdTree tree_a(a.points), tree_b(b.points);
  auto fraction_within = [&](const std::vector<Vec3>& from, const KdTree& tree) {
    const int n = static_cast<int>(from.size());
    std::vector<int> hits(n, 0);
    const int block = 2048;
    parallel_blocks((n + block - 1) / block, resolve_threads(threads), [&](int blk, int) {
      const int lo = blk * block, hi = std::min(lo + block, n);
      for (int i = lo; i < hi; ++i)
        hits[i] = tree.nearest(from[i], Metric::l2).distance <= threshold ? 1 : 0;
    });
    long total = 0;
    for (int h : hits) total += h;
    return static_cast<double>(total) / n;
  };
  const double precision = fraction_within(a.points, tree_b);
  const double recall = fraction_within(b.points, tree_a);
  if (precision + recall == 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double normal_consistency(const SurfaceSamples& a, const SurfaceSamples& b, int threads) {
  require_samples(a, "normal_consistency");
  require_samples(b, "normal_consistency");
  if (a.normals.size() != a.points.size() || b.normals.size() != b.points.size())
    throw std::invalid_argument("normal_consistency: both sample sets need normals");
  const KdTree tree_a(a.points), tree_b(b.points);
  auto mean_abs_cos = [&](const SurfaceSamples& from, const SurfaceSamples& to,
                          const KdTree& tree) {
    const int n = static_cast<int>(from.points.size());
    std::vector<double> cosines(n);
    const int block = 2048;
    parallel_blocks((n + block - 1) / block, resolve_threads(threads), [&](int blk, int) {
      const int lo = blk * block, hi = std::min(lo + block, n);
      for (int i = lo; i < hi; ++i) {
        const int j = tree.nearest(from.points[i], Metric::l2).index;
        cosines[i] = std::abs(from.normals[i].dot(to.normals[j]));
      }
    });
    double sum = 0.0;
    for (double c : cosines) sum += c;
    return sum / n;
  };
  return 100.0 * 0.5 * (mean_abs_cos(a, b, tree_b) + mean_abs_cos(b, a, tree_a));
}

double hausdorff(const SurfaceSamples& a, const SurfaceSamples& b, int threads) {
  require_samples(a, "hausdorff");
  require_samples(b, "hausdorff");
  const KdTree tree_a(a.points), tree_b(b.points);
  auto directed_max = [&](const std::vector<Vec3>& from, const KdTree& tree) {
    const int n = static_cast<int>(from.size());
    std::vector<double> dist(n);
    const int block = 2048;
    parallel_blocks((n + block - 1) / block, resolve_threads(threads), [&](int blk, int) {
      const int lo = blk * block, hi = std::min(lo + block, n);
      for (int i = lo; i < hi; ++i) dist[i] = tree.nearest(from[i], Metric::l2).distance;
    });
    return *std::max_element(dist.begin(), dist.end());
  };
  return std::max(directed_max(a.points, tree_b), directed_max(b.points, tree_a));
}

MetricsReport evaluate_samples(const SurfaceSamples& recon, const SurfaceSamples& truth,
                               double f1_threshold, int threads) {
  MetricsReport report;
  report.nc = normal_consistency(recon, truth, threads);
  report.cd = chamfer_l1(recon, truth, threads);
  report.f1 = f1_score(recon, truth, f1_threshold, threads);
  report.hausdorff = hausdorff(recon, truth, threads);
  report.sample_count = recon.points.size();
  return report;
}

}  // namespace curvrec
