#include "curvrec/fixtures.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "curvrec/metrics.hpp"

namespace curvrec {
namespace {

constexpr double kSphereRadius = 0.4;
constexpr double kCubeHalf = 0.4;
constexpr double kCylRadius = 0.3;
constexpr double kCylHalfHeight = 0.35;
constexpr double kHoleRadius = 0.2;
constexpr int kSegments = 128;

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_circle_distance(const Vec3& p, const Vec3& center, double radius, const Vec3& axis) {
  const Vec3 v = p - center;
  const double h = axis.dot(v);
  const double r = (v - h * axis).norm();
  return std::hypot(r - radius, h);
}

void add_quad(TriangleMesh& mesh, Vec3 a, Vec3 b, Vec3 c, Vec3 d, const Vec3& outward) {
  if ((b - a).cross(c - a).dot(outward) < 0.0) std::swap(b, d);
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back(a);
  mesh.vertices.push_back(b);
  mesh.vertices.push_back(c);
  mesh.vertices.push_back(d);
  mesh.triangles.push_back({base, base + 1, base + 2});
  mesh.triangles.push_back({base, base + 2, base + 3});
}

TriangleMesh icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v = radius * v.normalized();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},   {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back(radius * (0.5 * (verts[a] + verts[b])).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriangleMesh mesh;
  mesh.vertices = std::move(verts);
  mesh.triangles = std::move(faces);
  return mesh;
}

TriangleMesh cube_mesh() {
  TriangleMesh m;
  const double h = kCubeHalf;
  add_quad(m, {-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h}, {0, 0, -1});
  add_quad(m, {-h, -h, h}, {h, -h, h}, {h, h, h}, {-h, h, h}, {0, 0, 1});
  add_quad(m, {-h, -h, -h}, {h, -h, -h}, {h, -h, h}, {-h, -h, h}, {0, -1, 0});
  add_quad(m, {-h, h, -h}, {h, h, -h}, {h, h, h}, {-h, h, h}, {0, 1, 0});
  add_quad(m, {-h, -h, -h}, {-h, h, -h}, {-h, h, h}, {-h, -h, h}, {-1, 0, 0});
  add_quad(m, {h, -h, -h}, {h, h, -h}, {h, h, h}, {h, -h, h}, {1, 0, 0});
  return m;
}

TriangleMesh cylinder_mesh() {
  TriangleMesh m;
  const double r = kCylRadius, h = kCylHalfHeight;
  std::vector<Vec3> top(kSegments), bottom(kSegments);
  for (int i = 0; i < kSegments; ++i) {
    const double a = 2.0 * M_PI * i / kSegments;
    top[i] = {r * std::cos(a), r * std::sin(a), h};
    bottom[i] = {r * std::cos(a), r * std::sin(a), -h};
  }
  const int it = static_cast<int>(m.vertices.size());
  m.vertices.insert(m.vertices.end(), top.begin(), top.end());
  const int ib = static_cast<int>(m.vertices.size());
  m.vertices.insert(m.vertices.end(), bottom.begin(), bottom.end());
  for (int i = 0; i < kSegments; ++i) {
    const int j = (i + 1) % kSegments;
    m.triangles.push_back({ib + i, ib + j, it + j});
    m.triangles.push_back({ib + i, it + j, it + i});
  }
  const int ct = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0, 0, h});
  const int cb = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0, 0, -h});
  for (int i = 0; i < kSegments; ++i) {
    const int j = (i + 1) % kSegments;
    m.triangles.push_back({ct, it + i, it + j});
    m.triangles.push_back({cb, ib + j, ib + i});
  }
  return m;
}

TriangleMesh box_minus_cylinder_mesh() {
  TriangleMesh m;
  const double h = kCubeHalf, r = kHoleRadius;
  add_quad(m, {-h, -h, -h}, {h, -h, -h}, {h, -h, h}, {-h, -h, h}, {0, -1, 0});
  add_quad(m, {-h, h, -h}, {h, h, -h}, {h, h, h}, {-h, h, h}, {0, 1, 0});
  add_quad(m, {-h, -h, -h}, {-h, h, -h}, {-h, h, h}, {-h, -h, h}, {-1, 0, 0});
  add_quad(m, {h, -h, -h}, {h, h, -h}, {h, h, h}, {h, -h, h}, {1, 0, 0});
  // top/bottom rings between the hole rim and the square boundary, and the
  // inner wall of the hole; kSegments is a multiple of 8 so square corners
  // are hit exactly
  for (int i = 0; i < kSegments; ++i) {
    const double a0 = 2.0 * M_PI * i / kSegments;
    const double a1 = 2.0 * M_PI * ((i + 1) % kSegments) / kSegments;
    auto circle = [&](double a, double z) { return Vec3(r * std::cos(a), r * std::sin(a), z); };
    auto square = [&](double a, double z) {
      const double c = std::cos(a), s = std::sin(a);
      const double t = h / std::max(std::abs(c), std::abs(s));
      return Vec3(t * c, t * s, z);
    };
    add_quad(m, circle(a0, h), circle(a1, h), square(a1, h), square(a0, h), {0, 0, 1});
    add_quad(m, circle(a0, -h), circle(a1, -h), square(a1, -h), square(a0, -h), {0, 0, -1});
    const Vec3 mid = -Vec3(std::cos(0.5 * (a0 + a1)), std::sin(0.5 * (a0 + a1)), 0.0);
    add_quad(m, circle(a0, -h), circle(a1, -h), circle(a1, h), circle(a0, h), mid);
  }
  return m;
}

// Box with a slanted top face: z from -0.25 up to a roof that drops from
// 0.25 at x=-0.4 to -0.1 at x=+0.4. All faces planar, eight sharp vertices.
const std::array<Vec3, 8>& wedge_vertices() {
  static const std::array<Vec3, 8> v = {
      Vec3(-0.4, -0.4, -0.25), Vec3(0.4, -0.4, -0.25), Vec3(0.4, 0.4, -0.25),
      Vec3(-0.4, 0.4, -0.25),  Vec3(-0.4, -0.4, 0.25), Vec3(0.4, -0.4, -0.1),
      Vec3(0.4, 0.4, -0.1),    Vec3(-0.4, 0.4, 0.25)};
  return v;
}

TriangleMesh wedge_mesh() {
  TriangleMesh m;
  const auto& v = wedge_vertices();
  add_quad(m, v[0], v[1], v[2], v[3], {0, 0, -1});
  add_quad(m, v[4], v[5], v[6], v[7], Vec3(0.4375, 0, 1).normalized());
  add_quad(m, v[0], v[1], v[5], v[4], {0, -1, 0});
  add_quad(m, v[3], v[2], v[6], v[7], {0, 1, 0});
  add_quad(m, v[0], v[4], v[7], v[3], {-1, 0, 0});
  add_quad(m, v[1], v[2], v[6], v[5], {1, 0, 0});
  return m;
}

PointCloud sample_sphere_cloud(int count, Rng& rng) {
  PointCloud cloud;
  cloud.points.resize(count);
  cloud.normals.resize(count);
  for (int i = 0; i < count; ++i) {
    Vec3 dir;
    do {
      dir = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    } while (dir.norm() < 1e-12);
    dir.normalize();
    cloud.points[i] = kSphereRadius * dir;
    cloud.normals[i] = dir;
  }
  return cloud;
}

PointCloud sample_cylinder_cloud(int count, Rng& rng) {
  const double r = kCylRadius, h = kCylHalfHeight;
  const double lateral = 2.0 * M_PI * r * (2.0 * h);
  const double cap = M_PI * r * r;
  const double total = lateral + 2.0 * cap;
  PointCloud cloud;
  cloud.points.resize(count);
  cloud.normals.resize(count);
  for (int i = 0; i < count; ++i) {
    const double pick = rng.uniform() * total;
    const double a = 2.0 * M_PI * rng.uniform();
    if (pick < lateral) {
      const double z = rng.uniform(-h, h);
      cloud.points[i] = {r * std::cos(a), r * std::sin(a), z};
      cloud.normals[i] = {std::cos(a), std::sin(a), 0.0};
    } else {
      const double rad = r * std::sqrt(rng.uniform());
      const double z = pick < lateral + cap ? h : -h;
      cloud.points[i] = {rad * std::cos(a), rad * std::sin(a), z};
      cloud.normals[i] = {0.0, 0.0, z > 0 ? 1.0 : -1.0};
    }
  }
  return cloud;
}

PointCloud sample_box_minus_cylinder_cloud(int count, Rng& rng) {
  const double h = kCubeHalf, r = kHoleRadius;
  const double side = (2 * h) * (2 * h);
  const double ring = side - M_PI * r * r;
  const double wall = 2.0 * M_PI * r * (2 * h);
  const double cum[7] = {side,          2 * side,       3 * side, 4 * side,
                         4 * side + ring, 4 * side + 2 * ring, 4 * side + 2 * ring + wall};
  PointCloud cloud;
  cloud.points.resize(count);
  cloud.normals.resize(count);
  for (int i = 0; i < count; ++i) {
    const double pick = rng.uniform() * cum[6];
    int region = 0;
    while (pick >= cum[region]) ++region;
    const double u = rng.uniform(-h, h), v = rng.uniform(-h, h);
    switch (region) {
      case 0:
        cloud.points[i] = {u, -h, v};
        cloud.normals[i] = {0, -1, 0};
        break;
      case 1:
        cloud.points[i] = {u, h, v};
        cloud.normals[i] = {0, 1, 0};
        break;
      case 2:
        cloud.points[i] = {-h, u, v};
        cloud.normals[i] = {-1, 0, 0};
        break;
      case 3:
        cloud.points[i] = {h, u, v};
        cloud.normals[i] = {1, 0, 0};
        break;
      case 4:
      case 5: {
        double x = u, y = v;
        while (x * x + y * y <= r * r) {
          x = rng.uniform(-h, h);
          y = rng.uniform(-h, h);
        }
        const double z = region == 4 ? h : -h;
        cloud.points[i] = {x, y, z};
        cloud.normals[i] = {0, 0, z > 0 ? 1.0 : -1.0};
        break;
      }
      default: {
        const double a = 2.0 * M_PI * rng.uniform();
        cloud.points[i] = {r * std::cos(a), r * std::sin(a), u};
        cloud.normals[i] = {-std::cos(a), -std::sin(a), 0.0};
        break;
      }
    }
  }
  return cloud;
}

PointCloud sample_mesh_cloud(const TriangleMesh& mesh, int count, Rng& rng) {
  const SurfaceSamples s = sample_mesh(mesh, count, rng);
  PointCloud cloud;
  cloud.points = s.points;
  cloud.normals = s.normals;
  return cloud;
}

void cube_edges(std::vector<std::pair<Vec3, Vec3>>& edges, double h, double z0, double z1) {
  const Vec3 c[8] = {{-h, -h, z0}, {h, -h, z0}, {h, h, z0}, {-h, h, z0},
                     {-h, -h, z1}, {h, -h, z1}, {h, h, z1}, {-h, h, z1}};
  const int pairs[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                            {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  for (const auto& p : pairs) edges.emplace_back(c[p[0]], c[p[1]]);
}

}  // namespace

FixtureKind fixture_kind_from_name(const std::string& name) {
  if (name == "sphere") return FixtureKind::sphere;
  if (name == "cube") return FixtureKind::cube;
  if (name == "cylinder") return FixtureKind::cylinder;
  if (name == "box_minus_cylinder") return FixtureKind::box_minus_cylinder;
  if (name == "fandisk_like_wedge") return FixtureKind::fandisk_like_wedge;
  throw std::invalid_argument("unknown fixture kind: " + name);
}

std::string fixture_name(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::sphere: return "sphere";
    case FixtureKind::cube: return "cube";
    case FixtureKind::cylinder: return "cylinder";
    case FixtureKind::box_minus_cylinder: return "box_minus_cylinder";
    case FixtureKind::fandisk_like_wedge: return "fandisk_like_wedge";
  }
  throw std::invalid_argument("unknown fixture kind");
}

double distance_to_sharp_edges(FixtureKind kind, const Vec3& p) {
  std::vector<std::pair<Vec3, Vec3>> segments;
  double best = std::numeric_limits<double>::infinity();
  switch (kind) {
    case FixtureKind::sphere:
      return best;
    case FixtureKind::cube:
      cube_edges(segments, kCubeHalf, -kCubeHalf, kCubeHalf);
      break;
    case FixtureKind::cylinder:
      best = std::min(point_circle_distance(p, {0, 0, kCylHalfHeight}, kCylRadius, {0, 0, 1}),
                      point_circle_distance(p, {0, 0, -kCylHalfHeight}, kCylRadius, {0, 0, 1}));
      return best;
    case FixtureKind::box_minus_cylinder:
      cube_edges(segments, kCubeHalf, -kCubeHalf, kCubeHalf);
      best = std::min(point_circle_distance(p, {0, 0, kCubeHalf}, kHoleRadius, {0, 0, 1}),
                      point_circle_distance(p, {0, 0, -kCubeHalf}, kHoleRadius, {0, 0, 1}));
      break;
    case FixtureKind::fandisk_like_wedge: {
      const auto& v = wedge_vertices();
      const int pairs[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
      for (const auto& pr : pairs) segments.emplace_back(v[pr[0]], v[pr[1]]);
      break;
    }
  }
  for (const auto& [a, b] : segments)
    best = std::min(best, point_segment_distance(p, a, b));
  return best;
}

Fixture synth_fixture(FixtureKind kind, int count, double noise_sigma, double missing_fraction,
                      std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("synth_fixture: count must be at least 1");
  if (noise_sigma < 0 || missing_fraction < 0)
    throw std::invalid_argument("synth_fixture: noise and missing fraction must be >= 0");
  Rng rng(seed);
  Fixture fx;
  switch (kind) {
    case FixtureKind::sphere:
      fx.gt_mesh = icosphere(kSphereRadius, 4);
      fx.cloud = sample_sphere_cloud(count, rng);
      break;
    case FixtureKind::cube:
      fx.gt_mesh = cube_mesh();
      fx.cloud = sample_mesh_cloud(fx.gt_mesh, count, rng);
      break;
    case FixtureKind::cylinder:
      fx.gt_mesh = cylinder_mesh();
      fx.cloud = sample_cylinder_cloud(count, rng);
      break;
    case FixtureKind::box_minus_cylinder:
      fx.gt_mesh = box_minus_cylinder_mesh();
      fx.cloud = sample_box_minus_cylinder_cloud(count, rng);
      break;
    case FixtureKind::fandisk_like_wedge:
      fx.gt_mesh = wedge_mesh();
      fx.cloud = sample_mesh_cloud(fx.gt_mesh, count, rng);
      break;
  }

  if (missing_fraction > 0.0) {
    const double band = 0.5 * missing_fraction;
    PointCloud kept;
    for (std::size_t i = 0; i < fx.cloud.points.size(); ++i) {
      if (distance_to_sharp_edges(kind, fx.cloud.points[i]) < band) continue;
      kept.points.push_back(fx.cloud.points[i]);
      kept.normals.push_back(fx.cloud.normals[i]);
    }
    fx.cloud = std::move(kept);
  }

  if (noise_sigma > 0.0 && !fx.cloud.points.empty()) {
    Vec3 lo = fx.cloud.points.front(), hi = lo;
    for (const Vec3& p : fx.cloud.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double sigma = noise_sigma * (hi - lo).norm();
    for (Vec3& p : fx.cloud.points)
      p += sigma * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  }
  return fx;
}

}  // namespace curvrec
