#include "curvrec/meshing.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "curvrec/losses.hpp"
#include "curvrec/parallel.hpp"

namespace curvrec {
namespace {

// Cube corner offsets and the corner pairs forming the 12 cube edges.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Faces as cyclic corner lists; face edge i joins corner i and i+1.
constexpr int kFaceCorner[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                   {1, 2, 6, 5},  {2, 3, 7, 6}, {3, 0, 4, 7}};
constexpr int kFaceEdge[6][4] = {{0, 1, 2, 3},  {4, 5, 6, 7},  {0, 9, 4, 8},
                                 {1, 10, 5, 9}, {2, 11, 6, 10}, {3, 8, 7, 11}};

Vec3 corner_pos(int c) {
  return Vec3(kCorner[c][0], kCorner[c][1], kCorner[c][2]);
}

// Builds the triangulation (as edge-index triplets) for every corner-sign
// configuration. On each face the surface polygon links its crossing edges;
// ambiguous faces (two diagonal inside corners) are resolved by always
// cutting off the inside corners, which both neighboring cells agree on, so
// the extracted surface is watertight. Loops are fanned into triangles wound
// so normals point toward decreasing field values.
std::vector<std::vector<signed char>> build_case_table() {
  std::vector<std::vector<signed char>> table(256);
  for (int mask = 1; mask < 255; ++mask) {
    auto inside = [&](int corner) { return (mask >> corner) & 1; };

    // Per-edge partner links, two per cut edge (one from each adjacent face).
    std::array<std::array<int, 2>, 12> links{};
    std::array<int, 12> link_count{};
    link_count.fill(0);
    auto add_link = [&](int a, int b) {
      links[a][link_count[a]++] = b;
      links[b][link_count[b]++] = a;
    };
    for (int f = 0; f < 6; ++f) {
      int cut[4], n_cut = 0;
      for (int i = 0; i < 4; ++i) {
        const int ca = kFaceCorner[f][i], cb = kFaceCorner[f][(i + 1) % 4];
        if (inside(ca) != inside(cb)) cut[n_cut++] = i;
      }
      if (n_cut == 2) {
        add_link(kFaceEdge[f][cut[0]], kFaceEdge[f][cut[1]]);
      } else if (n_cut == 4) {
        for (int i = 0; i < 4; ++i) {
          if (!inside(kFaceCorner[f][i])) continue;
          add_link(kFaceEdge[f][(i + 3) % 4], kFaceEdge[f][i]);
        }
      }
    }

    // Trace the loops.
    std::array<bool, 12> seen{};
    std::vector<signed char> tris;
    for (int start = 0; start < 12; ++start) {
      if (link_count[start] == 0 || seen[start]) continue;
      std::vector<int> loop;
      int prev = -1, cur = start;
      do {
        loop.push_back(cur);
        seen[cur] = true;
        const int next = (links[cur][0] == prev) ? links[cur][1] : links[cur][0];
        prev = cur;
        cur = next;
      } while (cur != start);

      // Orient: the sum of inside->outside edge directions points toward
      // increasing field, and normals must face the decreasing side.
      Vec3 upward = Vec3::Zero();
      std::vector<Vec3> mids(loop.size());
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const int a = kEdge[loop[i]][0], b = kEdge[loop[i]][1];
        mids[i] = 0.5 * (corner_pos(a) + corner_pos(b));
        upward += inside(a) ? (corner_pos(b) - corner_pos(a)) : (corner_pos(a) - corner_pos(b));
      }
      Vec3 newell = Vec3::Zero();
      for (std::size_t i = 0; i < loop.size(); ++i)
        newell += mids[i].cross(mids[(i + 1) % loop.size()]);
      assert(std::abs(newell.dot(upward)) > 1e-9);
      if (newell.dot(upward) > 0.0) std::reverse(loop.begin(), loop.end());

      for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
        tris.push_back(static_cast<signed char>(loop[0]));
        tris.push_back(static_cast<signed char>(loop[i]));
        tris.push_back(static_cast<signed char>(loop[i + 1]));
      }
    }
    table[mask] = std::move(tris);
  }
  return table;
}

const std::vector<std::vector<signed char>>& case_table() {
  static const std::vector<std::vector<signed char>> table = build_case_table();
  return table;
}

}  // namespace

ScalarGrid sample_grid(const Field& field, int resolution, int threads, double lo, double hi) {
  if (resolution < 32 || resolution > 1024)
    throw std::invalid_argument("sample_grid: resolution must lie in [32, 1024]");
  if (!(hi > lo)) throw std::invalid_argument("sample_grid: empty domain");
  ScalarGrid grid;
  grid.resolution = resolution;
  grid.origin = Vec3::Constant(lo);
  grid.spacing = (hi - lo) / static_cast<double>(resolution - 1);
  grid.values.resize(static_cast<std::size_t>(resolution) * resolution * resolution);
  const int T = resolve_threads(threads);
  parallel_blocks(resolution, T, [&](int i, int) {
    std::size_t idx = static_cast<std::size_t>(i) * resolution * resolution;
    for (int j = 0; j < resolution; ++j)
      for (int k = 0; k < resolution; ++k) grid.values[idx++] = field.eval(grid.position(i, j, k));
  });
  return grid;
}

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
  const int R = grid.resolution;
  if (R < 2) throw std::invalid_argument("marching_cubes: grid too small");
  const auto& table = case_table();

  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  edge_vertex.reserve(1 << 16);

  auto grid_index = [R](int i, int j, int k) {
    return (static_cast<std::uint64_t>(i) * R + j) * R + k;
  };

  for (int i = 0; i + 1 < R; ++i) {
    for (int j = 0; j + 1 < R; ++j) {
      for (int k = 0; k + 1 < R; ++k) {
        double v[8];
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = grid.value(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (v[c] < iso) mask |= 1 << c;
        }
        const auto& tris = table[mask];
        if (tris.empty()) continue;

        int cell_vertex[3];
        for (std::size_t t = 0; t < tris.size(); ++t) {
          const int e = tris[t];
          // canonical key: lower grid point along the edge axis, plus axis
          const int* ca = kCorner[kEdge[e][0]];
          const int* cb = kCorner[kEdge[e][1]];
          int axis = 0;
          for (int a = 0; a < 3; ++a)
            if (ca[a] != cb[a]) axis = a;
          const int gi = i + std::min(ca[0], cb[0]);
          const int gj = j + std::min(ca[1], cb[1]);
          const int gk = k + std::min(ca[2], cb[2]);
          const std::uint64_t key = grid_index(gi, gj, gk) * 3 + axis;
          auto [it, inserted] = edge_vertex.try_emplace(key, -1);
          if (inserted) {
            const double va = v[kEdge[e][0]];
            const double vb = v[kEdge[e][1]];
            const double u = (iso - va) / (vb - va);
            const Vec3 pa = grid.position(i + ca[0], j + ca[1], k + ca[2]);
            const Vec3 pb = grid.position(i + cb[0], j + cb[1], k + cb[2]);
            it->second = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(pa + u * (pb - pa));
          }
          cell_vertex[t % 3] = it->second;
          if (t % 3 == 2) {
            if (cell_vertex[0] != cell_vertex[1] && cell_vertex[1] != cell_vertex[2] &&
                cell_vertex[0] != cell_vertex[2])
              mesh.triangles.push_back({cell_vertex[0], cell_vertex[1], cell_vertex[2]});
          }
        }
      }
    }
  }
  return mesh;
}

CurvatureColors curvature_colors(const Field& field, const TriangleMesh& mesh, int threads) {
  CurvatureColors out;
  const int n = static_cast<int>(mesh.vertices.size());
  out.values.assign(n, 0.0);
  std::vector<int> guarded(n, 0);
  const int T = resolve_threads(threads);
  const int block = 1024;
  const int n_blocks = (n + block - 1) / block;
  parallel_blocks(n_blocks, T, [&](int b, int) {
    const int lo = b * block, hi = std::min(lo + block, n);
    for (int vi = lo; vi < hi; ++vi) {
      const Jet2 jet = field.eval_jet_native_frame(mesh.vertices[vi]);
      const CurvatureResult c = gaussian_curvature(jet);
      if (c.guarded)
        guarded[vi] = 1;
      else
        out.values[vi] = std::abs(c.k);
    }
  });
  for (int g : guarded) out.guarded_count += g;
  return out;
}

}  // namespace curvrec
