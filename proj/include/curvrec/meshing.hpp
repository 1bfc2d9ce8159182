#pragma once

#include <array>
#include <vector>

#include "curvrec/geometry.hpp"

namespace curvrec {

/// Regular scalar samples; grid point (i,j,k) sits at origin + spacing*(i,j,k)
/// and is stored at index ((i*R)+j)*R + k.
struct ScalarGrid {
  int resolution = 0;
  Vec3 origin = Vec3::Zero();
  double spacing = 0.0;
  std::vector<double> values;

  double value(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(i) * resolution + j) * resolution + k];
  }
  Vec3 position(int i, int j, int k) const {
    return origin + spacing * Vec3(static_cast<double>(i), static_cast<double>(j),
                                   static_cast<double>(k));
  }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<double> vertex_scalars;  // empty, or one per vertex

  bool has_scalars() const { return !vertex_scalars.empty(); }
};

/// Samples the field on a resolution^3 grid whose corner points span
/// [lo, hi]^3 per axis (the default pads the unit box by 5% on each side so
/// geometry touching the box boundary still closes).
ScalarGrid sample_grid(const Field& field, int resolution, int threads = 0, double lo = -0.55,
                       double hi = 0.55);

/// Zero-isosurface extraction with a 256-case cube table and linear edge
/// interpolation. Vertices are welded by grid-edge key; triangle normals
/// point toward decreasing field values. Returns an empty mesh when the grid
/// never crosses iso.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso = 0.0);

struct CurvatureColors {
  std::vector<double> values;  // |gaussian curvature| per vertex, native frame
  int guarded_count = 0;
};
CurvatureColors curvature_colors(const Field& field, const TriangleMesh& mesh, int threads = 0);

}  // namespace curvrec
