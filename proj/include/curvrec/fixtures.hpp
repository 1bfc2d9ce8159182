#pragma once

#include <cstdint>
#include <string>

#include "curvrec/meshing.hpp"
#include "curvrec/sampling.hpp"

namespace curvrec {

enum class FixtureKind { sphere, cube, cylinder, box_minus_cylinder, fandisk_like_wedge };

FixtureKind fixture_kind_from_name(const std::string& name);
std::string fixture_name(FixtureKind kind);

struct Fixture {
  PointCloud cloud;        // area-uniform samples with exact analytic normals
  TriangleMesh gt_mesh;    // ground-truth triangulation of the same surface
};

/// Builds a synthetic test shape inside [-0.5, 0.5]^3.
///   noise_sigma      per-axis Gaussian displacement, as a fraction of the
///                    bounding-box diagonal
///   missing_fraction removes points closer than missing_fraction/2 to any
///                    sharp edge line of the shape (no-op for the sphere)
Fixture synth_fixture(FixtureKind kind, int count, double noise_sigma, double missing_fraction,
                      std::uint64_t seed);

/// Distance from a point to the nearest sharp edge curve of the fixture;
/// +infinity for smooth shapes.
double distance_to_sharp_edges(FixtureKind kind, const Vec3& p);

}  // namespace curvrec
