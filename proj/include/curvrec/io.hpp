#pragma once

#include <filesystem>
#include <string>

#include "curvrec/meshing.hpp"
#include "curvrec/optimizer.hpp"
#include "curvrec/sampling.hpp"

namespace curvrec {

struct LoadedCloud {
  PointCloud cloud;
  std::size_t duplicates_removed = 0;
};

/// Reads .xyz (3 or 6 whitespace-separated reals per line) or .ply (ascii or
/// binary little endian, x/y/z plus optional nx/ny/nz properties). Exact
/// duplicate positions are removed and counted.
LoadedCloud load_cloud(const std::filesystem::path& path);

/// Writers matching the readers; ASCII output round-trips bit-exactly.
void write_cloud_xyz(const std::filesystem::path& path, const PointCloud& cloud);
void write_cloud_ply(const std::filesystem::path& path, const PointCloud& cloud,
                     bool binary = false);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);  // by extension

/// Reads .obj (v/f lines) or .ply meshes; polygons are fan-triangulated.
TriangleMesh load_mesh(const std::filesystem::path& path);

void write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
/// PLY writer; per-vertex scalars are emitted as a "quality" property.
void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
                    bool binary = false);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);  // by extension

struct NormalizedCloud {
  PointCloud cloud;
  SimilarityTransform transform;  // original -> normalized
};

/// Uniform scale + translation mapping the tight bounding-box center to the
/// origin and the longest axis to length 1. Rejects zero-extent clouds.
NormalizedCloud normalize_cloud(const PointCloud& cloud);

/// Flat key = value configuration for the command-line pipeline. Unknown keys
/// are rejected.
struct RunConfig {
  TrainConfig train;
  std::string input;
  std::string output_dir = ".";
  int mesh_resolution = 256;
  int metric_samples = 100000;
  double f1_threshold = 5e-3;
  int hidden_layers = 4;
  int hidden_width = 256;
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "config");

}  // namespace curvrec
