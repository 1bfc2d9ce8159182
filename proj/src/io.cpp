#include "curvrec/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace curvrec {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string extension(const std::filesystem::path& path) {
  return lower(path.extension().string());
}

// --- xyz ---------------------------------------------------------------

LoadedCloud load_xyz(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open " + path.string());
  PointCloud cloud;
  std::string line;
  int expected_cols = 0;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    double v[6];
    int n = 0;
    while (n < 6 && (ls >> v[n])) ++n;
    std::string trailing;
    if (n == 0) {
      if (ls >> trailing) fail(path.string() + ":" + std::to_string(line_no) + ": not a number");
      continue;  // blank line
    }
    if (ls >> trailing)
      fail(path.string() + ":" + std::to_string(line_no) + ": too many columns");
    if (n != 3 && n != 6)
      fail(path.string() + ":" + std::to_string(line_no) + ": expected 3 or 6 values, got " +
           std::to_string(n));
    if (expected_cols == 0) expected_cols = n;
    if (n != expected_cols)
      fail(path.string() + ":" + std::to_string(line_no) + ": inconsistent column count");
    cloud.points.emplace_back(v[0], v[1], v[2]);
    if (n == 6) cloud.normals.emplace_back(v[3], v[4], v[5]);
  }
  return {std::move(cloud), 0};
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) fail("cannot write " + path.string());
  char buf[256];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g\n", p[0], p[1], p[2],
                    n[0], n[1], n[2]);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
    }
    os << buf;
  }
}

// --- ply ---------------------------------------------------------------

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
};

int scalar_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  fail("unsupported ply property type: " + t);
}

PlyHeader read_ply_header(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply") fail(origin + ": not a ply file");
  PlyHeader header;
  bool format_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        header.binary = false;
      else if (fmt == "binary_little_endian")
        header.binary = true;
      else
        fail(origin + ": unsupported ply format " + fmt);
      format_seen = true;
    } else if (tok == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      header.elements.push_back(el);
    } else if (tok == "property") {
      if (header.elements.empty()) fail(origin + ": property before element");
      PlyProperty prop;
      ls >> prop.type;
      if (prop.type == "list") {
        prop.is_list = true;
        std::string idx_type;
        ls >> prop.count_type >> idx_type >> prop.name;
        prop.type = idx_type;
      } else {
        ls >> prop.name;
      }
      header.elements.back().properties.push_back(prop);
    } else if (tok == "end_header") {
      if (!format_seen) fail(origin + ": missing format line");
      return header;
    } else {
      fail(origin + ": unexpected header token " + tok);
    }
  }
  fail(origin + ": unterminated ply header");
}

double read_binary_scalar(std::istream& is, const std::string& type, const std::string& origin) {
  unsigned char buf[8];
  const int size = scalar_size(type);
  is.read(reinterpret_cast<char*>(buf), size);
  if (!is) fail(origin + ": truncated ply data");
  if (type == "float" || type == "float32") {
    float f;
    std::memcpy(&f, buf, 4);
    return f;
  }
  if (type == "double" || type == "float64") {
    double d;
    std::memcpy(&d, buf, 8);
    return d;
  }
  // integer types, little endian, sign-extended where applicable
  std::int64_t v = 0;
  const bool is_signed = type[0] != 'u';
  for (int i = size - 1; i >= 0; --i) v = (v << 8) | buf[i];
  if (is_signed && size < 8) {
    const std::int64_t sign_bit = std::int64_t(1) << (size * 8 - 1);
    if (v & sign_bit) v -= std::int64_t(1) << (size * 8);
  }
  return static_cast<double>(v);
}

double read_ascii_scalar(std::istream& is, const std::string& origin) {
  double v;
  if (!(is >> v)) fail(origin + ": truncated or malformed ply data");
  return v;
}

struct PlyData {
  std::vector<Vec3> points, normals;
  std::vector<std::array<int, 3>> faces;
  std::vector<double> quality;
};

PlyData read_ply(const std::filesystem::path& path, bool want_faces) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open " + path.string());
  const std::string origin = path.string();
  const PlyHeader header = read_ply_header(is, origin);
  PlyData data;
  for (const PlyElement& el : header.elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, iq = -1;
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        if (el.properties[p].is_list) fail(origin + ": list property on vertex element");
        const std::string& n = el.properties[p].name;
        if (n == "x") ix = static_cast<int>(p);
        if (n == "y") iy = static_cast<int>(p);
        if (n == "z") iz = static_cast<int>(p);
        if (n == "nx") inx = static_cast<int>(p);
        if (n == "ny") iny = static_cast<int>(p);
        if (n == "nz") inz = static_cast<int>(p);
        if (n == "quality") iq = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0) fail(origin + ": vertex element lacks x/y/z");
      const bool has_n = inx >= 0 && iny >= 0 && inz >= 0;
      std::vector<double> row(el.properties.size());
      for (std::size_t v = 0; v < el.count; ++v) {
        for (std::size_t p = 0; p < el.properties.size(); ++p)
          row[p] = header.binary ? read_binary_scalar(is, el.properties[p].type, origin)
                                 : read_ascii_scalar(is, origin);
        data.points.emplace_back(row[ix], row[iy], row[iz]);
        if (has_n) data.normals.emplace_back(row[inx], row[iny], row[inz]);
        if (iq >= 0) data.quality.push_back(row[iq]);
      }
    } else {
      // face (or foreign) element: consume, keeping triangle fans if wanted
      for (std::size_t e = 0; e < el.count; ++e) {
        for (const PlyProperty& prop : el.properties) {
          if (prop.is_list) {
            const double cnt = header.binary ? read_binary_scalar(is, prop.count_type, origin)
                                             : read_ascii_scalar(is, origin);
            std::vector<int> poly(static_cast<std::size_t>(cnt));
            for (auto& idx : poly)
              idx = static_cast<int>(header.binary ? read_binary_scalar(is, prop.type, origin)
                                                   : read_ascii_scalar(is, origin));
            if (want_faces && el.name == "face" &&
                (prop.name == "vertex_indices" || prop.name == "vertex_index"))
              for (std::size_t t = 1; t + 1 < poly.size(); ++t)
                data.faces.push_back({poly[0], poly[t], poly[t + 1]});
          } else {
            header.binary ? read_binary_scalar(is, prop.type, origin)
                          : read_ascii_scalar(is, origin);
          }
        }
      }
    }
  }
  return data;
}

void write_ply_impl(const std::filesystem::path& path, const std::vector<Vec3>& points,
                    const std::vector<Vec3>& normals, const std::vector<double>& quality,
                    const std::vector<std::array<int, 3>>& faces, bool binary) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot write " + path.string());
  os << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  os << "element vertex " << points.size() << "\n";
  os << "property double x\nproperty double y\nproperty double z\n";
  if (!normals.empty()) os << "property double nx\nproperty double ny\nproperty double nz\n";
  if (!quality.empty()) os << "property double quality\n";
  os << "element face " << faces.size() << "\n";
  os << "property list uchar int vertex_indices\n";
  os << "end_header\n";
  char buf[64];
  auto emit = [&](double v) {
    if (binary) {
      os.write(reinterpret_cast<const char*>(&v), sizeof(double));
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf;
    }
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    emit(points[i][0]);
    if (!binary) os << ' ';
    emit(points[i][1]);
    if (!binary) os << ' ';
    emit(points[i][2]);
    if (!normals.empty()) {
      for (int c = 0; c < 3; ++c) {
        if (!binary) os << ' ';
        emit(normals[i][c]);
      }
    }
    if (!quality.empty()) {
      if (!binary) os << ' ';
      emit(quality[i]);
    }
    if (!binary) os << '\n';
  }
  for (const auto& f : faces) {
    if (binary) {
      const unsigned char n = 3;
      os.write(reinterpret_cast<const char*>(&n), 1);
      os.write(reinterpret_cast<const char*>(f.data()), 3 * sizeof(int));
    } else {
      os << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
  }
  if (!os) fail("failed writing " + path.string());
}

// --- obj ---------------------------------------------------------------

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        fail(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<int> poly;
      std::string ref;
      while (ls >> ref) {
        const std::size_t slash = ref.find('/');
        const std::string head = slash == std::string::npos ? ref : ref.substr(0, slash);
        int idx = 0;
        const auto res = std::from_chars(head.data(), head.data() + head.size(), idx);
        if (res.ec != std::errc())
          fail(path.string() + ":" + std::to_string(line_no) + ": malformed face index");
        if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
        poly.push_back(idx - 1);
      }
      if (poly.size() < 3)
        fail(path.string() + ":" + std::to_string(line_no) + ": face needs 3+ vertices");
      for (std::size_t t = 1; t + 1 < poly.size(); ++t)
        mesh.triangles.push_back({poly[0], poly[t], poly[t + 1]});
    }
    // other directives (vn, vt, usemtl, ...) are ignored
  }
  for (const auto& t : mesh.triangles)
    for (int idx : t)
      if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
        fail(path.string() + ": face index out of range");
  return mesh;
}

}  // namespace

LoadedCloud load_cloud(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  LoadedCloud loaded;
  if (ext == ".xyz") {
    loaded = load_xyz(path);
  } else if (ext == ".ply") {
    PlyData data = read_ply(path, false);
    loaded.cloud.points = std::move(data.points);
    loaded.cloud.normals = std::move(data.normals);
  } else {
    fail("unsupported point-cloud extension: " + path.string());
  }
  if (loaded.cloud.points.empty()) fail(path.string() + ": empty point cloud");

  // drop exact duplicate positions
  const std::size_t n = loaded.cloud.points.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto key = [&](std::size_t i) { return loaded.cloud.points[i]; };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Vec3 &pa = key(a), &pb = key(b);
    if (pa[0] != pb[0]) return pa[0] < pb[0];
    if (pa[1] != pb[1]) return pa[1] < pb[1];
    if (pa[2] != pb[2]) return pa[2] < pb[2];
    return a < b;
  });
  std::vector<bool> keep(n, true);
  for (std::size_t i = 1; i < n; ++i)
    if (key(order[i]) == key(order[i - 1])) keep[order[i]] = false;
  PointCloud dedup;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    dedup.points.push_back(loaded.cloud.points[i]);
    if (loaded.cloud.has_normals()) dedup.normals.push_back(loaded.cloud.normals[i]);
  }
  loaded.duplicates_removed = n - dedup.points.size();
  loaded.cloud = std::move(dedup);
  return loaded;
}

void write_cloud_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  write_xyz(path, cloud);
}

void write_cloud_ply(const std::filesystem::path& path, const PointCloud& cloud, bool binary) {
  write_ply_impl(path, cloud.points, cloud.normals, {}, {}, binary);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  const std::string ext = extension(path);
  if (ext == ".xyz")
    write_cloud_xyz(path, cloud);
  else if (ext == ".ply")
    write_cloud_ply(path, cloud);
  else
    fail("unsupported point-cloud extension: " + path.string());
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  TriangleMesh mesh;
  if (ext == ".obj") {
    mesh = load_obj(path);
  } else if (ext == ".ply") {
    PlyData data = read_ply(path, true);
    mesh.vertices = std::move(data.points);
    mesh.triangles = std::move(data.faces);
    mesh.vertex_scalars = std::move(data.quality);
    for (const auto& t : mesh.triangles)
      for (int idx : t)
        if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
          fail(path.string() + ": face index out of range");
  } else {
    fail("unsupported mesh extension: " + path.string());
  }
  return mesh;
}

void write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream os(path);
  if (!os) fail("cannot write " + path.string());
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v[0], v[1], v[2]);
    os << buf;
  }
  for (const auto& t : mesh.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!os) fail("failed writing " + path.string());
}

void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh, bool binary) {
  write_ply_impl(path, mesh.vertices, {}, mesh.vertex_scalars, mesh.triangles, binary);
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  const std::string ext = extension(path);
  if (ext == ".obj")
    write_mesh_obj(path, mesh);
  else if (ext == ".ply")
    write_mesh_ply(path, mesh);
  else
    fail("unsupported mesh extension: " + path.string());
}

NormalizedCloud normalize_cloud(const PointCloud& cloud) {
  if (cloud.points.empty()) fail("normalize_cloud: empty cloud");
  Vec3 lo = cloud.points.front(), hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo;
  const double longest = extent.maxCoeff();
  if (!(longest > 0.0)) fail("normalize_cloud: cloud has zero extent");
  NormalizedCloud out;
  out.transform.center = 0.5 * (lo + hi);
  out.transform.scale = 1.0 / longest;
  out.cloud.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.cloud.points.push_back(out.transform.apply(p));
  out.cloud.normals = cloud.normals;  // uniform scaling keeps directions
  return out;
}

// --- run config ----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  const std::string s = lower(v);
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  fail("config key '" + key + "': expected a boolean, got '" + v + "'");
}

Regularizer parse_regularizer(const std::string& v) {
  if (v == "gauss_dt") return Regularizer::gauss_dt;
  if (v == "gauss_plain") return Regularizer::gauss_plain;
  if (v == "dirichlet_energy") return Regularizer::dirichlet_energy;
  if (v == "hessian_l2") return Regularizer::hessian_l2;
  if (v == "hessian_l1") return Regularizer::hessian_l1;
  if (v == "none") return Regularizer::none;
  fail("unknown regularizer '" + v + "'");
}

AnnealingMode parse_annealing(const std::string& v) {
  if (v == "staged") return AnnealingMode::staged;
  if (v == "constant") return AnnealingMode::constant;
  if (v == "off") return AnnealingMode::off;
  fail("unknown annealing_mode '" + v + "'");
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(origin + ":" + std::to_string(line_no) + ": expected key = value");

    auto as_int = [&]() { return std::stoi(value); };
    auto as_double = [&]() { return std::stod(value); };

    TrainConfig& t = cfg.train;
    if (key == "input")
      cfg.input = value;
    else if (key == "output_dir")
      cfg.output_dir = value;
    else if (key == "mesh_resolution")
      cfg.mesh_resolution = as_int();
    else if (key == "metric_samples")
      cfg.metric_samples = as_int();
    else if (key == "f1_threshold")
      cfg.f1_threshold = as_double();
    else if (key == "hidden_layers")
      cfg.hidden_layers = as_int();
    else if (key == "hidden_width")
      cfg.hidden_width = as_int();
    else if (key == "iterations")
      t.iterations = as_int();
    else if (key == "learning_rate")
      t.learning_rate = as_double();
    else if (key == "adam_beta1")
      t.adam_beta1 = as_double();
    else if (key == "adam_beta2")
      t.adam_beta2 = as_double();
    else if (key == "adam_eps")
      t.adam_eps = as_double();
    else if (key == "lambda_e")
      t.weights.lambda_e = as_double();
    else if (key == "lambda_dm")
      t.weights.lambda_dm = as_double();
    else if (key == "lambda_dnm")
      t.weights.lambda_dnm = as_double();
    else if (key == "lambda_gauss")
      t.weights.lambda_gauss = as_double();
    else if (key == "alpha")
      t.weights.alpha = as_double();
    else if (key == "dt_a")
      t.weights.dt_a = as_double();
    else if (key == "regularizer")
      t.weights.regularizer = parse_regularizer(value);
    else if (key == "annealing_mode")
      t.annealing_mode = parse_annealing(value);
    else if (key == "dynamic_sampling")
      t.sampling.dynamic_sampling = parse_bool(value, key);
    else if (key == "batch_manifold")
      t.sampling.batch_manifold = as_int();
    else if (key == "batch_uniform")
      t.sampling.batch_uniform = as_int();
    else if (key == "batch_omega")
      t.sampling.batch_omega = as_int();
    else if (key == "knn_k")
      t.knn_k = as_int();
    else if (key == "seed")
      t.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "deterministic")
      t.deterministic = parse_bool(value, key);
    else if (key == "checkpoint_every")
      t.checkpoint_every = as_int();
    else if (key == "threads")
      t.threads = as_int();
    else if (key == "omega0")
      t.omega0 = as_double();
    else if (key == "input_scale")
      t.input_scale = as_double();
    else
      fail(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  if (cfg.hidden_layers < 1 || cfg.hidden_width < 2)
    fail(origin + ": hidden_layers must be >= 1 and hidden_width >= 2");
  cfg.train.layer_sizes.assign(1, 3);
  for (int i = 0; i < cfg.hidden_layers; ++i) cfg.train.layer_sizes.push_back(cfg.hidden_width);
  cfg.train.layer_sizes.push_back(1);
  cfg.train.validate();
  if (cfg.mesh_resolution < 32 || cfg.mesh_resolution > 1024)
    fail(origin + ": mesh_resolution must lie in [32, 1024]");
  if (cfg.metric_samples < 1) fail(origin + ": metric_samples must be positive");
  return cfg;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config_text(ss.str(), path.string());
}

}  // namespace curvrec
