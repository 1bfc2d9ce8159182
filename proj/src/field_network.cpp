#include "curvrec/field_network.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>

#include "curvrec/parallel.hpp"
#include "curvrec/rng.hpp"

namespace curvrec {
namespace {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kChunk = 128;

int channels(int order) { return order == 0 ? 1 : (order == 1 ? 4 : 10); }

// Unique hessian channels: xx, yy, zz, xy, xz, yz.
constexpr int kHessRow[6] = {0, 1, 2, 0, 0, 1};
constexpr int kHessCol[6] = {0, 1, 2, 1, 2, 2};

void validate_sizes(const std::vector<int>& s) {
  if (s.size() < 2) throw std::invalid_argument("layer_sizes needs at least two entries");
  for (int w : s)
    if (w <= 0) throw std::invalid_argument("layer widths must be positive");
  if (s.front() != 3 || s.back() != 1)
    throw std::invalid_argument("field networks map R^3 to R: layer_sizes must start at 3 and end at 1");
  if (s.size() < 3) throw std::invalid_argument("at least one hidden layer is required");
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    if (s[i] < 2) throw std::invalid_argument("hidden layers of width 1 are degenerate");
}

}  // namespace

struct FieldNetwork::Workspace {
  std::vector<MatrixXd> acts;  // acts[l]: input jets of layer l (acts[0] = network input)
  std::vector<MatrixXd> pre;   // pre[l]: pre-activation jets of sine layer l
  MatrixXd out;                // 1 x (n*C) output jets
  MatrixXd zbar, abar;         // backward scratch
  ArrayXd s, wc, w2s, w3c;     // per-point activation scratch
};

FieldNetwork::FieldNetwork(std::vector<int> sizes, double omega0, double input_scale,
                           Uninitialized)
    : sizes_(std::move(sizes)), omega0_(omega0), input_scale_(input_scale) {
  validate_sizes(sizes_);
  if (!(omega0_ > 0.0)) throw std::invalid_argument("omega0 must be positive");
  if (!(input_scale_ > 0.0)) throw std::invalid_argument("input_scale must be positive");
  std::size_t total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    w_off_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
    b_off_.push_back(total);
    total += sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

FieldNetwork::FieldNetwork(std::vector<int> layer_sizes, double omega0, double input_scale,
                           std::uint64_t seed)
    : FieldNetwork(std::move(layer_sizes), omega0, input_scale, Uninitialized{}) {
  Rng rng(seed);
  for (int l = 0; l < layer_count(); ++l) {
    const int in = sizes_[l];
    const double bound = (l == 0) ? 1.0 / in : std::sqrt(6.0 / in) / omega0_;
    const std::size_t count = static_cast<std::size_t>(in) * sizes_[l + 1];
    for (std::size_t i = 0; i < count; ++i) params_[w_off_[l] + i] = rng.uniform(-bound, bound);
  }
}

FieldNetwork FieldNetwork::from_params(std::vector<int> layer_sizes, double omega0,
                                       double input_scale, std::vector<double> params) {
  FieldNetwork net(std::move(layer_sizes), omega0, input_scale, Uninitialized{});
  if (params.size() != net.params_.size())
    throw std::invalid_argument("parameter vector length does not match the layer sizes");
  net.params_ = std::move(params);
  return net;
}

double FieldNetwork::eval_native(const Vec3& u) const {
  // Plain column-sweep kernel; the accumulation order over the fan-in is
  // fixed, which keeps eval bit-reproducible and lets eval_jet report the
  // identical value.
  thread_local std::vector<double> a, z;
  a.assign(3, 0.0);
  a[0] = u[0];
  a[1] = u[1];
  a[2] = u[2];
  const int L = layer_count();
  for (int l = 0; l < L; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* W = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    z.assign(b, b + out);
    for (int k = 0; k < in; ++k) {
      const double ak = a[k];
      const double* col = W + static_cast<std::size_t>(k) * out;
      for (int j = 0; j < out; ++j) z[j] += col[j] * ak;
    }
    if (l + 1 < L) {
      a.resize(out);
      for (int j = 0; j < out; ++j) a[j] = std::sin(omega0_ * z[j]);
    }
  }
  return z[0];
}

double FieldNetwork::eval(const Vec3& x) const { return eval_native(input_scale_ * x); }

void FieldNetwork::forward_chunk(std::span<const Vec3> us, int order, Workspace& ws) const {
  const int n = static_cast<int>(us.size());
  const int C = channels(order);
  const int L = layer_count();
  ws.acts.resize(L);
  ws.pre.resize(L - 1);

  MatrixXd& a0 = ws.acts[0];
  a0.setZero(3, static_cast<Eigen::Index>(n) * C);
  for (int p = 0; p < n; ++p) {
    a0.col(p * C) = us[p];
    if (C >= 4) {
      a0(0, p * C + 1) = 1.0;
      a0(1, p * C + 2) = 1.0;
      a0(2, p * C + 3) = 1.0;
    }
  }

  const double w = omega0_;
  for (int l = 0; l < L; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Eigen::Map<const MatrixXd> W(params_.data() + w_off_[l], out, in);
    Eigen::Map<const VectorXd> b(params_.data() + b_off_[l], out);
    MatrixXd& z = (l + 1 < L) ? ws.pre[l] : ws.out;
    z.resize(out, static_cast<Eigen::Index>(n) * C);
    z.noalias() = W * ws.acts[l];
    for (int p = 0; p < n; ++p) z.col(p * C) += b;
    if (l + 1 == L) break;

    MatrixXd& a = ws.acts[l + 1];
    a.resize(out, z.cols());
    for (int p = 0; p < n; ++p) {
      const int base = p * C;
      ws.s = (w * z.col(base).array()).sin();
      ws.wc = w * (w * z.col(base).array()).cos();
      a.col(base).array() = ws.s;
      if (C >= 4) {
        for (int i = 0; i < 3; ++i)
          a.col(base + 1 + i).array() = ws.wc * z.col(base + 1 + i).array();
        if (C == 10) {
          ws.w2s = (w * w) * ws.s;
          for (int k = 0; k < 6; ++k) {
            const auto gi = z.col(base + 1 + kHessRow[k]).array();
            const auto gj = z.col(base + 1 + kHessCol[k]).array();
            a.col(base + 4 + k).array() =
                ws.wc * z.col(base + 4 + k).array() - ws.w2s * (gi * gj);
          }
        }
      }
    }
  }
}

void FieldNetwork::extract_jets(const Workspace& ws, int n, int order, Jet2* out) const {
  const int C = channels(order);
  for (int p = 0; p < n; ++p) {
    Jet2& j = out[p];
    const int base = p * C;
    j.value = ws.out(0, base);
    if (C >= 4) {
      for (int i = 0; i < 3; ++i) j.gradient[i] = ws.out(0, base + 1 + i);
      if (C == 10) {
        for (int k = 0; k < 6; ++k) {
          const double h = ws.out(0, base + 4 + k);
          j.hessian(kHessRow[k], kHessCol[k]) = h;
          j.hessian(kHessCol[k], kHessRow[k]) = h;
        }
      } else {
        j.hessian.setZero();
      }
    } else {
      j.gradient.setZero();
      j.hessian.setZero();
    }
  }
}

void FieldNetwork::backward_chunk(std::span<const Vec3> us, int order,
                                  std::span<const JetAdjoint> adj, Workspace& ws,
                                  std::span<double> grad) const {
  forward_chunk(us, order, ws);
  const int n = static_cast<int>(us.size());
  const int C = channels(order);
  const int L = layer_count();
  const double w = omega0_;

  // Seed the output adjoints; each unique hessian channel carries both
  // symmetric slots of the seed matrix.
  MatrixXd& zbar = ws.zbar;
  zbar.setZero(1, static_cast<Eigen::Index>(n) * C);
  for (int p = 0; p < n; ++p) {
    const int base = p * C;
    zbar(0, base) = adj[p].value;
    if (C >= 4) {
      for (int i = 0; i < 3; ++i) zbar(0, base + 1 + i) = adj[p].gradient[i];
      if (C == 10) {
        for (int k = 0; k < 6; ++k) {
          const int i = kHessRow[k], jj = kHessCol[k];
          zbar(0, base + 4 + k) =
              (i == jj) ? adj[p].hessian(i, i) : adj[p].hessian(i, jj) + adj[p].hessian(jj, i);
        }
      }
    }
  }

  for (int l = L - 1; l >= 0; --l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Eigen::Map<const MatrixXd> W(params_.data() + w_off_[l], out, in);
    Eigen::Map<MatrixXd> wgrad(grad.data() + w_off_[l], out, in);
    Eigen::Map<VectorXd> bgrad(grad.data() + b_off_[l], out);
    wgrad.noalias() += zbar * ws.acts[l].transpose();
    for (int p = 0; p < n; ++p) bgrad += zbar.col(p * C);
    if (l == 0) break;

    ws.abar.resize(in, zbar.cols());
    ws.abar.noalias() = W.transpose() * zbar;

    // Through the sine activation of layer l-1.
    const MatrixXd& z = ws.pre[l - 1];
    MatrixXd& nzbar = zbar;
    nzbar.resize(in, ws.abar.cols());
    for (int p = 0; p < n; ++p) {
      const int base = p * C;
      ws.s = (w * z.col(base).array()).sin();
      ws.wc = w * (w * z.col(base).array()).cos();
      auto zv_bar = nzbar.col(base).array();
      zv_bar = ws.wc * ws.abar.col(base).array();
      if (C >= 4) {
        ws.w2s = (w * w) * ws.s;
        for (int i = 0; i < 3; ++i) {
          zv_bar -= ws.w2s * z.col(base + 1 + i).array() * ws.abar.col(base + 1 + i).array();
          nzbar.col(base + 1 + i).array() = ws.wc * ws.abar.col(base + 1 + i).array();
        }
        if (C == 10) {
          ws.w3c = w * w * ws.wc;  // omega^3 cos
          for (int k = 0; k < 6; ++k) {
            const int i = kHessRow[k], jj = kHessCol[k];
            const auto hbar = ws.abar.col(base + 4 + k).array();
            const auto gi = z.col(base + 1 + i).array();
            const auto gj = z.col(base + 1 + jj).array();
            zv_bar -= hbar * (ws.w2s * z.col(base + 4 + k).array() + ws.w3c * gi * gj);
            nzbar.col(base + 4 + k).array() = ws.wc * hbar;
            if (i == jj) {
              nzbar.col(base + 1 + i).array() -= 2.0 * ws.w2s * gi * hbar;
            } else {
              nzbar.col(base + 1 + i).array() -= ws.w2s * gj * hbar;
              nzbar.col(base + 1 + jj).array() -= ws.w2s * gi * hbar;
            }
          }
        }
      }
    }
  }
}

void FieldNetwork::forward_jets_native(std::span<const Vec3> us, int order, std::span<Jet2> out,
                                       int threads) const {
  const int n = static_cast<int>(us.size());
  if (out.size() != us.size()) throw std::invalid_argument("output span size mismatch");
  if (n == 0) return;
  const int n_blocks = (n + kChunk - 1) / kChunk;
  const int T = std::min(resolve_threads(threads), n_blocks);
  std::vector<Workspace> wss(T);
  parallel_blocks(n_blocks, T, [&](int b, int t) {
    const int lo = b * kChunk;
    const int len = std::min(kChunk, n - lo);
    forward_chunk(us.subspan(lo, len), order, wss[t]);
    extract_jets(wss[t], len, order, out.data() + lo);
  });
}

Jet2 FieldNetwork::eval_jet_native(const Vec3& u) const {
  Workspace ws;
  forward_chunk(std::span<const Vec3>(&u, 1), 2, ws);
  Jet2 j;
  extract_jets(ws, 1, 2, &j);
  j.value = eval_native(u);
  return j;
}

Jet2 FieldNetwork::eval_jet(const Vec3& x) const {
  Jet2 j = eval_jet_native(input_scale_ * x);
  j.gradient *= input_scale_;
  j.hessian *= input_scale_ * input_scale_;
  return j;
}

std::vector<Jet2> FieldNetwork::eval_jet_batch(std::span<const Vec3> xs, int threads) const {
  const int n = static_cast<int>(xs.size());
  std::vector<Vec3> us(n);
  for (int i = 0; i < n; ++i) us[i] = input_scale_ * xs[i];
  std::vector<Jet2> jets(n);
  if (n == 0) return jets;
  forward_jets_native(us, 2, jets, threads);
  const int n_blocks = (n + kChunk - 1) / kChunk;
  const int T = std::min(resolve_threads(threads), n_blocks);
  const double s2 = input_scale_ * input_scale_;
  parallel_blocks(n_blocks, T, [&](int b, int) {
    const int lo = b * kChunk;
    const int hi = std::min(lo + kChunk, n);
    for (int i = lo; i < hi; ++i) {
      jets[i].value = eval_native(us[i]);
      jets[i].gradient *= input_scale_;
      jets[i].hessian *= s2;
    }
  });
  return jets;
}

void FieldNetwork::eval_jets1_many(std::span<const Vec3> xs, std::span<Jet2> out,
                                   int threads) const {
  const int n = static_cast<int>(xs.size());
  std::vector<Vec3> us(n);
  for (int i = 0; i < n; ++i) us[i] = input_scale_ * xs[i];
  forward_jets_native(us, 1, out, threads);
  for (int i = 0; i < n; ++i) out[i].gradient *= input_scale_;
}

double FieldNetwork::objective_param_gradient(std::span<const Vec3> us, int order,
                                              const JetObjective& objective,
                                              std::span<double> grad, int threads) const {
  if (grad.size() != param_count())
    throw std::invalid_argument("gradient buffer length does not match the parameter count");
  const int n = static_cast<int>(us.size());
  std::vector<Jet2> jets(n);
  forward_jets_native(us, order, jets, threads);
  std::vector<JetAdjoint> adj(n);
  const double loss = objective(jets, adj);
  if (!std::isfinite(loss)) throw NonFiniteLossError(loss);
  if (n == 0) return loss;

  const int n_blocks = (n + kChunk - 1) / kChunk;
  const int T = std::min(resolve_threads(threads), n_blocks);
  std::vector<Workspace> wss(T);
  std::vector<std::vector<double>> partial(T);
  for (auto& g : partial) g.assign(param_count(), 0.0);
  parallel_blocks(n_blocks, T, [&](int b, int t) {
    const int lo = b * kChunk;
    const int len = std::min(kChunk, n - lo);
    backward_chunk(us.subspan(lo, len), order,
                   std::span<const JetAdjoint>(adj.data() + lo, len), wss[t], partial[t]);
  });
  for (int t = 0; t < T; ++t)
    for (std::size_t i = 0; i < param_count(); ++i) grad[i] += partial[t][i];
  return loss;
}

// --- checkpoint io ---------------------------------------------------------

namespace {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

constexpr char kMagic[8] = {'C', 'U', 'R', 'V', 'R', 'E', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FieldNetwork& net,
                     const SimilarityTransform* transform, const TrainState* train) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) write_pod(os, static_cast<std::int32_t>(s));
  write_pod(os, net.omega0());
  write_pod(os, net.input_scale());
  write_pod(os, static_cast<std::uint8_t>(transform != nullptr));
  if (transform) {
    write_pod(os, transform->scale);
    for (int i = 0; i < 3; ++i) write_pod(os, transform->center[i]);
  }
  write_pod(os, static_cast<std::uint64_t>(net.param_count()));
  os.write(reinterpret_cast<const char*>(net.params().data()),
           static_cast<std::streamsize>(net.param_count() * sizeof(double)));
  write_pod(os, static_cast<std::uint8_t>(train != nullptr));
  if (train) {
    write_pod(os, train->iteration);
    write_pod(os, train->adam_step);
    os.write(reinterpret_cast<const char*>(train->adam_m.data()),
             static_cast<std::streamsize>(train->adam_m.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(train->adam_v.data()),
             static_cast<std::streamsize>(train->adam_v.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto n_sizes = read_pod<std::uint32_t>(is);
  if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("corrupt checkpoint layer count");
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) s = read_pod<std::int32_t>(is);
  const double omega0 = read_pod<double>(is);
  const double input_scale = read_pod<double>(is);
  const bool has_transform = read_pod<std::uint8_t>(is) != 0;
  SimilarityTransform t;
  if (has_transform) {
    t.scale = read_pod<double>(is);
    for (int i = 0; i < 3; ++i) t.center[i] = read_pod<double>(is);
  }
  const auto param_count = read_pod<std::uint64_t>(is);
  std::vector<double> params(param_count);
  is.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(param_count * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
  Checkpoint ckpt{FieldNetwork::from_params(sizes, omega0, input_scale, std::move(params)),
                  has_transform, t, std::nullopt};
  const bool has_train = read_pod<std::uint8_t>(is) != 0;
  if (has_train) {
    TrainState ts;
    ts.iteration = read_pod<std::uint64_t>(is);
    ts.adam_step = read_pod<std::uint64_t>(is);
    ts.adam_m.resize(param_count);
    ts.adam_v.resize(param_count);
    is.read(reinterpret_cast<char*>(ts.adam_m.data()),
            static_cast<std::streamsize>(param_count * sizeof(double)));
    is.read(reinterpret_cast<char*>(ts.adam_v.data()),
            static_cast<std::streamsize>(param_count * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
    ckpt.train = std::move(ts);
  }
  return ckpt;
}

}  // namespace curvrec
