#include "curvrec/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "curvrec/fixtures.hpp"
#include "curvrec/io.hpp"
#include "curvrec/metrics.hpp"

namespace curvrec {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct SynthArgs {
  std::string kind;
  int count = 10000;
  double noise = 0.0;
  double missing = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_synth(const SynthArgs& args) {
  const FixtureKind kind = fixture_kind_from_name(args.kind);
  const Fixture fx = synth_fixture(kind, args.count, args.noise, args.missing, args.seed);
  fs::create_directories(args.out_dir);
  const fs::path cloud_path = fs::path(args.out_dir) / (args.kind + ".xyz");
  const fs::path mesh_path = fs::path(args.out_dir) / (args.kind + "_gt.obj");
  write_cloud(cloud_path, fx.cloud);
  write_mesh(mesh_path, fx.gt_mesh);
  std::printf("wrote %s (%zu points) and %s (%zu triangles)\n", cloud_path.string().c_str(),
              fx.cloud.points.size(), mesh_path.string().c_str(), fx.gt_mesh.triangles.size());
  return 0;
}

struct FitArgs {
  std::string config;
  bool resume = false;
  bool quiet = false;
};

int run_fit(const FitArgs& args) {
  const RunConfig cfg = parse_run_config(args.config);
  if (cfg.input.empty()) throw std::runtime_error("config must set 'input'");
  if (!fs::exists(cfg.input)) throw std::runtime_error("input file not found: " + cfg.input);

  const LoadedCloud loaded = load_cloud(cfg.input);
  if (loaded.duplicates_removed > 0)
    std::fprintf(stderr, "dropped %zu duplicate points\n", loaded.duplicates_removed);
  const NormalizedCloud normalized = normalize_cloud(loaded.cloud);

  fs::create_directories(cfg.output_dir);
  FitOptions opts;
  opts.checkpoint_path = fs::path(cfg.output_dir) / "checkpoint.bin";
  opts.log_path = fs::path(cfg.output_dir) / "loss_log.csv";
  opts.transform = &normalized.transform;
  opts.progress_every = args.quiet ? 0 : 100;
  if (args.resume) {
    if (!fs::exists(opts.checkpoint_path))
      throw std::runtime_error("no checkpoint to resume from: " + opts.checkpoint_path.string());
    opts.resume = load_checkpoint(opts.checkpoint_path);
  }

  const FitResult result = fit(normalized.cloud, cfg.train, opts);
  std::printf("finished %d iterations; final loss %.6g\n", cfg.train.iterations,
              result.log.empty() ? 0.0 : result.log.back().loss.total);
  std::printf("checkpoint: %s\nlog: %s\n", opts.checkpoint_path.string().c_str(),
              opts.log_path.string().c_str());
  return 0;
}

struct MeshArgs {
  std::string checkpoint;
  std::string out = "mesh.obj";
  int resolution = 256;
  bool curvature = false;
  int threads = 0;
};

int run_mesh(const MeshArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  if (args.curvature && fs::path(args.out).extension() != ".ply")
    throw std::runtime_error("--curvature needs a .ply output (scalars ride on 'quality')");

  const auto t0 = Clock::now();
  const ScalarGrid grid = sample_grid(ckpt.net, args.resolution, args.threads);
  TriangleMesh mesh = marching_cubes(grid);
  const double extract_ms = ms_since(t0);
  if (mesh.vertices.empty())
    std::fprintf(stderr, "note: the field does not cross zero inside the grid\n");

  int guarded = 0;
  if (args.curvature) {
    CurvatureColors colors = curvature_colors(ckpt.net, mesh, args.threads);
    mesh.vertex_scalars = std::move(colors.values);
    guarded = colors.guarded_count;
  }
  if (ckpt.has_transform)
    for (Vec3& v : mesh.vertices) v = ckpt.transform.invert(v);
  write_mesh(args.out, mesh);
  std::printf("wrote %s: %zu vertices, %zu triangles (grid+extract %.1f ms)\n",
              args.out.c_str(), mesh.vertices.size(), mesh.triangles.size(), extract_ms);
  if (args.curvature && guarded > 0)
    std::printf("curvature guarded at %d vertices\n", guarded);
  return 0;
}

struct EvalArgs {
  std::string mesh;
  std::string gt_mesh;
  int samples = 100000;
  double threshold = 5e-3;
  std::uint64_t seed = 0;
  std::string csv;
  int threads = 0;
};

int run_eval(const EvalArgs& args) {
  const TriangleMesh recon = load_mesh(args.mesh);
  const TriangleMesh truth = load_mesh(args.gt_mesh);
  Rng rng(args.seed);
  const SurfaceSamples sa = sample_mesh(recon, args.samples, rng);
  const SurfaceSamples sb = sample_mesh(truth, args.samples, rng);
  const MetricsReport report = evaluate_samples(sa, sb, args.threshold, args.threads);

  std::printf("%-22s %12s\n", "metric", "value");
  std::printf("%-22s %12.4f\n", "NC (x100)", report.nc);
  std::printf("%-22s %12.4f\n", "CD-L1 (x1000)", report.cd);
  std::printf("%-22s %12.4f\n", "F1 (x100)", report.f1);
  std::printf("%-22s %12.6f\n", "Hausdorff", report.hausdorff);
  std::printf("%-22s %12zu\n", "samples per surface", report.sample_count);
  if (!args.csv.empty()) {
    std::FILE* f = std::fopen(args.csv.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + args.csv);
    std::fprintf(f, "nc,cd,f1,hausdorff,samples\n%.17g,%.17g,%.17g,%.17g,%zu\n", report.nc,
                 report.cd, report.f1, report.hausdorff, report.sample_count);
    std::fclose(f);
  }
  return 0;
}

struct BenchArgs {
  int points = 10000;
  int iterations = 5;
  int hidden_layers = 4;
  int hidden_width = 256;
  int batch = 10000;
  int threads = 0;
  std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& args) {
  const Fixture fx = synth_fixture(FixtureKind::sphere, args.points, 0.0, 0.0, args.seed);
  const NormalizedCloud normalized = normalize_cloud(fx.cloud);

  TrainConfig cfg;
  cfg.iterations = args.iterations;
  cfg.sampling.batch_manifold = args.batch;
  cfg.threads = args.threads;
  cfg.seed = args.seed;
  cfg.layer_sizes.assign(1, 3);
  for (int i = 0; i < args.hidden_layers; ++i) cfg.layer_sizes.push_back(args.hidden_width);
  cfg.layer_sizes.push_back(1);
  cfg.validate();

  FieldNetwork net(cfg.layer_sizes, cfg.omega0, cfg.input_scale, cfg.seed);
  AdamState adam(net.param_count());
  const NeighborScales scales = knn_scales(normalized.cloud, cfg.knn_k);

  std::printf("parameters: %zu\n", net.param_count());
  std::printf("batches: manifold %d, uniform %d, near-surface %d, dynamic %s\n",
              std::min<int>(cfg.sampling.batch_manifold,
                            static_cast<int>(normalized.cloud.points.size())),
              cfg.sampling.batch_uniform, cfg.sampling.batch_omega,
              cfg.sampling.dynamic_sampling ? "on" : "off");

  double sample_ms = 0.0, grad_ms = 0.0, update_ms = 0.0;
  for (int it = 0; it < args.iterations + 1; ++it) {
    Rng rng(derive_seed(cfg.seed, it));
    auto t0 = Clock::now();
    const SampleBatch batch =
        make_batch(normalized.cloud, scales, cfg.sampling, net, rng, cfg.threads);
    const double t_sample = ms_since(t0);
    t0 = Clock::now();
    auto [bd, grad] =
        total_loss_with_gradient(net, batch, cfg.weights, 1.0, cfg.threads);
    const double t_grad = ms_since(t0);
    t0 = Clock::now();
    adam_step(net.params(), grad, adam, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
              cfg.adam_eps);
    const double t_update = ms_since(t0);
    if (it == 0) continue;  // warmup
    sample_ms += t_sample;
    grad_ms += t_grad;
    update_ms += t_update;
  }
  const double n = args.iterations;
  std::printf("per-iteration wall time over %d timed iterations:\n", args.iterations);
  std::printf("  sampling   %10.2f ms\n", sample_ms / n);
  std::printf("  loss+grad  %10.2f ms\n", grad_ms / n);
  std::printf("  update     %10.2f ms\n", update_ms / n);
  std::printf("  total      %10.2f ms\n", (sample_ms + grad_ms + update_ms) / n);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"curvature-regularized implicit surface reconstruction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic fixture cloud + mesh");
  synth_cmd->add_option("kind", synth.kind,
                        "sphere|cube|cylinder|box_minus_cylinder|fandisk_like_wedge")
      ->required();
  synth_cmd->add_option("--count", synth.count, "surface samples to draw");
  synth_cmd->add_option("--noise", synth.noise, "Gaussian noise (fraction of bbox diagonal)");
  synth_cmd->add_option("--missing", synth.missing, "edge-band removal fraction");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "train a field on a point cloud");
  fit_cmd->add_option("config", fit_args.config, "key = value configuration file")->required();
  fit_cmd->add_flag("--resume", fit_args.resume, "continue from the saved checkpoint");
  fit_cmd->add_flag("--quiet", fit_args.quiet, "suppress progress lines");

  MeshArgs mesh_args;
  auto* mesh_cmd = app.add_subcommand("mesh", "extract the zero isosurface of a checkpoint");
  mesh_cmd->add_option("checkpoint", mesh_args.checkpoint, "checkpoint file")->required();
  mesh_cmd->add_option("--res", mesh_args.resolution, "grid resolution per axis");
  mesh_cmd->add_option("--out", mesh_args.out, "output mesh (.obj or .ply)");
  mesh_cmd->add_flag("--curvature", mesh_args.curvature,
                     "attach |gaussian curvature| per vertex (.ply only)");
  mesh_cmd->add_option("--threads", mesh_args.threads, "worker threads (0 = all)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "compare a mesh against ground truth");
  eval_cmd->add_option("mesh", eval_args.mesh, "reconstructed mesh")->required();
  eval_cmd->add_option("gt_mesh", eval_args.gt_mesh, "ground-truth mesh")->required();
  eval_cmd->add_option("--samples", eval_args.samples, "samples per surface");
  eval_cmd->add_option("--threshold", eval_args.threshold, "F1 distance threshold");
  eval_cmd->add_option("--seed", eval_args.seed, "sampling seed");
  eval_cmd->add_option("--csv", eval_args.csv, "also write a single-row CSV");
  eval_cmd->add_option("--threads", eval_args.threads, "worker threads (0 = all)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "measure per-iteration training time");
  bench_cmd->add_option("--points", bench_args.points, "input cloud size");
  bench_cmd->add_option("--iters", bench_args.iterations, "timed iterations");
  bench_cmd->add_option("--hidden-layers", bench_args.hidden_layers, "hidden layer count");
  bench_cmd->add_option("--hidden-width", bench_args.hidden_width, "hidden layer width");
  bench_cmd->add_option("--batch", bench_args.batch, "manifold batch size");
  bench_cmd->add_option("--threads", bench_args.threads, "worker threads (0 = all)");
  bench_cmd->add_option("--seed", bench_args.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (mesh_cmd->parsed()) return run_mesh(mesh_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace curvrec
