#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "curvrec/fixtures.hpp"
#include "curvrec/io.hpp"
#include "curvrec/optimizer.hpp"

using namespace curvrec;

namespace {

namespace fs = std::filesystem;

PointCloud small_sphere_cloud(int n, std::uint64_t seed) {
  return synth_fixture(FixtureKind::sphere, n, 0.0, 0.0, seed).cloud;
}

TrainConfig tiny_config(int iterations) {
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.layer_sizes = {3, 24, 24, 1};
  cfg.sampling.batch_manifold = 64;
  cfg.sampling.batch_uniform = 64;
  cfg.sampling.batch_omega = 64;
  cfg.knn_k = 8;
  cfg.threads = 2;
  cfg.deterministic = true;
  cfg.checkpoint_every = 0;
  return cfg;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.sampling.batch_omega = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.weights.dt_a = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("adam with zero gradient keeps parameters and decays moments") {
  std::vector<double> params = {1.0, -2.0};
  std::vector<double> grad = {0.0, 0.0};
  AdamState state(2);
  state.m = {0.5, -0.5};
  state.v = {0.25, 0.25};
  adam_step(params, grad, state, 0.1, 0.9, 0.999, 1e-8);
  CHECK(params[0] == 1.0);
  CHECK(params[1] == -2.0);
  CHECK(state.m[0] == doctest::Approx(0.45));
  CHECK(state.v[0] == doctest::Approx(0.25 * 0.999));
  CHECK(state.step == 1);
}

TEST_CASE("adam on a scalar quadratic matches an independent simulation") {
  // Oracle: a hand-rolled Adam recursion on loss p^2 with lr 0.1. The
  // iterates decay from 1.0 into a small oscillation around the minimum:
  // |p| shrinks monotonically until the first zero crossing (step 12) and
  // ends below 0.01 after 100 steps.
  std::vector<double> p = {1.0};
  AdamState state(1);
  double sim_p = 1.0, sim_m = 0.0, sim_v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double prev_abs = std::abs(sim_p);
  for (int t = 1; t <= 100; ++t) {
    std::vector<double> grad = {2.0 * p[0]};
    adam_step(p, grad, state, lr, b1, b2, eps);

    const double g = 2.0 * sim_p;
    sim_m = b1 * sim_m + (1 - b1) * g;
    sim_v = b2 * sim_v + (1 - b2) * g * g;
    const double mh = sim_m / (1 - std::pow(b1, t));
    const double vh = sim_v / (1 - std::pow(b2, t));
    sim_p -= lr * mh / (std::sqrt(vh) + eps);

    CHECK(p[0] == doctest::Approx(sim_p).epsilon(1e-14));
    CHECK(std::abs(p[0]) <= 1.0);      // never overshoots the start
    if (t <= 11) {
      CHECK(std::abs(p[0]) < prev_abs);  // monotone until the zero crossing
      prev_abs = std::abs(p[0]);
    }
  }
  CHECK(std::abs(p[0]) < 0.01);
}

TEST_CASE("adam rejects non-finite gradients") {
  std::vector<double> params = {1.0};
  std::vector<double> grad = {std::numeric_limits<double>::quiet_NaN()};
  AdamState state(1);
  CHECK_THROWS_AS(adam_step(params, grad, state, 0.1, 0.9, 0.999, 1e-8), std::runtime_error);
}

TEST_CASE("one iteration produces one log row and changes parameters") {
  const PointCloud cloud = small_sphere_cloud(200, 3);
  TrainConfig cfg = tiny_config(1);
  const FieldNetwork init(cfg.layer_sizes, cfg.omega0, cfg.input_scale, cfg.seed);
  const FitResult result = fit(cloud, cfg, {.progress_every = 0});
  CHECK(result.log.size() == 1);
  CHECK(std::isfinite(result.log[0].loss.total));
  bool changed = false;
  for (std::size_t i = 0; i < init.param_count(); ++i)
    if (result.net.params()[i] != init.params()[i]) changed = true;
  CHECK(changed);
}

TEST_CASE("two runs with one seed are bit-identical") {
  const PointCloud cloud = small_sphere_cloud(200, 4);
  TrainConfig cfg = tiny_config(25);
  const FitResult a = fit(cloud, cfg, {.progress_every = 0});
  const FitResult b = fit(cloud, cfg, {.progress_every = 0});
  REQUIRE(a.net.param_count() == b.net.param_count());
  for (std::size_t i = 0; i < a.net.param_count(); ++i)
    CHECK(a.net.params()[i] == b.net.params()[i]);
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].loss.total == b.log[i].loss.total);
}

TEST_CASE("checkpoint and resume reproduce an uninterrupted run bit-exactly") {
  const PointCloud cloud = small_sphere_cloud(200, 5);
  const int total = 30, split = 13;

  TrainConfig cfg = tiny_config(total);
  const FitResult straight = fit(cloud, cfg, {.progress_every = 0});

  const fs::path dir = fs::temp_directory_path() / "curvrec_resume_test";
  fs::create_directories(dir);
  const fs::path ckpt = dir / "checkpoint.bin";

  TrainConfig first = cfg;
  first.iterations = split;
  // mark the checkpoint as a prefix of the longer schedule: the annealing
  // factor depends on the total, so resume must share cfg.iterations
  first.iterations = total;
  first.checkpoint_every = split;
  FitOptions opts;
  opts.checkpoint_path = ckpt;
  opts.progress_every = 0;

  // run the full schedule but keep the rolling checkpoint written at `split`
  const FitResult full = fit(cloud, first, opts);
  for (std::size_t i = 0; i < full.net.param_count(); ++i)
    CHECK(full.net.params()[i] == straight.net.params()[i]);

  Checkpoint mid = load_checkpoint(ckpt);
  REQUIRE(mid.train.has_value());
  CHECK(mid.train->iteration == static_cast<std::uint64_t>(split));

  FitOptions resume_opts;
  resume_opts.progress_every = 0;
  resume_opts.resume = std::move(mid);
  const FitResult resumed = fit(cloud, cfg, resume_opts);
  REQUIRE(resumed.net.param_count() == straight.net.param_count());
  for (std::size_t i = 0; i < straight.net.param_count(); ++i)
    CHECK(resumed.net.params()[i] == straight.net.params()[i]);
  CHECK(resumed.log.size() == static_cast<std::size_t>(total - split));
  fs::remove_all(dir);
}

TEST_CASE("non-finite loss aborts with the iteration in the message") {
  const PointCloud cloud = small_sphere_cloud(200, 6);
  TrainConfig cfg = tiny_config(5);

  // blow up the parameters so the curvature penalty overflows
  FieldNetwork net(cfg.layer_sizes, cfg.omega0, cfg.input_scale, 0);
  std::vector<double> params(net.params().begin(), net.params().end());
  for (auto& p : params) p *= 1e200;
  Checkpoint poisoned{FieldNetwork::from_params(cfg.layer_sizes, cfg.omega0, cfg.input_scale,
                                                std::move(params)),
                      false,
                      {},
                      TrainState{0, 0, std::vector<double>(net.param_count(), 0.0),
                                 std::vector<double>(net.param_count(), 0.0)}};
  FitOptions opts;
  opts.progress_every = 0;
  opts.resume = std::move(poisoned);
  CHECK_THROWS_AS(fit(cloud, cfg, opts), TrainingError);
}

TEST_CASE("csv log has the documented columns") {
  const PointCloud cloud = small_sphere_cloud(200, 7);
  TrainConfig cfg = tiny_config(3);
  const fs::path dir = fs::temp_directory_path() / "curvrec_log_test";
  fs::create_directories(dir);
  FitOptions opts;
  opts.log_path = dir / "loss_log.csv";
  opts.progress_every = 0;
  fit(cloud, cfg, opts);
  std::ifstream is(opts.log_path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "iteration,tau,eikonal,dm,dnm,reg,total");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  fs::remove_all(dir);
}

}  // TEST_SUITE
