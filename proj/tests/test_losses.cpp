#include <doctest.h>

#include <cmath>

#include "curvrec/losses.hpp"
#include "curvrec/rng.hpp"
#include "oracles.hpp"

using namespace curvrec;
using namespace curvrec::testing;

namespace {

Jet2 jet_with(double value, const Vec3& grad, const Mat3& hess = Mat3::Zero()) {
  Jet2 j;
  j.value = value;
  j.gradient = grad;
  j.hessian = hess;
  return j;
}

Jet2 random_jet(Rng& rng, double min_grad_norm = 0.3) {
  Jet2 j;
  j.value = rng.uniform(-1, 1);
  do {
    j.gradient = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  } while (j.gradient.norm() < min_grad_norm);
  Mat3 a;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a(r, c) = rng.uniform(-2, 2);
  j.hessian = 0.5 * (a + a.transpose());
  return j;
}

// test-side evaluation of the quartic from its published coefficients
double dt_reference(double t) {
  const double pi = M_PI;
  const double c4 = (64.0 * pi - 80.0) / std::pow(pi, 4);
  const double c3 = -(64.0 * pi - 88.0) / std::pow(pi, 3);
  const double c2 = (16.0 * pi - 29.0) / (pi * pi);
  const double c1 = 3.0 / pi;
  return c4 * t * t * t * t + c3 * t * t * t + c2 * t * t + c1 * t;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("eikonal term basics") {
  std::vector<Jet2> unit = {jet_with(0, {1, 0, 0}), jet_with(0, {0, -1, 0})};
  CHECK(eikonal_term(unit) == 0.0);
  std::vector<Jet2> two = {jet_with(0, {2, 0, 0})};
  CHECK(eikonal_term(two) == doctest::Approx(1.0));
  CHECK_THROWS_AS(eikonal_term({}), std::invalid_argument);

  // exact distance field jets have unit gradient everywhere off-center
  SphereField sphere(Vec3::Zero(), 0.4);
  Rng rng(3);
  std::vector<Jet2> jets;
  for (int i = 0; i < 32; ++i) {
    Vec3 x(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    if (x.norm() < 0.05) x = Vec3(0.2, 0.1, 0.1);
    jets.push_back(sphere.eval_jet(x));
  }
  CHECK(eikonal_term(jets) < 1e-9);
}

TEST_CASE("dirichlet terms basics") {
  std::vector<Jet2> zeros = {jet_with(0, {1, 0, 0}), jet_with(0, {1, 0, 0})};
  CHECK(dirichlet_manifold(zeros) == 0.0);
  std::vector<Jet2> mixed = {jet_with(0.1, {1, 0, 0}), jet_with(-0.3, {1, 0, 0})};
  CHECK(dirichlet_manifold(mixed) == doctest::Approx(0.2));

  CHECK(dirichlet_nonmanifold(zeros, 100.0) == doctest::Approx(1.0));
  std::vector<Jet2> tenth = {jet_with(0.1, {1, 0, 0}), jet_with(-0.1, {1, 0, 0})};
  CHECK(dirichlet_nonmanifold(tenth, 100.0) == doctest::Approx(std::exp(-10.0)));
  CHECK(dirichlet_nonmanifold(tenth, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("curvature closed forms: plane, sphere, cylinder") {
  CHECK(gaussian_curvature(jet_with(0.3, {0, 0, 1})).k == 0.0);

  Rng rng(17);
  for (double r : {0.3, 0.4, 1.0}) {
    SphereField sphere(Vec3::Zero(), r);
    for (int i = 0; i < 10; ++i) {
      Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
      dir.normalize();
      const CurvatureResult c = gaussian_curvature(sphere.eval_jet(r * dir));
      CHECK_FALSE(c.guarded);
      CHECK(c.k == doctest::Approx(1.0 / (r * r)).epsilon(1e-9));
    }
  }

  CylinderField cyl(Vec3::Zero(), Vec3(0, 0, 1), 0.3);
  for (int i = 0; i < 10; ++i) {
    const double a = rng.uniform(0, 2 * M_PI);
    const Vec3 x(0.3 * std::cos(a), 0.3 * std::sin(a), rng.uniform(-0.4, 0.4));
    const CurvatureResult c = gaussian_curvature(cyl.eval_jet(x));
    CHECK(std::abs(c.k) < 1e-9);
  }
}

TEST_CASE("curvature matches the tangent-plane eigenvalue oracle") {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Jet2 j = random_jet(rng);
    const CurvatureResult c = gaussian_curvature(j);
    REQUIRE_FALSE(c.guarded);
    CHECK(std::abs(c.k - tangent_plane_curvature(j)) < 1e-8 * (1.0 + std::abs(c.k)));
  }
}

TEST_CASE("curvature scaling law k(sH, sg) = k(H, g)/s") {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const Jet2 j = random_jet(rng);
    const double s = rng.uniform(0.2, 5.0);
    Jet2 scaled = j;
    scaled.gradient *= s;
    scaled.hessian *= s;
    const double k = gaussian_curvature(j).k;
    const double ks = gaussian_curvature(scaled).k;
    CHECK(ks == doctest::Approx(k / s).epsilon(1e-9));
  }
}

TEST_CASE("curvature guarded below the gradient floor") {
  Jet2 j = jet_with(0.1, Vec3(1e-10, 0, 0), Mat3::Identity());
  const CurvatureResult c = gaussian_curvature(j);
  CHECK(c.guarded);
  CHECK(c.k == 0.0);
}

TEST_CASE("curvature adjoint matches finite differences") {
  Rng rng(99);
  const double h = 1e-6;
  for (int draw = 0; draw < 25; ++draw) {
    const Jet2 j = random_jet(rng, 0.5);
    JetAdjoint adj;
    curvature_adjoint(j, 1.0, adj);

    for (int i = 0; i < 3; ++i) {
      Jet2 hi = j, lo = j;
      hi.gradient[i] += h;
      lo.gradient[i] -= h;
      const double fd = (gaussian_curvature(hi).k - gaussian_curvature(lo).k) / (2 * h);
      CHECK(rel_error(fd, adj.gradient[i]) < 1e-5);
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = r; c < 3; ++c) {
        Jet2 hi = j, lo = j;
        hi.hessian(r, c) += h;
        hi.hessian(c, r) = hi.hessian(r, c);
        lo.hessian(r, c) -= h;
        lo.hessian(c, r) = lo.hessian(r, c);
        const double fd = (gaussian_curvature(hi).k - gaussian_curvature(lo).k) / (2 * h);
        const double expected =
            r == c ? adj.hessian(r, r) : adj.hessian(r, c) + adj.hessian(c, r);
        CHECK(rel_error(fd, expected) < 1e-5);
      }
    }
  }
}

TEST_CASE("double trough hits all five interpolation conditions") {
  const DoubleTrough dt;
  CHECK(dt(0.0) == 0.0);
  CHECK(std::abs(dt(M_PI / 4.0) - M_PI / 4.0) < 1e-12);
  CHECK(std::abs(dt(M_PI / 2.0) - 0.25) < 1e-12);
  CHECK(std::abs(fd_derivative([&](double t) { return dt(t); }, M_PI / 4.0, 1e-6)) < 1e-8);
  CHECK(std::abs(fd_derivative([&](double t) { return dt(t); }, M_PI / 2.0, 1e-6)) < 1e-8);

  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform(0.0, 3.0);
    CHECK(dt(t) == doctest::Approx(dt_reference(t)).epsilon(1e-12));
    CHECK(dt.derivative(t) ==
          doctest::Approx(fd_derivative([&](double u) { return dt(u); }, t, 1e-6))
              .epsilon(1e-6));
  }
}

TEST_CASE("general valley depth solves the same conditions") {
  const DoubleTrough quarter = DoubleTrough::with_valley_depth(0.25);
  const DoubleTrough closed;
  for (int i = 0; i < 4; ++i)
    CHECK(quarter.coefficients()[i] == doctest::Approx(closed.coefficients()[i]).epsilon(1e-12));

  const double a = 0.1;
  const DoubleTrough dt = DoubleTrough::with_valley_depth(a);
  CHECK(dt(0.0) == 0.0);
  CHECK(dt(M_PI / 4) == doctest::Approx(M_PI / 4).epsilon(1e-12));
  CHECK(dt(M_PI / 2) == doctest::Approx(a).epsilon(1e-12));
  CHECK(std::abs(dt.derivative(M_PI / 4)) < 1e-12);
  CHECK(std::abs(dt.derivative(M_PI / 2)) < 1e-12);

  CHECK_THROWS_AS(DoubleTrough::with_valley_depth(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DoubleTrough::with_valley_depth(1.0), std::invalid_argument);
}

TEST_CASE("gauss term on analytic stubs") {
  std::vector<Jet2> plane(5, jet_with(0, {0, 0, 1}));
  CHECK(gauss_term(plane, true).value == 0.0);
  CHECK(gauss_term(plane, false).value == 0.0);

  SphereField unit(Vec3::Zero(), 1.0);
  std::vector<Jet2> sphere_jets;
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    Vec3 d(rng.gaussian(), rng.gaussian(), rng.gaussian());
    sphere_jets.push_back(unit.eval_jet(d.normalized()));
  }
  CHECK(gauss_term(sphere_jets, false).value == doctest::Approx(1.0).epsilon(1e-9));

  // |k| = pi/2 lands in the second trough
  const double r = std::sqrt(2.0 / M_PI);
  std::vector<Jet2> tip = {
      jet_with(0, {1, 0, 0}, Vec3(0, 1.0 / r, 1.0 / r).asDiagonal().toDenseMatrix())};
  CHECK(gaussian_curvature(tip[0]).k == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(gauss_term(tip, true).value == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("gauss term excludes guarded points from the mean") {
  std::vector<Jet2> jets = {
      jet_with(0, {1, 0, 0}, Vec3(0, 1, 1).asDiagonal().toDenseMatrix()),  // k = 1
      jet_with(0, {0, 0, 0}),                                              // guarded
  };
  const GaussTermResult r = gauss_term(jets, false);
  CHECK(r.used_count == 1);
  CHECK(r.guarded_count == 1);
  CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("alternative smoothness energies") {
  std::vector<Jet2> zero = {jet_with(0, {0, 0, 0})};
  CHECK(alt_energy(zero, Regularizer::dirichlet_energy) == 0.0);
  CHECK(alt_energy(zero, Regularizer::hessian_l2) == 0.0);
  CHECK(alt_energy(zero, Regularizer::hessian_l1) == 0.0);

  std::vector<Jet2> unit_grad = {jet_with(0, {1, 0, 0})};
  CHECK(alt_energy(unit_grad, Regularizer::dirichlet_energy) == doctest::Approx(0.5));
  CHECK(alt_energy(unit_grad, Regularizer::hessian_l2) == 0.0);

  std::vector<Jet2> ident = {jet_with(0, {1, 0, 0}, Mat3::Identity())};
  CHECK(alt_energy(ident, Regularizer::hessian_l2) == doctest::Approx(3.0));
  CHECK(alt_energy(ident, Regularizer::hessian_l1) == doctest::Approx(3.0));

  CHECK_THROWS_AS(alt_energy(ident, Regularizer::gauss_dt), std::invalid_argument);
}

TEST_CASE("alt energy adjoints match finite differences") {
  Rng rng(12);
  const double h = 1e-7;
  for (Regularizer kind :
       {Regularizer::dirichlet_energy, Regularizer::hessian_l2, Regularizer::hessian_l1}) {
    std::vector<Jet2> jets = {random_jet(rng)};
    std::vector<JetAdjoint> adj(1);
    alt_energy_adjoint(jets, kind, 1.0, adj);
    for (int i = 0; i < 3; ++i) {
      auto hi = jets, lo = jets;
      hi[0].gradient[i] += h;
      lo[0].gradient[i] -= h;
      const double fd = (alt_energy(hi, kind) - alt_energy(lo, kind)) / (2 * h);
      CHECK(rel_error(fd, adj[0].gradient[i]) < 1e-6);
    }
    for (int r = 0; r < 3; ++r) {
      auto hi = jets, lo = jets;
      hi[0].hessian(r, r) += h;
      lo[0].hessian(r, r) -= h;
      const double fd = (alt_energy(hi, kind) - alt_energy(lo, kind)) / (2 * h);
      CHECK(rel_error(fd, adj[0].hessian(r, r)) < 1e-6);
    }
  }
}

TEST_CASE("annealing schedule endpoints are exact") {
  const int T = 10000;
  CHECK(annealing_tau(0, T, AnnealingMode::staged) == 1.0);
  CHECK(annealing_tau(T / 10, T, AnnealingMode::staged) == 1.0);
  CHECK(annealing_tau(T / 5, T, AnnealingMode::staged) == 1.0);
  CHECK(annealing_tau(T / 2, T, AnnealingMode::staged) == 1e-4);
  CHECK(annealing_tau(T, T, AnnealingMode::staged) == 0.0);

  // non-increasing over the whole span
  double prev = 2.0;
  for (int it = 0; it <= T; it += 7) {
    const double tau = annealing_tau(it, T, AnnealingMode::staged);
    CHECK(tau <= prev);
    CHECK(tau >= 0.0);
    prev = tau;
  }

  for (int it : {0, 123, T}) CHECK(annealing_tau(it, T, AnnealingMode::constant) == 1.0);
  for (int it : {0, 123, T}) CHECK(annealing_tau(it, T, AnnealingMode::off) == 0.0);
  CHECK_THROWS_AS(annealing_tau(-1, T, AnnealingMode::staged), std::invalid_argument);
  CHECK_THROWS_AS(annealing_tau(T + 1, T, AnnealingMode::staged), std::invalid_argument);
}

TEST_CASE("total loss: annealed term vanishes at tau 0") {
  Rng rng(6);
  BatchJets jets;
  for (int i = 0; i < 5; ++i) jets.manifold.push_back(random_jet(rng));
  for (int i = 0; i < 5; ++i) jets.uniform.push_back(random_jet(rng));
  for (int i = 0; i < 5; ++i) jets.near_surface.push_back(random_jet(rng));
  LossWeights w;
  const LossBreakdown at0 = total_loss(jets, w, 0.0);
  LossWeights none = w;
  none.regularizer = Regularizer::none;
  const LossBreakdown basic = total_loss(jets, none, 0.0);
  CHECK(at0.total == doctest::Approx(basic.total).epsilon(1e-15));

  BatchJets silent;
  silent.manifold.push_back(jet_with(0, {1, 0, 0}));
  silent.uniform.push_back(jet_with(1e9, {1, 0, 0}));  // exp(-alpha|v|) -> 0
  silent.near_surface.push_back(jet_with(0, {0, 0, 1}));
  const LossBreakdown zero = total_loss(silent, w, 1.0);
  CHECK(zero.total == 0.0);
}

TEST_CASE("total loss matches a hand-computed three-point batch") {
  BatchJets jets;
  jets.manifold.push_back(jet_with(0.1, {2, 0, 0}));
  jets.uniform.push_back(jet_with(-0.05, {0, 0.5, 0}));
  jets.near_surface.push_back(
      jet_with(0.0, {1, 0, 0}, Vec3(0, 1, 1).asDiagonal().toDenseMatrix()));
  LossWeights w;
  const double tau = 0.5;
  const LossBreakdown bd = total_loss(jets, w, tau);

  const double eik = (std::abs(1.0 - 2.0) + std::abs(1.0 - 0.5)) / 2.0;
  const double dm = 0.1;
  const double dnm = std::exp(-100.0 * 0.05);
  const double reg = dt_reference(1.0);  // k = 1 on the unit sphere jet
  CHECK(bd.eikonal == doctest::Approx(eik).epsilon(1e-15));
  CHECK(bd.dirichlet_manifold == doctest::Approx(dm).epsilon(1e-15));
  CHECK(bd.dirichlet_nonmanifold == doctest::Approx(dnm).epsilon(1e-15));
  CHECK(bd.regularizer == doctest::Approx(reg).epsilon(1e-12));
  const double expected = 50.0 * eik + 7000.0 * dm + 600.0 * dnm + tau * 10.0 * reg;
  CHECK(bd.total == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("breakdown identity holds to 1e-12 relative") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    BatchJets jets;
    for (int i = 0; i < 7; ++i) jets.manifold.push_back(random_jet(rng));
    for (int i = 0; i < 9; ++i) jets.uniform.push_back(random_jet(rng));
    for (int i = 0; i < 11; ++i) jets.near_surface.push_back(random_jet(rng));
    for (int i = 0; i < 3; ++i) jets.projected.push_back(random_jet(rng));
    LossWeights w;
    w.regularizer = trial % 2 ? Regularizer::gauss_plain : Regularizer::gauss_dt;
    const double tau = rng.uniform();
    const LossBreakdown bd = total_loss(jets, w, tau);
    const double recomputed = w.lambda_e * bd.eikonal + w.lambda_dm * bd.dirichlet_manifold +
                              w.lambda_dnm * bd.dirichlet_nonmanifold +
                              tau * w.lambda_gauss * bd.regularizer;
    CHECK(std::abs(bd.total - recomputed) <= 1e-12 * std::abs(bd.total));
  }
}

TEST_CASE("smoothness regularizers integrate over the manifold and uniform jets") {
  Rng rng(41);
  BatchJets jets;
  for (int i = 0; i < 4; ++i) jets.manifold.push_back(random_jet(rng));
  for (int i = 0; i < 4; ++i) jets.uniform.push_back(random_jet(rng));
  for (int i = 0; i < 4; ++i) jets.near_surface.push_back(random_jet(rng));
  LossWeights w;
  w.regularizer = Regularizer::hessian_l2;
  const LossBreakdown bd = total_loss(jets, w, 1.0);
  std::vector<Jet2> pq;
  pq.insert(pq.end(), jets.manifold.begin(), jets.manifold.end());
  pq.insert(pq.end(), jets.uniform.begin(), jets.uniform.end());
  CHECK(bd.regularizer == doctest::Approx(alt_energy(pq, Regularizer::hessian_l2)));
}

}  // TEST_SUITE
