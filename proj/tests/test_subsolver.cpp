#include <cmath>
#include <random>

#include "doctest.h"
#include "mcrm/subsolver.hpp"
#include "oracles.hpp"

using namespace mcrm;

namespace {

// Re-checks the three subproblem conditions through the model alone.
void check_conditions(const CubicModel& model, const KktCandidate& c, const SubsolverConfig& cfg) {
  const double value = model.eval_max(c.y).value;
  const double residual = model.kkt_residual(c.y, c.weights);
  const double step = (c.y - model.base()).norm();
  CHECK(value <= cfg.slack);
  CHECK(c.weights.valid());
  const double bound = cfg.theta_mode == ThetaMode::relative ? cfg.theta * step * step : cfg.tau;
  CHECK(residual <= bound + cfg.slack);
  CHECK(value == doctest::Approx(c.model_value).epsilon(1e-12).scale(1.0));
  CHECK(step == doctest::Approx(c.step_norm).epsilon(1e-12).scale(1.0));
}

std::vector<oracle::CubicTerm> terms_of(const CubicModel& m) {
  std::vector<oracle::CubicTerm> t;
  for (int j = 0; j < m.m(); ++j) t.push_back({m.gradient(j), m.hessian(j)});
  return t;
}

}  // namespace

TEST_CASE("weighted cubic minimizer, reference cases") {
  const auto zero = weighted_cubic_min(Vector::Zero(2), Matrix::Identity(2, 2), 1.0);
  CHECK(zero.s.norm() == 0.0);
  CHECK(zero.value == 0.0);

  const auto a = weighted_cubic_min(Vector::Ones(1), Matrix::Zero(1, 1), 6.0);
  CHECK(a.s[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(a.value == doctest::Approx(-2.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-12));
  const auto [s_ref, v_ref] = oracle::scalar_cubic_min(1.0, 0.0, 6.0, -5, 5, 1e-5);
  CHECK(a.value == doctest::Approx(v_ref).epsilon(1e-10));
  CHECK(a.s[0] == doctest::Approx(s_ref).epsilon(1e-6));

  // Hard case: g = 0, H = -2, sigma = 6 gives |s| = 2/3 and value -4/27.
  const auto hard = weighted_cubic_min(Vector::Zero(1), Matrix::Constant(1, 1, -2.0), 6.0);
  const auto [hs, hv] = oracle::scalar_cubic_min(0.0, -2.0, 6.0, -5, 5, 1e-5);
  CHECK(std::abs(hard.s[0]) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(std::abs(hs) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(hard.value == doctest::Approx(hv).epsilon(1e-10));
  CHECK(hard.value == doctest::Approx(-4.0 / 27.0).epsilon(1e-12));
}

TEST_CASE("weighted cubic minimizer against a brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 2;
    const double sigma = 0.1 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    oracle::CubicTerm t{oracle::random_vector(rng, n, 1.0), oracle::random_symmetric(rng, n, 1.5)};
    if (k % 7 == 0) t.g.setZero();
    const auto r = weighted_cubic_min(t.g, t.H, sigma);
    CHECK(r.value <= 0.0);
    CHECK(r.value == doctest::Approx(oracle::cubic(t, sigma, r.s)).epsilon(1e-10).scale(1.0));
    const double ref = oracle::brute_force_min({t}, sigma);
    CHECK(r.value <= ref + 1e-9);
    CHECK(r.value >= ref - 1e-4);
  }
}

TEST_CASE("single objective reduces to the weighted minimizer") {
  std::mt19937_64 rng(77);
  SubsolverConfig cfg;
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 3;
    const Vector g = oracle::random_vector(rng, n, 1.0);
    const Matrix H = oracle::random_symmetric(rng, n, 1.0);
    const double sigma = 0.2 + (k % 5);
    const CubicModel model(Vector::Zero(n), sigma, {g}, {H});
    const auto c = solve_subproblem(model, cfg);
    const auto ref = weighted_cubic_min(g, H, sigma);
    CHECK(c.model_value == doctest::Approx(ref.value).epsilon(1e-10).scale(1.0));
    CHECK(c.weights.lambda[0] == 1.0);
    check_conditions(model, c, cfg);
    std::vector<oracle::CubicTerm> t{{g, H}};
    if (n <= 2) CHECK(std::abs(c.model_value - oracle::brute_force_min(t, sigma)) <= 1e-4);
  }
}

TEST_CASE("opposite gradients give the zero step") {
  const CubicModel model(Vector::Zero(2), 1.0, {Vector::Unit(2, 0), -Vector::Unit(2, 0)},
                         {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  for (auto mode : {ThetaMode::relative, ThetaMode::absolute}) {
    SubsolverConfig cfg;
    cfg.theta_mode = mode;
    const auto c = solve_subproblem(model, cfg);
    CHECK(c.step_norm <= 1e-8);
    CHECK(c.model_value == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(c.weights.lambda[0] == doctest::Approx(0.5).epsilon(1e-6));
    check_conditions(model, c, cfg);
  }
}

TEST_CASE("duplicated objectives match the scalar solution") {
  const Vector g = (Vector(2) << 0.3, -1.1).finished();
  Matrix H(2, 2);
  H << 1.0, 0.4, 0.4, -0.5;
  const CubicModel dup(Vector::Ones(2), 2.0, {g, g}, {H, H});
  const auto c = solve_subproblem(dup, SubsolverConfig{});
  const auto ref = weighted_cubic_min(g, H, 2.0);
  CHECK(c.model_value == doctest::Approx(ref.value).epsilon(1e-8));
  check_conditions(dup, c, SubsolverConfig{});
}

TEST_CASE("two objectives against a brute-force oracle") {
  std::mt19937_64 rng(31337);
  for (int k = 0; k < 40; ++k) {
    const int n = 1 + k % 2;
    std::vector<Vector> g{oracle::random_vector(rng, n, 1.0), oracle::random_vector(rng, n, 1.0)};
    std::vector<Matrix> H{oracle::random_symmetric(rng, n, 1.0), oracle::random_symmetric(rng, n, 1.0)};
    const double sigma = 0.5 + (k % 4);
    const CubicModel model(Vector::Zero(n), sigma, g, H);
    SubsolverConfig cfg;
    cfg.theta_mode = k % 2 ? ThetaMode::relative : ThetaMode::absolute;
    const auto c = solve_subproblem(model, cfg);
    check_conditions(model, c, cfg);
    const double ref = oracle::brute_force_min(terms_of(model), sigma);
    CHECK_MESSAGE(std::abs(c.model_value - ref) <= 1e-4, "k=", k, " got=", c.model_value, " ref=", ref, " step=", c.step_norm);
  }
}

TEST_CASE("three or more objectives are certified") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 3, m = 3 + k % 2;
    std::vector<Vector> g;
    std::vector<Matrix> H;
    for (int j = 0; j < m; ++j) {
      g.push_back(oracle::random_vector(rng, n, 1.0));
      H.push_back(oracle::random_symmetric(rng, n, 1.0));
    }
    const CubicModel model(oracle::random_vector(rng, n, 1.0), 1.0 + k % 3, g, H);
    const auto c = solve_subproblem(model, SubsolverConfig{});
    check_conditions(model, c, SubsolverConfig{});
  }
}

TEST_CASE("smoothed max") {
  std::mt19937_64 rng(4);
  std::vector<Vector> g{oracle::random_vector(rng, 3, 1.0), oracle::random_vector(rng, 3, 1.0),
                        oracle::random_vector(rng, 3, 1.0)};
  std::vector<Matrix> H{oracle::random_symmetric(rng, 3, 1.0), oracle::random_symmetric(rng, 3, 1.0),
                        oracle::random_symmetric(rng, 3, 1.0)};
  const CubicModel model(Vector::Zero(3), 1.5, g, H);

  // Gradient identity: grad Phi = sum_j softmax_j grad M^j.
  for (double mu : {1e-3, 0.1, 1.0, 10.0}) {
    for (int k = 0; k < 5; ++k) {
      const Vector s = oracle::random_vector(rng, 3, 1.0);
      const Vector w = smoothed_weights(model, mu, s);
      Vector expect = Vector::Zero(3);
      for (int j = 0; j < 3; ++j) expect += w[j] * model.grad_component(j, s);
      CHECK((smoothed_gradient(model, mu, s) - expect).norm() <= 1e-10);
      CHECK(SimplexWeights{w}.valid());
      const double phi = smoothed_value(model, mu, s);
      const double mx = model.eval_max(s).value;
      CHECK(phi >= mx - 1e-12);
      CHECK(phi <= mx + mu * std::log(3.0) + 1e-12);
    }
  }
  // Large mu flattens the weights.
  const Vector flat = smoothed_weights(model, 1e9, Vector::Ones(3));
  CHECK((flat - Vector::Constant(3, 1.0 / 3)).norm() < 1e-8);

  for (double mu : {1e-2, 0.3}) {
    const Vector s0 = oracle::random_vector(rng, 3, 1.0);
    const auto r = smoothed_descent(model, mu, s0, 50);
    CHECK(r.phi_end <= r.phi_start);
    CHECK(r.phi_end == doctest::Approx(smoothed_value(model, mu, r.s)));
  }

  const CubicModel same(Vector::Zero(2), 1.0, {Vector::Ones(2), Vector::Ones(2)},
                        {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  const auto r = smoothed_descent(same, 0.1, Vector::Zero(2), 0);
  CHECK((r.weights.lambda - Vector::Constant(2, 0.5)).norm() == 0.0);
}

TEST_CASE("minimum-norm weights") {
  const auto w = min_norm_weights({Vector::Unit(2, 0), -Vector::Unit(2, 0)});
  CHECK(w.lambda[0] == doctest::Approx(0.5));
  const auto v = min_norm_weights({(Vector(2) << 1, 1).finished(), (Vector(2) << 2, 3).finished()});
  CHECK(v.lambda[0] == doctest::Approx(1.0));
  // Brute force over the 1-simplex.
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const Vector a = oracle::random_vector(rng, 3, 1.0), b = oracle::random_vector(rng, 3, 1.0);
    const auto u = min_norm_weights({a, b});
    double best = 1e300;
    for (int i = 0; i <= 100000; ++i) {
      const double t = i / 100000.0;
      best = std::min(best, (t * a + (1 - t) * b).norm());
    }
    CHECK((u.lambda[0] * a + u.lambda[1] * b).norm() <= best + 1e-9);
  }
}

TEST_CASE("config validation") {
  SubsolverConfig c;
  c.theta = -1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.tau = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  CHECK(c.residual_bound(2.0) == doctest::Approx(3.6));
  c.theta_mode = ThetaMode::absolute;
  CHECK(c.residual_bound(2.0) == doctest::Approx(1e-8).epsilon(1e-3));
}
