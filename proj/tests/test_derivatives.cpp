#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "mcrm/derivatives.hpp"

using namespace mcrm;

namespace {

double cube_sum(const Vector& x) { return x.array().cube().sum(); }
Vector cube_sum_gradient(const Vector& x) { return 3.0 * x.array().square().matrix(); }
Matrix cube_sum_hessian(const Vector& x) { return (6.0 * x).asDiagonal(); }

// Records every distinct point a scalar function is evaluated at.
struct PointLog {
  std::set<std::vector<double>> distinct;
  long long calls = 0;

  ScalarFn wrap(ScalarFn f) {
    return [this, f](const Vector& x) {
      ++calls;
      distinct.insert(std::vector<double>(x.data(), x.data() + x.size()));
      return f(x);
    };
  }
};

ProblemInstance cubic_problem(int n) {
  ProblemInstance p;
  p.name = "cubes";
  p.n = n;
  p.m = 2;
  p.objectives = {cube_sum, [](const Vector& x) { return 0.5 * x.squaredNorm(); }};
  p.gradients = {cube_sum_gradient, [](const Vector& x) { return Vector(x); }};
  p.hessians = {cube_sum_hessian,
                [](const Vector& x) { return Matrix(Matrix::Identity(x.size(), x.size())); }};
  p.lower = Vector::Constant(n, -1);
  p.upper = Vector::Constant(n, 1);
  return p;
}

}  // namespace

TEST_CASE("central gradient on x^3") {
  const Vector g = fd_gradient_central(cube_sum, Vector::Ones(1), 0.1);
  CHECK(g[0] == doctest::Approx(3.01).epsilon(1e-13));
  CHECK(std::abs(g[0] - 3.0) == doctest::Approx(6 * 0.01 / 6).epsilon(1e-10));
}

TEST_CASE("central gradient is exact on quadratics") {
  Matrix q(3, 3);
  q << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  const Vector c = Vector::LinSpaced(3, -1, 1);
  const ScalarFn f = [&](const Vector& x) { return 0.5 * x.dot(q * x) + c.dot(x); };
  const Vector x = Vector::LinSpaced(3, 0.3, 1.7);
  for (double h : {1e-3, 0.1, 2.0}) {
    CHECK((fd_gradient_central(f, x, h) - (q * x + c)).norm() < 1e-9);
  }
}

TEST_CASE("one-sided gradients") {
  const ScalarFn sq = [](const Vector& x) { return x.squaredNorm(); };
  CHECK(fd_gradient_onesided(sq, Vector::Ones(1), 0.1, Side::forward)[0] ==
        doctest::Approx(2.1).epsilon(1e-13));
  CHECK(fd_gradient_onesided(sq, Vector::Ones(1), 0.1, Side::backward)[0] ==
        doctest::Approx(1.9).epsilon(1e-13));
  const ScalarFn affine = [](const Vector& x) { return 2.0 * x[0] - 3.0 * x[1] + 1.0; };
  for (Side side : {Side::forward, Side::backward}) {
    const Vector g = fd_gradient_onesided(affine, Vector::Constant(2, 0.7), 0.25, side);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g[1] == doctest::Approx(-3.0).epsilon(1e-13));
  }
}

TEST_CASE("Hessian from gradients") {
  const Matrix h = fd_hessian_from_gradients(cube_sum_gradient, Vector::Zero(1), 0.1,
                                             GradientStencil::forward);
  CHECK(h(0, 0) == doctest::Approx(0.3).epsilon(1e-13));

  Matrix q(2, 2);
  q << 2, 0.5, 0.5, 1;
  const GradientFn g = [&](const Vector& x) { return Vector(q * x); };
  for (auto v : {GradientStencil::forward, GradientStencil::backward, GradientStencil::central}) {
    const Matrix a = fd_hessian_from_gradients(g, Vector::Constant(2, 0.4), 0.3, v);
    CHECK((a - q).norm() < 1e-12);
    CHECK(a == a.transpose());
  }
}

TEST_CASE("Hessian from values") {
  const ScalarFn f = [](const Vector& x) { return x[0] * x[0] * x[1]; };
  const double h = 0.01;
  const Matrix a = fd_hessian_from_values(f, Vector::Ones(2), h, ValueStencil::cross);
  const double lipschitz = 2.0 * std::sqrt(2.0);  // Frobenius bound on the Hessian variation
  CHECK(std::abs(a(0, 1) - 2.0) <= 2 * 2 * lipschitz * h / 3);
  CHECK(a == a.transpose());

  Matrix q(3, 3);
  q << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  const ScalarFn quad = [&](const Vector& x) { return 0.5 * x.dot(q * x) - x.sum(); };
  for (auto v : {ValueStencil::cross, ValueStencil::forward}) {
    const Matrix b = fd_hessian_from_values(quad, Vector::LinSpaced(3, -0.5, 0.5), 1e-2, v);
    CHECK((b - q).norm() < 1e-8);
    CHECK(b == b.transpose());
  }
}

TEST_CASE("finite differences report non-finite stencil values") {
  const ScalarFn f = [](const Vector& x) { return x[0] > 0.05 ? std::nan("") : x[0]; };
  try {
    fd_gradient_central(f, Vector::Zero(1), 0.1);
    FAIL("expected EvaluationFailure");
  } catch (const EvaluationFailure& e) {
    CHECK(e.point()[0] == doctest::Approx(0.1));
  }
  CHECK_THROWS_AS(fd_hessian_from_values(f, Vector::Zero(1), 0.1, ValueStencil::forward),
                  EvaluationFailure);
  CHECK_THROWS_AS(fd_gradient_central(f, Vector::Zero(1), 0.0), InvalidInput);
}

TEST_CASE("distinct stencil points match the budgets") {
  for (int n : {1, 2, 3, 5}) {
    const Vector x = Vector::LinSpaced(n, 0.1, 0.9);
    {
      PointLog log;
      fd_gradient_central(log.wrap(cube_sum), x, 0.1);
      CHECK(log.calls == 2 * n);
      CHECK(gradient_budget(GradientMode::central_fd, n).values == 2 * n);
    }
    {
      PointLog log;
      fd_gradient_onesided(log.wrap(cube_sum), x, 0.1, Side::forward);
      CHECK(log.calls == n + 1);
      CHECK(gradient_budget(GradientMode::forward_fd, n).values == n + 1);
    }
    {
      PointLog log;
      fd_hessian_from_values(log.wrap(cube_sum), x, 0.1, ValueStencil::cross);
      CHECK(log.calls == static_cast<long long>(log.distinct.size()));
      CHECK(log.calls == 2 * n * n + 1);
      CHECK(hessian_budget(HessianMode::from_values_cross, n).values == log.calls);
    }
    {
      PointLog log;
      fd_hessian_from_values(log.wrap(cube_sum), x, 0.1, ValueStencil::forward);
      CHECK(log.calls == static_cast<long long>(log.distinct.size()));
      CHECK(log.calls == 1 + n + n * (n + 1) / 2);
      CHECK(hessian_budget(HessianMode::from_values_forward, n).values == log.calls);
    }
    {
      long long calls = 0;
      const GradientFn g = [&](const Vector& y) {
        ++calls;
        return cube_sum_gradient(y);
      };
      fd_hessian_from_gradients(g, x, 0.1, GradientStencil::forward);
      CHECK(calls == n + 1);
      calls = 0;
      fd_hessian_from_gradients(g, x, 0.1, GradientStencil::central);
      CHECK(calls == 2 * n);
      CHECK(hessian_budget(HessianMode::from_gradients_forward, n).gradients == n + 1);
      CHECK(hessian_budget(HessianMode::from_gradients_central, n).gradients == 2 * n);
    }
  }
}

TEST_CASE("bundle evaluation counters match the bundle budget") {
  const std::vector<GradientMode> gms{GradientMode::exact, GradientMode::central_fd,
                                      GradientMode::forward_fd, GradientMode::backward_fd};
  const std::vector<HessianMode> hms{HessianMode::exact,
                                     HessianMode::from_gradients_forward,
                                     HessianMode::from_gradients_backward,
                                     HessianMode::from_gradients_central,
                                     HessianMode::from_values_cross,
                                     HessianMode::from_values_forward};
  for (int n : {1, 3, 4}) {
    const auto p = cubic_problem(n);
    const Vector x = Vector::LinSpaced(n, -0.4, 0.6);
    const Vector x_prev = x.array() + 0.01;
    for (auto gm : gms) {
      for (auto hm : hms) {
        const DerivativeMode mode{gm, hm};
        EvalCounter counter;
        build_bundle(p, mode, StepRule{}, x, x_prev, 2, &counter);
        const StencilBudget b = bundle_budget(mode, n);
        CHECK_MESSAGE(counter.f == p.m * b.values, to_string(gm), " ", to_string(hm));
        CHECK(counter.g == p.m * b.gradients);
        CHECK(counter.h == p.m * b.hessians);
        if (mode.uses_values_only()) CHECK(counter.g == 0);
      }
    }
  }
}

TEST_CASE("step sizes") {
  StepRule r;
  r.beta = 0.0;
  r.floor = 0.0;
  CHECK(step_size(r, 1.0, 1, 1, StepContext::combined) == doctest::Approx(1.5).epsilon(1e-15));
  r.beta = 0.5;
  CHECK(step_size(r, 1.0, 4, 1, StepContext::hess_gradients) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(step_size(r, 1.0, 4, 1, StepContext::grad_central) ==
        doctest::Approx(std::sqrt(6.0) / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(step_size(r, 0.5, 4, 1, StepContext::grad_onesided) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(step_size(r, 1.0, 4, 1, StepContext::hess_values) == doctest::Approx(0.75).epsilon(1e-15));
  for (auto ctx : {StepContext::grad_central, StepContext::grad_onesided, StepContext::hess_gradients,
                   StepContext::hess_values, StepContext::combined}) {
    CHECK_THROWS_AS(step_size(r, 0.0, 3, 0, ctx), DegenerateStep);
    double prev = 1e300;
    for (int i = 0; i < 12; ++i) {
      const double h = step_size(r, 0.3, 3, i, ctx);
      CHECK(h < prev);
      prev = h;
    }
    const double h1 = step_size(r, 0.1, 3, 2, ctx);
    const double h2 = step_size(r, 0.2, 3, 2, ctx);
    CHECK(h2 / h1 == doctest::Approx(ctx == StepContext::grad_onesided ? 4.0 : 2.0).epsilon(1e-12));
  }
  // The floor wins for tiny displacements.
  CHECK(step_size(r, 1e-20, 3, 0, StepContext::combined, 1e-9) == 1e-9);
}

TEST_CASE("kappa factors") {
  const auto exact = kappa_factors(DerivativeMode{}, 0.5, 7);
  CHECK(exact.gradient == 0.0);
  CHECK(exact.hessian == 0.0);
  const auto df = kappa_factors(derivative_free_mode(), 0.5, 4);
  CHECK(df.gradient == doctest::Approx(1.0));
  CHECK(df.hessian == doctest::Approx(2.0));
  const auto hg = kappa_factors({GradientMode::exact, HessianMode::from_gradients_central}, 0.0, 9);
  CHECK(hg.gradient == 0.0);
  CHECK(hg.hessian == doctest::Approx(3.0));
}

TEST_CASE("bundles") {
  const auto p = cubic_problem(3);
  const Vector x = Vector::LinSpaced(3, -0.2, 0.5);
  const auto exact = build_bundle(p, DerivativeMode{}, StepRule{}, x, x, 0);
  CHECK(exact.kappa_G == 0.0);
  CHECK(exact.kappa_H == 0.0);
  CHECK(exact.h_used() == 0.0);
  CHECK((exact.gradients[0] - cube_sum_gradient(x)).norm() == 0.0);

  const Vector x_prev = x.array() - 0.05;
  const auto df = build_bundle(p, derivative_free_mode(), StepRule{}, x, x_prev, 3);
  CHECK(df.inner_index == 3);
  CHECK(df.h_used() > 0.0);
  CHECK(df.h_used() == doctest::Approx(step_size(StepRule{}, (x - x_prev).norm(), 3, 3,
                                                 StepContext::combined)));
  for (const auto& h : df.hessians) CHECK(h == h.transpose());
  // The quadratic objective is reproduced to rounding.
  CHECK((df.gradients[1] - x).norm() < 1e-8);
  CHECK((df.hessians[1] - Matrix::Identity(3, 3)).norm() < 1e-6);

  ProblemInstance values_only = p;
  values_only.gradients.clear();
  values_only.hessians.clear();
  CHECK_THROWS_AS(build_bundle(values_only, DerivativeMode{}, StepRule{}, x, x, 0),
                  ConfigurationError);
  CHECK_NOTHROW(build_bundle(values_only, derivative_free_mode(), StepRule{}, x, x_prev, 0));

  StepRule no_floor;
  no_floor.floor = 0.0;
  CHECK_THROWS_AS(build_bundle(p, derivative_free_mode(), no_floor, x, x, 0), DegenerateStep);
}

TEST_CASE("mode names round-trip") {
  for (auto m : {GradientMode::exact, GradientMode::central_fd, GradientMode::forward_fd,
                 GradientMode::backward_fd}) {
    CHECK(parse_gradient_mode(to_string(m)) == m);
  }
  for (auto m : {HessianMode::exact, HessianMode::from_gradients_forward,
                 HessianMode::from_gradients_backward, HessianMode::from_gradients_central,
                 HessianMode::from_values_cross, HessianMode::from_values_forward}) {
    CHECK(parse_hessian_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_gradient_mode("nope"), InvalidInput);
}
