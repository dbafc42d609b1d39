#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mcrm/logistic.hpp"
#include "mcrm/problem.hpp"

using namespace mcrm;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

// Independent central-difference oracle.
Vector oracle_gradient(const ScalarFn& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, q = x;
    p[i] += h;
    q[i] -= h;
    g[i] = (f(p) - f(q)) / (2 * h);
  }
  return g;
}

Matrix oracle_hessian(const GradientFn& g, const Vector& x, double h) {
  Matrix H(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, q = x;
    p[i] += h;
    q[i] -= h;
    H.col(i) = (g(p) - g(q)) / (2 * h);
  }
  return H;
}

}  // namespace

TEST_CASE("evaluate on reference points") {
  const auto bk1 = find_problem("BK1");
  const Vector f = evaluate(bk1, vec({0, 0}));
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 50.0);

  const auto jos1 = find_problem("JOS1");
  REQUIRE(jos1.n == 100);
  const Vector g = evaluate(jos1, Vector::Ones(100));
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("evaluate at known minimizers") {
  const auto bk1 = find_problem("BK1");
  CHECK(evaluate(bk1, vec({5, 5}))[1] == 0.0);
  const auto jos1 = make_jos1(7);
  CHECK(evaluate(jos1, Vector::Constant(7, 2.0))[1] == 0.0);
  CHECK(evaluate(jos1, Vector::Zero(7))[0] == 0.0);
}

TEST_CASE("evaluate rejects bad input and non-finite values") {
  const auto bk1 = find_problem("BK1");
  CHECK_THROWS_AS(evaluate(bk1, Vector::Zero(3)), InvalidInput);

  ProblemInstance p;
  p.name = "bad";
  p.n = 1;
  p.m = 2;
  p.objectives = {[](const Vector& x) { return x[0]; },
                  [](const Vector&) { return std::nan(""); }};
  p.lower = Vector::Constant(1, -1);
  p.upper = Vector::Constant(1, 1);
  try {
    evaluate(p, Vector::Zero(1));
    FAIL("expected EvaluationFailure");
  } catch (const EvaluationFailure& e) {
    CHECK(e.objective() == 1);
  }
}

TEST_CASE("registry lookup is case-insensitive and lists names on a miss") {
  CHECK(find_problem("bk1").name == find_problem("BK1").name);
  CHECK(has_problem("toi4"));
  CHECK_FALSE(has_problem("NOPE"));
  try {
    find_problem("NOPE");
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    const std::string what = e.what();
    CHECK(what.find("BK1") != std::string::npos);
    CHECK(what.find("SLCDT1") != std::string::npos);
  }
  for (const char* name : {"AP1", "AP2", "BK1", "DGO1", "FDS", "Hil1", "JOS1", "Lov1", "MOP2",
                           "MOP3", "PNR", "SP1", "Toi4", "SLCDT1"}) {
    CHECK_MESSAGE(has_problem(name), name);
  }
}

TEST_CASE("analytic derivatives match central differences on every registered problem") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& name : problem_names()) {
    const auto p = find_problem(name);
    if (!p.has_gradients()) continue;
    for (int trial = 0; trial < 10; ++trial) {
      Vector eta(p.n);
      for (auto& e : eta) e = 0.05 + 0.9 * unit(rng);
      const Vector x = make_start(p, eta);
      for (int j = 0; j < p.m; ++j) {
        const Vector g = p.gradients[j](x);
        const Vector fd = oracle_gradient(p.objectives[j], x, 1e-5);
        CHECK_MESSAGE((g - fd).norm() <= 1e-4 * std::max(1.0, g.norm()), name, " j=", j);
        if (!p.has_hessians()) continue;
        const Matrix H = evaluate_hessian(p, j, x);
        const Matrix fdH = oracle_hessian(p.gradients[j], x, 1e-5);
        CHECK_MESSAGE((H - fdH).norm() <= 1e-4 * std::max(1.0, H.norm()), name, " j=", j);
        CHECK((H - H.transpose()).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("make_start interpolates the box") {
  const auto bk1 = find_problem("BK1");
  const Vector mid = make_start(bk1, 0.5);
  CHECK(mid[0] == 2.5);
  CHECK(mid[1] == 2.5);

  const auto ap2 = find_problem("AP2");
  CHECK(make_start(ap2, 0.25)[0] == -50.0);

  const Vector near_lower = make_start(bk1, 1e-12);
  CHECK((near_lower - bk1.lower).norm() <= 1e-9 * (bk1.upper - bk1.lower).norm());

  CHECK_THROWS_AS(make_start(bk1, 0.0), InvalidInput);
  CHECK_THROWS_AS(make_start(bk1, 1.0), InvalidInput);
  CHECK_THROWS_AS(make_start(bk1, -0.3), InvalidInput);

  // Monotone in eta.
  double prev = -1e300;
  for (double eta = 0.01; eta < 1.0; eta += 0.07) {
    const Vector x = make_start(bk1, eta);
    CHECK(x[0] > prev);
    prev = x[0];
  }
}

TEST_CASE("second_start offsets every component") {
  CHECK(second_start(Vector::Zero(1))[0] == doctest::Approx(1e-4).epsilon(1e-15));
  const Vector x1 = second_start(Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(x1[i] == doctest::Approx(2e-4).epsilon(1e-15));
  const Vector x0 = Vector::LinSpaced(9, -3, 5);
  CHECK((second_start(x0) - x0).norm() == doctest::Approx(1e-4 * 9).epsilon(1e-12));
}

TEST_CASE("scale factors use the infinity norm of the gradient at x0") {
  ProblemInstance p;
  p.name = "lin";
  p.n = 2;
  p.m = 2;
  p.objectives = {[](const Vector& x) { return 0.5 * x[0] - 0.25 * x[1]; },
                  [](const Vector& x) { return 200.0 * x[1] + x[0]; }};
  p.gradients = {[](const Vector&) { return Vector((Vector(2) << 0.5, -0.25).finished()); },
                 [](const Vector&) { return Vector((Vector(2) << 1.0, 200.0).finished()); }};
  p.lower = Vector::Constant(2, -1);
  p.upper = Vector::Constant(2, 1);
  const ScaledProblem s = scale_factors(p, Vector::Zero(2));
  CHECK(s.gamma[0] == 1.0);
  CHECK(s.gamma[1] == 0.005);

  const ScaledProblem fd = scale_factors(p, Vector::Zero(2), GradientSource::central_difference);
  CHECK(fd.gamma[1] == doctest::Approx(0.005).epsilon(1e-8));

  const auto inst = s.instance();
  const Vector x = vec({0.3, -0.7});
  CHECK(inst.objectives[1](x) == 0.005 * p.objectives[1](x));
  CHECK((inst.gradients[1](x) - 0.005 * p.gradients[1](x)).norm() == 0.0);

  const ScaledProblem fixed = with_scale(p, vec({0.1, 1.0}));
  CHECK(fixed.instance().objectives[0](x) == 0.1 * p.objectives[0](x));
  CHECK_THROWS_AS(with_scale(p, vec({0.0, 1.0})), InvalidInput);
  CHECK_THROWS_AS(with_scale(p, vec({1.5, 1.0})), InvalidInput);
}

TEST_CASE("scaling preserves objective order") {
  const auto p = find_problem("MOP2");
  const Vector x0 = make_start(p, 0.3);
  const auto s = scale_factors(p, x0).instance();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int k = 0; k < 50; ++k) {
    Vector x(p.n), y(p.n);
    for (auto& e : x) e = u(rng);
    for (auto& e : y) e = u(rng);
    for (int j = 0; j < p.m; ++j) {
      CHECK((p.objectives[j](x) <= p.objectives[j](y)) == (s.objectives[j](x) <= s.objectives[j](y)));
    }
  }
}

TEST_CASE("logistic objectives") {
  LogisticDataset d;
  d.features.resize(4, 2);
  d.features << 0.1, 0.9, 0.8, 0.2, 0.5, 0.5, 0.0, 1.0;
  d.labels = vec({1, 0, 1, 0});
  d.train_count = 3;
  d.test_count = 1;
  const auto p = logistic_objectives(d);
  CHECK(p.m == 2);
  CHECK(p.lower[0] == -10.0);
  CHECK(p.upper[1] == 10.0);
  const Vector f0 = evaluate(p, Vector::Zero(2));
  CHECK(f0[0] == doctest::Approx(3 * std::log(2.0)).epsilon(1e-14));
  CHECK(f0[1] == 0.0);
  const Vector x = vec({0.4, -1.3});
  CHECK((p.gradients[1](x) - x).norm() == 0.0);
  CHECK((p.gradients[0](x) - oracle_gradient(p.objectives[0], x, 1e-6)).norm() < 1e-8);
  CHECK((p.hessians[0](x) - oracle_hessian(p.gradients[0], x, 1e-6)).norm() < 1e-8);

  LogisticDataset one;
  one.features = Matrix::Constant(1, 1, 1.0);
  one.labels = Vector::Ones(1);
  one.train_count = 1;
  const auto q = logistic_objectives(one);
  CHECK(q.objectives[0](Vector::Constant(1, 60.0)) < 1e-25);
  CHECK(q.objectives[0](Vector::Constant(1, 800.0)) >= 0.0);
  CHECK(std::isfinite(q.objectives[0](Vector::Constant(1, -800.0))));

  LogisticDataset empty = d;
  empty.train_count = 0;
  empty.test_count = 4;
  CHECK_THROWS_AS(logistic_objectives(empty), InvalidInput);
}

TEST_CASE("accuracy") {
  LogisticDataset d;
  d.features.resize(4, 1);
  d.features << 1.0, 0.5, 1.0, 0.2;
  d.labels = vec({1, 1, 1, 0});
  d.train_count = 2;
  d.test_count = 2;
  // Zero model: every record is predicted positive.
  CHECK(accuracy(d, Vector::Zero(1), Split::train) == 1.0);
  CHECK(accuracy(d, Vector::Zero(1), Split::test) == 0.5);

  LogisticDataset sep;
  sep.features.resize(2, 2);
  sep.features << 1.0, 0.0, 0.0, 1.0;
  sep.labels = vec({1, 0});
  sep.train_count = 2;
  CHECK(accuracy(sep, vec({1, -1}), Split::train) == 1.0);
  CHECK(accuracy(sep, vec({-1, 1}), Split::train) == 0.0);
  CHECK_THROWS_AS(accuracy(sep, vec({1, -1}), Split::test), InvalidInput);
}

TEST_CASE("synthetic dataset is scaled, split and separable") {
  const auto d = synthetic_dataset(10, 468, 100, 7);
  CHECK(d.size() == 568);
  CHECK(d.train_count + d.test_count == d.size());
  CHECK(d.features.minCoeff() >= 0.0);
  CHECK(d.features.maxCoeff() <= 1.0);
  Vector w(10);
  w << 1, 1, 1, 1, 1, -1, -1, -1, -1, -1;
  CHECK(accuracy(d, 1e3 * w, Split::train) == 1.0);
  CHECK(accuracy(d, 1e3 * w, Split::test) == 1.0);
  const auto again = synthetic_dataset(10, 468, 100, 7);
  CHECK(again.features == d.features);
}

TEST_CASE("load_csv scales features and reports malformed rows") {
  const std::string path = "mcrm_test_dataset.csv";
  {
    std::ofstream out(path);
    out << "a,b,label\n2,10,1\n4,10,0\n3,10,1\n";
  }
  CsvOptions opts;
  opts.header = true;
  opts.train_count = 2;
  const auto d = load_csv(path, opts);
  CHECK(d.size() == 3);
  CHECK(d.train_count == 2);
  CHECK(d.test_count == 1);
  CHECK(d.features(0, 0) == 0.0);
  CHECK(d.features(1, 0) == 1.0);
  CHECK(d.features(2, 0) == 0.5);
  CHECK(d.features.col(1).isZero());  // constant column
  CHECK(d.labels[1] == 0.0);

  {
    std::ofstream out(path);
    out << "a,b,label\n2,10,1\n4,x,0\n";
  }
  try {
    load_csv(path, opts);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "2,10,1\n4,1,2\n";
  }
  opts.header = false;
  CHECK_THROWS_AS(load_csv(path, opts), ParseError);
  std::remove(path.c_str());
}
