// Analytic test problems. Formulas follow the usual multiobjective test-set
// literature; the boxes are the ones used for start-point generation.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mcrm/problem.hpp"

namespace mcrm {

namespace {

using std::cos;
using std::exp;
using std::sin;
using std::sqrt;

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

ProblemInstance skeleton(std::string name, int n, int m, Vector lower, Vector upper, bool convex) {
  ProblemInstance p;
  p.name = std::move(name);
  p.n = n;
  p.m = m;
  p.lower = std::move(lower);
  p.upper = std::move(upper);
  p.convex = convex;
  return p;
}

ProblemInstance ap1() {
  auto p = skeleton("AP1", 2, 3, vec({-10, -10}), vec({10, 10}), true);
  p.objectives = {
      [](const Vector& x) {
        return 0.25 * (std::pow(x[0] - 1, 4) + 2 * std::pow(x[1] - 2, 4));
      },
      [](const Vector& x) { return exp((x[0] + x[1]) / 2) + x[0] * x[0] + x[1] * x[1]; },
      [](const Vector& x) { return (exp(-x[0]) + 2 * exp(-x[1])) / 6; },
  };
  p.gradients = {
      [](const Vector& x) -> Vector {
        return vec({std::pow(x[0] - 1, 3), 2 * std::pow(x[1] - 2, 3)});
      },
      [](const Vector& x) -> Vector {
        const double e = exp((x[0] + x[1]) / 2);
        return vec({0.5 * e + 2 * x[0], 0.5 * e + 2 * x[1]});
      },
      [](const Vector& x) -> Vector { return vec({-exp(-x[0]) / 6, -2 * exp(-x[1]) / 6}); },
  };
  p.hessians = {
      [](const Vector& x) -> Matrix {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 3 * std::pow(x[0] - 1, 2);
        h(1, 1) = 6 * std::pow(x[1] - 2, 2);
        return h;
      },
      [](const Vector& x) -> Matrix {
        const double e = exp((x[0] + x[1]) / 2);
        Matrix h = Matrix::Constant(2, 2, 0.25 * e);
        h.diagonal().array() += 2.0;
        return h;
      },
      [](const Vector& x) -> Matrix {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = exp(-x[0]) / 6;
        h(1, 1) = 2 * exp(-x[1]) / 6;
        return h;
      },
  };
  return p;
}

ProblemInstance ap2() {
  auto p = skeleton("AP2", 1, 2, vec({-100}), vec({100}), true);
  p.objectives = {
      [](const Vector& x) { return x[0] * x[0] - 4; },
      [](const Vector& x) { return (x[0] - 1) * (x[0] - 1); },
  };
  p.gradients = {
      [](const Vector& x) -> Vector { return vec({2 * x[0]}); },
      [](const Vector& x) -> Vector { return vec({2 * (x[0] - 1)}); },
  };
  p.hessians = {
      [](const Vector&) -> Matrix { return Matrix::Constant(1, 1, 2.0); },
      [](const Vector&) -> Matrix { return Matrix::Constant(1, 1, 2.0); },
  };
  return p;
}

ProblemInstance bk1() {
  auto p = skeleton("BK1", 2, 2, vec({-5, -5}), vec({10, 10}), true);
  p.objectives = {
      [](const Vector& x) { return x.squaredNorm(); },
      [](const Vector& x) { return (x.array() - 5.0).matrix().squaredNorm(); },
  };
  p.gradients = {
      [](const Vector& x) -> Vector { return 2.0 * x; },
      [](const Vector& x) -> Vector { return 2.0 * (x.array() - 5.0).matrix(); },
  };
  p.hessians = {
      [](const Vector&) -> Matrix { return 2.0 * Matrix::Identity(2, 2); },
      [](const Vector&) -> Matrix { return 2.0 * Matrix::Identity(2, 2); },
  };
  return p;
}

ProblemInstance dgo1() {
  auto p = skeleton("DGO1", 1, 2, vec({-10}), vec({13}), false);
  p.objectives = {
      [](const Vector& x) { return sin(x[0]); },
      [](const Vector& x) { return sin(x[0] + 0.7); },
  };
  p.gradients = {
      [](const Vector& x) -> Vector { return vec({cos(x[0])}); },
      [](const Vector& x) -> Vector { return vec({cos(x[0] + 0.7)}); },
  };
  p.hessians = {
      [](const Vector& x) -> Matrix { return Matrix::Constant(1, 1, -sin(x[0])); },
      [](const Vector& x) -> Matrix { return Matrix::Constant(1, 1, -sin(x[0] + 0.7)); },
  };
  return p;
}

// Hillermeier: angle a(x) and radius b(x) mapped through cos/sin.
struct Hil1Terms {
  double a, a1, a2, a11, a22;
  double b, b1, b11;
};

Hil1Terms hil1_terms(const Vector& x) {
  constexpr double w = 2 * std::numbers::pi;
  constexpr double k = 2 * std::numbers::pi / 360.0;
  Hil1Terms t{};
  t.a = k * (45 + 40 * sin(w * x[0]) + 25 * sin(w * x[1]));
  t.a1 = k * 40 * w * cos(w * x[0]);
  t.a2 = k * 25 * w * cos(w * x[1]);
  t.a11 = -k * 40 * w * w * sin(w * x[0]);
  t.a22 = -k * 25 * w * w * sin(w * x[1]);
  t.b = 1 + 0.5 * cos(w * x[0]);
  t.b1 = -0.5 * w * sin(w * x[0]);
  t.b11 = -0.5 * w * w * cos(w * x[0]);
  return t;
}

ProblemInstance hil1() {
  auto p = skeleton("Hil1", 2, 2, vec({0, 0}), vec({1, 1}), false);
  p.objectives = {
      [](const Vector& x) {
        const auto t = hil1_terms(x);
        return cos(t.a) * t.b;
      },
      [](const Vector& x) {
        const auto t = hil1_terms(x);
        return sin(t.a) * t.b;
      },
  };
  p.gradients = {
      [](const Vector& x) -> Vector {
        const auto t = hil1_terms(x);
        const double c = cos(t.a), s = sin(t.a);
        return vec({-s * t.a1 * t.b + c * t.b1, -s * t.a2 * t.b});
      },
      [](const Vector& x) -> Vector {
        const auto t = hil1_terms(x);
        const double c = cos(t.a), s = sin(t.a);
        return vec({c * t.a1 * t.b + s * t.b1, c * t.a2 * t.b});
      },
  };
  p.hessians = {
      [](const Vector& x) -> Matrix {
        const auto t = hil1_terms(x);
        const double c = cos(t.a), s = sin(t.a);
        Matrix h(2, 2);
        h(0, 0) = -c * t.a1 * t.a1 * t.b - s * t.a11 * t.b - 2 * s * t.a1 * t.b1 + c * t.b11;
        h(0, 1) = h(1, 0) = -c * t.a1 * t.a2 * t.b - s * t.a2 * t.b1;
        h(1, 1) = -c * t.a2 * t.a2 * t.b - s * t.a22 * t.b;
        return h;
      },
      [](const Vector& x) -> Matrix {
        const auto t = hil1_terms(x);
        const double c = cos(t.a), s = sin(t.a);
        Matrix h(2, 2);
        h(0, 0) = -s * t.a1 * t.a1 * t.b + c * t.a11 * t.b + 2 * c * t.a1 * t.b1 + s * t.b11;
        h(0, 1) = h(1, 0) = -s * t.a1 * t.a2 * t.b + c * t.a2 * t.b1;
        h(1, 1) = -s * t.a2 * t.a2 * t.b + c * t.a22 * t.b;
        return h;
      },
  };
  return p;
}

ProblemInstance lov1() {
  auto p = skeleton("Lov1", 2, 2, vec({-10, -10}), vec({10, 10}), true);
  p.objectives = {
      [](const Vector& x) { return 1.05 * x[0] * x[0] + 0.98 * x[1] * x[1]; },
      [](const Vector& x) {
        return 0.99 * (x[0] - 3) * (x[0] - 3) + 1.03 * (x[1] - 2.5) * (x[1] - 2.5);
      },
  };
  p.gradients = {
      [](const Vector& x) -> Vector { return vec({2.1 * x[0], 1.96 * x[1]}); },
      [](const Vector& x) -> Vector { return vec({1.98 * (x[0] - 3), 2.06 * (x[1] - 2.5)}); },
  };
  p.hessians = {
      [](const Vector&) -> Matrix { return vec({2.1, 1.96}).asDiagonal(); },
      [](const Vector&) -> Matrix { return vec({1.98, 2.06}).asDiagonal(); },
  };
  return p;
}

// Fonseca-Fleming: F = 1 - exp(-||x - shift||^2).
ProblemInstance mop2() {
  auto p = skeleton("MOP2", 2, 2, vec({-1, -1}), vec({1, 1}), false);
  const double c = 1.0 / sqrt(2.0);
  for (double shift : {c, -c}) {
    p.objectives.push_back([shift](const Vector& x) {
      return 1 - exp(-(x.array() - shift).matrix().squaredNorm());
    });
    p.gradients.push_back([shift](const Vector& x) -> Vector {
      const Vector d = (x.array() - shift).matrix();
      return 2 * exp(-d.squaredNorm()) * d;
    });
    p.hessians.push_back([shift](const Vector& x) -> Matrix {
      const Vector d = (x.array() - shift).matrix();
      const double e = exp(-d.squaredNorm());
      return e * (2 * Matrix::Identity(2, 2) - 4 * d * d.transpose());
    });
  }
  return p;
}

// Poloni.
struct Mop3Terms {
  Vector gb1, gb2;   // gradients of B1, B2
  Vector hb1, hb2;   // diagonal Hessians of B1, B2
  double d1, d2;     // A1 - B1, A2 - B2
};

Mop3Terms mop3_terms(const Vector& x) {
  const double s1 = sin(x[0]), c1 = cos(x[0]), s2 = sin(x[1]), c2 = cos(x[1]);
  const double a1 = 0.5 * sin(1.0) - 2 * cos(1.0) + sin(2.0) - 1.5 * cos(2.0);
  const double a2 = 1.5 * sin(1.0) - cos(1.0) + 2 * sin(2.0) - 0.5 * cos(2.0);
  const double b1 = 0.5 * s1 - 2 * c1 + s2 - 1.5 * c2;
  const double b2 = 1.5 * s1 - c1 + 2 * s2 - 0.5 * c2;
  Mop3Terms t;
  t.d1 = a1 - b1;
  t.d2 = a2 - b2;
  t.gb1 = vec({0.5 * c1 + 2 * s1, c2 + 1.5 * s2});
  t.gb2 = vec({1.5 * c1 + s1, 2 * c2 + 0.5 * s2});
  t.hb1 = vec({-0.5 * s1 + 2 * c1, -s2 + 1.5 * c2});
  t.hb2 = vec({-1.5 * s1 + c1, -2 * s2 + 0.5 * c2});
  return t;
}

ProblemInstance mop3() {
  const double pi = std::numbers::pi;
  auto p = skeleton("MOP3", 2, 2, vec({-pi, -pi}), vec({pi, pi}), false);
  p.objectives = {
      [](const Vector& x) {
        const auto t = mop3_terms(x);
        return 1 + t.d1 * t.d1 + t.d2 * t.d2;
      },
      [](const Vector& x) { return (x[0] + 3) * (x[0] + 3) + (x[1] + 1) * (x[1] + 1); },
  };
  p.gradients = {
      [](const Vector& x) -> Vector {
        const auto t = mop3_terms(x);
        return -2 * t.d1 * t.gb1 - 2 * t.d2 * t.gb2;
      },
      [](const Vector& x) -> Vector { return vec({2 * (x[0] + 3), 2 * (x[1] + 1)}); },
  };
  p.hessians = {
      [](const Vector& x) -> Matrix {
        const auto t = mop3_terms(x);
        Matrix h = 2 * t.gb1 * t.gb1.transpose() + 2 * t.gb2 * t.gb2.transpose();
        h.diagonal() -= 2 * t.d1 * t.hb1 + 2 * t.d2 * t.hb2;
        return h;
      },
      [](const Vector&) -> Matrix { return 2 * Matrix::Identity(2, 2); },
  };
  return p;
}

ProblemInstance pnr() {
  auto p = skeleton("PNR", 2, 2, vec({-2, -2}), vec({2, 2}), true);
  p.objectives = {
      [](const Vector& x) {
        const double a = x[0], b = x[1];
        return a * a * a * a + b * b * b * b - a * a + b * b - 10 * a * b + 0.25 * a + 20;
      },
      [](const Vector& x) { return (x[0] - 1) * (x[0] - 1) + x[1] * x[1]; },
  };
  p.gradients = {
      [](const Vector& x) -> Vector {
        const double a = x[0], b = x[1];
        return vec({4 * a * a * a - 2 * a - 10 * b + 0.25, 4 * b * b * b + 2 * b - 10 * a});
      },
      [](const Vector& x) -> Vector { return vec({2 * (x[0] - 1), 2 * x[1]}); },
  };
  p.hessians = {
      [](const Vector& x) -> Matrix {
        Matrix h(2, 2);
        h << 12 * x[0] * x[0] - 2, -10, -10, 12 * x[1] * x[1] + 2;
        return h;
      },
      [](const Vector&) -> Matrix { return 2 * Matrix::Identity(2, 2); },
  };
  return p;
}

ProblemInstance sp1() {
  auto p = skeleton("SP1", 2, 2, vec({-100, -100}), vec({100, 100}), true);
  p.objectives = {
      [](const Vector& x) {
        return (x[0] - 1) * (x[0] - 1) + (x[0] - x[1]) * (x[0] - x[1]);
      },
      [](const Vector& x) {
        return (x[1] - 3) * (x[1] - 3) + (x[0] - x[1]) * (x[0] - x[1]);
      },
  };
  p.gradients = {
      [](const Vector& x) -> Vector {
        return vec({2 * (x[0] - 1) + 2 * (x[0] - x[1]), -2 * (x[0] - x[1])});
      },
      [](const Vector& x) -> Vector {
        return vec({2 * (x[0] - x[1]), 2 * (x[1] - 3) - 2 * (x[0] - x[1])});
      },
  };
  p.hessians = {
      [](const Vector&) -> Matrix {
        Matrix h(2, 2);
        h << 4, -2, -2, 2;
        return h;
      },
      [](const Vector&) -> Matrix {
        Matrix h(2, 2);
        h << 2, -2, -2, 4;
        return h;
      },
  };
  return p;
}

ProblemInstance toi4() {
  auto p = skeleton("Toi4", 4, 2, Vector::Constant(4, -2), Vector::Constant(4, 5), true);
  p.objectives = {
      [](const Vector& x) { return x[0] * x[0] + x[1] * x[1] + 1; },
      [](const Vector& x) {
        return 0.5 * ((x[0] - x[1]) * (x[0] - x[1]) + (x[2] - x[3]) * (x[2] - x[3])) + 1;
      },
  };
  p.gradients = {
      [](const Vector& x) -> Vector { return vec({2 * x[0], 2 * x[1], 0, 0}); },
      [](const Vector& x) -> Vector {
        return vec({x[0] - x[1], x[1] - x[0], x[2] - x[3], x[3] - x[2]});
      },
  };
  p.hessians = {
      [](const Vector&) -> Matrix { return vec({2, 2, 0, 0}).asDiagonal(); },
      [](const Vector&) -> Matrix {
        Matrix h = Matrix::Zero(4, 4);
        h.block<2, 2>(0, 0) << 1, -1, -1, 1;
        h.block<2, 2>(2, 2) << 1, -1, -1, 1;
        return h;
      },
  };
  return p;
}

// Schuetze et al. with lambda = 0.85, written in p = x1 + x2, q = x1 - x2.
ProblemInstance slcdt1() {
  constexpr double lambda = 0.85;
  auto p = skeleton("SLCDT1", 2, 2, vec({-1.5, -1.5}), vec({1.5, 1.5}), false);
  for (double sign : {1.0, -1.0}) {
    p.objectives.push_back([sign](const Vector& x) {
      const double pp = x[0] + x[1], q = x[0] - x[1];
      return 0.5 * (sqrt(1 + pp * pp) + sqrt(1 + q * q) + sign * q) + lambda * exp(-q * q);
    });
    p.gradients.push_back([sign](const Vector& x) -> Vector {
      const double pp = x[0] + x[1], q = x[0] - x[1];
      const double fp = 0.5 * pp / sqrt(1 + pp * pp);
      const double fq = 0.5 * (q / sqrt(1 + q * q) + sign) - 2 * lambda * q * exp(-q * q);
      return vec({fp + fq, fp - fq});
    });
    p.hessians.push_back([](const Vector& x) -> Matrix {
      const double pp = x[0] + x[1], q = x[0] - x[1];
      const double fpp = 0.5 / std::pow(1 + pp * pp, 1.5);
      const double fqq = 0.5 / std::pow(1 + q * q, 1.5) + lambda * (4 * q * q - 2) * exp(-q * q);
      Matrix h(2, 2);
      h << fpp + fqq, fpp - fqq, fpp - fqq, fpp + fqq;
      return h;
    });
  }
  return p;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Registry {
  std::vector<std::pair<std::string, ProblemFactory>> entries;
  std::mutex mutex;  // guards extension only; lookups happen after setup

  Registry() {
    entries = {
        {"AP1", ap1},
        {"AP2", ap2},
        {"BK1", bk1},
        {"DGO1", dgo1},
        {"FDS", [] { return make_fds(5); }},
        {"Hil1", hil1},
        {"JOS1", [] { return make_jos1(100); }},
        {"Lov1", lov1},
        {"MOP2", mop2},
        {"MOP3", mop3},
        {"PNR", pnr},
        {"SP1", sp1},
        {"Toi4", toi4},
        {"SLCDT1", slcdt1},
        {"QP2",
         [] {
           Matrix q1(2, 2), q2(2, 2);
           q1 << 2.0, 0.5, 0.5, 1.0;
           q2 << 1.0, -0.3, -0.3, 3.0;
           auto p = make_quadratic_pair(q1, vec({1.0, -1.0}), q2, vec({-2.0, 3.0}));
           p.name = "QP2";
           return p;
         }},
        {"CR2",
         [] {
           auto p = make_cubic_pair(vec({1.0, 0.0}), vec({0.5, 0.5}), vec({-1.0, 2.0}),
                                    vec({0.0, 1.0}), 1.0);
           p.name = "CR2";
           return p;
         }},
    };
  }

  const ProblemFactory* find(std::string_view name) const {
    const std::string key = lowercase(name);
    for (const auto& [entry_name, factory] : entries) {
      if (lowercase(entry_name) == key) return &factory;
    }
    return nullptr;
  }
};

Registry& registry() {
  static Registry instance;
  return instance;
}

}  // namespace

ProblemInstance make_jos1(int n) {
  if (n <= 0) throw InvalidInput("JOS1 needs n > 0");
  auto p = skeleton("JOS1", n, 2, Vector::Constant(n, -100), Vector::Constant(n, 100), true);
  const double inv_n = 1.0 / n;
  for (double shift : {0.0, 2.0}) {
    p.objectives.push_back([inv_n, shift](const Vector& x) {
      return inv_n * (x.array() - shift).matrix().squaredNorm();
    });
    p.gradients.push_back([inv_n, shift](const Vector& x) -> Vector {
      return 2 * inv_n * (x.array() - shift).matrix();
    });
    p.hessians.push_back([inv_n, n](const Vector&) -> Matrix {
      return 2 * inv_n * Matrix::Identity(n, n);
    });
  }
  return p;
}

ProblemInstance make_fds(int n) {
  if (n <= 0) throw InvalidInput("FDS needs n > 0");
  auto p = skeleton("FDS", n, 3, Vector::Constant(n, -2), Vector::Constant(n, 2), true);
  const double nn = n;
  Vector idx(n), weight3(n);
  for (int i = 0; i < n; ++i) {
    idx[i] = i + 1;
    weight3[i] = (i + 1.0) * (nn - i) / (nn * (nn + 1));
  }
  p.objectives = {
      [idx, nn](const Vector& x) {
        return (idx.array() * (x - idx).array().pow(4)).sum() / (nn * nn);
      },
      [nn](const Vector& x) { return exp(x.sum() / nn) + x.squaredNorm(); },
      [weight3](const Vector& x) { return (weight3.array() * (-x.array()).exp()).sum(); },
  };
  p.gradients = {
      [idx, nn](const Vector& x) -> Vector {
        return (4 * idx.array() * (x - idx).array().cube() / (nn * nn)).matrix();
      },
      [nn](const Vector& x) -> Vector {
        return Vector::Constant(x.size(), exp(x.sum() / nn) / nn) + 2 * x;
      },
      [weight3](const Vector& x) -> Vector {
        return (-weight3.array() * (-x.array()).exp()).matrix();
      },
  };
  p.hessians = {
      [idx, nn](const Vector& x) -> Matrix {
        const Vector d = (12 * idx.array() * (x - idx).array().square() / (nn * nn)).matrix();
        return d.asDiagonal();
      },
      [nn](const Vector& x) -> Matrix {
        const auto size = x.size();
        Matrix h = Matrix::Constant(size, size, exp(x.sum() / nn) / (nn * nn));
        h.diagonal().array() += 2.0;
        return h;
      },
      [weight3](const Vector& x) -> Matrix {
        const Vector d = (weight3.array() * (-x.array()).exp()).matrix();
        return d.asDiagonal();
      },
  };
  return p;
}

ProblemInstance make_quadratic_pair(const Matrix& q1, const Vector& c1, const Matrix& q2,
                                    const Vector& c2) {
  const int n = static_cast<int>(c1.size());
  if (q1.rows() != n || q1.cols() != n || q2.rows() != n || q2.cols() != n || c2.size() != n)
    throw InvalidInput("quadratic pair: inconsistent dimensions");
  auto p = skeleton("QUAD", n, 2, Vector::Constant(n, -5), Vector::Constant(n, 5), true);
  for (const auto& [q, c] : {std::pair{q1, c1}, std::pair{q2, c2}}) {
    const Matrix sym = 0.5 * (q + q.transpose());
    p.objectives.push_back([sym, c](const Vector& x) {
      const Vector d = x - c;
      return 0.5 * d.dot(sym * d);
    });
    p.gradients.push_back([sym, c](const Vector& x) -> Vector { return sym * (x - c); });
    p.hessians.push_back([sym](const Vector&) -> Matrix { return sym; });
  }
  return p;
}

ProblemInstance make_cubic_pair(const Vector& a1, const Vector& b1, const Vector& a2,
                                const Vector& b2, double c) {
  const int n = static_cast<int>(a1.size());
  if (b1.size() != n || a2.size() != n || b2.size() != n)
    throw InvalidInput("cubic pair: inconsistent dimensions");
  if (!(c > 0)) throw InvalidInput("cubic pair: c must be positive");
  auto p = skeleton("CUBIC", n, 2, Vector::Constant(n, -3), Vector::Constant(n, 3), true);
  for (const auto& [a, b] : {std::pair{a1, b1}, std::pair{a2, b2}}) {
    p.objectives.push_back([a, b, c](const Vector& x) {
      const double r = (x - b).norm();
      return 0.5 * (x - a).squaredNorm() + c / 6 * r * r * r;
    });
    p.gradients.push_back([a, b, c](const Vector& x) -> Vector {
      const Vector d = x - b;
      return (x - a) + 0.5 * c * d.norm() * d;
    });
    p.hessians.push_back([b, c, n](const Vector& x) -> Matrix {
      const Vector d = x - b;
      const double r = d.norm();
      Matrix h = Matrix::Identity(n, n) * (1 + 0.5 * c * r);
      if (r > 0) h += 0.5 * c * d * d.transpose() / r;
      return h;
    });
  }
  return p;
}

std::vector<std::string> problem_names() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> names;
  names.reserve(reg.entries.size());
  for (const auto& entry : reg.entries) names.push_back(entry.first);
  return names;
}

bool has_problem(std::string_view name) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  return reg.find(name) != nullptr;
}

ProblemInstance find_problem(std::string_view name) {
  ProblemFactory factory;
  {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    if (const auto* found = reg.find(name)) factory = *found;
  }
  if (!factory) {
    std::string known;
    for (const auto& n : problem_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidInput("unknown problem '" + std::string(name) + "' (registered: " + known + ")");
  }
  auto problem = factory();
  problem.validate();
  return problem;
}

void register_problem(const std::string& name, ProblemFactory factory) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  const std::string key = lowercase(name);
  for (auto& entry : reg.entries) {
    if (lowercase(entry.first) == key) {
      entry.second = std::move(factory);
      return;
    }
  }
  reg.entries.emplace_back(name, std::move(factory));
}

}  // namespace mcrm
