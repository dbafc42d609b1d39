#pragma once

// Brute-force reference computations used to freeze expected values. They
// share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct CubicTerm {
  Vec g;
  Mat H;
};

inline double cubic(const CubicTerm& t, double sigma, const Vec& s) {
  return t.g.dot(s) + 0.5 * s.dot(t.H * s) + sigma / 6.0 * std::pow(s.norm(), 3);
}

inline double max_cubic(const std::vector<CubicTerm>& terms, double sigma, const Vec& s) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) v = std::max(v, cubic(t, sigma, s));
  return v;
}

// Exact minimum of max_j M^j(r d) over r >= 0 for a unit direction d. Along
// the ray every component is a cubic in r with the same leading term, so the
// minimizer is r = 0, a stationary point of one component, or a crossing of
// two components (a root of a quadratic).
inline double ray_min(const std::vector<CubicTerm>& terms, double sigma, const Vec& d) {
  const auto m = terms.size();
  std::vector<double> a(m), b(m);
  for (std::size_t j = 0; j < m; ++j) {
    a[j] = terms[j].g.dot(d);
    b[j] = d.dot(terms[j].H * d);
  }
  std::vector<double> r{0.0};
  for (std::size_t j = 0; j < m; ++j) {
    // a + b r + sigma r^2 / 2 = 0
    const double disc = b[j] * b[j] - 2.0 * sigma * a[j];
    if (disc >= 0) {
      r.push_back((-b[j] + std::sqrt(disc)) / sigma);
      r.push_back((-b[j] - std::sqrt(disc)) / sigma);
    }
    for (std::size_t k = j + 1; k < m; ++k)
      if (b[j] != b[k]) r.push_back(-2.0 * (a[j] - a[k]) / (b[j] - b[k]));
  }
  double best = std::numeric_limits<double>::infinity();
  for (double t : r) {
    if (!(t >= 0)) continue;
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      v = std::max(v, a[j] * t + 0.5 * b[j] * t * t + sigma / 6.0 * t * t * t);
    best = std::min(best, v);
  }
  return best;
}

// Minimum of max_j M^j for n <= 2: exact along each ray, dense angular grid
// plus golden-section refinement around the best angles.
inline double brute_force_min(const std::vector<CubicTerm>& terms, double sigma, int grid = 20000) {
  const auto n = terms.front().g.size();
  if (n == 1) {
    return std::min(ray_min(terms, sigma, Vec::Constant(1, 1.0)),
                    ray_min(terms, sigma, Vec::Constant(1, -1.0)));
  }
  auto V = [&](double phi) {
    Vec d(2);
    d << std::cos(phi), std::sin(phi);
    return ray_min(terms, sigma, d);
  };
  const double pi = std::acos(-1.0), h = 2 * pi / grid;
  std::vector<std::pair<double, double>> cells;
  for (int k = 0; k < grid; ++k) cells.emplace_back(V(k * h), k * h);
  const std::size_t keep = std::min<std::size_t>(10, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + keep, cells.end());
  double best = cells.front().first;
  const double golden = (std::sqrt(5.0) - 1) / 2;
  for (std::size_t k = 0; k < keep; ++k) {
    double lo = cells[k].second - h, hi = cells[k].second + h;
    for (int it = 0; it < 100; ++it) {
      const double c = hi - golden * (hi - lo), e = lo + golden * (hi - lo);
      if (V(c) < V(e)) hi = e;
      else lo = c;
    }
    best = std::min(best, V(0.5 * (lo + hi)));
  }
  return best;
}

// One-dimensional cubic q(s) = g s + H s^2 / 2 + sigma |s|^3 / 6 on a fine
// grid over [lo, hi] followed by golden-section refinement.
inline std::pair<double, double> scalar_cubic_min(double g, double H, double sigma, double lo,
                                                  double hi, double step) {
  auto q = [&](double s) { return g * s + 0.5 * H * s * s + sigma / 6 * std::pow(std::abs(s), 3); };
  double best_s = 0.0, best = q(0.0);
  for (double s = lo; s <= hi; s += step) {
    if (q(s) < best) {
      best = q(s);
      best_s = s;
    }
  }
  double a = best_s - step, b = best_s + step;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int k = 0; k < 200; ++k) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (q(c) < q(d)) b = d;
    else a = c;
  }
  const double s = 0.5 * (a + b);
  return {s, q(s)};
}

// Central-difference gradient of f.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

inline Mat random_symmetric(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = N(rng);
  return scale * 0.5 * (a + a.transpose());
}

inline Vec random_vector(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec v(n);
  for (auto& e : v) e = scale * N(rng);
  return v;
}

}  // namespace oracle
