#include "mcrm/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace mcrm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cubic_value(const Vector& g, const Matrix& h, double sigma, const Vector& s) {
  const double r = s.norm();
  return g.dot(s) + 0.5 * s.dot(h * s) + sigma / 6.0 * r * r * r;
}

// Hessian of the shared cubic term (sigma/6)||s||^3.
Matrix cubic_term_hessian(double sigma, const Vector& s) {
  const auto n = s.size();
  const double r = s.norm();
  if (r == 0.0) return Matrix::Zero(n, n);
  return 0.5 * sigma * (r * Matrix::Identity(n, n) + s * s.transpose() / r);
}

}  // namespace

void SubsolverConfig::validate() const {
  if (!(theta >= 0.0)) throw InvalidInput("theta must be nonnegative");
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  if (max_steps <= 0) throw InvalidInput("subsolver_max_steps must be positive");
  if (restarts < 0) throw InvalidInput("subsolver_restarts must be nonnegative");
  if (min_stages <= 0 || max_stages < min_stages)
    throw InvalidInput("smoothing stage counts are inconsistent");
  if (!(mu_factor > 0.0)) throw InvalidInput("smoothing factor must be positive");
}

double SubsolverConfig::residual_bound(double step_norm) const {
  if (theta_mode == ThetaMode::relative) return theta * step_norm * step_norm + slack;
  return tau + slack;
}

CubicMinimum weighted_cubic_min(const Vector& g, const Matrix& h, double sigma) {
  const auto n = g.size();
  if (h.rows() != n || h.cols() != n) throw InvalidInput("cubic minimizer: dimension mismatch");
  if (!(sigma > 0.0)) throw InvalidInput("cubic minimizer: sigma must be positive");
  if (!g.allFinite() || !h.allFinite()) throw InvalidInput("cubic minimizer: non-finite data");

  const Matrix sym = 0.5 * (h + h.transpose());
  const double gnorm = g.norm();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw SubsolverFailure("eigendecomposition failed", {});
  const Vector& lam = eig.eigenvalues();
  const Matrix& q = eig.eigenvectors();
  const Vector a = q.transpose() * g;
  const double lmin = lam[0];

  if (gnorm == 0.0 && lmin >= 0.0) return {Vector::Zero(n), 0.0};

  // Parametrize r = r_min + t so that the shifted diagonal base_i + sigma t / 2
  // is computed without cancellation.
  const double r_min = lmin < 0.0 ? -2.0 * lmin / sigma : 0.0;
  Vector base(n);
  for (Eigen::Index i = 0; i < n; ++i) base[i] = lmin < 0.0 ? lam[i] - lmin : lam[i];

  auto coefficients = [&](double t) {
    Vector c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = base[i] + 0.5 * sigma * t;
      c[i] = a[i] == 0.0 ? 0.0 : -a[i] / d;
    }
    return c;
  };
  auto phi = [&](double t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a[i] != 0.0 && base[i] + 0.5 * sigma * t == 0.0) return kInf;
    }
    return coefficients(t).norm() - (r_min + t);
  };

  const double r_up = (-lmin + std::sqrt(lmin * lmin + 2.0 * sigma * gnorm)) / sigma;
  double t_hi = std::max(r_up - r_min, 0.0);
  bool hard = t_hi == 0.0 || phi(0.0) <= 0.0;
  double t_lo = 0.0;
  if (!hard) {
    for (int k = 0; k < 200 && phi(t_hi) > 0.0; ++k) t_hi = 2.0 * t_hi + 1e-300;
    t_lo = t_hi;
    double f_lo = phi(t_lo);
    int halvings = 0;
    while (f_lo <= 0.0 && halvings < 2200) {
      t_hi = t_lo;
      t_lo *= 0.5;
      f_lo = phi(t_lo);
      ++halvings;
    }
    if (f_lo <= 0.0) hard = true;
  }

  Vector c;
  if (hard) {
    // Root sits at the smallest admissible radius: fill up with a component
    // from the eigenspace of the smallest eigenvalue.
    c = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (base[i] > 0.0) c[i] = -a[i] / base[i];
    }
    const double p = c.norm();
    if (p < r_min) c[0] += std::sqrt(r_min * r_min - p * p);
  } else {
    const double f_lo = phi(t_lo);
    const double f_hi = phi(t_hi);
    std::uintmax_t iterations = 300;
    double root = t_hi;
    if (f_hi != 0.0) {
      const auto bracket = boost::math::tools::toms748_solve(
          phi, t_lo, t_hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iterations);
      if (iterations >= 300) throw SubsolverFailure("cubic minimizer: root-finder did not converge", {});
      root = 0.5 * (bracket.first + bracket.second);
    }
    c = coefficients(root);
  }
  Vector s = q * c;
  return {s, cubic_value(g, sym, sigma, s)};
}

std::pair<Vector, Matrix> weighted_terms(const CubicModel& model, const Vector& lambda) {
  if (lambda.size() != model.m()) throw InvalidInput("weights dimension mismatch");
  Vector g = Vector::Zero(model.n());
  Matrix h = Matrix::Zero(model.n(), model.n());
  for (int j = 0; j < model.m(); ++j) {
    if (lambda[j] == 0.0) continue;
    g += lambda[j] * model.gradient(j);
    h += lambda[j] * model.hessian(j);
  }
  return {g, h};
}

SimplexWeights min_norm_weights(const std::vector<Vector>& gradients) {
  const int m = static_cast<int>(gradients.size());
  if (m == 0) throw InvalidInput("min_norm_weights: no gradients");
  if (m == 1) return {Vector::Ones(1)};
  Matrix gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gram(i, j) = gradients[i].dot(gradients[j]);

  Vector best = Vector::Constant(m, 1.0 / m);
  double best_value = best.dot(gram * best);
  if (m <= 10) {
    // Every support subset: minimize over its affine hull, keep nonnegative solutions.
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
      std::vector<int> idx;
      for (int j = 0; j < m; ++j)
        if (mask & (1u << j)) idx.push_back(j);
      const int k = static_cast<int>(idx.size());
      Matrix kkt = Matrix::Zero(k + 1, k + 1);
      Vector rhs = Vector::Zero(k + 1);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) kkt(a, b) = gram(idx[a], idx[b]);
        kkt(a, k) = 1.0;
        kkt(k, a) = 1.0;
      }
      rhs[k] = 1.0;
      const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      Vector lam = Vector::Zero(m);
      bool feasible = sol.allFinite();
      for (int a = 0; a < k && feasible; ++a) {
        if (sol[a] < -1e-12) feasible = false;
        lam[idx[a]] = std::max(sol[a], 0.0);
      }
      if (!feasible || lam.sum() <= 0.0) continue;
      lam /= lam.sum();
      const double value = lam.dot(gram * lam);
      if (value < best_value) {
        best_value = value;
        best = lam;
      }
    }
  } else {
    const double step = 1.0 / std::max(gram.norm(), 1e-300);
    for (int it = 0; it < 5000; ++it) best = project_simplex(best - step * (gram * best));
  }
  return {project_simplex(best)};
}

double smoothed_value(const CubicModel& model, double mu, const Vector& s) {
  const Vector v = model.values_at_step(s);
  const double vmax = v.maxCoeff();
  return vmax + mu * std::log(((v.array() - vmax) / mu).exp().sum());
}

Vector smoothed_weights(const CubicModel& model, double mu, const Vector& s) {
  const Vector v = model.values_at_step(s);
  const double vmax = v.maxCoeff();
  const Vector w = ((v.array() - vmax) / mu).exp().matrix();
  return w / w.sum();
}

Vector smoothed_gradient(const CubicModel& model, double mu, const Vector& s) {
  const Vector w = smoothed_weights(model, mu, s);
  Vector grad = Vector::Zero(model.n());
  for (int j = 0; j < model.m(); ++j) grad += w[j] * model.grad_at_step(j, s);
  return grad;
}

SmoothedResult smoothed_descent(const CubicModel& model, double mu, const Vector& s0, int budget,
                                double gradient_tol) {
  if (!(mu > 0.0)) throw InvalidInput("smoothing parameter must be positive");
  if (s0.size() != model.n()) throw InvalidInput("start dimension mismatch");
  const int n = model.n();
  const int m = model.m();

  SmoothedResult out;
  out.s = s0;
  double phi = smoothed_value(model, mu, out.s);
  if (!std::isfinite(phi)) throw SubsolverFailure("smoothed model is not finite", {});
  out.phi_start = phi;

  for (int k = 0; k < budget; ++k) {
    const Vector w = smoothed_weights(model, mu, out.s);
    std::vector<Vector> grads(m);
    Vector gbar = Vector::Zero(n);
    for (int j = 0; j < m; ++j) {
      grads[j] = model.grad_at_step(j, out.s);
      gbar += w[j] * grads[j];
    }
    if (gbar.norm() <= gradient_tol) break;

    Matrix hess = cubic_term_hessian(model.sigma(), out.s);
    Matrix spread = -gbar * gbar.transpose();
    for (int j = 0; j < m; ++j) {
      hess += w[j] * model.hessian(j);
      spread += w[j] * grads[j] * grads[j].transpose();
    }
    hess += spread / mu;
    hess = 0.5 * (hess + hess.transpose());

    const double scale = hess.diagonal().cwiseAbs().maxCoeff() + 1e-300;
    Vector d;
    double shift = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::LLT<Matrix> llt(hess + shift * Matrix::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        d = llt.solve(-gbar);
        if (d.allFinite() && gbar.dot(d) < 0.0) break;
      }
      d.resize(0);
      shift = shift == 0.0 ? 1e-12 * scale : 10.0 * shift;
    }
    if (d.size() == 0) d = -gbar;

    const double slope = gbar.dot(d);
    double t = 1.0;
    bool moved = false;
    while (t > 1e-20) {
      const Vector trial = out.s + t * d;
      const double trial_phi = smoothed_value(model, mu, trial);
      if (std::isfinite(trial_phi) && trial_phi <= phi + 1e-4 * t * slope) {
        if (trial_phi <= phi) {
          out.s = trial;
          phi = trial_phi;
          moved = true;
        }
        break;
      }
      t *= 0.5;
    }
    ++out.steps;
    if (!moved) break;
  }
  out.phi_end = phi;
  out.weights = {smoothed_weights(model, mu, out.s)};
  return out;
}

KktCandidate make_candidate(const CubicModel& model, const Vector& s, const SimplexWeights& w) {
  KktCandidate c;
  c.y = model.base() + s;
  c.weights = w;
  c.model_value = model.eval_max(c.y).value;
  c.residual = model.kkt_residual(c.y, w);
  c.step_norm = (c.y - model.base()).norm();
  return c;
}

bool certified(const KktCandidate& candidate, const SubsolverConfig& config) {
  return std::isfinite(candidate.model_value) && candidate.model_value <= 0.0 &&
         candidate.weights.valid(1e-12) && std::isfinite(candidate.residual) &&
         candidate.residual <= config.residual_bound(candidate.step_norm);
}

namespace {

// Newton on the KKT system of min gamma s.t. M^j(s) <= gamma restricted to
// the components carrying weight: sum lambda_j grad M^j = 0, M^j = gamma,
// sum lambda_j = 1.
std::optional<std::pair<Vector, Vector>> kkt_polish(const CubicModel& model, const Vector& s0,
                                                    const Vector& lambda0) {
  const int n = model.n();
  const int m = model.m();
  std::vector<int> active;
  for (int j = 0; j < m; ++j)
    if (lambda0[j] > 1e-8) active.push_back(j);
  if (active.empty()) {
    int jmax = 0;
    lambda0.maxCoeff(&jmax);
    active.push_back(jmax);
  }
  const int k = static_cast<int>(active.size());
  const int dim = n + k + 1;

  Vector z(dim);
  z.head(n) = s0;
  double total = 0.0;
  for (int a = 0; a < k; ++a) total += lambda0[active[a]];
  for (int a = 0; a < k; ++a) z[n + a] = lambda0[active[a]] / total;
  {
    const Vector v = model.values_at_step(s0);
    double gamma = -kInf;
    for (int j : active) gamma = std::max(gamma, v[j]);
    z[n + k] = gamma;
  }

  auto residual = [&](const Vector& zz) {
    const Vector s = zz.head(n);
    Vector r(dim);
    Vector grad = Vector::Zero(n);
    for (int a = 0; a < k; ++a) grad += zz[n + a] * model.grad_at_step(active[a], s);
    r.head(n) = grad;
    for (int a = 0; a < k; ++a) r[n + a] = model.value_at_step(active[a], s) - zz[n + k];
    r[n + k] = zz.segment(n, k).sum() - 1.0;
    return r;
  };

  Vector r = residual(z);
  for (int it = 0; it < 60; ++it) {
    const double rnorm = r.norm();
    if (!std::isfinite(rnorm)) return std::nullopt;
    if (rnorm <= 1e-16 * (1.0 + z.head(n).norm())) break;
    const Vector s = z.head(n);
    Matrix jac = Matrix::Zero(dim, dim);
    Matrix hess = cubic_term_hessian(model.sigma(), s);
    for (int a = 0; a < k; ++a) {
      const Vector gj = model.grad_at_step(active[a], s);
      hess += z[n + a] * model.hessian(active[a]);
      jac.block(0, n + a, n, 1) = gj;
      jac.block(n + a, 0, 1, n) = gj.transpose();
      jac(n + a, n + k) = -1.0;
      jac(n + k, n + a) = 1.0;
    }
    // Every lambda_j sums to one, so the cubic-term Hessian is not weighted.
    jac.topLeftCorner(n, n) = hess;
    const Vector dz = jac.fullPivLu().solve(-r);
    if (!dz.allFinite()) return std::nullopt;
    double t = 1.0;
    bool moved = false;
    while (t > 1e-12) {
      const Vector trial = z + t * dz;
      const Vector tr = residual(trial);
      if (tr.allFinite() && tr.norm() <= (1.0 - 1e-4 * t) * rnorm) {
        z = trial;
        r = tr;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  Vector lambda = Vector::Zero(m);
  for (int a = 0; a < k; ++a) {
    if (z[n + a] < -1e-12) return std::nullopt;
    lambda[active[a]] = std::max(z[n + a], 0.0);
  }
  if (!(lambda.sum() > 0.0)) return std::nullopt;
  lambda /= lambda.sum();
  return std::make_pair(Vector(z.head(n)), lambda);
}

class CandidatePool {
 public:
  CandidatePool(const CubicModel& model, const SubsolverConfig& config)
      : model_(model), config_(config) {}

  void consider(const Vector& s, const Vector& lambda) {
    if (!s.allFinite() || !lambda.allFinite()) return;
    const KktCandidate c = make_candidate(model_, s, SimplexWeights{lambda});
    if (!std::isfinite(c.model_value)) return;
    if (!best_any_ || c.model_value < best_any_->model_value) best_any_ = c;
    if (!certified(c, config_)) return;
    if (!best_ || better(c, *best_)) best_ = c;
  }

  // Global lower bound from weak duality: min_s sum_j lambda_j M^j(s).
  CubicMinimum dual_point(const Vector& lambda) {
    const auto [g, h] = weighted_terms(model_, lambda);
    CubicMinimum cm = weighted_cubic_min(g, h, model_.sigma());
    lower_ = std::max(lower_, cm.value);
    consider(cm.s, lambda);
    primal_starts_.push_back(cm.s);
    return cm;
  }

  bool gap_closed() const {
    if (!best_) return false;
    const double tol = 1e-8 * std::max(std::abs(lower_), std::abs(best_->model_value));
    return best_->model_value - lower_ <= tol;
  }

  double lower() const { return lower_; }
  const std::optional<KktCandidate>& best() const { return best_; }
  const std::optional<KktCandidate>& best_any() const { return best_any_; }
  std::vector<Vector>& primal_starts() { return primal_starts_; }

 private:
  static bool better(const KktCandidate& a, const KktCandidate& b) {
    const double tol = 1e-12 * std::max(std::abs(a.model_value), std::abs(b.model_value));
    if (a.model_value < b.model_value - tol) return true;
    if (a.model_value > b.model_value + tol) return false;
    return a.step_norm < b.step_norm;
  }

  const CubicModel& model_;
  const SubsolverConfig& config_;
  std::optional<KktCandidate> best_;
  std::optional<KktCandidate> best_any_;
  double lower_ = -kInf;
  std::vector<Vector> primal_starts_;
};

void dual_search_pair(CandidatePool& pool, const CubicModel& model) {
  // lambda weights objective 1; d'(lambda) = M^1(s_lambda) - M^2(s_lambda).
  auto slope = [&](double lam) {
    const CubicMinimum cm = pool.dual_point(Eigen::Vector2d(lam, 1.0 - lam));
    return model.value_at_step(0, cm.s) - model.value_at_step(1, cm.s);
  };
  const double at_zero = slope(0.0);
  const double at_one = slope(1.0);
  if (at_zero <= 0.0 || at_one >= 0.0) return;  // maximum at a vertex
  double lo = 0.0, hi = 1.0;
  for (int k = 1; k <= 9; ++k) {
    const double lam = 0.1 * k;
    const double d = slope(lam);
    if (d > 0.0) lo = std::max(lo, lam);
    else hi = std::min(hi, lam);
  }
  for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0) lo = mid;
    else hi = mid;
    if (pool.gap_closed()) break;
  }
}

void dual_search_many(CandidatePool& pool, const CubicModel& model) {
  const int m = model.m();
  Vector lam = Vector::Constant(m, 1.0 / m);
  for (int it = 0; it < 60; ++it) {
    const CubicMinimum cm = pool.dual_point(lam);
    if (pool.gap_closed()) return;
    const Vector v = model.values_at_step(cm.s);
    const double range = v.maxCoeff() - v.minCoeff();
    if (!(range > 0.0)) return;
    const double eta = 2.0 / (range * std::sqrt(it + 1.0));
    lam = (lam.array() * (eta * (v.array() - v.maxCoeff())).exp()).matrix();
    lam /= lam.sum();
  }
}

}  // namespace

KktCandidate solve_subproblem(const CubicModel& model, const SubsolverConfig& config) {
  config.validate();
  const int n = model.n();
  const int m = model.m();

  if (m == 1) {
    const CubicMinimum cm = weighted_cubic_min(model.gradient(0), model.hessian(0), model.sigma());
    KktCandidate c = make_candidate(model, cm.s, SimplexWeights{Vector::Ones(1)});
    if (!certified(c, config)) throw SubsolverFailure("scalar cubic step failed certification", c);
    return c;
  }

  CandidatePool pool(model, config);

  // Warm starts: minimizers of single components and of the uniform blend.
  for (int j = 0; j < m; ++j) pool.dual_point(Vector::Unit(m, j));
  pool.dual_point(Vector::Constant(m, 1.0 / m));
  if (!pool.gap_closed()) {
    if (m == 2) dual_search_pair(pool, model);
    else dual_search_many(pool, model);
  }
  if (pool.gap_closed()) return *pool.best();

  // Smoothed descent from the most promising primal points.
  auto& starts = pool.primal_starts();
  std::stable_sort(starts.begin(), starts.end(), [&](const Vector& a, const Vector& b) {
    return model.values_at_step(a).maxCoeff() < model.values_at_step(b).maxCoeff();
  });
  std::vector<Vector> chosen;
  for (const auto& s : starts) {
    const bool duplicate = std::any_of(chosen.begin(), chosen.end(), [&](const Vector& c) {
      return (c - s).norm() <= 1e-10 * (1.0 + s.norm());
    });
    if (!duplicate) chosen.push_back(s);
    if (chosen.size() >= 3) break;
  }
  double radius = 0.0;
  for (const auto& s : starts) radius = std::max(radius, s.norm());
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  for (int r = 0; r < config.restarts && radius > 0.0; ++r) {
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir[i] = normal(rng);
    chosen.push_back(chosen.front() + radius * dir / std::max(dir.norm(), 1e-300));
  }

  for (const auto& start : chosen) {
    Vector s = start;
    const double scale =
        std::max({model.values_at_step(s).cwiseAbs().maxCoeff(), std::abs(pool.lower()), 1e-300});
    double mu = config.mu_factor * scale;
    for (int stage = 0; stage < config.max_stages; ++stage) {
      const double tol = 1e-3 * config.residual_bound(s.norm());
      const SmoothedResult res = smoothed_descent(model, mu, s, config.max_steps, tol);
      s = res.s;
      pool.consider(s, res.weights.lambda);
      pool.dual_point(res.weights.lambda);
      const bool done = stage + 1 >= config.min_stages &&
                        (pool.gap_closed() || (pool.best() && mu <= 1e-8 * scale));
      if (done) break;
      mu *= 0.1;
    }
    const Vector w = smoothed_weights(model, mu, s);
    if (auto polished = kkt_polish(model, s, w)) pool.consider(polished->first, polished->second);
    if (pool.gap_closed()) break;
  }

  if (!pool.best()) {
    // Fallback: KKT polish from the best uncertified point, then the zero step.
    if (const auto& any = pool.best_any()) {
      const Vector s = any->y - model.base();
      if (auto polished = kkt_polish(model, s, any->weights.lambda))
        pool.consider(polished->first, polished->second);
    }
    std::vector<Vector> g;
    for (int j = 0; j < m; ++j) g.push_back(model.gradient(j));
    pool.consider(Vector::Zero(n), min_norm_weights(g).lambda);
  }
  if (!pool.best()) throw SubsolverFailure("no candidate met the subproblem conditions", pool.best_any());
  return *pool.best();
}

}  // namespace mcrm
