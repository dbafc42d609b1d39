#include "mcrm/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mcrm {

SimplexWeights SimplexWeights::uniform(int m) {
  if (m <= 0) throw InvalidInput("simplex dimension must be positive");
  return {Vector::Constant(m, 1.0 / m)};
}

SimplexWeights SimplexWeights::vertex(int m, int j) {
  if (j < 0 || j >= m) throw InvalidInput("simplex vertex index out of range");
  return {Vector::Unit(m, j)};
}

bool SimplexWeights::valid(double tol) const {
  return lambda.size() > 0 && (lambda.array() >= 0.0).all() && std::abs(lambda.sum() - 1.0) <= tol;
}

Vector project_simplex(const Vector& v) {
  const auto m = v.size();
  std::vector<double> sorted(v.data(), v.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  Vector out = (v.array() - shift).max(0.0).matrix();
  const double total = out.sum();
  if (total > 0.0) out /= total;  // absorb rounding so the sum is 1 to the last bit or two
  return out;
}

CubicModel::CubicModel(Vector base, double sigma, std::vector<Vector> gradients,
                       std::vector<Matrix> hessians)
    : base_(std::move(base)),
      sigma_(sigma),
      gradients_(std::move(gradients)),
      hessians_(std::move(hessians)) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw InvalidInput("model sigma must be positive");
  if (gradients_.empty() || gradients_.size() != hessians_.size())
    throw InvalidInput("model needs one (gradient, Hessian) pair per objective");
  const auto n = base_.size();
  for (std::size_t j = 0; j < gradients_.size(); ++j) {
    if (gradients_[j].size() != n || hessians_[j].rows() != n || hessians_[j].cols() != n)
      throw InvalidInput("model term dimension mismatch");
  }
}

CubicModel::CubicModel(const DerivativeBundle& bundle, double sigma)
    : CubicModel(bundle.point, sigma, bundle.gradients, bundle.hessians) {}

void CubicModel::check_index(int j) const {
  if (j < 0 || j >= m()) throw InvalidInput("model component index out of range");
}

double CubicModel::value_at_step(int j, const Vector& s) const {
  check_index(j);
  const double r = s.norm();
  return gradients_[j].dot(s) + 0.5 * s.dot(hessians_[j] * s) + sigma_ / 6.0 * r * r * r;
}

Vector CubicModel::grad_at_step(int j, const Vector& s) const {
  check_index(j);
  return gradients_[j] + hessians_[j] * s + (0.5 * sigma_ * s.norm()) * s;
}

Vector CubicModel::values_at_step(const Vector& s) const {
  Vector values(m());
  for (int j = 0; j < m(); ++j) values[j] = value_at_step(j, s);
  return values;
}

double CubicModel::eval_component(int j, const Vector& y) const {
  if (y.size() != base_.size()) throw InvalidInput("model point dimension mismatch");
  return value_at_step(j, y - base_);
}

Vector CubicModel::grad_component(int j, const Vector& y) const {
  if (y.size() != base_.size()) throw InvalidInput("model point dimension mismatch");
  return grad_at_step(j, y - base_);
}

CubicModel::MaxValue CubicModel::eval_max(const Vector& y) const {
  if (y.size() != base_.size()) throw InvalidInput("model point dimension mismatch");
  const Vector values = values_at_step(y - base_);
  MaxValue out{values.maxCoeff(), {}};
  const double cut = out.value - 1e-12 * (1.0 + std::abs(out.value));
  for (int j = 0; j < m(); ++j) {
    if (values[j] >= cut) out.active_set.push_back(j);
  }
  return out;
}

double CubicModel::kkt_residual(const Vector& y, const SimplexWeights& w) const {
  if (w.lambda.size() != m()) throw InvalidInput("weights dimension mismatch");
  const Vector s = y - base_;
  Vector total = Vector::Zero(n());
  for (int j = 0; j < m(); ++j) total += w.lambda[j] * grad_at_step(j, s);
  return total.norm();
}

}  // namespace mcrm
