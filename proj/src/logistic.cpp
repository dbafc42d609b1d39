#include "mcrm/logistic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace mcrm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(std::string field, std::size_t line, std::size_t column) {
  const auto first = field.find_first_not_of(" \t\r");
  const auto last = field.find_last_not_of(" \t\r");
  if (first == std::string::npos)
    throw ParseError(line, "column " + std::to_string(column + 1) + ": empty field");
  field = field.substr(first, last - first + 1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(line, "column " + std::to_string(column + 1) + ": not a number: '" + field +
                               "'");
  }
  return value;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogisticDataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (options.header && line_no == 1) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (width == 0) {
      width = fields.size();
      if (width < 2) throw ParseError(line_no, "need at least one feature and a label");
    } else if (fields.size() != width) {
      throw ParseError(line_no, "expected " + std::to_string(width) + " columns, found " +
                                    std::to_string(fields.size()));
    }
    const int label_col = options.label_column < 0
                              ? static_cast<int>(width) + options.label_column
                              : options.label_column;
    if (label_col < 0 || label_col >= static_cast<int>(width))
      throw InvalidInput("label column out of range");
    std::vector<double> row;
    row.reserve(width - 1);
    for (std::size_t c = 0; c < width; ++c) {
      const double v = parse_number(fields[c], line_no, c);
      if (static_cast<int>(c) == label_col) {
        if (v != 0.0 && v != 1.0)
          throw ParseError(line_no, "column " + std::to_string(c + 1) + ": label must be 0 or 1");
        labels.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "dataset has no records");
  if (options.train_count <= 0 || options.train_count > static_cast<int>(rows.size()))
    throw InvalidInput("train_count must lie in [1, " + std::to_string(rows.size()) + "]");

  LogisticDataset data;
  const auto count = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(width - 1);
  data.features.resize(count, n);
  data.labels.resize(count);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) data.features(r, c) = rows[r][c];
    data.labels[r] = labels[r];
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    const double lo = data.features.col(c).minCoeff();
    const double hi = data.features.col(c).maxCoeff();
    if (hi > lo) {
      data.features.col(c) = (data.features.col(c).array() - lo) / (hi - lo);
    } else {
      data.features.col(c).setZero();
    }
  }
  data.train_count = options.train_count;
  data.test_count = static_cast<int>(count) - options.train_count;
  return data;
}

LogisticDataset synthetic_dataset(int n, int train_count, int test_count, std::uint64_t seed,
                                  double margin) {
  if (n <= 0 || train_count <= 0 || test_count < 0)
    throw InvalidInput("synthetic dataset: n and train_count must be positive");
  if (margin < 0) throw InvalidInput("synthetic dataset: margin must be nonnegative");
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = i < (n + 1) / 2 ? 1.0 : -1.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LogisticDataset data;
  const int total = train_count + test_count;
  data.features.resize(total, n);
  data.labels.resize(total);
  for (int r = 0; r < total; ++r) {
    Vector a(n);
    double score = 0;
    do {
      for (int i = 0; i < n; ++i) a[i] = unit(rng);
      score = w.dot(a);
    } while (std::abs(score) < margin);
    data.features.row(r) = a.transpose();
    data.labels[r] = score > 0 ? 1.0 : 0.0;
  }
  data.train_count = train_count;
  data.test_count = test_count;
  return data;
}

ProblemInstance logistic_objectives(const LogisticDataset& dataset) {
  if (dataset.train_count <= 0) throw InvalidInput("logistic problem needs training records");
  const int n = dataset.dimension();
  const Matrix a = dataset.features.topRows(dataset.train_count);
  const Vector b = dataset.labels.head(dataset.train_count);

  ProblemInstance p;
  p.name = "LOGREG";
  p.n = n;
  p.m = 2;
  p.lower = Vector::Constant(n, -10);
  p.upper = Vector::Constant(n, 10);
  p.convex = true;
  p.objectives = {
      [a, b](const Vector& x) {
        const Vector z = a * x;
        double total = 0;
        for (Eigen::Index r = 0; r < z.size(); ++r) total += softplus(z[r]) - b[r] * z[r];
        return total;
      },
      [](const Vector& x) { return 0.5 * x.squaredNorm(); },
  };
  p.gradients = {
      [a, b](const Vector& x) -> Vector {
        const Vector z = a * x;
        Vector residual(z.size());
        for (Eigen::Index r = 0; r < z.size(); ++r) residual[r] = sigmoid(z[r]) - b[r];
        return a.transpose() * residual;
      },
      [](const Vector& x) -> Vector { return x; },
  };
  p.hessians = {
      [a](const Vector& x) -> Matrix {
        const Vector z = a * x;
        Vector w(z.size());
        for (Eigen::Index r = 0; r < z.size(); ++r) {
          const double s = sigmoid(z[r]);
          w[r] = s * (1 - s);
        }
        return a.transpose() * w.asDiagonal() * a;
      },
      [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); },
  };
  return p;
}

double accuracy(const LogisticDataset& dataset, const Vector& x, Split split) {
  const int begin = split == Split::train ? 0 : dataset.train_count;
  const int count = split == Split::train ? dataset.train_count : dataset.test_count;
  if (count <= 0) throw InvalidInput("accuracy: split is empty");
  if (x.size() != dataset.dimension()) throw InvalidInput("accuracy: weight dimension mismatch");
  int correct = 0;
  for (int r = begin; r < begin + count; ++r) {
    const bool predicted = sigmoid(dataset.features.row(r).dot(x)) >= 0.5;
    if (predicted == (dataset.labels[r] == 1.0)) ++correct;
  }
  return static_cast<double>(correct) / count;
}

}  // namespace mcrm
