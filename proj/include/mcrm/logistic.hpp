#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcrm/problem.hpp"

namespace mcrm {

/// Binary classification records with features scaled into [0, 1]. The first
/// `train_count` rows form the training split, the rest the test split.
struct LogisticDataset {
  Matrix features;  // one record per row
  Vector labels;    // 0 or 1
  int train_count = 0;
  int test_count = 0;

  int dimension() const { return static_cast<int>(features.cols()); }
  int size() const { return static_cast<int>(features.rows()); }
};

enum class Split { train, test };

struct CsvOptions {
  bool header = false;
  int label_column = -1;  // negative counts from the end
  int train_count = 468;
};

/// Reads comma-separated numeric rows, min-max scales every feature column
/// over the whole file, then splits the first `train_count` rows off for
/// training. Throws ParseError with the offending line.
LogisticDataset load_csv(const std::string& path, const CsvOptions& options);

/// Uniform features in [0,1]^n labelled by the sign of <w, a> with
/// w = (1,...,1,-1,...,-1). Records with |<w, a>| < margin are redrawn, so
/// the set is linearly separable through the origin.
LogisticDataset synthetic_dataset(int n, int train_count, int test_count, std::uint64_t seed,
                                  double margin = 0.1);

/// F_1 = negative log-likelihood on the training split, F_2 = 1/2 ||x||^2.
/// Box [-10, 10]^n.
ProblemInstance logistic_objectives(const LogisticDataset& dataset);

/// Fraction of records in `split` with (sigmoid(<a, x>) >= 1/2) == (b == 1).
double accuracy(const LogisticDataset& dataset, const Vector& x, Split split);

}  // namespace mcrm
