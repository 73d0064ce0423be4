#pragma once

#include <vector>

namespace rmtrack {

struct Matching {
  std::vector<int> row_to_col;  // size rows; -1 = unmatched
  double total = 0.0;           // sum of matched weights
};

/// Maximum-total-weight partial matching on a rows x cols weight matrix
/// (row-major). Any row or column may stay unmatched and contributes 0, so
/// edges with non-positive weight are never chosen; -infinity marks a
/// forbidden pair. Callers that want maximum cardinality first shift their
/// weights positive before calling. Exact and deterministic
/// (shortest-augmenting-path assignment on a padded square matrix).
Matching max_weight_matching(int rows, int cols, const std::vector<double>& w);

}  // namespace rmtrack
