#include "rmtrack/lap.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rmtrack {

namespace {

// Large finite cost standing in for "forbidden": padding guarantees a
// forbidden-free perfect matching always exists, and any matching touching
// one sentinel edge costs more than every sentinel-free alternative.
constexpr double kForbidden = 1e18;

// Shortest-augmenting-path solution of the square min-cost assignment
// problem with potentials. Returns col index per row.
std::vector<int> assign_min_cost(int n, const std::vector<double>& cost) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

Matching max_weight_matching(int rows, int cols, const std::vector<double>& w) {
  if (static_cast<std::size_t>(rows) * cols != w.size())
    throw std::invalid_argument("max_weight_matching: size mismatch");
  Matching out;
  out.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;

  // Pad to (rows+cols) square: dummy columns let rows stay unmatched at
  // cost 0 and dummy rows absorb unused columns.
  const int n = rows + cols;
  std::vector<double> cost(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double wij = w[static_cast<std::size_t>(i) * cols + j];
      double c;
      if (wij == -std::numeric_limits<double>::infinity()) {
        c = kForbidden;
      } else if (!std::isfinite(wij)) {
        throw std::invalid_argument("max_weight_matching: non-finite weight");
      } else if (wij <= 0.0) {
        // Unmatched already dominates; keep the matrix tight so sentinel
        // logic never interacts with real weights.
        c = kForbidden;
      } else {
        c = -wij;
      }
      cost[static_cast<std::size_t>(i) * n + j] = c;
    }
  }
  const std::vector<int> sol = assign_min_cost(n, cost);
  for (int i = 0; i < rows; ++i) {
    const int j = sol[i];
    if (j < cols) {
      const double wij = w[static_cast<std::size_t>(i) * cols + j];
      if (std::isfinite(wij) && wij > 0.0) {
        out.row_to_col[i] = j;
        out.total += wij;
      }
    }
  }
  return out;
}

}  // namespace rmtrack
