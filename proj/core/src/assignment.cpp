#include "georeward/assignment.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace georeward {

std::vector<std::optional<std::size_t>> max_weight_assignment(const std::vector<double>& weights,
                                                              std::size_t rows, std::size_t cols) {
  if (weights.size() != rows * cols) {
    throw std::invalid_argument("max_weight_assignment: weight matrix size mismatch");
  }
  std::vector<std::optional<std::size_t>> result(rows);
  if (rows == 0 || cols == 0) return result;

  // Square cost matrix, 1-based potentials (classic shortest augmenting path
  // formulation). Padding cells cost 0.
  const std::size_t n = std::max(rows, cols);
  const double max_w = *std::max_element(weights.begin(), weights.end());
  auto cost = [&](std::size_t i, std::size_t j) -> double {
    if (i >= rows || j >= cols) return max_w;
    return max_w - weights[i * cols + j];
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> min_to(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < min_to[j]) {
          min_to[j] = cur;
          way[j] = j0;
        }
        if (min_to[j] < delta) {
          delta = min_to[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          min_to[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match_col[j];
    if (i >= 1 && i <= rows && j <= cols) result[i - 1] = j - 1;
  }
  return result;
}

}  // namespace georeward
