#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace georeward {

/// Maximum-weight bipartite assignment (Hungarian method, O(n^3)).
/// `weights` is row-major rows x cols. Returns, for each row, the assigned
/// column or nullopt. Every row/column is used at most once; the sum of
/// assigned weights is maximal. Rectangular inputs are padded internally.
std::vector<std::optional<std::size_t>> max_weight_assignment(const std::vector<double>& weights,
                                                              std::size_t rows, std::size_t cols);

}  // namespace georeward
