#pragma once

#include <cstddef>
#include <vector>

namespace graphda {

// Dense row-major embedding table. When it covers a bipartite graph the
// user rows occupy [0, n_users) and the item rows [n_users, n_users+n_items).
struct EmbeddingTable {
  int n_rows = 0;
  int dim = 0;
  std::vector<double> data;

  EmbeddingTable() = default;
  EmbeddingTable(int rows, int d)
      : n_rows(rows), dim(d), data(static_cast<std::size_t>(rows) * d, 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * dim; }
  const double* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * dim;
  }
};

}  // namespace graphda
