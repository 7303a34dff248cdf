#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "graphda/embedding.hpp"

namespace graphda {

// General sparse real matrix in compressed-row form. Canonical: column
// indices strictly increasing within each row, all values finite.
struct SparseMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<std::int64_t> row_offsets;  // size n_rows+1
  std::vector<int> col_indices;
  std::vector<double> values;

  std::int64_t nnz() const {
    return row_offsets.empty() ? 0 : row_offsets.back();
  }
};

SparseMatrix empty_matrix(int n_rows, int n_cols);

// Builds canonical CSR from unordered (row, col, value) entries. Duplicate
// coordinates are an error.
SparseMatrix from_coo(int n_rows, int n_cols,
                      std::vector<std::tuple<int, int, double>> entries);

// Throws if the structural invariants do not hold.
void validate(const SparseMatrix& m);

bool is_symmetric(const SparseMatrix& m);

// Bipartite block adjacency [[W_UU, R], [R^T, W_II]] over users+items.
// Absent W blocks are zero. Every stored value of the result is 1.0.
// W blocks must be square, symmetric and zero-diagonal.
SparseMatrix build_adjacency(const SparseMatrix& r,
                             const SparseMatrix* w_uu = nullptr,
                             const SparseMatrix* w_ii = nullptr);

// L[i][j] = A[i][j] / sqrt(deg(i) * deg(j)) with deg = row sum. Entries
// touching a zero-degree node become zero instead of dividing by zero.
SparseMatrix normalize_sym(const SparseMatrix& a);

// Sparse-dense products. spmm computes L * X; spmm_transposed computes
// L^T * X without materializing the transpose.
EmbeddingTable spmm(const SparseMatrix& l, const EmbeddingTable& x);
EmbeddingTable spmm_transposed(const SparseMatrix& l, const EmbeddingTable& x);

// COO text serialization: "rows=<n> cols=<n> nnz=<n>" header, then one
// "i\tj\tv" line per nonzero in row-major order. Round-trips bit-exact.
void write_coo(const SparseMatrix& m, const std::string& path);
SparseMatrix read_coo(const std::string& path);

}  // namespace graphda
