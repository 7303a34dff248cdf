#include "graphda/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "graphda/textio.hpp"

namespace graphda {

SparseMatrix empty_matrix(int n_rows, int n_cols) {
  SparseMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_offsets.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  return m;
}

SparseMatrix from_coo(int n_rows, int n_cols,
                      std::vector<std::tuple<int, int, double>> entries) {
  for (const auto& [r, c, v] : entries) {
    if (r < 0 || r >= n_rows || c < 0 || c >= n_cols) {
      throw std::invalid_argument("coo entry out of bounds");
    }
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite coo value");
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              return std::tie(std::get<0>(a), std::get<1>(a)) <
                     std::tie(std::get<0>(b), std::get<1>(b));
            });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (std::get<0>(entries[k]) == std::get<0>(entries[k - 1]) &&
        std::get<1>(entries[k]) == std::get<1>(entries[k - 1])) {
      throw std::invalid_argument("duplicate coo coordinate");
    }
  }
  SparseMatrix m = empty_matrix(n_rows, n_cols);
  m.col_indices.reserve(entries.size());
  m.values.reserve(entries.size());
  for (const auto& [r, c, v] : entries) {
    ++m.row_offsets[r + 1];
    m.col_indices.push_back(c);
    m.values.push_back(v);
  }
  for (int r = 0; r < n_rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
  return m;
}

void validate(const SparseMatrix& m) {
  if (m.n_rows < 0 || m.n_cols < 0) {
    throw std::invalid_argument("negative dimensions");
  }
  if (m.row_offsets.size() != static_cast<std::size_t>(m.n_rows) + 1) {
    throw std::invalid_argument("row_offsets size mismatch");
  }
  if (m.row_offsets.front() != 0) {
    throw std::invalid_argument("row_offsets must start at 0");
  }
  for (int r = 0; r < m.n_rows; ++r) {
    if (m.row_offsets[r + 1] < m.row_offsets[r]) {
      throw std::invalid_argument("row_offsets not monotone");
    }
    for (std::int64_t k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      if (m.col_indices[k] < 0 || m.col_indices[k] >= m.n_cols) {
        throw std::invalid_argument("column index out of range");
      }
      if (k > m.row_offsets[r] && m.col_indices[k] <= m.col_indices[k - 1]) {
        throw std::invalid_argument("columns not strictly increasing");
      }
      if (!std::isfinite(m.values[k])) {
        throw std::invalid_argument("non-finite value");
      }
    }
  }
  if (m.col_indices.size() != static_cast<std::size_t>(m.row_offsets.back()) ||
      m.values.size() != m.col_indices.size()) {
    throw std::invalid_argument("nnz arrays inconsistent with row_offsets");
  }
}

namespace {

SparseMatrix transpose(const SparseMatrix& m) {
  SparseMatrix t = empty_matrix(m.n_cols, m.n_rows);
  t.col_indices.resize(m.col_indices.size());
  t.values.resize(m.values.size());
  for (int c : m.col_indices) ++t.row_offsets[c + 1];
  for (int r = 0; r < t.n_rows; ++r) t.row_offsets[r + 1] += t.row_offsets[r];
  std::vector<std::int64_t> next(t.row_offsets.begin(),
                                 t.row_offsets.end() - 1);
  for (int r = 0; r < m.n_rows; ++r) {
    for (std::int64_t k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      std::int64_t slot = next[m.col_indices[k]]++;
      t.col_indices[slot] = r;  // rows visited in order keeps columns sorted
      t.values[slot] = m.values[k];
    }
  }
  return t;
}

}  // namespace

bool is_symmetric(const SparseMatrix& m) {
  if (m.n_rows != m.n_cols) return false;
  SparseMatrix t = transpose(m);
  return t.row_offsets == m.row_offsets && t.col_indices == m.col_indices &&
         t.values == m.values;
}

SparseMatrix build_adjacency(const SparseMatrix& r, const SparseMatrix* w_uu,
                             const SparseMatrix* w_ii) {
  const int n_users = r.n_rows;
  const int n_items = r.n_cols;
  if (w_uu) {
    if (w_uu->n_rows != n_users || w_uu->n_cols != n_users) {
      throw std::invalid_argument("W_UU dimensions do not match user count");
    }
    if (!is_symmetric(*w_uu)) {
      throw std::invalid_argument("W_UU must be symmetric");
    }
  }
  if (w_ii) {
    if (w_ii->n_rows != n_items || w_ii->n_cols != n_items) {
      throw std::invalid_argument("W_II dimensions do not match item count");
    }
    if (!is_symmetric(*w_ii)) {
      throw std::invalid_argument("W_II must be symmetric");
    }
  }
  auto check_no_diagonal = [](const SparseMatrix& w, const char* name) {
    for (int i = 0; i < w.n_rows; ++i) {
      for (std::int64_t k = w.row_offsets[i]; k < w.row_offsets[i + 1]; ++k) {
        if (w.col_indices[k] == i) {
          throw std::invalid_argument(std::string(name) +
                                      " must have a zero diagonal");
        }
      }
    }
  };
  if (w_uu) check_no_diagonal(*w_uu, "W_UU");
  if (w_ii) check_no_diagonal(*w_ii, "W_II");

  SparseMatrix rt = transpose(r);
  const int n = n_users + n_items;
  SparseMatrix a = empty_matrix(n, n);
  a.col_indices.reserve(2 * r.nnz() + (w_uu ? w_uu->nnz() : 0) +
                        (w_ii ? w_ii->nnz() : 0));

  auto append_row = [&a](const SparseMatrix& src, int row, int col_offset) {
    for (std::int64_t k = src.row_offsets[row]; k < src.row_offsets[row + 1];
         ++k) {
      a.col_indices.push_back(src.col_indices[k] + col_offset);
      a.values.push_back(1.0);  // binary graph regardless of input weights
    }
  };
  for (int u = 0; u < n_users; ++u) {
    if (w_uu) append_row(*w_uu, u, 0);
    append_row(r, u, n_users);
    a.row_offsets[u + 1] = static_cast<std::int64_t>(a.col_indices.size());
  }
  for (int i = 0; i < n_items; ++i) {
    append_row(rt, i, 0);
    if (w_ii) append_row(*w_ii, i, n_users);
    a.row_offsets[n_users + i + 1] =
        static_cast<std::int64_t>(a.col_indices.size());
  }
  return a;
}

SparseMatrix normalize_sym(const SparseMatrix& a) {
  if (a.n_rows != a.n_cols) {
    throw std::invalid_argument("normalize_sym needs a square matrix");
  }
  std::vector<double> degree(a.n_rows, 0.0);
  for (int r = 0; r < a.n_rows; ++r) {
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
      degree[r] += a.values[k];
    }
  }
  SparseMatrix l = a;
  for (int r = 0; r < l.n_rows; ++r) {
    for (std::int64_t k = l.row_offsets[r]; k < l.row_offsets[r + 1]; ++k) {
      double dprod = degree[r] * degree[l.col_indices[k]];
      l.values[k] = dprod > 0.0 ? l.values[k] / std::sqrt(dprod) : 0.0;
    }
  }
  return l;
}

EmbeddingTable spmm(const SparseMatrix& l, const EmbeddingTable& x) {
  if (l.n_cols != x.n_rows) {
    throw std::invalid_argument("spmm dimension mismatch");
  }
  EmbeddingTable out(l.n_rows, x.dim);
  const int dim = x.dim;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < l.n_rows; ++r) {
    double* dst = out.row(r);
    for (std::int64_t k = l.row_offsets[r]; k < l.row_offsets[r + 1]; ++k) {
      const double v = l.values[k];
      const double* src = x.row(l.col_indices[k]);
      for (int d = 0; d < dim; ++d) dst[d] += v * src[d];
    }
  }
  return out;
}

EmbeddingTable spmm_transposed(const SparseMatrix& l, const EmbeddingTable& x) {
  if (l.n_rows != x.n_rows) {
    throw std::invalid_argument("spmm_transposed dimension mismatch");
  }
  EmbeddingTable out(l.n_cols, x.dim);
  const int dim = x.dim;
  // Scatter over rows; kept sequential so accumulation order is fixed.
  for (int r = 0; r < l.n_rows; ++r) {
    const double* src = x.row(r);
    for (std::int64_t k = l.row_offsets[r]; k < l.row_offsets[r + 1]; ++k) {
      const double v = l.values[k];
      double* dst = out.row(l.col_indices[k]);
      for (int d = 0; d < dim; ++d) dst[d] += v * src[d];
    }
  }
  return out;
}

void write_coo(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "rows=" << m.n_rows << " cols=" << m.n_cols << " nnz=" << m.nnz()
      << "\n";
  for (int r = 0; r < m.n_rows; ++r) {
    for (std::int64_t k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
      out << r << '\t' << m.col_indices[k] << '\t' << format_f64(m.values[k])
          << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SparseMatrix read_coo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto fail = [&](const std::string& what) {
    return std::runtime_error(path + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  strip_cr(line);
  int n_rows = -1, n_cols = -1;
  std::int64_t nnz = -1;
  for (auto part : split_fields(line, ' ')) {
    if (part.starts_with("rows=")) {
      if (auto v = parse_i64(part.substr(5))) n_rows = static_cast<int>(*v);
    } else if (part.starts_with("cols=")) {
      if (auto v = parse_i64(part.substr(5))) n_cols = static_cast<int>(*v);
    } else if (part.starts_with("nnz=")) {
      if (auto v = parse_i64(part.substr(4))) nnz = *v;
    }
  }
  if (n_rows < 0 || n_cols < 0 || nnz < 0) {
    throw fail("malformed header: " + line);
  }

  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(nnz);
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3) throw fail("malformed row: " + line);
    auto r = parse_i64(fields[0]);
    auto c = parse_i64(fields[1]);
    auto v = parse_f64(fields[2]);
    if (!r || !c || !v) throw fail("malformed row: " + line);
    entries.emplace_back(static_cast<int>(*r), static_cast<int>(*c), *v);
  }
  if (static_cast<std::int64_t>(entries.size()) != nnz) {
    throw fail("nnz mismatch: header says " + std::to_string(nnz) + ", got " +
               std::to_string(entries.size()));
  }
  SparseMatrix m = from_coo(n_rows, n_cols, std::move(entries));
  validate(m);
  return m;
}

}  // namespace graphda
