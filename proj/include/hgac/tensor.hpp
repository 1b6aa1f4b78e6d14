#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hgac/common.hpp"

namespace hgac {

/// Dense row-major batch of matrices, shape (batch, rows, cols).
/// Parameters and single instances use batch == 1; ops broadcast over the
/// batch dimension where one side has batch 1. All storage is 64-bit.
struct Tensor {
  int batch = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int b, int r, int c, double fill = 0.0)
      : batch(b), rows(r), cols(c), v(static_cast<size_t>(b) * r * c, fill) {
    if (b < 1 || r < 1 || c < 1)
      throw ConfigError("Tensor: dimensions must be positive");
  }

  static Tensor matrix(int r, int c, double fill = 0.0) { return Tensor(1, r, c, fill); }

  static Tensor identity(int n) {
    Tensor t(1, n, n);
    for (int i = 0; i < n; ++i) t.at(0, i, i) = 1.0;
    return t;
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows_in) {
    if (rows_in.empty()) throw ConfigError("Tensor::from_rows: no rows");
    Tensor t(1, static_cast<int>(rows_in.size()), static_cast<int>(rows_in[0].size()));
    for (size_t i = 0; i < rows_in.size(); ++i) {
      if (rows_in[i].size() != rows_in[0].size())
        throw ConfigError("Tensor::from_rows: ragged rows");
      std::copy(rows_in[i].begin(), rows_in[i].end(), t.v.begin() + i * t.cols);
    }
    return t;
  }

  size_t size() const { return v.size(); }
  size_t slice_size() const { return static_cast<size_t>(rows) * cols; }

  double* data(int b = 0) { return v.data() + static_cast<size_t>(b) * slice_size(); }
  const double* data(int b = 0) const { return v.data() + static_cast<size_t>(b) * slice_size(); }

  double& at(int b, int r, int c) { return v[(static_cast<size_t>(b) * rows + r) * cols + c]; }
  double at(int b, int r, int c) const { return v[(static_cast<size_t>(b) * rows + r) * cols + c]; }

  bool same_shape(const Tensor& o) const {
    return batch == o.batch && rows == o.rows && cols == o.cols;
  }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    return "(" + std::to_string(batch) + "x" + std::to_string(rows) + "x" +
           std::to_string(cols) + ")";
  }
};

namespace detail {

/// C(m x n) = A(m x k) * B(k x n), optionally accumulating into C.
inline void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c,
                    bool acc) {
  if (!acc) std::fill(c, c + static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// C(m x n) += A(m x k) * B^T, where B is (n x k).
inline void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c,
                    bool acc) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      double dot = 0.0;
      for (int kk = 0; kk < k; ++kk) dot += arow[kk] * brow[kk];
      crow[j] = acc ? crow[j] + dot : dot;
    }
  }
}

/// C(m x n) += A^T * B, where A is (k x m), B is (k x n).
inline void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c,
                    bool acc) {
  if (!acc) std::fill(c, c + static_cast<size_t>(m) * n, 0.0);
  for (int kk = 0; kk < k; ++kk) {
    const double* arow = a + static_cast<size_t>(kk) * m;
    const double* brow = b + static_cast<size_t>(kk) * n;
    for (int i = 0; i < m; ++i) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

inline int broadcast_batch(const Tensor& a, const Tensor& b, const char* op) {
  if (a.batch == b.batch) return a.batch;
  if (a.batch == 1) return b.batch;
  if (b.batch == 1) return a.batch;
  throw ConfigError(std::string(op) + ": incompatible batches " + a.shape_str() + " vs " +
                    b.shape_str());
}

/// out = a @ b with batch broadcast. When b has batch 1 (the shared-parameter
/// case) the whole batch folds into one flat product. The output arrives
/// zero-initialized, so the kernels run in accumulate mode.
inline Tensor matmul_nn(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows)
    throw ConfigError("matmul: inner dimensions differ " + a.shape_str() + " vs " +
                      b.shape_str());
  int bt = broadcast_batch(a, b, "matmul");
  Tensor out(bt, a.rows, b.cols);
  if (b.batch == 1) {
    detail::gemm_nn(a.batch * a.rows, b.cols, a.cols, a.data(0), b.data(0), out.data(0),
                    true);
  } else if (a.batch == 1) {
    for (int i = 0; i < bt; ++i)
      detail::gemm_nn(a.rows, b.cols, a.cols, a.data(0), b.data(i), out.data(i), true);
  } else {
    for (int i = 0; i < bt; ++i)
      detail::gemm_nn(a.rows, b.cols, a.cols, a.data(i), b.data(i), out.data(i), true);
  }
  return out;
}

/// da += g @ b^T (the left-operand backward product of out = a @ b).
inline void matmul_acc_nt(const Tensor& g, const Tensor& b, Tensor& da) {
  if (b.batch == 1 && da.batch == g.batch) {
    detail::gemm_nt(g.batch * g.rows, da.cols, g.cols, g.data(0), b.data(0), da.data(0),
                    true);
    return;
  }
  for (int i = 0; i < g.batch; ++i) {
    const double* bs = b.data(b.batch == 1 ? 0 : i);
    double* ds = da.data(da.batch == 1 ? 0 : i);
    detail::gemm_nt(g.rows, da.cols, g.cols, g.data(i), bs, ds, true);
  }
}

/// db += a^T @ g (the right-operand backward product of out = a @ b).
inline void matmul_acc_tn(const Tensor& a, const Tensor& g, Tensor& db) {
  if (db.batch == 1 && a.batch == g.batch) {
    detail::gemm_tn(db.rows, db.cols, a.batch * a.rows, a.data(0), g.data(0), db.data(0),
                    true);
    return;
  }
  for (int i = 0; i < g.batch; ++i) {
    const double* as = a.data(a.batch == 1 ? 0 : i);
    double* ds = db.data(db.batch == 1 ? 0 : i);
    detail::gemm_tn(db.rows, db.cols, a.rows, as, g.data(i), ds, true);
  }
}

}  // namespace hgac
