#pragma once

// Shared helpers for the test suites: independent dense-math oracles (kept
// deliberately separate from the library kernels) and a central-difference
// gradient checker.

#include <cmath>
#include <functional>
#include <vector>

#include "hgac/param_store.hpp"
#include "hgac/rng.hpp"
#include "hgac/tensor.hpp"

namespace testutil {

using Mat = std::vector<std::vector<double>>;

inline Mat make_mat(int r, int c, double fill = 0.0) {
  return Mat(r, std::vector<double>(c, fill));
}

inline Mat random_mat(int r, int c, hgac::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m = make_mat(r, c);
  for (auto& row : m)
    for (double& x : row) x = rng.uniform(lo, hi);
  return m;
}

inline Mat mat_from_tensor(const hgac::Tensor& t, int b = 0) {
  Mat m = make_mat(t.rows, t.cols);
  for (int i = 0; i < t.rows; ++i)
    for (int j = 0; j < t.cols; ++j) m[i][j] = t.at(b, i, j);
  return m;
}

inline hgac::Tensor tensor_from_mat(const Mat& m) {
  return hgac::Tensor::from_rows(m);
}

// Naive triple-loop product, the reference for every matrix-chain oracle.
inline Mat matmul_ref(const Mat& a, const Mat& b) {
  Mat c = make_mat(static_cast<int>(a.size()), static_cast<int>(b[0].size()));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b[0].size(); ++j) {
      double s = 0.0;
      for (size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

inline Mat transpose_ref(const Mat& a) {
  Mat t = make_mat(static_cast<int>(a[0].size()), static_cast<int>(a.size()));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Mat diag_ref(const std::vector<double>& d) {
  Mat m = make_mat(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (size_t i = 0; i < d.size(); ++i) m[i][i] = d[i];
  return m;
}

// Softmax of one row via the log-sum-exp route.
inline std::vector<double> softmax_lse_ref(const std::vector<double>& z) {
  double mx = z[0];
  for (double x : z) mx = std::max(mx, x);
  double lse = 0.0;
  for (double x : z) lse += std::exp(x - mx);
  lse = mx + std::log(lse);
  std::vector<double> out(z.size());
  for (size_t i = 0; i < z.size(); ++i) out[i] = std::exp(z[i] - lse);
  return out;
}

inline double rel_err(double got, double want) {
  double denom = std::max(std::abs(got), std::abs(want));
  if (denom == 0.0) return 0.0;
  return std::abs(got - want) / denom;
}

// Central finite difference of `loss` with respect to store parameter
// (name, flat index). `loss` must re-evaluate the full forward pass from the
// store each call.
inline double fd_grad(hgac::ParamStore& store, const std::string& name, size_t index,
                      const std::function<double()>& loss, double step = 1e-5) {
  double& p = store.value(name).v[index];
  double saved = p;
  p = saved + step;
  double up = loss();
  p = saved - step;
  double down = loss();
  p = saved;
  return (up - down) / (2.0 * step);
}

// Checks `probes` random parameter entries of every parameter with the given
// prefix. Entries whose analytic gradient is tiny are skipped (finite
// differences have no signal there); returns the worst relative error seen.
struct GradCheckResult {
  double worst_rel = 0.0;
  int checked = 0;
};

inline GradCheckResult check_param_grads(
    hgac::ParamStore& store, const std::string& prefix,
    const std::function<double()>& loss_value,
    const std::function<void()>& compute_grads, hgac::Rng& rng, int probes = 20,
    double step = 1e-5, double min_grad = 1e-6) {
  store.zero_grads();
  compute_grads();
  GradCheckResult res;
  for (const std::string& name : store.names_with_prefix(prefix)) {
    const hgac::Tensor& g = store.grad(name);
    int attempts = 0;
    int done = 0;
    while (done < probes && attempts < probes * 20) {
      ++attempts;
      size_t idx = static_cast<size_t>(rng.uniform_int(static_cast<int>(g.size())));
      double analytic = g.v[idx];
      if (std::abs(analytic) < min_grad) continue;
      double numeric = fd_grad(store, name, idx, loss_value, step);
      res.worst_rel = std::max(res.worst_rel, rel_err(analytic, numeric));
      ++res.checked;
      ++done;
    }
  }
  return res;
}

}  // namespace testutil
