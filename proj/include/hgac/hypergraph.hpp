#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hgac/mlp.hpp"
#include "hgac/tape.hpp"

namespace hgac {

/// Degrees are clamped below by this before any inversion; soft memberships
/// can make them arbitrarily small.
inline constexpr double kDegreeEpsilon = 1e-8;

/// Positive per-hyperedge weights (the diagonal of W).
struct HyperedgeWeights {
  std::vector<double> values;

  static HyperedgeWeights ones(int m) { return {std::vector<double>(m, 1.0)}; }

  /// Maps unconstrained log-weights through exp, preserving positivity.
  static HyperedgeWeights from_log(const Tensor& log_w) {
    HyperedgeWeights w;
    w.values.reserve(log_w.size());
    for (double u : log_w.v) w.values.push_back(std::exp(u));
    return w;
  }
};

struct DegreeVectors {
  std::vector<double> vertex;     // d(v_i) = sum_j w_j * H[i][j]
  std::vector<double> hyperedge;  // d(e_j) = sum_i H[i][j]
};

/// Definitional degree sums for an N x M incidence matrix. Values are the raw
/// sums; clamping happens downstream where degrees get inverted.
inline DegreeVectors compute_degrees(const Tensor& h, const HyperedgeWeights& w) {
  if (h.batch != 1) throw ConfigError("compute_degrees: expected a single matrix");
  if (static_cast<int>(w.values.size()) != h.cols)
    throw ConfigError("compute_degrees: weight length " + std::to_string(w.values.size()) +
                      " does not match " + std::to_string(h.cols) + " hyperedges");
  DegreeVectors d;
  d.vertex.assign(h.rows, 0.0);
  d.hyperedge.assign(h.cols, 0.0);
  for (int i = 0; i < h.rows; ++i)
    for (int j = 0; j < h.cols; ++j) {
      double m = h.at(0, i, j);
      d.vertex[i] += w.values[j] * m;
      d.hyperedge[j] += m;
    }
  return d;
}

/// Hard 0/1 incidence with one hyperedge per vertex group. Constant across
/// training; used by the fixed-structure ablation mode.
inline Tensor static_incidence(const std::vector<std::vector<int>>& groups, int n) {
  if (groups.empty()) throw ConfigError("static_incidence: no groups");
  if (n < 1) throw ConfigError("static_incidence: vertex count must be positive");
  Tensor h(1, n, static_cast<int>(groups.size()));
  for (size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].empty())
      throw ConfigError("static_incidence: group " + std::to_string(j) +
                        " is empty (hyperedge degree would be 0)");
    for (int v : groups[j]) {
      if (v < 0 || v >= n)
        throw ConfigError("static_incidence: vertex index " + std::to_string(v) +
                          " out of range for n=" + std::to_string(n));
      h.at(0, v, static_cast<int>(j)) = 1.0;
    }
  }
  return h;
}

/// One normalized hypergraph convolution layer on the tape:
///
///   sigma( Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2} X P )
///
/// `x` is (B,N,Fin), `h` is (B|1,N,M), `log_w` is the (1,M,1) unconstrained
/// log of the hyperedge weights and `p` the (1,Fin,Fout) linear map. Degrees
/// are recomputed from h and clamped at `eps` before inversion, so gradients
/// reach X, P, the weights and the incidence itself.
inline int hypergraph_convolve(Tape& t, int x, int h, int log_w, int p,
                               Activation act = Activation::Identity,
                               double eps = kDegreeEpsilon) {
  const Tensor& xv = t.val(x);
  const Tensor& hv = t.val(h);
  const Tensor& wv = t.val(log_w);
  const Tensor& pv = t.val(p);
  if (hv.rows != xv.rows)
    throw ConfigError("hypergraph_convolve: H has " + std::to_string(hv.rows) +
                      " vertices, X has " + std::to_string(xv.rows) + " rows");
  if (wv.rows != hv.cols || wv.cols != 1)
    throw ConfigError("hypergraph_convolve: weights must be (" +
                      std::to_string(hv.cols) + ",1), got " + wv.shape_str());
  if (pv.rows != xv.cols)
    throw ConfigError("hypergraph_convolve: P expects " + std::to_string(pv.rows) +
                      " input features, X has " + std::to_string(xv.cols));
  for (size_t i = 0; i < xv.size(); ++i)
    if (!std::isfinite(xv.v[i]))
      throw NumericError("hypergraph_convolve: non-finite feature at flat index " +
                         std::to_string(i));

  int w_col = t.exp(log_w);                                   // (1,M,1)
  int w_row = t.transpose(w_col);                             // (1,1,M)
  int dv = t.clamp_min(t.matmul(h, w_col), eps);              // (B,N,1)
  int ones = t.leaf(Tensor(1, 1, hv.rows, 1.0));
  int de = t.clamp_min(t.matmul(ones, h), eps);               // (B,1,M)
  int dv_inv_sqrt = t.pow_const(dv, -0.5);
  int de_inv = t.pow_const(de, -1.0);

  int a = t.scale_rows(h, dv_inv_sqrt);                       // Dv^{-1/2} H
  a = t.scale_cols(a, w_row);                                 // ... W
  a = t.scale_cols(a, de_inv);                                // ... De^{-1}
  int s = t.matmul(a, t.transpose(h));                        // ... H^T
  s = t.scale_cols(s, t.transpose(dv_inv_sqrt));              // ... Dv^{-1/2}
  int y = t.matmul(t.matmul(s, x), p);
  return t.activation(y, act);
}

/// Single-node variant of hypergraph_convolve: same operator, same clamps,
/// one tape node with a hand-derived reverse pass. The composed op above is
/// the readable reference; this one carries the training load, and the tests
/// pin the two against each other.
inline int hypergraph_convolve_fused(Tape& t, int x, int h, int log_w, int p,
                                     Activation act = Activation::Identity,
                                     double eps = kDegreeEpsilon) {
  const Tensor& xv = t.val(x);
  const Tensor& hv = t.val(h);
  const Tensor& wv = t.val(log_w);
  const Tensor& pv = t.val(p);
  if (hv.rows != xv.rows || wv.rows != hv.cols || wv.cols != 1 || pv.rows != xv.cols ||
      pv.batch != 1 || wv.batch != 1)
    throw ConfigError("hypergraph_convolve: shape mismatch X" + xv.shape_str() + " H" +
                      hv.shape_str() + " w" + wv.shape_str() + " P" + pv.shape_str());
  for (size_t i = 0; i < xv.size(); ++i)
    if (!std::isfinite(xv.v[i]))
      throw NumericError("hypergraph_convolve: non-finite feature at flat index " +
                         std::to_string(i));

  const int bt = xv.batch, n = hv.rows, m = hv.cols, fin = xv.cols, fout = pv.cols;

  struct Saved {
    std::vector<double> w;             // exp(log_w), length M
    Tensor dv_raw, de_raw;             // pre-clamp degree sums (B|1, N/M)
    Tensor a, b;                       // dv^{-1/2}, w/de
    Tensor s;                          // diag(a) H diag(b) H^T diag(a), (B|1,N,N)
    Tensor y;                          // S X, (B,N,Fin)
  };
  auto sv = std::make_shared<Saved>();
  sv->w.resize(m);
  for (int j = 0; j < m; ++j) sv->w[j] = std::exp(wv.v[j]);
  const int hb = hv.batch;  // 1 for static incidence even when X is batched
  sv->dv_raw = Tensor(hb, n, 1);
  sv->de_raw = Tensor(hb, 1, m);
  sv->a = Tensor(hb, n, 1);
  sv->b = Tensor(hb, 1, m);
  sv->s = Tensor(hb, n, n);
  sv->y = Tensor(bt, n, fin);
  Tensor out(bt, n, fout);

  for (int bb = 0; bb < hb; ++bb) {
    const double* hd = hv.data(bb);
    double* dv = sv->dv_raw.data(bb);
    double* de = sv->de_raw.data(bb);
    double* av = sv->a.data(bb);
    double* bv = sv->b.data(bb);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double hij = hd[i * m + j];
        dv[i] += sv->w[j] * hij;
        de[j] += hij;
      }
    for (int i = 0; i < n; ++i) av[i] = 1.0 / std::sqrt(std::max(dv[i], eps));
    for (int j = 0; j < m; ++j) bv[j] = sv->w[j] / std::max(de[j], eps);
    // S = diag(a) H diag(b) H^T diag(a)
    double* s = sv->s.data(bb);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += hd[i * m + j] * bv[j] * hd[k * m + j];
        s[i * n + k] = av[i] * acc * av[k];
      }
  }
  for (int bb = 0; bb < bt; ++bb) {
    const double* s = sv->s.data(hb == 1 ? 0 : bb);
    detail::gemm_nn(n, fin, n, s, xv.data(bb), sv->y.data(bb), true);
    detail::gemm_nn(n, fout, fin, sv->y.data(bb), pv.data(0), out.data(bb), true);
  }
  if (act == Activation::Relu)
    for (double& v : out.v) v = v > 0.0 ? v : 0.0;

  return t.push_custom(std::move(out), [&t, x, h, log_w, p, sv, act, eps, bt, hb, n, m,
                                        fin, fout](int id) {
    const Tensor& gout = t.grad(id);
    const Tensor& outv = t.val(id);
    const Tensor& xv = t.val(x);
    const Tensor& hv = t.val(h);
    const Tensor& pv = t.val(p);
    Tensor& dx = t.grad_buffer(x);
    Tensor& dh = t.grad_buffer(h);
    Tensor& dlw = t.grad_buffer(log_w);
    Tensor& dp = t.grad_buffer(p);

    Tensor dz = gout;
    if (act == Activation::Relu)
      for (size_t i = 0; i < dz.size(); ++i)
        if (outv.v[i] <= 0.0) dz.v[i] = 0.0;

    // dP += sum_b Y_b^T dZ_b  (flat over batch rows)
    detail::gemm_tn(fin, fout, bt * n, sv->y.data(0), dz.data(0), dp.data(0), true);

    Tensor dy(bt, n, fin);
    Tensor ds_total(hb, n, n);
    std::vector<double> ds_b(static_cast<size_t>(n) * n);
    for (int bb = 0; bb < bt; ++bb) {
      // dY = dZ P^T ; dX += S^T dY ; dS += dY X^T
      detail::gemm_nt(n, fin, fout, dz.data(bb), pv.data(0), dy.data(bb), false);
      detail::gemm_tn(n, fin, n, sv->s.data(hb == 1 ? 0 : bb), dy.data(bb),
                      dx.data(dx.batch == 1 ? 0 : bb), true);
      detail::gemm_nt(n, n, fin, dy.data(bb), xv.data(bb), ds_b.data(), false);
      double* dst = ds_total.data(hb == 1 ? 0 : bb);
      for (size_t i = 0; i < ds_b.size(); ++i) dst[i] += ds_b[i];
    }

    std::vector<double> dw(m, 0.0);
    for (int bb = 0; bb < hb; ++bb) {
      const double* hd = hv.data(bb);
      const double* av = sv->a.data(bb);
      const double* bv = sv->b.data(bb);
      const double* dv = sv->dv_raw.data(bb);
      const double* de = sv->de_raw.data(bb);
      const double* ds = ds_total.data(bb);
      double* dhd = dh.data(dh.batch == 1 ? 0 : bb);

      // T_ik = sum_j H_ij b_j H_kj ; S = diag(a) T diag(a)
      std::vector<double> tmat(static_cast<size_t>(n) * n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          double acc = 0.0;
          for (int j = 0; j < m; ++j) acc += hd[i * m + j] * bv[j] * hd[k * m + j];
          tmat[i * n + k] = acc;
        }
      std::vector<double> da(n, 0.0), dt(static_cast<size_t>(n) * n);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          double g = ds[i * n + k];
          da[i] += g * av[k] * tmat[i * n + k];
          da[k] += g * av[i] * tmat[i * n + k];
          dt[i * n + k] = av[i] * g * av[k];
        }
      // dH += dT H diag(b) + dT^T H diag(b); db_j = (H^T dT H)_jj
      std::vector<double> db(m, 0.0);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          double gsym = dt[i * n + k] + dt[k * n + i];
          if (gsym == 0.0) continue;
          for (int j = 0; j < m; ++j) {
            dhd[i * m + j] += gsym * hd[k * m + j] * bv[j];
            db[j] += dt[i * n + k] * hd[i * m + j] * hd[k * m + j];
          }
        }
      // b = w / clamp(de); a = clamp(dv)^{-1/2}
      std::vector<double> dde(m, 0.0), ddv(n, 0.0);
      for (int j = 0; j < m; ++j) {
        double de_c = std::max(de[j], eps);
        dw[j] += db[j] / de_c;
        if (de[j] > eps) dde[j] = -db[j] * sv->w[j] / (de_c * de_c);
      }
      for (int i = 0; i < n; ++i)
        if (dv[i] > eps) ddv[i] = -0.5 * da[i] * av[i] / dv[i];  // a^{-3/2} route via a/dv
      // degree sums: dv_i = sum_j w_j H_ij ; de_j = sum_i H_ij
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          dhd[i * m + j] += ddv[i] * sv->w[j] + dde[j];
          dw[j] += ddv[i] * hd[i * m + j];
        }
    }
    for (int j = 0; j < m; ++j) dlw.v[j] += dw[j] * sv->w[j];
  });
}

/// Soft incidence from a generator perceptron: row i of the result is
/// Softmax(MLP(features row i)), so every row sums to 1. The final layer of
/// `generator` must have M outputs.
inline int mlp_incidence(Tape& t, int features, const MlpSpec& generator,
                         ParamStore& store, const std::string& prefix) {
  if (generator.out_dim() < 1)
    throw ConfigError("mlp_incidence: hyperedge count must be at least 1");
  int logits = mlp_forward(t, generator, store, prefix, features);
  return t.softmax_rows(logits);
}

/// Attention incidence: hyperedge i is centered on vertex i, so M = N. Entry
/// (j, i) for j != i is the softmax over m of score(x_i, x_m) = x_m^T Wk^T Wq
/// x_i evaluated at m = j, with the denominator running over all m including
/// m = i. The diagonal is then pinned to exactly 1.
inline int attention_incidence(Tape& t, int features, int w_q, int w_k) {
  const Tensor& xv = t.val(features);
  const Tensor& q = t.val(w_q);
  const Tensor& k = t.val(w_k);
  if (q.cols != xv.cols || k.cols != xv.cols)
    throw ConfigError("attention_incidence: projection width mismatch, features " +
                      xv.shape_str() + ", Wq " + q.shape_str() + ", Wk " + k.shape_str());
  if (q.rows != k.rows)
    throw ConfigError("attention_incidence: Wq and Wk must share the output dimension");
  int queries = t.matmul(features, t.transpose(w_q));         // (B,N,D)
  int keys = t.matmul(features, t.transpose(w_k));            // (B,N,D)
  int scores = t.matmul(keys, t.transpose(queries));          // (B,N,N): [m][i] = f(x_i, x_m)
  int col_softmax = t.transpose(t.softmax_rows(t.transpose(scores)));
  return t.set_diag_one(col_softmax);
}

}  // namespace hgac
