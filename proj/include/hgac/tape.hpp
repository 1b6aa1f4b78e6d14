#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hgac/param_store.hpp"
#include "hgac/tensor.hpp"

namespace hgac {

enum class Activation { Identity, Relu };

/// Reverse-mode tape over batched dense tensors.
///
/// Build a graph with the op methods (each returns a node id), call
/// backward() on a scalar node, then read gradients off nodes or flush them
/// into the bound ParamStore slots with write_param_grads(). A tape that is
/// never differentiated is just a plain forward evaluation and can be
/// discarded.
class Tape {
 public:
  int leaf(Tensor value) { return push(std::move(value)); }

  /// Leaf bound to a named store parameter; write_param_grads() accumulates
  /// this node's gradient into the store's gradient slot.
  int param(ParamStore& store, const std::string& name) {
    int id = push(store.value(name));
    nodes_[id].store = &store;
    nodes_[id].pname = name;
    return id;
  }

  const Tensor& val(int id) const { return nodes_[id].value; }

  /// Gradient of the node (zeros if backward never reached it).
  const Tensor& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.v.empty()) n.grad = Tensor(n.value.batch, n.value.rows, n.value.cols);
    return n.grad;
  }

  size_t size() const { return nodes_.size(); }

  /// Registers an externally computed node. `back` receives this node's id
  /// and must accumulate into the inputs' buffers via grad_buffer().
  int push_custom(Tensor value, std::function<void(int)> back) {
    return push(std::move(value), std::move(back));
  }

  /// Mutable gradient accumulator of a node (allocated on first use); for
  /// custom ops' backward closures.
  Tensor& grad_buffer(int id) { return grad_ref(id); }

  // ---- ops ----------------------------------------------------------------

  int matmul(int a, int b) {
    Tensor out = matmul_nn(val(a), val(b));
    return push(std::move(out), [this, a, b](int id) {
      const Tensor& g = nodes_[id].grad;
      matmul_acc_nt(g, val(b), grad_ref(a));
      matmul_acc_tn(val(a), g, grad_ref(b));
    });
  }

  /// Elementwise a + b with batch broadcast on either side.
  int add(int a, int b) { return add_like(a, b, +1.0); }

  /// Elementwise a - b with batch broadcast on either side.
  int sub(int a, int b) { return add_like(a, b, -1.0); }

  /// Adds a (1,1,C) bias row to every row of every batch element.
  int add_bias(int a, int bias) {
    const Tensor& x = val(a);
    const Tensor& c = val(bias);
    if (c.batch != 1 || c.rows != 1 || c.cols != x.cols)
      throw ConfigError("add_bias: bias must be (1,1," + std::to_string(x.cols) +
                        "), got " + c.shape_str());
    Tensor out = x;
    for (int b = 0; b < x.batch; ++b)
      for (int r = 0; r < x.rows; ++r) {
        double* row = out.data(b) + static_cast<size_t>(r) * x.cols;
        for (int j = 0; j < x.cols; ++j) row[j] += c.v[j];
      }
    return push(std::move(out), [this, a, bias](int id) {
      const Tensor& g = nodes_[id].grad;
      Tensor& da = grad_ref(a);
      Tensor& db = grad_ref(bias);
      for (size_t i = 0; i < g.size(); ++i) da.v[i] += g.v[i];
      for (int b = 0; b < g.batch; ++b)
        for (int r = 0; r < g.rows; ++r) {
          const double* row = g.data(b) + static_cast<size_t>(r) * g.cols;
          for (int j = 0; j < g.cols; ++j) db.v[j] += row[j];
        }
    });
  }

  /// Elementwise product with batch broadcast on either side.
  int mul(int a, int b) {
    const Tensor& x = val(a);
    const Tensor& y = val(b);
    check_same_matrix(x, y, "mul");
    int bt = broadcast_batch(x, y, "mul");
    Tensor out(bt, x.rows, x.cols);
    size_t n = x.slice_size();
    for (int bb = 0; bb < bt; ++bb) {
      const double* xs = x.data(x.batch == 1 ? 0 : bb);
      const double* ys = y.data(y.batch == 1 ? 0 : bb);
      double* os = out.data(bb);
      for (size_t i = 0; i < n; ++i) os[i] = xs[i] * ys[i];
    }
    return push(std::move(out), [this, a, b](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& x = val(a);
      const Tensor& y = val(b);
      Tensor& da = grad_ref(a);
      Tensor& db = grad_ref(b);
      size_t n = x.slice_size();
      for (int bb = 0; bb < g.batch; ++bb) {
        const double* gs = g.data(bb);
        const double* xs = x.data(x.batch == 1 ? 0 : bb);
        const double* ys = y.data(y.batch == 1 ? 0 : bb);
        double* das = da.data(da.batch == 1 ? 0 : bb);
        double* dbs = db.data(db.batch == 1 ? 0 : bb);
        for (size_t i = 0; i < n; ++i) {
          das[i] += gs[i] * ys[i];
          dbs[i] += gs[i] * xs[i];
        }
      }
    });
  }

  int scale(int a, double s) {
    Tensor out = val(a);
    for (double& x : out.v) x *= s;
    return push(std::move(out), [this, a, s](int id) {
      const Tensor& g = nodes_[id].grad;
      Tensor& da = grad_ref(a);
      for (size_t i = 0; i < g.size(); ++i) da.v[i] += s * g.v[i];
    });
  }

  int relu(int a) {
    Tensor out = val(a);
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    return push(std::move(out), [this, a](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& x = val(a);
      Tensor& da = grad_ref(a);
      for (size_t i = 0; i < g.size(); ++i)
        if (x.v[i] > 0.0) da.v[i] += g.v[i];
    });
  }

  int activation(int a, Activation act) {
    return act == Activation::Relu ? relu(a) : a;
  }

  int exp(int a) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::exp(x);
    return push(std::move(out), [this, a](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& y = nodes_[id].value;
      Tensor& da = grad_ref(a);
      for (size_t i = 0; i < g.size(); ++i) da.v[i] += g.v[i] * y.v[i];
    });
  }

  /// max(x, floor); gradient passes only where x > floor.
  int clamp_min(int a, double floor) {
    Tensor out = val(a);
    for (double& x : out.v) x = x > floor ? x : floor;
    return push(std::move(out), [this, a, floor](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& x = val(a);
      Tensor& da = grad_ref(a);
      for (size_t i = 0; i < g.size(); ++i)
        if (x.v[i] > floor) da.v[i] += g.v[i];
    });
  }

  /// Elementwise x^p; the input must be strictly positive (clamp first).
  int pow_const(int a, double p) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::pow(x, p);
    return push(std::move(out), [this, a, p](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& x = val(a);
      Tensor& da = grad_ref(a);
      for (size_t i = 0; i < g.size(); ++i)
        da.v[i] += g.v[i] * p * std::pow(x.v[i], p - 1.0);
    });
  }

  int transpose(int a) {
    const Tensor& x = val(a);
    Tensor out(x.batch, x.cols, x.rows);
    for (int b = 0; b < x.batch; ++b)
      for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < x.cols; ++c) out.at(b, c, r) = x.at(b, r, c);
    return push(std::move(out), [this, a](int id) {
      const Tensor& g = nodes_[id].grad;
      Tensor& da = grad_ref(a);
      for (int b = 0; b < g.batch; ++b)
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) da.at(b, c, r) += g.at(b, r, c);
    });
  }

  /// Row-wise softmax with max subtraction.
  int softmax_rows(int a) {
    const Tensor& x = val(a);
    Tensor out = x;
    for (int b = 0; b < x.batch; ++b)
      for (int r = 0; r < x.rows; ++r) softmax_row(out.data(b) + static_cast<size_t>(r) * x.cols, x.cols);
    return push(std::move(out), [this, a](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& y = nodes_[id].value;
      Tensor& da = grad_ref(a);
      for (int b = 0; b < g.batch; ++b)
        for (int r = 0; r < g.rows; ++r) {
          const double* gr = g.data(b) + static_cast<size_t>(r) * g.cols;
          const double* yr = y.data(b) + static_cast<size_t>(r) * g.cols;
          double* dr = da.data(b) + static_cast<size_t>(r) * g.cols;
          double dot = 0.0;
          for (int j = 0; j < g.cols; ++j) dot += gr[j] * yr[j];
          for (int j = 0; j < g.cols; ++j) dr[j] += yr[j] * (gr[j] - dot);
        }
    });
  }

  /// Row-wise log-softmax with max subtraction.
  int log_softmax_rows(int a) {
    const Tensor& x = val(a);
    Tensor out = x;
    for (int b = 0; b < x.batch; ++b)
      for (int r = 0; r < x.rows; ++r) {
        double* row = out.data(b) + static_cast<size_t>(r) * x.cols;
        double mx = row[0];
        for (int j = 1; j < x.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < x.cols; ++j) sum += std::exp(row[j] - mx);
        double lse = mx + std::log(sum);
        for (int j = 0; j < x.cols; ++j) row[j] -= lse;
      }
    return push(std::move(out), [this, a](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& y = nodes_[id].value;  // log-probs
      Tensor& da = grad_ref(a);
      for (int b = 0; b < g.batch; ++b)
        for (int r = 0; r < g.rows; ++r) {
          const double* gr = g.data(b) + static_cast<size_t>(r) * g.cols;
          const double* yr = y.data(b) + static_cast<size_t>(r) * g.cols;
          double* dr = da.data(b) + static_cast<size_t>(r) * g.cols;
          double gsum = 0.0;
          for (int j = 0; j < g.cols; ++j) gsum += gr[j];
          for (int j = 0; j < g.cols; ++j) dr[j] += gr[j] - std::exp(yr[j]) * gsum;
        }
    });
  }

  /// Scales row r of every batch element by s[r]; s has shape (B|1, R, 1).
  int scale_rows(int a, int s) {
    const Tensor& x = val(a);
    const Tensor& sc = val(s);
    if (sc.rows != x.rows || sc.cols != 1)
      throw ConfigError("scale_rows: scale must be (B|1," + std::to_string(x.rows) +
                        ",1), got " + sc.shape_str());
    int bt = broadcast_batch(x, sc, "scale_rows");
    Tensor out(bt, x.rows, x.cols);
    for (int b = 0; b < bt; ++b)
      for (int r = 0; r < x.rows; ++r) {
        double f = sc.at(sc.batch == 1 ? 0 : b, r, 0);
        const double* xr = x.data(x.batch == 1 ? 0 : b) + static_cast<size_t>(r) * x.cols;
        double* orow = out.data(b) + static_cast<size_t>(r) * x.cols;
        for (int j = 0; j < x.cols; ++j) orow[j] = f * xr[j];
      }
    return push(std::move(out), [this, a, s](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& x = val(a);
      const Tensor& sc = val(s);
      Tensor& da = grad_ref(a);
      Tensor& ds = grad_ref(s);
      for (int b = 0; b < g.batch; ++b)
        for (int r = 0; r < g.rows; ++r) {
          const double* gr = g.data(b) + static_cast<size_t>(r) * g.cols;
          const double* xr = x.data(x.batch == 1 ? 0 : b) + static_cast<size_t>(r) * g.cols;
          double* dar = da.data(da.batch == 1 ? 0 : b) + static_cast<size_t>(r) * g.cols;
          double f = sc.at(sc.batch == 1 ? 0 : b, r, 0);
          double dot = 0.0;
          for (int j = 0; j < g.cols; ++j) {
            dar[j] += f * gr[j];
            dot += gr[j] * xr[j];
          }
          ds.at(ds.batch == 1 ? 0 : b, r, 0) += dot;
        }
    });
  }

  /// Scales column c of every batch element by s[c]; s has shape (B|1, 1, C).
  int scale_cols(int a, int s) {
    const Tensor& x = val(a);
    const Tensor& sc = val(s);
    if (sc.rows != 1 || sc.cols != x.cols)
      throw ConfigError("scale_cols: scale must be (B|1,1," + std::to_string(x.cols) +
                        "), got " + sc.shape_str());
    int bt = broadcast_batch(x, sc, "scale_cols");
    Tensor out(bt, x.rows, x.cols);
    for (int b = 0; b < bt; ++b) {
      const double* sr = sc.data(sc.batch == 1 ? 0 : b);
      for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.data(x.batch == 1 ? 0 : b) + static_cast<size_t>(r) * x.cols;
        double* orow = out.data(b) + static_cast<size_t>(r) * x.cols;
        for (int j = 0; j < x.cols; ++j) orow[j] = sr[j] * xr[j];
      }
    }
    return push(std::move(out), [this, a, s](int id) {
      const Tensor& g = nodes_[id].grad;
      const Tensor& x = val(a);
      const Tensor& sc = val(s);
      Tensor& da = grad_ref(a);
      Tensor& ds = grad_ref(s);
      for (int b = 0; b < g.batch; ++b) {
        const double* sr = sc.data(sc.batch == 1 ? 0 : b);
        double* dsr = ds.data(ds.batch == 1 ? 0 : b);
        for (int r = 0; r < g.rows; ++r) {
          const double* gr = g.data(b) + static_cast<size_t>(r) * g.cols;
          const double* xr = x.data(x.batch == 1 ? 0 : b) + static_cast<size_t>(r) * g.cols;
          double* dar = da.data(da.batch == 1 ? 0 : b) + static_cast<size_t>(r) * g.cols;
          for (int j = 0; j < g.cols; ++j) {
            dar[j] += sr[j] * gr[j];
            dsr[j] += gr[j] * xr[j];
          }
        }
      }
    });
  }

  int concat_cols(const std::vector<int>& ids) {
    if (ids.empty()) throw ConfigError("concat_cols: no inputs");
    int bt = 1, rows = val(ids[0]).rows, cols = 0;
    for (int id : ids) {
      const Tensor& t = val(id);
      if (t.rows != rows) throw ConfigError("concat_cols: row mismatch");
      bt = std::max(bt, t.batch);
      cols += t.cols;
    }
    for (int id : ids)
      if (val(id).batch != bt && val(id).batch != 1)
        throw ConfigError("concat_cols: incompatible batches");
    Tensor out(bt, rows, cols);
    int off = 0;
    for (int id : ids) {
      const Tensor& t = val(id);
      for (int b = 0; b < bt; ++b)
        for (int r = 0; r < rows; ++r) {
          const double* src = t.data(t.batch == 1 ? 0 : b) + static_cast<size_t>(r) * t.cols;
          double* dst = out.data(b) + static_cast<size_t>(r) * cols + off;
          std::copy(src, src + t.cols, dst);
        }
      off += t.cols;
    }
    return push(std::move(out), [this, ids](int id) {
      const Tensor& g = nodes_[id].grad;
      int off = 0;
      for (int src_id : ids) {
        const Tensor& t = val(src_id);
        Tensor& d = grad_ref(src_id);
        for (int b = 0; b < g.batch; ++b)
          for (int r = 0; r < g.rows; ++r) {
            const double* gr = g.data(b) + static_cast<size_t>(r) * g.cols + off;
            double* dr = d.data(d.batch == 1 ? 0 : b) + static_cast<size_t>(r) * t.cols;
            for (int j = 0; j < t.cols; ++j) dr[j] += gr[j];
          }
        off += t.cols;
      }
    });
  }

  int concat_rows(const std::vector<int>& ids) {
    if (ids.empty()) throw ConfigError("concat_rows: no inputs");
    int bt = 1, cols = val(ids[0]).cols, rows = 0;
    for (int id : ids) {
      const Tensor& t = val(id);
      if (t.cols != cols) throw ConfigError("concat_rows: column mismatch");
      bt = std::max(bt, t.batch);
      rows += t.rows;
    }
    for (int id : ids)
      if (val(id).batch != bt && val(id).batch != 1)
        throw ConfigError("concat_rows: incompatible batches");
    Tensor out(bt, rows, cols);
    int roff = 0;
    for (int id : ids) {
      const Tensor& t = val(id);
      for (int b = 0; b < bt; ++b)
        std::copy(t.data(t.batch == 1 ? 0 : b), t.data(t.batch == 1 ? 0 : b) + t.slice_size(),
                  out.data(b) + static_cast<size_t>(roff) * cols);
      roff += t.rows;
    }
    return push(std::move(out), [this, ids](int id) {
      const Tensor& g = nodes_[id].grad;
      int roff = 0;
      for (int src_id : ids) {
        const Tensor& t = val(src_id);
        Tensor& d = grad_ref(src_id);
        for (int b = 0; b < g.batch; ++b) {
          const double* gs = g.data(b) + static_cast<size_t>(roff) * g.cols;
          double* ds = d.data(d.batch == 1 ? 0 : b);
          for (size_t i = 0; i < t.slice_size(); ++i) ds[i] += gs[i];
        }
        roff += t.rows;
      }
    });
  }

  /// Rows [r0, r1) of every batch element.
  int slice_rows(int a, int r0, int r1) {
    const Tensor& x = val(a);
    if (r0 < 0 || r1 > x.rows || r0 >= r1)
      throw ConfigError("slice_rows: bad range");
    Tensor out(x.batch, r1 - r0, x.cols);
    for (int b = 0; b < x.batch; ++b)
      std::copy(x.data(b) + static_cast<size_t>(r0) * x.cols,
                x.data(b) + static_cast<size_t>(r1) * x.cols, out.data(b));
    return push(std::move(out), [this, a, r0](int id) {
      const Tensor& g = nodes_[id].grad;
      Tensor& da = grad_ref(a);
      for (int b = 0; b < g.batch; ++b) {
        const double* gs = g.data(b);
        double* ds = da.data(b) + static_cast<size_t>(r0) * da.cols;
        for (size_t i = 0; i < g.slice_size(); ++i) ds[i] += gs[i];
      }
    });
  }

  /// Copies the input and overwrites each square slice's diagonal with 1.
  /// The diagonal is constant, so no gradient flows through it.
  int set_diag_one(int a) {
    const Tensor& x = val(a);
    if (x.rows != x.cols) throw ConfigError("set_diag_one: matrix must be square");
    Tensor out = x;
    for (int b = 0; b < x.batch; ++b)
      for (int i = 0; i < x.rows; ++i) out.at(b, i, i) = 1.0;
    return push(std::move(out), [this, a](int id) {
      const Tensor& g = nodes_[id].grad;
      Tensor& da = grad_ref(a);
      for (int b = 0; b < g.batch; ++b)
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c)
            if (r != c) da.at(b, r, c) += g.at(b, r, c);
    });
  }

  /// Sum over every element (including the batch dimension) -> (1,1,1).
  int sum_all(int a) {
    double total = 0.0;
    for (double x : val(a).v) total += x;
    Tensor out(1, 1, 1);
    out.v[0] = total;
    return push(std::move(out), [this, a](int id) {
      double g = nodes_[id].grad.v[0];
      Tensor& da = grad_ref(a);
      for (double& d : da.v) d += g;
    });
  }

  /// sum over (b, r) of w[b][r] * a[b, r, idx[b][r]] -> (1,1,1).
  /// idx and w are constants (score-function estimators use this).
  int select_mul_sum(int a, std::vector<std::vector<int>> idx,
                     std::vector<std::vector<double>> w) {
    const Tensor& x = val(a);
    if (static_cast<int>(idx.size()) != x.batch || static_cast<int>(w.size()) != x.batch)
      throw ConfigError("select_mul_sum: batch mismatch");
    double total = 0.0;
    for (int b = 0; b < x.batch; ++b) {
      if (static_cast<int>(idx[b].size()) != x.rows)
        throw ConfigError("select_mul_sum: row mismatch");
      for (int r = 0; r < x.rows; ++r) total += w[b][r] * x.at(b, r, idx[b][r]);
    }
    Tensor out(1, 1, 1);
    out.v[0] = total;
    return push(std::move(out), [this, a, idx = std::move(idx), w = std::move(w)](int id) {
      double g = nodes_[id].grad.v[0];
      Tensor& da = grad_ref(a);
      for (int b = 0; b < da.batch; ++b)
        for (int r = 0; r < da.rows; ++r) da.at(b, r, idx[b][r]) += g * w[b][r];
    });
  }

  // ---- reverse sweep --------------------------------------------------------

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  void backward(int loss) {
    Tensor& lg = grad_ref(loss);
    if (lg.size() != 1)
      throw ConfigError("backward: loss node must be scalar, got " +
                        nodes_[loss].value.shape_str());
    lg.v[0] = 1.0;
    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.v.empty() || !n.back) continue;
      n.back(id);
    }
  }

  /// Accumulates gradients of all param-bound leaves into their stores.
  void write_param_grads() {
    for (Node& n : nodes_) {
      if (!n.store || n.grad.v.empty()) continue;
      Tensor& g = n.store->grad(n.pname);
      for (size_t i = 0; i < g.size(); ++i) g.v[i] += n.grad.v[i];
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(int)> back;
    ParamStore* store = nullptr;
    std::string pname;
  };

  static void check_same_matrix(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows != b.rows || a.cols != b.cols)
      throw ConfigError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
  }

  static void softmax_row(double* row, int n) {
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < n; ++j) row[j] /= sum;
  }

  int add_like(int a, int b, double sign) {
    const Tensor& x = val(a);
    const Tensor& y = val(b);
    check_same_matrix(x, y, sign > 0 ? "add" : "sub");
    int bt = broadcast_batch(x, y, sign > 0 ? "add" : "sub");
    Tensor out(bt, x.rows, x.cols);
    size_t n = x.slice_size();
    for (int bb = 0; bb < bt; ++bb) {
      const double* xs = x.data(x.batch == 1 ? 0 : bb);
      const double* ys = y.data(y.batch == 1 ? 0 : bb);
      double* os = out.data(bb);
      for (size_t i = 0; i < n; ++i) os[i] = xs[i] + sign * ys[i];
    }
    return push(std::move(out), [this, a, b, sign](int id) {
      const Tensor& g = nodes_[id].grad;
      Tensor& da = grad_ref(a);
      Tensor& db = grad_ref(b);
      size_t n = g.slice_size();
      for (int bb = 0; bb < g.batch; ++bb) {
        const double* gs = g.data(bb);
        double* das = da.data(da.batch == 1 ? 0 : bb);
        double* dbs = db.data(db.batch == 1 ? 0 : bb);
        for (size_t i = 0; i < n; ++i) {
          das[i] += gs[i];
          dbs[i] += sign * gs[i];
        }
      }
    });
  }

  Tensor& grad_ref(int id) {
    Node& n = nodes_[id];
    if (n.grad.v.empty()) n.grad = Tensor(n.value.batch, n.value.rows, n.value.cols);
    return n.grad;
  }

  int push(Tensor value, std::function<void(int)> back = {}) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace hgac
