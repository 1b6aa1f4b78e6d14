#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hgac/rng.hpp"
#include "hgac/tape.hpp"

namespace hgac {

/// Layer widths (including the input width) plus activation tags. A spec of
/// {in, h, out} is a two-layer perceptron.
struct MlpSpec {
  std::vector<int> widths;
  Activation hidden = Activation::Relu;
  Activation output = Activation::Identity;

  MlpSpec() = default;
  MlpSpec(std::vector<int> w, Activation h = Activation::Relu,
          Activation o = Activation::Identity)
      : widths(std::move(w)), hidden(h), output(o) {
    validate();
  }

  void validate() const {
    if (widths.size() < 2)
      throw ConfigError("MlpSpec: need at least one layer (two widths)");
    for (int w : widths)
      if (w < 1) throw ConfigError("MlpSpec: widths must be positive");
  }

  int in_dim() const { return widths.front(); }
  int out_dim() const { return widths.back(); }
  int layers() const { return static_cast<int>(widths.size()) - 1; }
};

inline std::string weight_name(const std::string& prefix, int layer) {
  return prefix + "/w" + std::to_string(layer);
}
inline std::string bias_name(const std::string& prefix, int layer) {
  return prefix + "/b" + std::to_string(layer);
}

/// Glorot-uniform weights, zero biases.
inline void init_mlp_params(ParamStore& store, const std::string& prefix,
                            const MlpSpec& spec, Rng& rng) {
  spec.validate();
  for (int l = 0; l < spec.layers(); ++l) {
    int fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
    Tensor& w = store.add(weight_name(prefix, l), fan_in, fan_out);
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : w.v) x = rng.uniform(-bound, bound);
    store.add(bias_name(prefix, l), 1, fan_out);
  }
}

/// Affine-then-activation composition on the tape. Input is (B, N, in_dim);
/// the same parameters apply to every row of every batch element.
inline int mlp_forward(Tape& tape, const MlpSpec& spec, ParamStore& store,
                       const std::string& prefix, int input) {
  spec.validate();
  if (tape.val(input).cols != spec.in_dim())
    throw ConfigError("mlp_forward: input has " +
                      std::to_string(tape.val(input).cols) + " columns, spec expects " +
                      std::to_string(spec.in_dim()));
  int x = input;
  for (int l = 0; l < spec.layers(); ++l) {
    int w = tape.param(store, weight_name(prefix, l));
    int b = tape.param(store, bias_name(prefix, l));
    x = tape.add_bias(tape.matmul(x, w), b);
    x = tape.activation(x, l + 1 < spec.layers() ? spec.hidden : spec.output);
  }
  return x;
}

}  // namespace hgac
