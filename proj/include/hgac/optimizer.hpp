#pragma once

#include <cmath>
#include <map>
#include <string>

#include "hgac/param_store.hpp"

namespace hgac {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment tensors are created lazily per parameter
/// and always match the parameter shape. step() consumes and zeroes the
/// gradients of the parameters it touches.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Updates every parameter whose name starts with `prefix` ("" = all).
  void step(ParamStore& store, const std::string& prefix = "") {
    ++t_;
    double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, entry] : store.entries()) {
      if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
      for (double g : entry.grad.v)
        if (!std::isfinite(g))
          throw NumericError("adam_step: non-finite gradient in parameter '" + name + "'");
      Moments& m = moments_[name];
      if (m.m.v.empty()) {
        m.m = Tensor(entry.value.batch, entry.value.rows, entry.value.cols);
        m.v = Tensor(entry.value.batch, entry.value.rows, entry.value.cols);
      }
      for (size_t i = 0; i < entry.value.size(); ++i) {
        double g = entry.grad.v[i];
        m.m.v[i] = cfg_.beta1 * m.m.v[i] + (1.0 - cfg_.beta1) * g;
        m.v.v[i] = cfg_.beta2 * m.v.v[i] + (1.0 - cfg_.beta2) * g * g;
        double mhat = m.m.v[i] / c1;
        double vhat = m.v.v[i] / c2;
        entry.value.v[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        entry.grad.v[i] = 0.0;
      }
    }
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> moments_;
  long t_ = 0;
};

/// target <- tau * online + (1 - tau) * target, elementwise.
inline void polyak_update(ParamStore& target, const ParamStore& online, double tau) {
  if (target.count() != online.count())
    throw ConfigError("polyak_update: stores hold different parameter sets");
  auto ti = target.entries().begin();
  for (const auto& [name, oe] : online.entries()) {
    if (ti->first != name)
      throw ConfigError("polyak_update: name mismatch '" + ti->first + "' vs '" + name + "'");
    Tensor& tv = ti->second.value;
    if (!tv.same_shape(oe.value))
      throw ConfigError("polyak_update: shape mismatch for '" + name + "'");
    for (size_t i = 0; i < tv.size(); ++i)
      tv.v[i] = tau * oe.value.v[i] + (1.0 - tau) * tv.v[i];
    ++ti;
  }
}

}  // namespace hgac
