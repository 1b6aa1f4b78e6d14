#pragma once

#include <map>
#include <string>
#include <vector>

#include "hgac/common.hpp"
#include "hgac/tensor.hpp"

namespace hgac {

/// Flat collection of named parameter matrices, each paired with a gradient
/// slot of identical shape. Names are unique; iteration order is sorted so
/// that every walk over the store is deterministic.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, int rows, int cols) {
    if (entries_.count(name))
      throw ConfigError("ParamStore: duplicate parameter '" + name + "'");
    Entry& e = entries_[name];
    e.value = Tensor::matrix(rows, cols);
    e.grad = Tensor::matrix(rows, cols);
    return e.value;
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  Tensor& value(const std::string& name) { return find(name).value; }
  const Tensor& value(const std::string& name) const { return find(name).value; }
  Tensor& grad(const std::string& name) { return find(name).grad; }
  const Tensor& grad(const std::string& name) const { return find(name).grad; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, _] : entries_) out.push_back(k);
    return out;
  }

  /// Names that start with the given prefix (e.g. "critic/").
  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, _] : entries_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

  size_t count() const { return entries_.size(); }
  size_t total_values() const {
    size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& [_, e] : entries_) std::fill(e.grad.v.begin(), e.grad.v.end(), 0.0);
  }

  void zero_grads(const std::string& prefix) {
    for (auto& [k, e] : entries_)
      if (k.rfind(prefix, 0) == 0) std::fill(e.grad.v.begin(), e.grad.v.end(), 0.0);
  }

  bool grads_all_zero() const {
    for (const auto& [_, e] : entries_)
      for (double g : e.grad.v)
        if (g != 0.0) return false;
    return true;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }

 private:
  Entry& find(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ConfigError("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  const Entry& find(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ConfigError("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace hgac
