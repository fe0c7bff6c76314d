#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "partmotion/geom/grid.hpp"
#include "partmotion/util/rng.hpp"

namespace partmotion::model {

using geom::MatX;

// Named parameter tree with per-entry gradient buffers. std::map keeps
// iteration order stable, which everything downstream (optimizer steps,
// checkpoints, gradient checks) relies on for determinism.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    MatX<T> value;
    MatX<T> grad;
  };

  MatX<T>& add(const std::string& name, int rows, int cols) {
    auto [it, inserted] = entries_.try_emplace(name);
    if (!inserted) {
      throw std::logic_error("ParamStore: duplicate parameter " + name);
    }
    it->second.value = MatX<T>::Zero(rows, cols);
    it->second.grad = MatX<T>::Zero(rows, cols);
    return it->second.value;
  }

  const MatX<T>& value(const std::string& name) const {
    return find(name).value;
  }
  MatX<T>& value(const std::string& name) {
    return const_cast<MatX<T>&>(find(name).value);
  }
  MatX<T>& grad(const std::string& name) {
    return const_cast<MatX<T>&>(find(name).grad);
  }

  bool contains(const std::string& name) const {
    return entries_.count(name) > 0;
  }

  void zero_grad() {
    for (auto& [name, e] : entries_) e.grad.setZero();
  }

  void accumulate_grads(const ParamStore<T>& other, T weight) {
    for (auto& [name, e] : entries_) {
      e.grad += weight * other.find(name).grad;
    }
  }

  std::size_t total_parameters() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) {
      n += static_cast<std::size_t>(e.value.size());
    }
    return n;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, e] : entries_) {
      out.add(name, static_cast<int>(e.value.rows()),
              static_cast<int>(e.value.cols()));
      out.value(name) = e.value.template cast<U>();
    }
    return out;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }

  const Entry& find(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      throw std::logic_error("ParamStore: unknown parameter " + name);
    }
    return it->second;
  }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace partmotion::model
