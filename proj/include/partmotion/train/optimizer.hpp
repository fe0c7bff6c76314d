#pragma once

#include <cmath>
#include <map>

#include "partmotion/model/params.hpp"

namespace partmotion::train {

// Adam with bias correction. State is keyed by parameter name and iterated
// in map order, so updates are deterministic.
template <typename T>
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(model::ParamStore<T>& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (auto& [name, entry] : params) {
      auto m_it = m_.find(name);
      if (m_it == m_.end()) {
        m_it = m_.emplace(name, model::MatX<T>::Zero(entry.value.rows(),
                                                     entry.value.cols()))
                   .first;
        v_.emplace(name, model::MatX<T>::Zero(entry.value.rows(),
                                              entry.value.cols()));
      }
      auto& m = m_it->second;
      auto& v = v_.at(name);
      m = static_cast<T>(beta1_) * m +
          static_cast<T>(1.0 - beta1_) * entry.grad;
      v = (static_cast<T>(beta2_) * v.array() +
           static_cast<T>(1.0 - beta2_) * entry.grad.array().square())
              .matrix();
      entry.value.array() -=
          static_cast<T>(lr) * (m.array() / static_cast<T>(bc1)) /
          ((v.array() / static_cast<T>(bc2)).sqrt() + static_cast<T>(eps_));
    }
  }

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, model::MatX<T>> m_, v_;
};

}  // namespace partmotion::train
