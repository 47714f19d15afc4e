#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace esgread {

struct AdamWConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied to every parameter
};

// AdamW over a fixed list of parameter blocks. Moments are kept per block in
// the same order as the blocks passed to step().
class AdamW {
 public:
  AdamW(AdamWConfig config, const std::vector<size_t>& block_sizes)
      : config_(config) {
    for (size_t n : block_sizes) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads) {
    ++t_;
    const double lr = config_.learning_rate;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const double decay = 1.0 - lr * config_.weight_decay;
    for (size_t b = 0; b < params.size(); ++b) {
      auto p = params[b];
      auto g = grads[b];
      auto& m = m_[b];
      auto& v = v_[b];
      for (size_t i = 0; i < p.size(); ++i) {
        p[i] *= decay;
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      }
    }
  }

  long steps() const { return t_; }

 private:
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace esgread
