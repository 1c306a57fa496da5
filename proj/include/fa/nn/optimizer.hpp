#pragma once

#include <vector>

#include "fa/nn/layers.hpp"

namespace fa::nn {

/// Adam with decoupled weight decay. Norm/bias parameters (1-D) are not decayed.
class AdamW {
public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-5;
    double weight_decay = 0.01;
  };

  AdamW(std::vector<Param*> params, Options options);

  void step(double learning_rate);
  long steps() const noexcept { return t_; }

private:
  std::vector<Param*> params_;
  std::vector<std::vector<float>> m_, v_;
  std::vector<bool> decay_;
  Options opt_;
  long t_ = 0;
};

/// One-cycle learning-rate schedule: cosine warm-up from peak/div_start to
/// peak over the first pct_start of training, then cosine annealing down to
/// peak/div_final.
struct OneCycle {
  double peak = 1e-3;
  long total_steps = 1;
  double pct_start = 0.25;
  double div_start = 25.0;
  double div_final = 1e5;

  double at(long step) const;
};

}  // namespace fa::nn
