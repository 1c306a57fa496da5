#include "fa/nn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fa::nn {

AdamW::AdamW(std::vector<Param*> params, Options options) : params_(std::move(params)), opt_(options) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
    // Convolution and linear weights are decayed; norm affine terms and biases are not.
    decay_.push_back(p->name.ends_with(".weight"));
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const auto b1 = static_cast<float>(opt_.beta1);
  const auto b2 = static_cast<float>(opt_.beta2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    auto& m = m_[i];
    auto& v = v_[i];
    const float decay = decay_[i] ? static_cast<float>(1.0 - lr * opt_.weight_decay) : 1.0f;
    const auto step = static_cast<float>(lr / bc1);
    const auto inv_bc2 = static_cast<float>(1.0 / bc2);
    const auto eps = static_cast<float>(opt_.eps);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const float g = p.grad[j];
      m[j] = b1 * m[j] + (1.0f - b1) * g;
      v[j] = b2 * v[j] + (1.0f - b2) * g * g;
      p.value[j] = p.value[j] * decay - step * m[j] / (std::sqrt(v[j] * inv_bc2) + eps);
    }
  }
}

double OneCycle::at(long step) const {
  const double total = std::max<long>(total_steps, 1);
  const double warm = std::max(1.0, std::floor(pct_start * total));
  const double lo = peak / div_start;
  const double end = peak / div_final;
  auto cosine = [](double from, double to, double frac) {
    return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
  };
  const double s = std::clamp<double>(static_cast<double>(step), 0.0, total - 1.0);
  if (s < warm) return cosine(lo, peak, s / warm);
  const double rest = std::max(1.0, total - warm);
  return cosine(peak, end, (s - warm) / rest);
}

}  // namespace fa::nn
