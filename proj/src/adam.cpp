#include "geoinv/adam.hpp"

#include <cmath>

#include "geoinv/tensor.hpp"

namespace geoinv {

void AdamState::update(std::span<float> params, std::span<const float> grads) {
  check(params.size() == grads.size() && params.size() == m.size(),
        "adam: size mismatch between params, grads and moments");
  ++step;
  const float b1 = cfg.beta1, b2 = cfg.beta2;
  const float c1 = 1.0f / (1.0f - std::pow(b1, float(step)));
  const float c2 = 1.0f / (1.0f - std::pow(b2, float(step)));
  const size_t n = params.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < int64_t(n); ++i) {
    const float g = grads[size_t(i)];
    m[size_t(i)] = b1 * m[size_t(i)] + (1.0f - b1) * g;
    v[size_t(i)] = b2 * v[size_t(i)] + (1.0f - b2) * g * g;
    const float mh = m[size_t(i)] * c1;
    const float vh = v[size_t(i)] * c2;
    params[size_t(i)] -= cfg.rate * mh / (std::sqrt(vh) + cfg.eps);
  }
}

void AdamState::direction(std::span<const float> grads, std::span<float> out) {
  check(grads.size() == m.size() && out.size() == m.size(),
        "adam: size mismatch in direction");
  ++step;
  const float b1 = cfg.beta1, b2 = cfg.beta2;
  const float c1 = 1.0f / (1.0f - std::pow(b1, float(step)));
  const float c2 = 1.0f / (1.0f - std::pow(b2, float(step)));
  const size_t n = grads.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < int64_t(n); ++i) {
    const float g = grads[size_t(i)];
    m[size_t(i)] = b1 * m[size_t(i)] + (1.0f - b1) * g;
    v[size_t(i)] = b2 * v[size_t(i)] + (1.0f - b2) * g * g;
    out[size_t(i)] = m[size_t(i)] * c1 / (std::sqrt(v[size_t(i)] * c2) + cfg.eps);
  }
}

}  // namespace geoinv
