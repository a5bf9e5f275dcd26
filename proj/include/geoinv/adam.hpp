#pragma once
#include <cstdint>
#include <span>
#include <vector>

namespace geoinv {

struct AdamConfig {
  float rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Bias-corrected Adam over one flat parameter buffer. Used for both network
// training and the guidance-gradient processing, so the moments are exposed.
struct AdamState {
  AdamConfig cfg;
  std::vector<float> m, v;
  int64_t step = 0;

  explicit AdamState(size_t n = 0, AdamConfig c = {}) : cfg(c), m(n, 0.0f), v(n, 0.0f) {}

  void resize(size_t n) {
    m.assign(n, 0.0f);
    v.assign(n, 0.0f);
    step = 0;
  }

  // params -= rate * mhat / (sqrt(vhat) + eps)
  void update(std::span<float> params, std::span<const float> grads);

  // Returns the bias-corrected direction mhat/(sqrt(vhat)+eps) without
  // touching any parameters (guidance processing).
  void direction(std::span<const float> grads, std::span<float> out);
};

}  // namespace geoinv
