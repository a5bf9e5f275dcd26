#pragma once
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "geoinv/ops.hpp"
#include "geoinv/rng.hpp"
#include "geoinv/tensor.hpp"

namespace geoinv::testutil {

struct OpCase {
  std::string name;
  std::vector<Shape> leaf_shapes;
  // Builds the op under test from leaves; the harness reduces the output
  // against fixed random weights to form the scalar loss.
  std::function<Tensor(const std::vector<Tensor>&)> build;
};

inline std::vector<float> random_values(int64_t n, Rng& rng, float lo = -1.0f,
                                        float hi = 1.0f) {
  std::vector<float> v(size_t(n));
  for (auto& x : v) x = lo + float(rng.uniform()) * (hi - lo);
  return v;
}

struct GradCheckResult {
  double max_rel_err = 0;
  std::string where;
};

// Central finite differences against reverse-mode gradients, f64 readout of
// the weighted-sum loss to keep the oracle's own noise below tolerance.
inline GradCheckResult check_op_gradients(const OpCase& c, uint64_t seed,
                                          float h = 1e-3f) {
  Rng rng(seed);
  std::vector<std::vector<float>> leaf_vals;
  for (const auto& s : c.leaf_shapes)
    leaf_vals.push_back(random_values(shape_numel(s), rng));

  auto make_leaves = [&](bool req) {
    std::vector<Tensor> ls;
    for (size_t i = 0; i < c.leaf_shapes.size(); ++i)
      ls.push_back(Tensor::from(c.leaf_shapes[i], leaf_vals[i], req));
    return ls;
  };

  // weights for the scalar reduction
  auto probe = make_leaves(false);
  Tensor out0 = c.build(probe);
  std::vector<float> w = random_values(out0.size(), rng, 0.5f, 1.5f);

  auto loss_f64 = [&](const std::vector<Tensor>& ls) {
    Tensor out = c.build(ls);
    double s = 0;
    auto v = out.val();
    for (size_t i = 0; i < v.size(); ++i) s += double(v[i]) * w[i];
    return s;
  };

  // reverse-mode gradients
  auto leaves = make_leaves(true);
  Tensor out = c.build(leaves);
  Tensor wt = Tensor::from(out.shape(), w);
  Tensor loss = sum_all(mul(out, wt));
  backward(loss);

  GradCheckResult res;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto g = leaves[li].grad();
    const int64_t n = int64_t(leaf_vals[li].size());
    // probe every element for small leaves, a strided subset for large ones
    const int64_t stride = n <= 128 ? 1 : n / 128;
    for (int64_t i = 0; i < n; i += stride) {
      const float keep = leaf_vals[li][size_t(i)];
      leaf_vals[li][size_t(i)] = keep + h;
      const double lp = loss_f64(make_leaves(false));
      leaf_vals[li][size_t(i)] = keep - h;
      const double lm = loss_f64(make_leaves(false));
      leaf_vals[li][size_t(i)] = keep;
      const double fd = (lp - lm) / (2.0 * double(h));
      const double ad = double(g[size_t(i)]);
      const double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-2});
      const double rel = std::fabs(ad - fd) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.where = c.name + " leaf " + std::to_string(li) + " elem " +
                    std::to_string(i);
      }
    }
  }
  return res;
}

// Every differentiable op in the engine, with small generic shapes.
std::vector<OpCase> all_op_cases();

}  // namespace geoinv::testutil
