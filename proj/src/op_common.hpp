#pragma once
#include <cstring>
#include <vector>

#include "geoinv/tensor.hpp"

namespace geoinv::detail {

inline NodeP make_node(Shape shape, std::vector<NodeP> parents, const char* op) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->val.resize(size_t(shape_numel(n->shape)));
  n->op = op;
  for (const auto& p : parents) n->requires = n->requires || p->requires;
  if (n->requires) n->parents = std::move(parents);
  return n;
}

// Trailing-aligned broadcast of two shapes; strides are in elements, zero on
// broadcast axes.
struct BCast {
  Shape out;
  std::vector<int64_t> stride_a, stride_b;
  bool same = false;
};

BCast make_bcast(const Shape& a, const Shape& b, const char* op);

// Decompose flat output index into operand offsets.
inline void bcast_offsets(const BCast& bc, int64_t idx, int64_t& oa, int64_t& ob) {
  oa = 0;
  ob = 0;
  for (int d = int(bc.out.size()) - 1; d >= 0; --d) {
    const int64_t c = idx % bc.out[size_t(d)];
    idx /= bc.out[size_t(d)];
    oa += c * bc.stride_a[size_t(d)];
    ob += c * bc.stride_b[size_t(d)];
  }
}

inline std::vector<int64_t> row_strides(const Shape& s) {
  std::vector<int64_t> st(s.size());
  int64_t acc = 1;
  for (int d = int(s.size()) - 1; d >= 0; --d) {
    st[size_t(d)] = acc;
    acc *= s[size_t(d)];
  }
  return st;
}

}  // namespace geoinv::detail
