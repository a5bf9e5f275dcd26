#include "geoinv/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace geoinv {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

void fail(const std::string& msg) { throw std::runtime_error(msg); }

Tensor Tensor::zeros(Shape s, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(s);
  n->val.assign(size_t(shape_numel(n->shape)), 0.0f);
  n->requires = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(Shape s, float v, bool requires_grad) {
  Tensor t = zeros(std::move(s), requires_grad);
  std::fill(t.n_->val.begin(), t.n_->val.end(), v);
  return t;
}

Tensor Tensor::from(Shape s, std::vector<float> data, bool requires_grad) {
  check(int64_t(data.size()) == shape_numel(s),
        "tensor: data length " + std::to_string(data.size()) +
            " does not match shape " + shape_str(s));
  auto n = std::make_shared<Node>();
  n->shape = std::move(s);
  n->val = std::move(data);
  n->requires = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(float v) { return from({1}, {v}); }

std::span<float> Tensor::val_mut() {
  check(n_->parents.empty(), "tensor: only leaf values may be mutated");
  return {n_->val.data(), n_->val.size()};
}

float Tensor::item() const {
  check(size() == 1, "tensor: item() on non-scalar " + shape_str(shape()));
  return n_->val[0];
}

void Tensor::set_requires_grad(bool b) {
  check(n_->parents.empty(), "tensor: requires_grad is set on leaves only");
  n_->requires = b;
}

std::span<const float> Tensor::grad() const {
  check(n_->grad.size() == n_->val.size(), "tensor: grad not populated");
  return {n_->grad.data(), n_->grad.size()};
}

std::span<float> Tensor::grad_mut() {
  n_->ensure_grad();
  return {n_->grad.data(), n_->grad.size()};
}

void Tensor::zero_grad() {
  if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0f);
}

void backward(const Tensor& loss) {
  check(loss.defined(), "backward: undefined tensor");
  check(loss.size() == 1, "backward: loss must be scalar, got " +
                              shape_str(loss.shape()));
  check(loss.requires_grad(),
        "backward: loss is not connected to any requires-grad tensor");

  // Iterative DFS topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    bool descended = false;
    while (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
        descended = true;
        break;
      }
    }
    if (!descended && stack.back().second >= stack.back().first->parents.size()) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->vjp) n->vjp(*n);
  }
}

}  // namespace geoinv
