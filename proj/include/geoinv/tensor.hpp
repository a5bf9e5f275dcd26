#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace geoinv {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

[[noreturn]] void fail(const std::string& msg);
inline void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

struct Node;
using NodeP = std::shared_ptr<Node>;

// One value in the computation graph. Ops allocate a fresh node; leaves are
// created directly. Values are written once at construction; only grad
// buffers mutate afterwards (and leaf values between graph builds, via the
// optimizer).
struct Node {
  Shape shape;
  std::vector<float> val;
  std::vector<float> grad;
  bool requires = false;
  std::vector<NodeP> parents;
  std::function<void(Node&)> vjp;  // accumulates into parents' grads
  const char* op = "leaf";

  int64_t size() const { return int64_t(val.size()); }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0f);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodeP n) : n_(std::move(n)) {}

  static Tensor zeros(Shape s, bool requires_grad = false);
  static Tensor full(Shape s, float v, bool requires_grad = false);
  static Tensor from(Shape s, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float v);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int64_t size() const { return n_->size(); }
  int64_t dim(int i) const { return n_->shape[size_t(i)]; }
  int ndim() const { return int(n_->shape.size()); }

  std::span<const float> val() const { return {n_->val.data(), n_->val.size()}; }
  // Mutation is restricted to leaves (optimizer updates between graphs).
  std::span<float> val_mut();
  float item() const;

  bool requires_grad() const { return n_->requires; }
  void set_requires_grad(bool b);
  std::span<const float> grad() const;
  std::span<float> grad_mut();
  void zero_grad();

  NodeP node() const { return n_; }

 private:
  NodeP n_;
};

// Reverse sweep from a scalar loss. Grad buffers of reachable requires-grad
// nodes accumulate; call zero_grad between backward passes to reset.
void backward(const Tensor& loss);

}  // namespace geoinv
