#include <cmath>

#include "geoinv/ops.hpp"
#include "op_common.hpp"

namespace geoinv {
namespace detail {

BCast make_bcast(const Shape& a, const Shape& b, const char* op) {
  BCast bc;
  const int nd = int(std::max(a.size(), b.size()));
  bc.out.resize(size_t(nd));
  bc.stride_a.assign(size_t(nd), 0);
  bc.stride_b.assign(size_t(nd), 0);
  const auto sa = row_strides(a), sb = row_strides(b);
  for (int d = 0; d < nd; ++d) {
    const int ia = int(a.size()) - nd + d, ib = int(b.size()) - nd + d;
    const int64_t ea = ia >= 0 ? a[size_t(ia)] : 1;
    const int64_t eb = ib >= 0 ? b[size_t(ib)] : 1;
    check(ea == eb || ea == 1 || eb == 1,
          std::string(op) + ": shapes not broadcastable " + shape_str(a) +
              " vs " + shape_str(b));
    bc.out[size_t(d)] = std::max(ea, eb);
    if (ea != 1 && ia >= 0) bc.stride_a[size_t(d)] = sa[size_t(ia)];
    if (eb != 1 && ib >= 0) bc.stride_b[size_t(d)] = sb[size_t(ib)];
  }
  bc.same = (a == b);
  return bc;
}

// fa/fb: local derivatives w.r.t. a and b given (a, b, upstream grad).
template <typename F, typename DA, typename DB>
Tensor binary_op(const Tensor& ta, const Tensor& tb, const char* name, F f,
                 DA da, DB db) {
  const BCast bc = make_bcast(ta.shape(), tb.shape(), name);
  auto out = make_node(bc.out, {ta.node(), tb.node()}, name);
  const float* a = ta.node()->val.data();
  const float* b = tb.node()->val.data();
  float* o = out->val.data();
  const int64_t n = out->size();
  if (bc.same) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) o[i] = f(a[i], b[i]);
  } else {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
      int64_t oa, ob;
      bcast_offsets(bc, i, oa, ob);
      o[i] = f(a[oa], b[ob]);
    }
  }
  if (out->requires) {
    out->vjp = [bc, da, db](Node& self) {
      Node& na = *self.parents[0];
      Node& nb = *self.parents[1];
      const float* a = na.val.data();
      const float* b = nb.val.data();
      const float* g = self.grad.data();
      const int64_t n = self.size();
      if (na.requires) na.ensure_grad();
      if (nb.requires) nb.ensure_grad();
      if (bc.same) {
        if (na.requires && nb.requires) {
#pragma omp parallel for schedule(static)
          for (int64_t i = 0; i < n; ++i) {
            na.grad[size_t(i)] += da(a[i], b[i]) * g[i];
            nb.grad[size_t(i)] += db(a[i], b[i]) * g[i];
          }
        } else if (na.requires) {
#pragma omp parallel for schedule(static)
          for (int64_t i = 0; i < n; ++i) na.grad[size_t(i)] += da(a[i], b[i]) * g[i];
        } else if (nb.requires) {
#pragma omp parallel for schedule(static)
          for (int64_t i = 0; i < n; ++i) nb.grad[size_t(i)] += db(a[i], b[i]) * g[i];
        }
      } else {
        // Serial: broadcast axes reduce into shared grad slots.
        for (int64_t i = 0; i < n; ++i) {
          int64_t oa, ob;
          bcast_offsets(bc, i, oa, ob);
          if (na.requires) na.grad[size_t(oa)] += da(a[oa], b[ob]) * g[i];
          if (nb.requires) nb.grad[size_t(ob)] += db(a[oa], b[ob]) * g[i];
        }
      }
    };
  }
  return Tensor(out);
}

template <typename F, typename D>
Tensor unary_op(const Tensor& ta, const char* name, F f, D dfdx) {
  auto out = make_node(ta.shape(), {ta.node()}, name);
  const float* a = ta.node()->val.data();
  float* o = out->val.data();
  const int64_t n = out->size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) o[i] = f(a[i]);
  if (out->requires) {
    out->vjp = [dfdx](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const float* a = na.val.data();
      const float* g = self.grad.data();
      const int64_t n = self.size();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) na.grad[size_t(i)] += dfdx(a[i]) * g[i];
    };
  }
  return Tensor(out);
}

}  // namespace detail

using detail::binary_op;
using detail::unary_op;

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](float x, float y) { return x + y; },
      [](float, float) { return 1.0f; }, [](float, float) { return 1.0f; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](float x, float y) { return x - y; },
      [](float, float) { return 1.0f; }, [](float, float) { return -1.0f; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](float x, float y) { return x * y; },
      [](float, float y) { return y; }, [](float x, float) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "div", [](float x, float y) { return x / y; },
      [](float, float y) { return 1.0f / y; },
      [](float x, float y) { return -x / (y * y); });
}

Tensor scalar_mul(const Tensor& a, float s) {
  return unary_op(
      a, "scalar_mul", [s](float x) { return x * s; }, [s](float) { return s; });
}

Tensor scalar_add(const Tensor& a, float s) {
  return unary_op(
      a, "scalar_add", [s](float x) { return x + s; }, [](float) { return 1.0f; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, "relu", [](float x) { return x > 0 ? x : 0.0f; },
      [](float x) { return x > 0 ? 1.0f : 0.0f; });
}

namespace {
constexpr float kInvSqrt2 = 0.70710678118654752440f;
constexpr float kInvSqrt2Pi = 0.39894228040143267794f;
}  // namespace

Tensor gelu(const Tensor& a) {
  return unary_op(
      a, "gelu",
      [](float x) { return 0.5f * x * (1.0f + std::erf(x * kInvSqrt2)); },
      [](float x) {
        const float c = 0.5f * (1.0f + std::erf(x * kInvSqrt2));
        return c + x * kInvSqrt2Pi * std::exp(-0.5f * x * x);
      });
}

Tensor silu(const Tensor& a) {
  return unary_op(
      a, "silu",
      [](float x) { return x / (1.0f + std::exp(-x)); },
      [](float x) {
        const float s = 1.0f / (1.0f + std::exp(-x));
        return s * (1.0f + x * (1.0f - s));
      });
}

Tensor sqrt_smooth(const Tensor& a, float eps) {
  return unary_op(
      a, "sqrt_smooth",
      [eps](float x) { return std::sqrt(x + eps); },
      [eps](float x) { return 0.5f / std::sqrt(x + eps); });
}

Tensor softmax_lastdim(const Tensor& a) {
  check(a.ndim() >= 1, "softmax: needs at least one axis");
  const int64_t c = a.dim(a.ndim() - 1);
  const int64_t rows = a.size() / c;
  auto out = detail::make_node(a.shape(), {a.node()}, "softmax");
  const float* x = a.node()->val.data();
  float* y = out->val.data();
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const float* xr = x + r * c;
    float* yr = y + r * c;
    float mx = xr[0];
    for (int64_t i = 1; i < c; ++i) mx = std::max(mx, xr[i]);
    double s = 0;
    for (int64_t i = 0; i < c; ++i) {
      yr[i] = std::exp(xr[i] - mx);
      s += yr[i];
    }
    const float inv = float(1.0 / s);
    for (int64_t i = 0; i < c; ++i) yr[i] *= inv;
  }
  if (out->requires) {
    out->vjp = [c, rows](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const float* y = self.val.data();
      const float* g = self.grad.data();
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < rows; ++r) {
        const float* yr = y + r * c;
        const float* gr = g + r * c;
        float* dr = na.grad.data() + r * c;
        double dot = 0;
        for (int64_t i = 0; i < c; ++i) dot += double(yr[i]) * gr[i];
        for (int64_t i = 0; i < c; ++i)
          dr[i] += yr[i] * (gr[i] - float(dot));
      }
    };
  }
  return Tensor(out);
}

Tensor layernorm_lastdim(const Tensor& a, float eps) {
  check(a.ndim() >= 1, "layernorm: needs at least one axis");
  const int64_t c = a.dim(a.ndim() - 1);
  const int64_t rows = a.size() / c;
  auto out = detail::make_node(a.shape(), {a.node()}, "layernorm");
  const float* x = a.node()->val.data();
  float* y = out->val.data();
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const float* xr = x + r * c;
    float* yr = y + r * c;
    double mu = 0;
    for (int64_t i = 0; i < c; ++i) mu += xr[i];
    mu /= double(c);
    double var = 0;
    for (int64_t i = 0; i < c; ++i) {
      const double d = xr[i] - mu;
      var += d * d;
    }
    var /= double(c);
    const float inv = float(1.0 / std::sqrt(var + eps));
    const float mf = float(mu);
    for (int64_t i = 0; i < c; ++i) yr[i] = (xr[i] - mf) * inv;
  }
  if (out->requires) {
    out->vjp = [c, rows, eps](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const float* x = na.val.data();
      const float* y = self.val.data();
      const float* g = self.grad.data();
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < rows; ++r) {
        const float* xr = x + r * c;
        const float* yr = y + r * c;
        const float* gr = g + r * c;
        float* dr = na.grad.data() + r * c;
        double mu = 0;
        for (int64_t i = 0; i < c; ++i) mu += xr[i];
        mu /= double(c);
        double var = 0;
        for (int64_t i = 0; i < c; ++i) {
          const double d = xr[i] - mu;
          var += d * d;
        }
        var /= double(c);
        const float inv = float(1.0 / std::sqrt(var + eps));
        double gmean = 0, gymean = 0;
        for (int64_t i = 0; i < c; ++i) {
          gmean += gr[i];
          gymean += double(gr[i]) * yr[i];
        }
        gmean /= double(c);
        gymean /= double(c);
        for (int64_t i = 0; i < c; ++i)
          dr[i] += inv * (gr[i] - float(gmean) - yr[i] * float(gymean));
      }
    };
  }
  return Tensor(out);
}

Tensor sum_all(const Tensor& a) {
  auto out = detail::make_node({1}, {a.node()}, "sum_all");
  const float* x = a.node()->val.data();
  double s = 0;
  for (int64_t i = 0; i < a.size(); ++i) s += x[i];
  out->val[0] = float(s);
  if (out->requires) {
    out->vjp = [](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const float g = self.grad[0];
      const int64_t n = na.size();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) na.grad[size_t(i)] += g;
    };
  }
  return Tensor(out);
}

Tensor mean_all(const Tensor& a) {
  const float inv = float(1.0 / double(a.size()));
  return scalar_mul(sum_all(a), inv);
}

Tensor sum_rows(const Tensor& a) {
  check(a.ndim() == 2, "sum_rows: expects 2-d input, got " + shape_str(a.shape()));
  const int64_t r = a.dim(0), c = a.dim(1);
  auto out = detail::make_node({r}, {a.node()}, "sum_rows");
  const float* x = a.node()->val.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < r; ++i) {
    double s = 0;
    for (int64_t j = 0; j < c; ++j) s += x[i * c + j];
    out->val[size_t(i)] = float(s);
  }
  if (out->requires) {
    out->vjp = [r, c](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < r; ++i) {
        const float g = self.grad[size_t(i)];
        for (int64_t j = 0; j < c; ++j) na.grad[size_t(i * c + j)] += g;
      }
    };
  }
  return Tensor(out);
}

}  // namespace geoinv
