#include <cstring>

#include "geoinv/ops.hpp"
#include "op_common.hpp"

namespace geoinv {
using detail::make_node;
using detail::row_strides;

Tensor reshape(const Tensor& a, Shape s) {
  check(shape_numel(s) == a.size(), "reshape: " + shape_str(a.shape()) +
                                        " -> " + shape_str(s) + " changes size");
  auto out = make_node(std::move(s), {a.node()}, "reshape");
  std::memcpy(out->val.data(), a.node()->val.data(), sizeof(float) * size_t(a.size()));
  if (out->requires) {
    out->vjp = [](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const int64_t n = self.size();
      for (int64_t i = 0; i < n; ++i) na.grad[size_t(i)] += self.grad[size_t(i)];
    };
  }
  return Tensor(out);
}

namespace {

void permute_copy(const float* src, float* dst, const Shape& in_shape,
                  const std::vector<int>& axes, bool add) {
  const auto in_st = row_strides(in_shape);
  const int nd = int(in_shape.size());
  Shape out_shape(size_t(nd));
  std::vector<int64_t> src_stride(size_t(nd));
  for (int d = 0; d < nd; ++d) {
    out_shape[size_t(d)] = in_shape[size_t(axes[size_t(d)])];
    src_stride[size_t(d)] = in_st[size_t(axes[size_t(d)])];
  }
  const int64_t n = shape_numel(out_shape);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    int64_t rem = i, off = 0;
    for (int d = nd - 1; d >= 0; --d) {
      off += (rem % out_shape[size_t(d)]) * src_stride[size_t(d)];
      rem /= out_shape[size_t(d)];
    }
    if (add)
      dst[off] += src[i];
    else
      dst[i] = src[off];
  }
}

}  // namespace

Tensor permute(const Tensor& a, const std::vector<int>& axes) {
  const int nd = a.ndim();
  check(int(axes.size()) == nd, "permute: axes size mismatch");
  std::vector<bool> used(size_t(nd), false);
  Shape out_shape(size_t(nd));
  for (int d = 0; d < nd; ++d) {
    check(axes[size_t(d)] >= 0 && axes[size_t(d)] < nd && !used[size_t(axes[size_t(d)])],
          "permute: invalid axes");
    used[size_t(axes[size_t(d)])] = true;
    out_shape[size_t(d)] = a.dim(axes[size_t(d)]);
  }
  auto out = make_node(out_shape, {a.node()}, "permute");
  permute_copy(a.node()->val.data(), out->val.data(), a.shape(), axes, false);
  if (out->requires) {
    const Shape in_shape = a.shape();
    out->vjp = [axes, in_shape](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      // scatter-add: dst[src_offset] += grad[i]; offsets are a bijection so
      // the parallel loop writes each slot exactly once per call
      permute_copy(self.grad.data(), na.grad.data(), in_shape, axes, true);
    };
  }
  return Tensor(out);
}

namespace {

// Copy a box between two tensors: dst[dst_off + i] (+)= src[src_off + i].
void box_copy(const float* src, const Shape& src_shape,
              const std::vector<int64_t>& src_origin, float* dst,
              const Shape& dst_shape, const std::vector<int64_t>& dst_origin,
              const Shape& extents, bool add) {
  const auto sst = row_strides(src_shape);
  const auto dst_st = row_strides(dst_shape);
  const int nd = int(extents.size());
  const int64_t n = shape_numel(extents);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    int64_t rem = i, so = 0, dof = 0;
    for (int d = nd - 1; d >= 0; --d) {
      const int64_t c = rem % extents[size_t(d)];
      rem /= extents[size_t(d)];
      so += (src_origin[size_t(d)] + c) * sst[size_t(d)];
      dof += (dst_origin[size_t(d)] + c) * dst_st[size_t(d)];
    }
    if (add)
      dst[dof] += src[so];
    else
      dst[dof] = src[so];
  }
}

}  // namespace

Tensor pad(const Tensor& a, const std::vector<int64_t>& pads) {
  const int nd = a.ndim();
  check(int(pads.size()) == 2 * nd, "pad: pads must have 2*ndim entries");
  Shape out_shape(size_t(nd));
  std::vector<int64_t> origin(size_t(nd));
  for (int d = 0; d < nd; ++d) {
    check(pads[size_t(2 * d)] >= 0 && pads[size_t(2 * d + 1)] >= 0,
          "pad: negative padding");
    origin[size_t(d)] = pads[size_t(2 * d)];
    out_shape[size_t(d)] = a.dim(d) + pads[size_t(2 * d)] + pads[size_t(2 * d + 1)];
  }
  auto out = make_node(out_shape, {a.node()}, "pad");
  std::fill(out->val.begin(), out->val.end(), 0.0f);
  const std::vector<int64_t> zeros(size_t(nd), 0);
  box_copy(a.node()->val.data(), a.shape(), zeros, out->val.data(), out_shape,
           origin, a.shape(), false);
  if (out->requires) {
    const Shape in_shape = a.shape();
    out->vjp = [in_shape, origin, out_shape](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const std::vector<int64_t> zeros(in_shape.size(), 0);
      box_copy(self.grad.data(), out_shape, origin, na.grad.data(), in_shape,
               zeros, in_shape, true);
    };
  }
  return Tensor(out);
}

Tensor crop(const Tensor& a, const std::vector<int64_t>& offsets, Shape extents) {
  const int nd = a.ndim();
  check(int(offsets.size()) == nd && int(extents.size()) == nd,
        "crop: offsets/extents rank mismatch");
  for (int d = 0; d < nd; ++d)
    check(offsets[size_t(d)] >= 0 && extents[size_t(d)] >= 1 &&
              offsets[size_t(d)] + extents[size_t(d)] <= a.dim(d),
          "crop: window out of range on axis " + std::to_string(d));
  auto out = make_node(extents, {a.node()}, "crop");
  const std::vector<int64_t> zeros(size_t(nd), 0);
  box_copy(a.node()->val.data(), a.shape(), offsets, out->val.data(), extents,
           zeros, extents, false);
  if (out->requires) {
    const Shape in_shape = a.shape();
    out->vjp = [in_shape, offsets, extents](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const std::vector<int64_t> zeros(in_shape.size(), 0);
      box_copy(self.grad.data(), extents, zeros, na.grad.data(), in_shape,
               offsets, extents, true);
    };
  }
  return Tensor(out);
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  const int nd = a.ndim();
  check(b.ndim() == nd && axis >= 0 && axis < nd, "concat: rank/axis mismatch");
  for (int d = 0; d < nd; ++d)
    check(d == axis || a.dim(d) == b.dim(d),
          "concat: shapes " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()) + " differ off-axis");
  Shape out_shape = a.shape();
  out_shape[size_t(axis)] += b.dim(axis);
  auto out = make_node(out_shape, {a.node(), b.node()}, "concat");
  std::vector<int64_t> zero(size_t(nd), 0), boff(size_t(nd), 0);
  boff[size_t(axis)] = a.dim(axis);
  box_copy(a.node()->val.data(), a.shape(), zero, out->val.data(), out_shape,
           zero, a.shape(), false);
  box_copy(b.node()->val.data(), b.shape(), zero, out->val.data(), out_shape,
           boff, b.shape(), false);
  if (out->requires) {
    const Shape sa = a.shape(), sb = b.shape();
    out->vjp = [sa, sb, out_shape, boff](Node& self) {
      Node& na = *self.parents[0];
      Node& nb = *self.parents[1];
      const std::vector<int64_t> zero(sa.size(), 0);
      if (na.requires) {
        na.ensure_grad();
        box_copy(self.grad.data(), out_shape, zero, na.grad.data(), sa, zero,
                 sa, true);
      }
      if (nb.requires) {
        nb.ensure_grad();
        box_copy(self.grad.data(), out_shape, boff, nb.grad.data(), sb, zero,
                 sb, true);
      }
    };
  }
  return Tensor(out);
}

Tensor broadcast_to(const Tensor& a, Shape s) {
  const detail::BCast bc = detail::make_bcast(a.shape(), s, "broadcast_to");
  check(bc.out == s, "broadcast_to: " + shape_str(a.shape()) +
                         " does not broadcast to " + shape_str(s));
  auto out = make_node(s, {a.node()}, "broadcast_to");
  const float* x = a.node()->val.data();
  float* o = out->val.data();
  const int64_t n = out->size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    int64_t oa, ob;
    detail::bcast_offsets(bc, i, oa, ob);
    o[i] = x[oa];
  }
  if (out->requires) {
    out->vjp = [bc](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const int64_t n = self.size();
      for (int64_t i = 0; i < n; ++i) {
        int64_t oa, ob;
        detail::bcast_offsets(bc, i, oa, ob);
        na.grad[size_t(oa)] += self.grad[size_t(i)];
      }
    };
  }
  return Tensor(out);
}

}  // namespace geoinv
