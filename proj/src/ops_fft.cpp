#include <cstring>

#include "geoinv/fft.hpp"
#include "geoinv/ops.hpp"
#include "op_common.hpp"

namespace geoinv {
using detail::make_node;

namespace {

void check_axes(const Shape& s, const std::vector<int>& axes, const char* op) {
  check(!axes.empty(), std::string(op) + ": no axes given");
  for (int a : axes) {
    check(a >= 0 && a < int(s.size()), std::string(op) + ": axis out of range");
    check(s[size_t(a)] >= 1, std::string(op) + ": zero-length axis");
  }
}

int64_t axes_numel(const Shape& s, const std::vector<int>& axes) {
  int64_t n = 1;
  for (int a : axes) n *= s[size_t(a)];
  return n;
}

}  // namespace

Tensor rfft(const Tensor& ta, const std::vector<int>& axes) {
  check_axes(ta.shape(), axes, "rfft");
  Shape out_shape = ta.shape();
  out_shape.push_back(2);
  auto out = make_node(out_shape, {ta.node()}, "rfft");
  const float* x = ta.node()->val.data();
  float* o = out->val.data();
  const int64_t n = ta.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    o[2 * i] = x[i];
    o[2 * i + 1] = 0.0f;
  }
  const Shape cshape = ta.shape();
  for (int a : axes) fft::transform_axis(o, cshape, a, /*inverse=*/false);
  if (out->requires) {
    out->vjp = [cshape, axes](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      std::vector<float> tmp(self.grad.begin(), self.grad.end());
      for (int a : axes) fft::transform_axis(tmp.data(), cshape, a, true);
      const int64_t n = na.size();
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) na.grad[size_t(i)] += tmp[size_t(2 * i)];
    };
  }
  return Tensor(out);
}

Tensor irfft(const Tensor& ta, const std::vector<int>& axes) {
  check(ta.ndim() >= 2 && ta.dim(ta.ndim() - 1) == 2,
        "irfft: expects a complex tensor with trailing re/im pair, got " +
            shape_str(ta.shape()));
  Shape cshape(ta.shape().begin(), ta.shape().end() - 1);
  check_axes(cshape, axes, "irfft");
  const int64_t nfft = axes_numel(cshape, axes);
  const float scale = float(1.0 / double(nfft));
  auto out = make_node(cshape, {ta.node()}, "irfft");
  std::vector<float> tmp(ta.node()->val.begin(), ta.node()->val.end());
  for (int a : axes) fft::transform_axis(tmp.data(), cshape, a, true);
  float* o = out->val.data();
  const int64_t n = out->size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) o[i] = tmp[size_t(2 * i)] * scale;
  if (out->requires) {
    out->vjp = [cshape, axes, scale](Node& self) {
      Node& na = *self.parents[0];
      na.ensure_grad();
      const int64_t n = self.size();
      std::vector<float> tmp(size_t(2 * n));
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < n; ++i) {
        tmp[size_t(2 * i)] = self.grad[size_t(i)];
        tmp[size_t(2 * i + 1)] = 0.0f;
      }
      for (int a : axes) fft::transform_axis(tmp.data(), cshape, a, false);
#pragma omp parallel for schedule(static)
      for (int64_t i = 0; i < 2 * n; ++i)
        na.grad[size_t(i)] += tmp[size_t(i)] * scale;
    };
  }
  return Tensor(out);
}

namespace {

// Kept corner-mode bookkeeping: per axis, indices [0,m) and [D-m, D).
struct ModeMap {
  std::vector<int64_t> dims;       // full spectral extents D_i
  std::vector<int> modes;          // kept half-count m_i
  int64_t kept = 1;                // total kept lattice size
  // Maps kept lattice flat index -> flat offset within one (b, c) slab.
  std::vector<int64_t> offsets;
};

ModeMap make_mode_map(const Shape& x, const std::vector<int>& modes) {
  ModeMap mm;
  const int nd = int(modes.size());
  mm.modes = modes;
  for (int d = 0; d < nd; ++d) {
    const int64_t D = x[size_t(2 + d)];
    check(modes[size_t(d)] >= 1 && int64_t(modes[size_t(d)]) * 2 <= D,
          "mode_mix: mode count " + std::to_string(modes[size_t(d)]) +
              " exceeds Nyquist of axis extent " + std::to_string(D));
    mm.dims.push_back(D);
    mm.kept *= 2 * modes[size_t(d)];
  }
  mm.offsets.resize(size_t(mm.kept));
  for (int64_t ki = 0; ki < mm.kept; ++ki) {
    int64_t rem = ki, off = 0, stride = 1;
    std::vector<int64_t> coord(size_t(nd));
    for (int d = nd - 1; d >= 0; --d) {
      const int64_t m2 = 2 * mm.modes[size_t(d)];
      coord[size_t(d)] = rem % m2;
      rem /= m2;
    }
    for (int d = nd - 1; d >= 0; --d) {
      const int64_t m = mm.modes[size_t(d)];
      const int64_t c = coord[size_t(d)];
      const int64_t src = c < m ? c : mm.dims[size_t(d)] - 2 * m + c;
      off += src * stride;
      stride *= mm.dims[size_t(d)];
    }
    mm.offsets[size_t(ki)] = off;
  }
  return mm;
}

}  // namespace

Tensor mode_mix(const Tensor& tx, const Tensor& tw, const std::vector<int>& modes) {
  const int nd = int(modes.size());
  check(tx.ndim() == nd + 3, "mode_mix: input rank must be 2 + axes + complex");
  check(tx.dim(tx.ndim() - 1) == 2, "mode_mix: input must be complex");
  check(tw.ndim() == nd + 3 && tw.dim(tw.ndim() - 1) == 2,
        "mode_mix: weight rank mismatch");
  const int64_t B = tx.dim(0), Ci = tx.dim(1);
  check(tw.dim(0) == Ci, "mode_mix: channel mismatch " + shape_str(tx.shape()) +
                             " vs " + shape_str(tw.shape()));
  const int64_t Co = tw.dim(1);
  Shape xs(tx.shape().begin(), tx.shape().end() - 1);
  const ModeMap mm = make_mode_map(xs, modes);
  for (int d = 0; d < nd; ++d)
    check(tw.dim(2 + d) == 2 * modes[size_t(d)],
          "mode_mix: weight extent must be 2*modes on axis " + std::to_string(d));
  int64_t slab = 1;  // complex count per (b, channel)
  for (int64_t d : mm.dims) slab *= d;

  Shape out_shape = tx.shape();
  out_shape[1] = Co;
  auto out = make_node(out_shape, {tx.node(), tw.node()}, "mode_mix");
  std::fill(out->val.begin(), out->val.end(), 0.0f);
  const float* x = tx.node()->val.data();
  const float* w = tw.node()->val.data();
  float* o = out->val.data();
  const int64_t kept = mm.kept;
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t co = 0; co < Co; ++co) {
      float* ob = o + (b * Co + co) * slab * 2;
      for (int64_t ki = 0; ki < kept; ++ki) {
        const int64_t off = mm.offsets[size_t(ki)];
        float ar = 0, ai = 0;
        for (int64_t ci = 0; ci < Ci; ++ci) {
          const float xr = x[((b * Ci + ci) * slab + off) * 2];
          const float xi = x[((b * Ci + ci) * slab + off) * 2 + 1];
          const float wr = w[((ci * Co + co) * kept + ki) * 2];
          const float wi = w[((ci * Co + co) * kept + ki) * 2 + 1];
          ar += xr * wr - xi * wi;
          ai += xr * wi + xi * wr;
        }
        ob[off * 2] = ar;
        ob[off * 2 + 1] = ai;
      }
    }
  }
  if (out->requires) {
    out->vjp = [B, Ci, Co, slab, mm](Node& self) {
      Node& nx = *self.parents[0];
      Node& nw = *self.parents[1];
      const float* x = nx.val.data();
      const float* w = nw.val.data();
      const float* g = self.grad.data();
      const int64_t kept = mm.kept;
      if (nx.requires) {
        nx.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t b = 0; b < B; ++b) {
          for (int64_t ci = 0; ci < Ci; ++ci) {
            float* dx = nx.grad.data() + (b * Ci + ci) * slab * 2;
            for (int64_t ki = 0; ki < kept; ++ki) {
              const int64_t off = mm.offsets[size_t(ki)];
              float ar = 0, ai = 0;
              for (int64_t co = 0; co < Co; ++co) {
                const float gr = g[((b * Co + co) * slab + off) * 2];
                const float gi = g[((b * Co + co) * slab + off) * 2 + 1];
                const float wr = w[((ci * Co + co) * kept + ki) * 2];
                const float wi = w[((ci * Co + co) * kept + ki) * 2 + 1];
                // conj(w) * g
                ar += gr * wr + gi * wi;
                ai += gi * wr - gr * wi;
              }
              dx[off * 2] += ar;
              dx[off * 2 + 1] += ai;
            }
          }
        }
      }
      if (nw.requires) {
        nw.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t ci = 0; ci < Ci; ++ci) {
          for (int64_t co = 0; co < Co; ++co) {
            float* dw = nw.grad.data() + (ci * Co + co) * kept * 2;
            for (int64_t ki = 0; ki < kept; ++ki) {
              const int64_t off = mm.offsets[size_t(ki)];
              double ar = 0, ai = 0;
              for (int64_t b = 0; b < B; ++b) {
                const float gr = g[((b * Co + co) * slab + off) * 2];
                const float gi = g[((b * Co + co) * slab + off) * 2 + 1];
                const float xr = x[((b * Ci + ci) * slab + off) * 2];
                const float xi = x[((b * Ci + ci) * slab + off) * 2 + 1];
                // conj(x) * g
                ar += double(gr) * xr + double(gi) * xi;
                ai += double(gi) * xr - double(gr) * xi;
              }
              dw[ki * 2] += float(ar);
              dw[ki * 2 + 1] += float(ai);
            }
          }
        }
      }
    };
  }
  return Tensor(out);
}

}  // namespace geoinv
