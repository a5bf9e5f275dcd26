#include <vector>

#include "geoinv/ops.hpp"
#include "op_common.hpp"

namespace geoinv {
using detail::make_node;

namespace {

// C(m,n) += or = A(m,k) @ B(k,n); parallel over rows of C.
void gemm_nn(float* c, const float* a, const float* b, int64_t m, int64_t k,
             int64_t n, bool acc) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    float* ci = c + i * n;
    if (!acc)
      for (int64_t j = 0; j < n; ++j) ci[j] = 0.0f;
    for (int64_t l = 0; l < k; ++l) {
      const float av = a[i * k + l];
      const float* bl = b + l * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

// C(m,k) += A(m,n) @ B(k,n)^T
void gemm_nt(float* c, const float* a, const float* b, int64_t m, int64_t n,
             int64_t k) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < k; ++j) {
      const float* ai = a + i * n;
      const float* bj = b + j * n;
      float s0 = 0, s1 = 0;
      int64_t l = 0;
      for (; l + 1 < n; l += 2) {
        s0 += ai[l] * bj[l];
        s1 += ai[l + 1] * bj[l + 1];
      }
      for (; l < n; ++l) s0 += ai[l] * bj[l];
      c[i * k + j] += s0 + s1;
    }
  }
}

// C(k,n) += A(m,k)^T @ B(m,n); parallel over k-rows of C.
void gemm_tn(float* c, const float* a, const float* b, int64_t m, int64_t k,
             int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < k; ++i) {
    float* ci = c + i * n;
    for (int64_t l = 0; l < m; ++l) {
      const float av = a[l * k + i];
      const float* bl = b + l * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

struct BatchInfo {
  Shape batch;           // broadcast batch dims
  int64_t count = 1;     // product
  std::vector<int64_t> stride_a, stride_b;  // per batch dim, in matrices
};

BatchInfo batch_info(const Shape& a, const Shape& b) {
  BatchInfo bi;
  const int nda = int(a.size()) - 2, ndb = int(b.size()) - 2;
  const int nd = std::max(nda, ndb);
  bi.batch.resize(size_t(nd));
  bi.stride_a.assign(size_t(nd), 0);
  bi.stride_b.assign(size_t(nd), 0);
  std::vector<int64_t> ra(size_t(nda)), rb(size_t(ndb));
  int64_t acc = 1;
  for (int d = nda - 1; d >= 0; --d) {
    ra[size_t(d)] = acc;
    acc *= a[size_t(d)];
  }
  acc = 1;
  for (int d = ndb - 1; d >= 0; --d) {
    rb[size_t(d)] = acc;
    acc *= b[size_t(d)];
  }
  for (int d = 0; d < nd; ++d) {
    const int ia = nda - nd + d, ib = ndb - nd + d;
    const int64_t ea = ia >= 0 ? a[size_t(ia)] : 1;
    const int64_t eb = ib >= 0 ? b[size_t(ib)] : 1;
    check(ea == eb || ea == 1 || eb == 1,
          "matmul: batch dims not broadcastable " + shape_str(a) + " vs " +
              shape_str(b));
    bi.batch[size_t(d)] = std::max(ea, eb);
    bi.count *= bi.batch[size_t(d)];
    if (ea != 1 && ia >= 0) bi.stride_a[size_t(d)] = ra[size_t(ia)];
    if (eb != 1 && ib >= 0) bi.stride_b[size_t(d)] = rb[size_t(ib)];
  }
  return bi;
}

void batch_offsets(const BatchInfo& bi, int64_t bidx, int64_t& oa, int64_t& ob) {
  oa = 0;
  ob = 0;
  for (int d = int(bi.batch.size()) - 1; d >= 0; --d) {
    const int64_t c = bidx % bi.batch[size_t(d)];
    bidx /= bi.batch[size_t(d)];
    oa += c * bi.stride_a[size_t(d)];
    ob += c * bi.stride_b[size_t(d)];
  }
}

}  // namespace

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  check(ta.ndim() >= 2 && tb.ndim() >= 2,
        "matmul: operands need rank >= 2, got " + shape_str(ta.shape()) +
            " and " + shape_str(tb.shape()));
  const int64_t m = ta.dim(ta.ndim() - 2), k = ta.dim(ta.ndim() - 1);
  const int64_t k2 = tb.dim(tb.ndim() - 2), n = tb.dim(tb.ndim() - 1);
  check(k == k2, "matmul: inner dims differ, " + shape_str(ta.shape()) +
                     " @ " + shape_str(tb.shape()));
  const BatchInfo bi = batch_info(ta.shape(), tb.shape());
  Shape out_shape = bi.batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  auto out = make_node(out_shape, {ta.node(), tb.node()}, "matmul");
  const float* a = ta.node()->val.data();
  const float* b = tb.node()->val.data();
  for (int64_t bt = 0; bt < bi.count; ++bt) {
    int64_t oa, ob;
    batch_offsets(bi, bt, oa, ob);
    gemm_nn(out->val.data() + bt * m * n, a + oa * m * k, b + ob * k * n, m, k,
            n, false);
  }
  if (out->requires) {
    out->vjp = [bi, m, k, n](Node& self) {
      Node& na = *self.parents[0];
      Node& nb = *self.parents[1];
      const float* a = na.val.data();
      const float* b = nb.val.data();
      const float* g = self.grad.data();
      if (na.requires) na.ensure_grad();
      if (nb.requires) nb.ensure_grad();
      for (int64_t bt = 0; bt < bi.count; ++bt) {
        int64_t oa, ob;
        batch_offsets(bi, bt, oa, ob);
        if (na.requires)
          gemm_nt(na.grad.data() + oa * m * k, g + bt * m * n, b + ob * k * n,
                  m, n, k);
        if (nb.requires)
          gemm_tn(nb.grad.data() + ob * k * n, a + oa * m * k, g + bt * m * n,
                  m, k, n);
      }
    };
  }
  return Tensor(out);
}

Tensor channel_linear(const Tensor& tx, const Tensor& tw) {
  check(tx.ndim() >= 2, "channel_linear: input needs rank >= 2");
  check(tw.ndim() == 2, "channel_linear: weight must be (C, Cout)");
  const int64_t bsz = tx.dim(0), c = tx.dim(1);
  check(tw.dim(0) == c, "channel_linear: channel mismatch " +
                            shape_str(tx.shape()) + " vs " + shape_str(tw.shape()));
  const int64_t c2 = tw.dim(1);
  int64_t sp = 1;
  for (int d = 2; d < tx.ndim(); ++d) sp *= tx.dim(d);
  Shape out_shape = tx.shape();
  out_shape[1] = c2;
  auto out = make_node(out_shape, {tx.node(), tw.node()}, "channel_linear");
  const float* x = tx.node()->val.data();
  const float* w = tw.node()->val.data();
  float* o = out->val.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < bsz; ++b) {
    for (int64_t j = 0; j < c2; ++j) {
      float* orow = o + (b * c2 + j) * sp;
      for (int64_t s = 0; s < sp; ++s) orow[s] = 0.0f;
      for (int64_t i = 0; i < c; ++i) {
        const float wv = w[i * c2 + j];
        const float* xr = x + (b * c + i) * sp;
        for (int64_t s = 0; s < sp; ++s) orow[s] += wv * xr[s];
      }
    }
  }
  if (out->requires) {
    out->vjp = [bsz, c, c2, sp](Node& self) {
      Node& nx = *self.parents[0];
      Node& nw = *self.parents[1];
      const float* x = nx.val.data();
      const float* w = nw.val.data();
      const float* g = self.grad.data();
      if (nx.requires) {
        nx.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t b = 0; b < bsz; ++b) {
          for (int64_t i = 0; i < c; ++i) {
            float* dx = nx.grad.data() + (b * c + i) * sp;
            for (int64_t j = 0; j < c2; ++j) {
              const float wv = w[i * c2 + j];
              const float* gr = g + (b * c2 + j) * sp;
              for (int64_t s = 0; s < sp; ++s) dx[s] += wv * gr[s];
            }
          }
        }
      }
      if (nw.requires) {
        nw.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t i = 0; i < c; ++i) {
          for (int64_t j = 0; j < c2; ++j) {
            double s = 0;
            for (int64_t b = 0; b < bsz; ++b) {
              const float* xr = x + (b * c + i) * sp;
              const float* gr = g + (b * c2 + j) * sp;
              for (int64_t t = 0; t < sp; ++t) s += double(xr[t]) * gr[t];
            }
            nw.grad[size_t(i * c2 + j)] += float(s);
          }
        }
      }
    };
  }
  return Tensor(out);
}

}  // namespace geoinv
