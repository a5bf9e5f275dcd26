#include "geoinv/ops.hpp"
#include "op_common.hpp"

namespace geoinv {
using detail::make_node;

namespace {
int64_t out_extent(int64_t in, int64_t k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}
}  // namespace

Tensor conv3d(const Tensor& tx, const Tensor& tw, int stride, int pad) {
  check(tx.ndim() == 5 && tw.ndim() == 5,
        "conv3d: expects x (B,C,X,Y,T) and w (Co,C,kx,ky,kt), got " +
            shape_str(tx.shape()) + " and " + shape_str(tw.shape()));
  check(tx.dim(1) == tw.dim(1), "conv3d: channel mismatch");
  check(stride >= 1 && pad >= 0, "conv3d: bad stride/pad");
  const int64_t B = tx.dim(0), C = tx.dim(1), X = tx.dim(2), Y = tx.dim(3),
                T = tx.dim(4);
  const int64_t Co = tw.dim(0), kx = tw.dim(2), ky = tw.dim(3), kt = tw.dim(4);
  const int64_t OX = out_extent(X, kx, stride, pad),
                OY = out_extent(Y, ky, stride, pad),
                OT = out_extent(T, kt, stride, pad);
  check(OX >= 1 && OY >= 1 && OT >= 1, "conv3d: kernel larger than padded input");
  auto out = make_node({B, Co, OX, OY, OT}, {tx.node(), tw.node()}, "conv3d");
  const float* x = tx.node()->val.data();
  const float* w = tw.node()->val.data();
  float* o = out->val.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t co = 0; co < Co; ++co) {
      for (int64_t ox = 0; ox < OX; ++ox)
        for (int64_t oy = 0; oy < OY; ++oy)
          for (int64_t ot = 0; ot < OT; ++ot) {
            float acc = 0;
            for (int64_t c = 0; c < C; ++c)
              for (int64_t i = 0; i < kx; ++i) {
                const int64_t ix = ox * stride + i - pad;
                if (ix < 0 || ix >= X) continue;
                for (int64_t j = 0; j < ky; ++j) {
                  const int64_t iy = oy * stride + j - pad;
                  if (iy < 0 || iy >= Y) continue;
                  const float* xr = x + (((b * C + c) * X + ix) * Y + iy) * T;
                  const float* wr = w + (((co * C + c) * kx + i) * ky + j) * kt;
                  for (int64_t l = 0; l < kt; ++l) {
                    const int64_t it = ot * stride + l - pad;
                    if (it < 0 || it >= T) continue;
                    acc += xr[it] * wr[l];
                  }
                }
              }
            o[(((b * Co + co) * OX + ox) * OY + oy) * OT + ot] = acc;
          }
    }
  }
  if (out->requires) {
    out->vjp = [B, C, X, Y, T, Co, kx, ky, kt, OX, OY, OT, stride,
                pad](Node& self) {
      Node& nx = *self.parents[0];
      Node& nw = *self.parents[1];
      const float* x = nx.val.data();
      const float* w = nw.val.data();
      const float* g = self.grad.data();
      if (nx.requires) {
        nx.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t b = 0; b < B; ++b) {
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t ix = 0; ix < X; ++ix)
              for (int64_t iy = 0; iy < Y; ++iy)
                for (int64_t it = 0; it < T; ++it) {
                  float acc = 0;
                  for (int64_t co = 0; co < Co; ++co)
                    for (int64_t i = 0; i < kx; ++i) {
                      const int64_t num_x = ix + pad - i;
                      if (num_x < 0 || num_x % stride) continue;
                      const int64_t ox = num_x / stride;
                      if (ox >= OX) continue;
                      for (int64_t j = 0; j < ky; ++j) {
                        const int64_t num_y = iy + pad - j;
                        if (num_y < 0 || num_y % stride) continue;
                        const int64_t oy = num_y / stride;
                        if (oy >= OY) continue;
                        for (int64_t l = 0; l < kt; ++l) {
                          const int64_t num_t = it + pad - l;
                          if (num_t < 0 || num_t % stride) continue;
                          const int64_t ot = num_t / stride;
                          if (ot >= OT) continue;
                          acc += g[(((b * Co + co) * OX + ox) * OY + oy) * OT + ot] *
                                 w[(((co * C + c) * kx + i) * ky + j) * kt + l];
                        }
                      }
                    }
                  nx.grad[size_t((((b * C + c) * X + ix) * Y + iy) * T + it)] += acc;
                }
          }
        }
      }
      if (nw.requires) {
        nw.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t co = 0; co < Co; ++co) {
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t i = 0; i < kx; ++i)
              for (int64_t j = 0; j < ky; ++j)
                for (int64_t l = 0; l < kt; ++l) {
                  double acc = 0;
                  for (int64_t b = 0; b < B; ++b)
                    for (int64_t ox = 0; ox < OX; ++ox) {
                      const int64_t ix = ox * stride + i - pad;
                      if (ix < 0 || ix >= X) continue;
                      for (int64_t oy = 0; oy < OY; ++oy) {
                        const int64_t iy = oy * stride + j - pad;
                        if (iy < 0 || iy >= Y) continue;
                        for (int64_t ot = 0; ot < OT; ++ot) {
                          const int64_t it = ot * stride + l - pad;
                          if (it < 0 || it >= T) continue;
                          acc += double(
                                     x[(((b * C + c) * X + ix) * Y + iy) * T + it]) *
                                 g[(((b * Co + co) * OX + ox) * OY + oy) * OT + ot];
                        }
                      }
                    }
                  nw.grad[size_t((((co * C + c) * kx + i) * ky + j) * kt + l)] +=
                      float(acc);
                }
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor conv2d(const Tensor& tx, const Tensor& tw, int stride, int pad) {
  check(tx.ndim() == 4 && tw.ndim() == 4,
        "conv2d: expects x (B,C,H,W) and w (Co,C,kh,kw), got " +
            shape_str(tx.shape()) + " and " + shape_str(tw.shape()));
  check(tx.dim(1) == tw.dim(1), "conv2d: channel mismatch");
  check(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const int64_t B = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
  const int64_t Co = tw.dim(0), kh = tw.dim(2), kw = tw.dim(3);
  const int64_t OH = out_extent(H, kh, stride, pad),
                OW = out_extent(W, kw, stride, pad);
  check(OH >= 1 && OW >= 1, "conv2d: kernel larger than padded input");
  auto out = make_node({B, Co, OH, OW}, {tx.node(), tw.node()}, "conv2d");
  const float* x = tx.node()->val.data();
  const float* w = tw.node()->val.data();
  float* o = out->val.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t co = 0; co < Co; ++co) {
      for (int64_t oh = 0; oh < OH; ++oh)
        for (int64_t ow = 0; ow < OW; ++ow) {
          float acc = 0;
          for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < kh; ++i) {
              const int64_t ih = oh * stride + i - pad;
              if (ih < 0 || ih >= H) continue;
              const float* xr = x + ((b * C + c) * H + ih) * W;
              const float* wr = w + ((co * C + c) * kh + i) * kw;
              for (int64_t j = 0; j < kw; ++j) {
                const int64_t iw = ow * stride + j - pad;
                if (iw < 0 || iw >= W) continue;
                acc += xr[iw] * wr[j];
              }
            }
          o[((b * Co + co) * OH + oh) * OW + ow] = acc;
        }
    }
  }
  if (out->requires) {
    out->vjp = [B, C, H, W, Co, kh, kw, OH, OW, stride, pad](Node& self) {
      Node& nx = *self.parents[0];
      Node& nw = *self.parents[1];
      const float* x = nx.val.data();
      const float* w = nw.val.data();
      const float* g = self.grad.data();
      if (nx.requires) {
        nx.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t b = 0; b < B; ++b) {
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t ih = 0; ih < H; ++ih)
              for (int64_t iw = 0; iw < W; ++iw) {
                float acc = 0;
                for (int64_t co = 0; co < Co; ++co)
                  for (int64_t i = 0; i < kh; ++i) {
                    const int64_t nh = ih + pad - i;
                    if (nh < 0 || nh % stride) continue;
                    const int64_t oh = nh / stride;
                    if (oh >= OH) continue;
                    for (int64_t j = 0; j < kw; ++j) {
                      const int64_t nw_ = iw + pad - j;
                      if (nw_ < 0 || nw_ % stride) continue;
                      const int64_t ow = nw_ / stride;
                      if (ow >= OW) continue;
                      acc += g[((b * Co + co) * OH + oh) * OW + ow] *
                             w[((co * C + c) * kh + i) * kw + j];
                    }
                  }
                nx.grad[size_t(((b * C + c) * H + ih) * W + iw)] += acc;
              }
          }
        }
      }
      if (nw.requires) {
        nw.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t co = 0; co < Co; ++co) {
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t i = 0; i < kh; ++i)
              for (int64_t j = 0; j < kw; ++j) {
                double acc = 0;
                for (int64_t b = 0; b < B; ++b)
                  for (int64_t oh = 0; oh < OH; ++oh) {
                    const int64_t ih = oh * stride + i - pad;
                    if (ih < 0 || ih >= H) continue;
                    for (int64_t ow = 0; ow < OW; ++ow) {
                      const int64_t iw = ow * stride + j - pad;
                      if (iw < 0 || iw >= W) continue;
                      acc += double(x[((b * C + c) * H + ih) * W + iw]) *
                             g[((b * Co + co) * OH + oh) * OW + ow];
                    }
                  }
                nw.grad[size_t(((co * C + c) * kh + i) * kw + j)] += float(acc);
              }
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor avg_pool3d(const Tensor& tx, int k) {
  check(tx.ndim() == 5, "avg_pool3d: expects (B,C,X,Y,T)");
  check(k >= 1 && tx.dim(2) % k == 0 && tx.dim(3) % k == 0 && tx.dim(4) % k == 0,
        "avg_pool3d: k must divide spatial extents");
  const int64_t B = tx.dim(0), C = tx.dim(1), X = tx.dim(2), Y = tx.dim(3),
                T = tx.dim(4);
  const int64_t OX = X / k, OY = Y / k, OT = T / k;
  auto out = make_node({B, C, OX, OY, OT}, {tx.node()}, "avg_pool3d");
  const float* x = tx.node()->val.data();
  float* o = out->val.data();
  const float inv = 1.0f / float(k * k * k);
  const int64_t n = out->size();
#pragma omp parallel for schedule(static)
  for (int64_t idx = 0; idx < n; ++idx) {
    int64_t r = idx;
    const int64_t ot = r % OT;
    r /= OT;
    const int64_t oy = r % OY;
    r /= OY;
    const int64_t ox = r % OX;
    r /= OX;
    const int64_t bc = r;
    float acc = 0;
    for (int64_t i = 0; i < k; ++i)
      for (int64_t j = 0; j < k; ++j)
        for (int64_t l = 0; l < k; ++l)
          acc += x[((bc * X + ox * k + i) * Y + oy * k + j) * T + ot * k + l];
    o[idx] = acc * inv;
  }
  if (out->requires) {
    out->vjp = [B, C, X, Y, T, OX, OY, OT, k, inv](Node& self) {
      Node& nx = *self.parents[0];
      nx.ensure_grad();
      const float* g = self.grad.data();
      const int64_t n = nx.size();
#pragma omp parallel for schedule(static)
      for (int64_t idx = 0; idx < n; ++idx) {
        int64_t r = idx;
        const int64_t it = r % T;
        r /= T;
        const int64_t iy = r % Y;
        r /= Y;
        const int64_t ix = r % X;
        r /= X;
        const int64_t bc = r;
        nx.grad[size_t(idx)] +=
            inv * g[((bc * OX + ix / k) * OY + iy / k) * OT + it / k];
      }
    };
  }
  return Tensor(out);
}

Tensor avg_pool2d(const Tensor& tx, int k) {
  check(tx.ndim() == 4, "avg_pool2d: expects (B,C,H,W)");
  check(k >= 1 && tx.dim(2) % k == 0 && tx.dim(3) % k == 0,
        "avg_pool2d: k must divide spatial extents");
  const int64_t BC = tx.dim(0) * tx.dim(1), H = tx.dim(2), W = tx.dim(3);
  const int64_t OH = H / k, OW = W / k;
  Shape out_shape = {tx.dim(0), tx.dim(1), OH, OW};
  auto out = make_node(out_shape, {tx.node()}, "avg_pool2d");
  const float* x = tx.node()->val.data();
  float* o = out->val.data();
  const float inv = 1.0f / float(k * k);
  const int64_t n = out->size();
#pragma omp parallel for schedule(static)
  for (int64_t idx = 0; idx < n; ++idx) {
    int64_t r = idx;
    const int64_t ow = r % OW;
    r /= OW;
    const int64_t oh = r % OH;
    r /= OH;
    const int64_t bc = r;
    float acc = 0;
    for (int64_t i = 0; i < k; ++i)
      for (int64_t j = 0; j < k; ++j)
        acc += x[(bc * H + oh * k + i) * W + ow * k + j];
    o[idx] = acc * inv;
  }
  if (out->requires) {
    out->vjp = [BC, H, W, OH, OW, k, inv](Node& self) {
      Node& nx = *self.parents[0];
      nx.ensure_grad();
      const float* g = self.grad.data();
      const int64_t n = nx.size();
#pragma omp parallel for schedule(static)
      for (int64_t idx = 0; idx < n; ++idx) {
        int64_t r = idx;
        const int64_t iw = r % W;
        r /= W;
        const int64_t ih = r % H;
        r /= H;
        const int64_t bc = r;
        nx.grad[size_t(idx)] += inv * g[(bc * OH + ih / k) * OW + iw / k];
      }
    };
  }
  return Tensor(out);
}

Tensor upsample_nearest3d(const Tensor& tx, int k) {
  check(tx.ndim() == 5, "upsample_nearest3d: expects (B,C,X,Y,T)");
  check(k >= 1, "upsample_nearest3d: bad factor");
  const int64_t X = tx.dim(2), Y = tx.dim(3), T = tx.dim(4);
  const int64_t OX = X * k, OY = Y * k, OT = T * k;
  Shape out_shape = {tx.dim(0), tx.dim(1), OX, OY, OT};
  auto out = make_node(out_shape, {tx.node()}, "upsample_nearest3d");
  const float* x = tx.node()->val.data();
  float* o = out->val.data();
  const int64_t n = out->size();
#pragma omp parallel for schedule(static)
  for (int64_t idx = 0; idx < n; ++idx) {
    int64_t r = idx;
    const int64_t ot = r % OT;
    r /= OT;
    const int64_t oy = r % OY;
    r /= OY;
    const int64_t ox = r % OX;
    r /= OX;
    const int64_t bc = r;
    o[idx] = x[((bc * X + ox / k) * Y + oy / k) * T + ot / k];
  }
  if (out->requires) {
    out->vjp = [X, Y, T, OX, OY, OT, k](Node& self) {
      Node& nx = *self.parents[0];
      nx.ensure_grad();
      const float* g = self.grad.data();
      const int64_t n = nx.size();
#pragma omp parallel for schedule(static)
      for (int64_t idx = 0; idx < n; ++idx) {
        int64_t r = idx;
        const int64_t it = r % T;
        r /= T;
        const int64_t iy = r % Y;
        r /= Y;
        const int64_t ix = r % X;
        r /= X;
        const int64_t bc = r;
        float acc = 0;
        for (int64_t i = 0; i < k; ++i)
          for (int64_t j = 0; j < k; ++j)
            for (int64_t l = 0; l < k; ++l)
              acc += g[((bc * OX + ix * k + i) * OY + iy * k + j) * OT + it * k + l];
        nx.grad[size_t(idx)] += acc;
      }
    };
  }
  return Tensor(out);
}

}  // namespace geoinv
