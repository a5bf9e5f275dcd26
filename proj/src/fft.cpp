#include "geoinv/fft.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace geoinv::fft {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Instr {
  int off;     // complex offset of this block within the line
  int m;       // child transform length
  int r;       // radix
  int tw_off;  // offset into twiddle arrays, r * (r*m) complex entries
};

struct FullPlan {
  int n = 0;
  std::vector<int> perm;        // digit-reversal gather, complex indices
  std::vector<Instr> instrs;    // post-order combine steps
  std::vector<double> twd;      // interleaved re/im, forward sign
  std::vector<float> twf;
};

int smallest_factor(int n) {
  for (int r : {2, 3, 5}) {
    if (n % r == 0) return r;
  }
  for (int r = 7; r * r <= n; r += 2) {
    if (n % r == 0) return r;
  }
  return n;
}

void build_rec(FullPlan& p, int src_off, int stride, int dst_off, int n) {
  if (n == 1) {
    p.perm[dst_off] = src_off;
    return;
  }
  const int r = smallest_factor(n);
  const int m = n / r;
  for (int j = 0; j < r; ++j) {
    build_rec(p, src_off + j * stride, stride * r, dst_off + j * m, m);
  }
  Instr ins;
  ins.off = dst_off;
  ins.m = m;
  ins.r = r;
  ins.tw_off = int(p.twd.size() / 2);
  for (int j = 0; j < r; ++j) {
    for (int t = 0; t < n; ++t) {
      const double ang = -kTwoPi * double((long long)j * t % n) / double(n);
      p.twd.push_back(std::cos(ang));
      p.twd.push_back(std::sin(ang));
    }
  }
  p.instrs.push_back(ins);
}

std::map<int, FullPlan> g_plans;
std::mutex g_plan_mutex;

const FullPlan& full_plan(int n) {
  std::lock_guard<std::mutex> lk(g_plan_mutex);
  auto it = g_plans.find(n);
  if (it != g_plans.end()) return it->second;
  if (n <= 0) throw std::invalid_argument("fft: non-positive length");
  FullPlan p;
  p.n = n;
  p.perm.resize(n);
  build_rec(p, 0, 1, 0, n);
  p.twf.assign(p.twd.begin(), p.twd.end());
  return g_plans.emplace(n, std::move(p)).first->second;
}

template <typename T>
const T* tw_array(const FullPlan& p);
template <>
const double* tw_array<double>(const FullPlan& p) { return p.twd.data(); }
template <>
const float* tw_array<float>(const FullPlan& p) { return p.twf.data(); }

// data: interleaved complex, already gathered contiguously in input order.
// scratch: same size. Result ends in data.
template <typename T>
void execute(const FullPlan& p, T* data, T* scratch, bool inverse) {
  const int n = p.n;
  // digit-reversal reorder via scratch
  for (int i = 0; i < n; ++i) {
    scratch[2 * i] = data[2 * p.perm[i]];
    scratch[2 * i + 1] = data[2 * p.perm[i] + 1];
  }
  std::memcpy(data, scratch, sizeof(T) * 2 * n);
  const T* tw = tw_array<T>(p);
  const T sgn = inverse ? T(-1) : T(1);
  for (const Instr& ins : p.instrs) {
    const int m = ins.m, r = ins.r, nn = m * r;
    T* blk = data + 2 * ins.off;
    for (int pq = 0; pq < nn; ++pq) {
      T accr = 0, acci = 0;
      const int q = pq % m;
      for (int j = 0; j < r; ++j) {
        const T xr = blk[2 * (j * m + q)];
        const T xi = blk[2 * (j * m + q) + 1];
        const T wr = tw[2 * (ins.tw_off + j * nn + pq)];
        const T wi = sgn * tw[2 * (ins.tw_off + j * nn + pq) + 1];
        accr += xr * wr - xi * wi;
        acci += xr * wi + xi * wr;
      }
      scratch[2 * pq] = accr;
      scratch[2 * pq + 1] = acci;
    }
    std::memcpy(blk, scratch, sizeof(T) * 2 * nn);
  }
}

template <typename T>
void transform_axis_impl(T* data, const std::vector<int64_t>& shape, int axis,
                         bool inverse) {
  const int nd = int(shape.size());
  if (axis < 0 || axis >= nd) throw std::invalid_argument("fft: bad axis");
  const int n = int(shape[axis]);
  if (n == 0) throw std::invalid_argument("fft: zero-length axis");
  const FullPlan& p = full_plan(n);

  int64_t inner = 1, outer = 1;
  for (int d = axis + 1; d < nd; ++d) inner *= shape[d];
  for (int d = 0; d < axis; ++d) outer *= shape[d];
  const int64_t lines = outer * inner;
  const int64_t axis_stride = inner;

#pragma omp parallel
  {
    std::vector<T> line(2 * n), scratch(2 * n);
#pragma omp for schedule(static)
    for (int64_t li = 0; li < lines; ++li) {
      const int64_t o = li / inner, in = li % inner;
      T* base = data + 2 * (o * n * inner + in);
      for (int k = 0; k < n; ++k) {
        line[2 * k] = base[2 * k * axis_stride];
        line[2 * k + 1] = base[2 * k * axis_stride + 1];
      }
      execute(p, line.data(), scratch.data(), inverse);
      for (int k = 0; k < n; ++k) {
        base[2 * k * axis_stride] = line[2 * k];
        base[2 * k * axis_stride + 1] = line[2 * k + 1];
      }
    }
  }
}

}  // namespace

void transform_line(int n, double* data, bool inverse) {
  std::vector<double> scratch(2 * n);
  execute(full_plan(n), data, scratch.data(), inverse);
}
void transform_line(int n, float* data, bool inverse) {
  std::vector<float> scratch(2 * n);
  execute(full_plan(n), data, scratch.data(), inverse);
}

void transform_axis(double* data, const std::vector<int64_t>& shape, int axis,
                    bool inverse) {
  transform_axis_impl(data, shape, axis, inverse);
}
void transform_axis(float* data, const std::vector<int64_t>& shape, int axis,
                    bool inverse) {
  transform_axis_impl(data, shape, axis, inverse);
}

}  // namespace geoinv::fft
