#include <doctest.h>

#include <cmath>

#include "geoinv/fft.hpp"
#include "geoinv/ops.hpp"
#include "geoinv/rng.hpp"
#include "testutil.hpp"

using namespace geoinv;
using namespace geoinv::testutil;

namespace geoinv::testutil {

std::vector<OpCase> all_op_cases() {
  std::vector<OpCase> cs;
  auto one = [](std::function<Tensor(const Tensor&)> f) {
    return [f](const std::vector<Tensor>& ls) { return f(ls[0]); };
  };
  auto two = [](std::function<Tensor(const Tensor&, const Tensor&)> f) {
    return [f](const std::vector<Tensor>& ls) { return f(ls[0], ls[1]); };
  };

  cs.push_back({"add", {{3, 4}, {3, 4}}, two([](auto& a, auto& b) { return add(a, b); })});
  cs.push_back({"add_broadcast", {{2, 3, 4}, {1, 1, 4}}, two([](auto& a, auto& b) { return add(a, b); })});
  cs.push_back({"sub", {{3, 4}, {3, 4}}, two([](auto& a, auto& b) { return sub(a, b); })});
  cs.push_back({"mul", {{3, 4}, {3, 4}}, two([](auto& a, auto& b) { return mul(a, b); })});
  cs.push_back({"mul_broadcast", {{2, 3, 4}, {2, 1, 4}}, two([](auto& a, auto& b) { return mul(a, b); })});
  cs.push_back({"div", {{3, 4}, {3, 4}}, two([](auto& a, auto& b) {
                  return div(a, scalar_add(mul(b, b), 1.0f));
                })});
  cs.push_back({"scalar_mul", {{5}}, one([](auto& a) { return scalar_mul(a, -2.5f); })});
  cs.push_back({"scalar_add", {{5}}, one([](auto& a) { return scalar_add(a, 0.7f); })});
  cs.push_back({"relu", {{64}}, one([](auto& a) { return relu(a); })});
  cs.push_back({"gelu", {{64}}, one([](auto& a) { return gelu(a); })});
  cs.push_back({"silu", {{64}}, one([](auto& a) { return silu(a); })});
  cs.push_back({"sqrt_smooth", {{32}}, one([](auto& a) {
                  return sqrt_smooth(scalar_add(mul(a, a), 0.5f));
                })});
  cs.push_back({"softmax", {{4, 7}}, one([](auto& a) { return softmax_lastdim(a); })});
  cs.push_back({"layernorm", {{4, 9}}, one([](auto& a) { return layernorm_lastdim(a); })});
  cs.push_back({"matmul", {{4, 5}, {5, 3}}, two([](auto& a, auto& b) { return matmul(a, b); })});
  cs.push_back({"matmul_batched", {{2, 3, 4, 5}, {2, 3, 5, 2}},
                two([](auto& a, auto& b) { return matmul(a, b); })});
  cs.push_back({"matmul_shared_rhs", {{3, 4, 5}, {5, 2}},
                two([](auto& a, auto& b) { return matmul(a, b); })});
  cs.push_back({"channel_linear", {{2, 3, 10}, {3, 4}},
                two([](auto& a, auto& b) { return channel_linear(a, b); })});
  cs.push_back({"conv2d", {{2, 2, 6, 5}, {3, 2, 3, 3}},
                two([](auto& a, auto& b) { return conv2d(a, b, 1, 1); })});
  cs.push_back({"conv2d_stride2", {{1, 2, 8, 8}, {2, 2, 3, 3}},
                two([](auto& a, auto& b) { return conv2d(a, b, 2, 1); })});
  cs.push_back({"conv3d", {{1, 2, 5, 4, 6}, {2, 2, 3, 3, 3}},
                two([](auto& a, auto& b) { return conv3d(a, b, 1, 1); })});
  cs.push_back({"conv3d_stride2", {{1, 2, 6, 6, 4}, {2, 2, 3, 3, 3}},
                two([](auto& a, auto& b) { return conv3d(a, b, 2, 1); })});
  cs.push_back({"avg_pool2d", {{2, 3, 6, 4}}, one([](auto& a) { return avg_pool2d(a, 2); })});
  cs.push_back({"avg_pool3d", {{1, 2, 4, 4, 6}}, one([](auto& a) { return avg_pool3d(a, 2); })});
  cs.push_back({"upsample_nearest3d", {{1, 2, 3, 2, 2}},
                one([](auto& a) { return upsample_nearest3d(a, 2); })});
  cs.push_back({"sum_all", {{7, 3}}, one([](auto& a) { return sum_all(a); })});
  cs.push_back({"mean_all", {{7, 3}}, one([](auto& a) { return mean_all(a); })});
  cs.push_back({"sum_rows", {{5, 6}}, one([](auto& a) { return sum_rows(a); })});
  cs.push_back({"reshape", {{4, 6}}, one([](auto& a) { return reshape(a, {2, 12}); })});
  cs.push_back({"permute", {{3, 4, 5}}, one([](auto& a) { return permute(a, {2, 0, 1}); })});
  cs.push_back({"pad", {{3, 4}}, one([](auto& a) { return pad(a, {1, 2, 0, 3}); })});
  cs.push_back({"crop", {{5, 6}}, one([](auto& a) { return crop(a, {1, 2}, {3, 3}); })});
  cs.push_back({"concat", {{2, 3, 4}, {2, 2, 4}},
                two([](auto& a, auto& b) { return concat(a, b, 1); })});
  cs.push_back({"broadcast_to", {{1, 4}}, one([](auto& a) {
                  return broadcast_to(a, {3, 5, 4});
                })});
  cs.push_back({"rfft", {{2, 4, 6}}, one([](auto& a) { return rfft(a, {1, 2}); })});
  cs.push_back({"irfft", {{2, 4, 6, 2}}, one([](auto& a) { return irfft(a, {1, 2}); })});
  cs.push_back({"rfft_roundtrip", {{2, 8}}, one([](auto& a) {
                  return irfft(rfft(a, {1}), {1});
                })});
  cs.push_back({"mode_mix", {{2, 2, 6, 4, 2}, {2, 3, 4, 2, 2}},
                two([](auto& a, auto& b) { return mode_mix(a, b, {2, 1}); })});
  cs.push_back({"spectral_chain", {{1, 2, 8, 6}, {2, 2, 4, 2, 2}},
                two([](auto& x, auto& w) {
                  Tensor xh = rfft(x, {2, 3});
                  Tensor yh = mode_mix(xh, w, {2, 1});
                  return irfft(yh, {2, 3});
                })});
  return cs;
}

}  // namespace geoinv::testutil

TEST_CASE("fft matches naive dft") {
  Rng rng(7);
  for (int n : {2, 3, 4, 5, 6, 8, 12, 16, 18, 32, 40, 64, 72}) {
    std::vector<double> x(size_t(2 * n));
    for (auto& v : x) v = rng.normal();
    std::vector<double> ref(size_t(2 * n), 0.0);
    for (int k = 0; k < n; ++k) {
      double re = 0, im = 0;
      for (int j = 0; j < n; ++j) {
        const double a = -2.0 * M_PI * double(k) * double(j) / double(n);
        const double c = std::cos(a), s = std::sin(a);
        re += x[size_t(2 * j)] * c - x[size_t(2 * j + 1)] * s;
        im += x[size_t(2 * j)] * s + x[size_t(2 * j + 1)] * c;
      }
      ref[size_t(2 * k)] = re;
      ref[size_t(2 * k + 1)] = im;
    }
    std::vector<double> y = x;
    fft::transform_line(n, y.data(), false);
    double err = 0;
    for (size_t i = 0; i < y.size(); ++i) err = std::max(err, std::fabs(y[i] - ref[i]));
    CHECK_MESSAGE(err < 1e-9 * n, "length ", n);
    fft::transform_line(n, y.data(), true);
    double rt = 0;
    for (size_t i = 0; i < y.size(); ++i)
      rt = std::max(rt, std::fabs(y[i] / n - x[i]));
    CHECK_MESSAGE(rt < 1e-12 * n, "roundtrip length ", n);
  }
}

TEST_CASE("elementwise add example") {
  Tensor a = Tensor::from({2}, {1, 2});
  Tensor b = Tensor::from({2}, {3, 4});
  Tensor c = add(a, b);
  CHECK(c.val()[0] == doctest::Approx(4));
  CHECK(c.val()[1] == doctest::Approx(6));
}

TEST_CASE("irfft of rfft reconstructs a random vector") {
  Rng rng(3);
  auto data = random_values(32, rng);
  Tensor x = Tensor::from({32}, data);
  Tensor y = irfft(rfft(x, {0}), {0});
  for (int i = 0; i < 32; ++i)
    CHECK(std::fabs(y.val()[size_t(i)] - data[size_t(i)]) < 1e-5);
}

TEST_CASE("layernorm of a constant vector is zero before affine terms") {
  Tensor x = Tensor::full({8}, 3.25f);
  Tensor y = layernorm_lastdim(x);
  for (float v : y.val()) CHECK(std::fabs(v) < 1e-6);
}

TEST_CASE("fft linearity") {
  Rng rng(11);
  auto xv = random_values(24, rng);
  auto yv = random_values(24, rng);
  const float a = 1.7f, b = -0.6f;
  Tensor x = Tensor::from({4, 6}, xv);
  Tensor y = Tensor::from({4, 6}, yv);
  Tensor lhs = rfft(add(scalar_mul(x, a), scalar_mul(y, b)), {0, 1});
  Tensor rhs = add(scalar_mul(rfft(x, {0, 1}), a), scalar_mul(rfft(y, {0, 1}), b));
  for (int64_t i = 0; i < lhs.size(); ++i)
    CHECK(std::fabs(lhs.val()[size_t(i)] - rhs.val()[size_t(i)]) < 1e-4);
}

TEST_CASE("backward: sum of squares") {
  Tensor x = Tensor::from({3}, {1, -2, 3}, true);
  Tensor loss = sum_all(mul(x, x));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2));
  CHECK(x.grad()[1] == doctest::Approx(-4));
  CHECK(x.grad()[2] == doctest::Approx(6));
}

TEST_CASE("backward: conv2d against finite differences") {
  OpCase c{"conv2d_fd", {{1, 1, 8, 8}, {1, 1, 3, 3}},
           [](const std::vector<Tensor>& ls) { return conv2d(ls[0], ls[1], 1, 0); }};
  auto r = check_op_gradients(c, 42);
  CHECK_MESSAGE(r.max_rel_err <= 1e-3, r.where);
}

TEST_CASE("backward: fft power spectrum against finite differences") {
  OpCase c{"fft_power", {{16}},
           [](const std::vector<Tensor>& ls) {
             Tensor h = rfft(ls[0], {0});
             return sum_all(mul(h, h));
           }};
  auto r = check_op_gradients(c, 43);
  CHECK_MESSAGE(r.max_rel_err <= 1e-3, r.where);
}

TEST_CASE("every registered op passes the finite-difference oracle") {
  for (const auto& c : all_op_cases()) {
    auto r = check_op_gradients(c, 1234);
    CHECK_MESSAGE(r.max_rel_err <= 1e-3, c.name, ": worst at ", r.where, " err ",
                  r.max_rel_err);
  }
}

TEST_CASE("gradients accumulate until zeroed") {
  Tensor x = Tensor::from({2}, {1, 1}, true);
  Tensor l1 = sum_all(mul(x, x));
  backward(l1);
  CHECK(x.grad()[0] == doctest::Approx(2));
  Tensor l2 = sum_all(mul(x, x));
  backward(l2);
  CHECK(x.grad()[0] == doctest::Approx(4));
  x.zero_grad();
  Tensor l3 = sum_all(mul(x, x));
  backward(l3);
  CHECK(x.grad()[0] == doctest::Approx(2));
}

TEST_CASE("non-scalar loss is rejected") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(backward(y), std::runtime_error);
}

TEST_CASE("shape mismatch errors carry op kind and both shapes") {
  Tensor a = Tensor::from({2, 3}, std::vector<float>(6, 0.f));
  Tensor b = Tensor::from({4, 5}, std::vector<float>(20, 0.f));
  try {
    Tensor c = add(a, b);
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
}

TEST_CASE("graph determinism under identical seeds") {
  auto run = [] {
    Rng rng(99);
    auto v1 = random_values(64, rng);
    auto v2 = random_values(64 * 8, rng);
    Tensor x = Tensor::from({8, 8}, v1, true);
    Tensor w = Tensor::from({8, 64}, v2, true);
    Tensor h = gelu(matmul(x, w));
    Tensor loss = mean_all(mul(h, h));
    backward(loss);
    std::vector<float> out(loss.val().begin(), loss.val().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  auto a = run(), b = run();
  CHECK(a == b);
}

TEST_CASE("fft on out-of-range axis is rejected") {
  Tensor x = Tensor::from({2, 3}, std::vector<float>(6, 1.f));
  CHECK_THROWS_AS(rfft(x, {5}), std::runtime_error);
}

TEST_CASE("finite outputs on finite inputs across the op sample") {
  Rng rng(5);
  for (const auto& c : all_op_cases()) {
    std::vector<Tensor> ls;
    for (const auto& s : c.leaf_shapes)
      ls.push_back(Tensor::from(s, random_values(shape_numel(s), rng)));
    Tensor out = c.build(ls);
    for (float v : out.val()) CHECK(std::isfinite(v));
  }
}
