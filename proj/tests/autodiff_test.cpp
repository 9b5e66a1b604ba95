#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles/oracles.hpp"
#include "pansharp/autodiff.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/spectral.hpp"

using namespace pansharp;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(shape), DType::f64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.uniform(lo, hi));
  return t;
}

// Checks the tape gradient of loss = sum(op(leaves...) * weights) against
// central finite differences for each differentiable leaf.
void check_vjp(const std::vector<Tensor>& leaves,
               const std::function<NodeId(Tape&, const std::vector<NodeId>&)>& build, Rng& rng,
               double tol = 1e-4, double step = 1e-6) {
  std::vector<Tensor> work = leaves;
  auto forward = [&]() {
    Tape tape;
    std::vector<NodeId> ids;
    for (const Tensor& t : work) ids.push_back(tape.constant(t));
    return tape.value(build(tape, ids)).at(0);
  };
  // analytic pass
  Tape tape;
  std::vector<NodeId> ids;
  for (size_t i = 0; i < work.size(); ++i)
    ids.push_back(tape.leaf(work[i], "leaf" + std::to_string(i), true));
  NodeId loss = build(tape, ids);
  auto grads = tape.backward(loss);
  (void)rng;
  for (size_t li = 0; li < work.size(); ++li) {
    Tensor fd = oracle::finite_difference(forward, work[li], step);
    const Tensor& an = grads.at("leaf" + std::to_string(li));
    for (int64_t i = 0; i < fd.numel(); ++i) {
      const double denom = std::max({std::abs(fd.at(i)), std::abs(an.at(i)), 1e-6});
      INFO("leaf " << li << " coord " << i << " fd=" << fd.at(i) << " an=" << an.at(i));
      CHECK(std::abs(fd.at(i) - an.at(i)) / denom <= tol);
    }
  }
}

// Weighted-sum head so the scalar loss sees every output coordinate with a
// distinct sensitivity.
NodeId weighted_sum(Tape& tape, NodeId x, uint64_t salt) {
  Rng wr(salt);
  const Tensor& v = tape.value(x);
  Tensor w(v.shape(), v.dtype());
  for (int64_t i = 0; i < w.numel(); ++i) w.set(i, wr.uniform(-1, 1));
  return tape.sum(tape.mul(x, tape.constant(w)));
}

}  // namespace

TEST_CASE("backward: loss = sum(x) gives all-ones") {
  Tape tape;
  Rng rng(1);
  NodeId x = tape.leaf(random_tensor({3, 4}, rng), "x", true);
  auto grads = tape.backward(tape.sum(x));
  const Tensor& g = grads.at("x");
  for (int64_t i = 0; i < g.numel(); ++i) CHECK(g.at(i) == 1.0);
}

TEST_CASE("backward: product of scalars") {
  Tape tape;
  NodeId x = tape.leaf(Tensor::full({1}, DType::f64, 3.0), "x", true);
  NodeId y = tape.leaf(Tensor::full({1}, DType::f64, -1.25), "y", true);
  auto grads = tape.backward(tape.mul(x, y));
  CHECK(grads.at("x").at(0) == doctest::Approx(-1.25));
  CHECK(grads.at("y").at(0) == doctest::Approx(3.0));
}

TEST_CASE("backward: reused leaf accumulates, detached leaf gets zeros") {
  Tape tape;
  NodeId x = tape.leaf(Tensor::full({1}, DType::f64, 2.0), "x", true);
  NodeId unused = tape.leaf(Tensor::full({2}, DType::f64, 5.0), "unused", true);
  (void)unused;
  NodeId y = tape.add(tape.mul(x, x), x);  // x^2 + x -> 2x + 1 = 5
  auto grads = tape.backward(y);
  CHECK(grads.at("x").at(0) == doctest::Approx(5.0));
  CHECK(grads.at("unused").at(0) == 0.0);
  CHECK(grads.at("unused").at(1) == 0.0);
}

TEST_CASE("backward: non-scalar loss is a contract error") {
  Tape tape;
  NodeId x = tape.leaf(Tensor::full({3}, DType::f64, 1.0), "x", true);
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}

TEST_CASE("vjp sweep: elementwise and scalar ops") {
  Rng rng(21);
  check_vjp({random_tensor({3, 5}, rng), random_tensor({3, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.add(in[0], in[1]), 101);
            },
            rng);
  check_vjp({random_tensor({3, 5}, rng), random_tensor({3, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.sub(in[0], in[1]), 102);
            },
            rng);
  check_vjp({random_tensor({3, 5}, rng), random_tensor({3, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.mul(in[0], in[1]), 103);
            },
            rng);
  check_vjp({random_tensor({3, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.scale(in[0], -1.7), 104);
            },
            rng);
  check_vjp({random_tensor({3, 5}, rng), random_tensor({1}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.scale_by(in[0], in[1]), 105);
            },
            rng);
  check_vjp({random_tensor({4, 4}, rng, -2, 2)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.gelu(in[0]), 106);
            },
            rng);
}

TEST_CASE("vjp sweep: softmax and layer norm") {
  Rng rng(22);
  check_vjp({random_tensor({4, 6}, rng, -2, 2)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.softmax_lastdim(in[0]), 107);
            },
            rng);
  check_vjp({random_tensor({2, 3, 6}, rng), random_tensor({6}, rng, 0.5, 1.5),
             random_tensor({6}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.layer_norm(in[0], in[1], in[2], 1e-5), 108);
            },
            rng);
}

TEST_CASE("vjp sweep: projections and convolutions") {
  Rng rng(23);
  check_vjp({random_tensor({2, 3, 4}, rng), random_tensor({4, 5}, rng), random_tensor({5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.linear_lastdim(in[0], in[1], in[2]), 109);
            },
            rng);
  check_vjp({random_tensor({2, 3, 4}, rng), random_tensor({4, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.linear_lastdim(in[0], in[1], -1), 110);
            },
            rng);
  for (int stride : {1, 2}) {
    for (Padding pad : {Padding::reflect, Padding::zero}) {
      check_vjp({random_tensor({5, 6, 2}, rng), random_tensor({2, 3, 3}, rng)},
                [stride, pad](Tape& t, const std::vector<NodeId>& in) {
                  return weighted_sum(t, t.conv_depthwise(in[0], in[1], stride, pad), 111);
                },
                rng);
    }
  }
}

TEST_CASE("vjp sweep: resampling") {
  Rng rng(24);
  for (auto [num, den] : std::vector<std::pair<int, int>>{{2, 1}, {4, 1}, {1, 2}, {1, 4}}) {
    check_vjp({random_tensor({4, 4, 2}, rng)},
              [num, den](Tape& t, const std::vector<NodeId>& in) {
                return weighted_sum(t, t.resample_bicubic(in[0], num, den), 112);
              },
              rng);
  }
}

TEST_CASE("vjp sweep: windows, slices, concat, bmm, broadcast") {
  Rng rng(25);
  check_vjp({random_tensor({4, 4, 3}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.window_partition(in[0], 2), 113);
            },
            rng);
  check_vjp({random_tensor({4, 4, 2}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              NodeId win = t.window_partition(in[0], 2);
              return weighted_sum(t, t.window_merge(win, 2, 4, 4), 114);
            },
            rng);
  check_vjp({random_tensor({2, 3, 6}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              NodeId lo = t.slice_lastdim(in[0], 0, 2);
              NodeId hi = t.slice_lastdim(in[0], 2, 6);
              return weighted_sum(t, t.concat_lastdim({hi, lo}), 115);
            },
            rng);
  check_vjp({random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.bmm(in[0], in[1], false, false), 116);
            },
            rng);
  check_vjp({random_tensor({2, 3, 4}, rng), random_tensor({2, 5, 4}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.bmm(in[0], in[1], false, true), 117);
            },
            rng);
  check_vjp({random_tensor({2, 4, 3}, rng), random_tensor({2, 4, 5}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.bmm(in[0], in[1], true, false), 118);
            },
            rng);
  check_vjp({random_tensor({3, 2, 4}, rng), random_tensor({2, 4}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.add_broadcast0(in[0], in[1]), 119);
            },
            rng);
}

TEST_CASE("vjp sweep: frequency-domain ops") {
  Rng rng(26);
  check_vjp({random_tensor({4, 4, 2}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.rfft2(in[0]), 120);
            },
            rng);
  check_vjp({random_tensor({4, 3, 2, 2}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.irfft2(in[0], 4), 121);
            },
            rng);
  check_vjp({random_tensor({4, 3, 2, 2}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.irfft2(in[0], 5), 122);
            },
            rng);
  // amp_phase away from the origin and the phase branch cut.
  Tensor spec({3, 3, 2, 2}, DType::f64);
  for (int64_t i = 0; i < spec.numel(); i += 2) {
    spec.set(i, rng.uniform(0.4, 1.2));                                  // re > 0
    spec.set(i + 1, rng.uniform(0.3, 1.0) * (rng.below(2) ? 1 : -1));    // im
  }
  check_vjp({spec},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.amp_phase(in[0]), 123);
            },
            rng);
  check_vjp({random_tensor({3, 3, 2, 2}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.recompose(in[0]), 124);
            },
            rng);
  check_vjp({random_tensor({3, 3, 2, 2}, rng), random_tensor({2}, rng), random_tensor({2}, rng),
             random_tensor({2}, rng), random_tensor({2}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return weighted_sum(t, t.freq_dconv(in[0], in[1], in[2], in[3], in[4]), 125);
            },
            rng);
}

TEST_CASE("vjp sweep: losses") {
  Rng rng(27);
  // keep |a - b| away from zero so the subgradient is locally smooth
  Tensor a = random_tensor({4, 4}, rng);
  Tensor b = a;
  for (int64_t i = 0; i < b.numel(); ++i)
    b.set(i, a.at(i) + (rng.below(2) ? 1 : -1) * rng.uniform(0.2, 0.5));
  check_vjp({a, b},
            [](Tape& t, const std::vector<NodeId>& in) {
              return t.mean_abs_diff(in[0], in[1]);
            },
            rng);
  check_vjp({random_tensor({1}, rng), random_tensor({1}, rng), random_tensor({1}, rng)},
            [](Tape& t, const std::vector<NodeId>& in) {
              return t.mean_of({in[0], in[1], in[2]});
            },
            rng);
}

TEST_CASE("grad check style example: scalar quadratic") {
  // loss = 0.5 w^2 -> grad = w
  Tape tape;
  NodeId w = tape.leaf(Tensor::full({1}, DType::f64, 1.7), "w", true);
  NodeId loss = tape.scale(tape.mul(w, w), 0.5);
  auto grads = tape.backward(loss);
  CHECK(grads.at("w").at(0) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("grad check style example: linear model is exact") {
  Rng rng(31);
  Tensor x = random_tensor({6}, rng);
  Tape tape;
  NodeId w = tape.leaf(random_tensor({6}, rng), "w", true);
  NodeId loss = tape.sum(tape.mul(w, tape.constant(x)));
  auto grads = tape.backward(loss);
  for (int64_t i = 0; i < 6; ++i) CHECK(grads.at("w").at(i) == x.at(i));
}
