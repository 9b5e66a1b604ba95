#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "pansharp/degradation.hpp"
#include "pansharp/ops.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/tensor_io.hpp"

using namespace pansharp;

namespace {

Tensor random_image(std::vector<int64_t> shape, Rng& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(shape), DType::f64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST_CASE("apply_S: constant image stays constant at reduced size") {
  DegradationSpec spec = default_spec(3, 4);
  Tensor z = Tensor::full({16, 16, 3}, DType::f64, 0.42);
  Tensor x = apply_S(z, spec);
  REQUIRE(x.dim(0) == 4);
  REQUIRE(x.dim(1) == 4);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(std::abs(x.at(i) - 0.42) <= 1e-12);
}

TEST_CASE("apply_S: paper-scale extents 128 -> 32") {
  DegradationSpec spec = default_spec(4, 4);
  Rng rng(51);
  Tensor z = random_image({128, 128, 4}, rng, 0, 1);
  Tensor x = apply_S(z, spec);
  CHECK(x.shape() == std::vector<int64_t>{32, 32, 4});
  CHECK(apply_S_adjoint(x, spec).shape() == std::vector<int64_t>{128, 128, 4});
  Tensor bad = random_image({10, 10, 4}, rng);
  CHECK_THROWS_AS(apply_S(bad, spec), ShapeError);
}

TEST_CASE("apply_S: matches the materialized matrix on deltas and random input") {
  DegradationSpec spec = default_spec(1, 2);
  spec.blur = make_gaussian_kernel(3, 0.8);
  const int64_t h = 8, w = 8;
  auto mat = oracle::materialize_S(spec, h, w);  // (16) x (64)
  Rng rng(52);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor z = trial == 0 ? Tensor::zeros({h, w, 1}, DType::f64) : random_image({h, w, 1}, rng);
    if (trial == 0) z.set(27, 1.0);  // delta image
    Tensor got = apply_S(z, spec);
    for (int64_t r = 0; r < 16; ++r) {
      double want = 0;
      for (int64_t ccol = 0; ccol < 64; ++ccol)
        want += mat[static_cast<size_t>(r * 64 + ccol)] * z.at(ccol);
      CHECK(std::abs(got.at(r) - want) <= 1e-8);
    }
  }
}

TEST_CASE("apply_S / apply_S_adjoint pass the inner-product test on 20 pairs") {
  Rng rng(53);
  DegradationSpec spec = default_spec(2, 4);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor z = random_image({16, 16, 2}, rng);
    Tensor x = random_image({4, 4, 2}, rng);
    const double lhs = dot_all(apply_S(z, spec), x);
    const double rhs = dot_all(z, apply_S_adjoint(x, spec));
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
  }
  CHECK(max_abs_all(apply_S_adjoint(Tensor::zeros({4, 4, 2}, DType::f64), spec)) == 0.0);
}

TEST_CASE("apply_S is linear") {
  Rng rng(54);
  DegradationSpec spec = default_spec(2, 2);
  Tensor z1 = random_image({8, 8, 2}, rng);
  Tensor z2 = random_image({8, 8, 2}, rng);
  const double a = 0.6, b = -1.4;
  Tensor lhs = apply_S(add(scale(z1, a), scale(z2, b)), spec);
  Tensor rhs = add(scale(apply_S(z1, spec), a), scale(apply_S(z2, spec), b));
  CHECK(max_abs_diff(lhs, rhs) <= 1e-9);
}

TEST_CASE("apply_R: uniform response averages; shape contract; oracle") {
  DegradationSpec spec = default_spec(4, 4);
  Tensor z = Tensor::full({4, 4, 4}, DType::f64, 0.55);
  Tensor y = apply_R(z, spec);
  REQUIRE(y.shape() == std::vector<int64_t>{4, 4, 1});
  for (int64_t i = 0; i < y.numel(); ++i) CHECK(y.at(i) == doctest::Approx(0.55));

  Rng rng(55);
  Tensor zr = random_image({3, 3, 4}, rng);
  spec.response = Tensor::from_values<double>({4}, {0.1, 0.2, 0.3, 0.4});
  Tensor yr = apply_R(zr, spec);
  for (int64_t p = 0; p < 9; ++p) {
    double want = 0;
    for (int64_t c = 0; c < 4; ++c) want += zr.at(p * 4 + c) * spec.response.at(c);
    CHECK(std::abs(yr.at(p) - want) <= 1e-8);
  }
  Tensor wrong = random_image({3, 3, 2}, rng);
  CHECK_THROWS_AS(apply_R(wrong, spec), ShapeError);
}

TEST_CASE("apply_R / apply_R_adjoint adjointness and shape") {
  Rng rng(56);
  DegradationSpec spec = default_spec(3, 4);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor z = random_image({4, 4, 3}, rng);
    Tensor y = random_image({4, 4, 1}, rng);
    const double lhs = dot_all(apply_R(z, spec), y);
    const double rhs = dot_all(z, apply_R_adjoint(y, spec));
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
  }
  Tensor y1 = random_image({4, 4, 1}, rng);
  CHECK(apply_R_adjoint(y1, spec).dim(2) == 3);
  CHECK(max_abs_all(apply_R_adjoint(Tensor::zeros({2, 2, 1}, DType::f64), spec)) == 0.0);
}

TEST_CASE("synth_wald: zero noise gives exact operator outputs") {
  DegradationSpec spec = default_spec(4, 4);
  Tensor gt = make_scene(32, 32, 4, 77, DType::f64);
  SceneTriple t = synth_wald(gt, spec);
  CHECK(max_abs_diff(t.lrms, apply_S(gt, spec)) == 0.0);
  CHECK(max_abs_diff(t.pan, apply_R(gt, spec)) == 0.0);
  CHECK(t.lrms.shape() == std::vector<int64_t>{8, 8, 4});
  CHECK(t.pan.shape() == std::vector<int64_t>{32, 32, 1});
  // Eq-1 residuals vanish exactly at zero noise.
  CHECK(frob_norm(sub(t.lrms, apply_S(t.gt, spec))) == 0.0);
  CHECK(frob_norm(sub(t.pan, apply_R(t.gt, spec))) == 0.0);
}

TEST_CASE("synth_wald: deterministic in the seed, bitwise") {
  DegradationSpec spec = default_spec(2, 4);
  spec.sigma_x = 0.02;
  spec.sigma_y = 0.01;
  spec.seed = 99;
  Tensor gt = make_scene(16, 16, 2, 5, DType::f64);
  SceneTriple a = synth_wald(gt, spec);
  SceneTriple b = synth_wald(gt, spec);
  CHECK(max_abs_diff(a.lrms, b.lrms) == 0.0);
  CHECK(max_abs_diff(a.pan, b.pan) == 0.0);
  for (int64_t i = 0; i < a.lrms.numel(); ++i) {
    CHECK(a.lrms.at(i) >= 0.0);
    CHECK(a.lrms.at(i) <= 1.0);
  }
}

TEST_CASE("synth_wald: out-of-range ground truth is rejected") {
  DegradationSpec spec = default_spec(1, 4);
  Tensor gt = Tensor::full({8, 8, 1}, DType::f64, 1.5);
  CHECK_THROWS_AS(synth_wald(gt, spec), ContractError);
}

TEST_CASE("degradation spec invariants are validated") {
  DegradationSpec spec = default_spec(2, 4);
  spec.blur.set(0, spec.blur.at(0) + 0.5);  // breaks sum-to-one
  Tensor z = Tensor::full({8, 8, 2}, DType::f64, 0.5);
  CHECK_THROWS_AS(apply_S(z, spec), ContractError);
  DegradationSpec spec2 = default_spec(2, 4);
  spec2.response = Tensor::from_values<double>({2}, {0.9, 0.2});
  CHECK_THROWS_AS(apply_R(z, spec2), ContractError);
}

TEST_CASE("make_scene: range contract and seed determinism") {
  Tensor a = make_scene(24, 24, 3, 123, DType::f64);
  Tensor b = make_scene(24, 24, 3, 123, DType::f64);
  Tensor c = make_scene(24, 24, 3, 124, DType::f64);
  CHECK(max_abs_diff(a, b) == 0.0);
  CHECK(max_abs_diff(a, c) > 0.0);
  for (int64_t i = 0; i < a.numel(); ++i) {
    CHECK(a.at(i) >= 0.0);
    CHECK(a.at(i) <= 1.0);
  }
}
