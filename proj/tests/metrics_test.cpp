#include <doctest.h>

#include <cmath>

#include "pansharp/metrics.hpp"
#include "pansharp/ops.hpp"
#include "pansharp/rng.hpp"

using namespace pansharp;

namespace {

Tensor random_image(std::vector<int64_t> shape, Rng& rng, double lo = 0, double hi = 1) {
  Tensor t(std::move(shape), DType::f64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.uniform(lo, hi));
  return t;
}

// Straight two-pass SSIM evaluation (explicit centered moments), independent
// of the library's accumulation scheme.
double ssim_direct(const Tensor& a, const Tensor& b) {
  const int64_t h = a.dim(0), w = a.dim(1), bands = a.dim(2);
  double g1[11];
  double gsum = 0;
  for (int i = 0; i < 11; ++i) {
    g1[i] = std::exp(-(i - 5.0) * (i - 5.0) / 4.5);
    gsum += g1[i];
  }
  for (double& v : g1) v /= gsum;
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  int64_t count = 0;
  for (int64_t ch = 0; ch < bands; ++ch)
    for (int64_t i = 0; i + 11 <= h; ++i)
      for (int64_t j = 0; j + 11 <= w; ++j) {
        double mx = 0, my = 0;
        for (int di = 0; di < 11; ++di)
          for (int dj = 0; dj < 11; ++dj) {
            const double wg = g1[di] * g1[dj];
            mx += wg * a.at(((i + di) * w + j + dj) * bands + ch);
            my += wg * b.at(((i + di) * w + j + dj) * bands + ch);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int di = 0; di < 11; ++di)
          for (int dj = 0; dj < 11; ++dj) {
            const double wg = g1[di] * g1[dj];
            const double dx = a.at(((i + di) * w + j + dj) * bands + ch) - mx;
            const double dy = b.at(((i + di) * w + j + dj) * bands + ch) - my;
            vx += wg * dx * dx;
            vy += wg * dy * dy;
            cxy += wg * dx * dy;
          }
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

// Direct sliding-window Q index, plain loops.
double q_direct(const Tensor& a, const Tensor& b, int win) {
  const int64_t h = a.dim(0), w = a.dim(1), bands = a.dim(2);
  double total = 0;
  int64_t used = 0;
  for (int64_t ch = 0; ch < bands; ++ch)
    for (int64_t i = 0; i + win <= h; ++i)
      for (int64_t j = 0; j + win <= w; ++j) {
        double mx = 0, my = 0, vx = 0, vy = 0, cxy = 0;
        const double n = static_cast<double>(win) * win;
        for (int di = 0; di < win; ++di)
          for (int dj = 0; dj < win; ++dj) {
            mx += a.at(((i + di) * w + j + dj) * bands + ch);
            my += b.at(((i + di) * w + j + dj) * bands + ch);
          }
        mx /= n;
        my /= n;
        for (int di = 0; di < win; ++di)
          for (int dj = 0; dj < win; ++dj) {
            const double dx = a.at(((i + di) * w + j + dj) * bands + ch) - mx;
            const double dy = b.at(((i + di) * w + j + dj) * bands + ch) - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
          }
        vx /= n;
        vy /= n;
        cxy /= n;
        const double denom = (vx + vy) * (mx * mx + my * my);
        if (denom == 0) continue;
        total += 4 * cxy * mx * my / denom;
        ++used;
      }
  return total / static_cast<double>(used);
}

}  // namespace

TEST_CASE("psnr: cap, analytic value, formula oracle") {
  Rng rng(131);
  Tensor a = random_image({8, 8, 2}, rng);
  CHECK(psnr(a, a) == 100.0);

  Tensor b = a;
  for (int64_t i = 0; i < b.numel(); ++i) b.set(i, a.at(i) + 0.1);  // MSE = 0.01
  CHECK(psnr(b, a, 1.0) == doctest::Approx(20.0).epsilon(1e-12));

  Tensor c = random_image({8, 8, 2}, rng);
  double mse = 0;
  for (int64_t i = 0; i < a.numel(); ++i) mse += (a.at(i) - c.at(i)) * (a.at(i) - c.at(i));
  mse /= static_cast<double>(a.numel());
  CHECK(std::abs(psnr(a, c, 1.0) - 10 * std::log10(1.0 / mse)) <= 1e-9);
  CHECK_THROWS_AS(psnr(a, c, 0.0), ContractError);
}

TEST_CASE("psnr: strictly decreasing in the noise level") {
  Rng rng(132);
  Tensor base = random_image({16, 16, 2}, rng, 0.2, 0.8);
  double prev = 1e300;
  for (double sigma : {0.01, 0.02, 0.04}) {
    Rng nrng(133);
    Tensor noisy = base;
    for (int64_t i = 0; i < noisy.numel(); ++i) noisy.set(i, base.at(i) + sigma * nrng.normal());
    const double v = psnr(noisy, base, 1.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("sam: zero at equality, right angle, scale invariance") {
  Rng rng(134);
  Tensor a = random_image({6, 6, 3}, rng, 0.1, 1.0);
  CHECK(sam(a, a) == doctest::Approx(0.0));

  Tensor p({2, 2, 2}, DType::f64), q({2, 2, 2}, DType::f64);
  for (int64_t i = 0; i < 4; ++i) {
    p.set(i * 2 + 0, 1.0);
    p.set(i * 2 + 1, 0.0);
    q.set(i * 2 + 0, 0.0);
    q.set(i * 2 + 1, 1.0);
  }
  CHECK(sam(p, q) == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(sam(scale(a, 2.0), a) <= 1e-7);  // scale invariance

  int64_t skipped = 0;
  Tensor z = Tensor::zeros({2, 2, 2}, DType::f64);
  z.set(0, 1.0);
  sam(z, a, &skipped);
  CHECK(skipped == 3);  // three pixels have zero prediction norm
}

TEST_CASE("ergas: zero at equality, formula oracle, degenerate band") {
  Rng rng(135);
  Tensor gt = random_image({8, 8, 3}, rng, 0.2, 0.9);
  CHECK(ergas(gt, gt) == doctest::Approx(0.0));

  Tensor pred = random_image({8, 8, 3}, rng, 0.2, 0.9);
  double acc = 0;
  for (int64_t ch = 0; ch < 3; ++ch) {
    double se = 0, mean = 0;
    for (int64_t p = 0; p < 64; ++p) {
      se += (pred.at(p * 3 + ch) - gt.at(p * 3 + ch)) * (pred.at(p * 3 + ch) - gt.at(p * 3 + ch));
      mean += gt.at(p * 3 + ch);
    }
    mean /= 64;
    acc += (se / 64) / (mean * mean);
  }
  const double want = 100.0 * 0.25 * std::sqrt(acc / 3.0);
  CHECK(std::abs(ergas(pred, gt, 0.25) - want) <= 1e-9);

  Tensor zgt = Tensor::zeros({8, 8, 1}, DType::f64);
  CHECK_THROWS_AS(ergas(random_image({8, 8, 1}, rng), zgt), ContractError);
}

TEST_CASE("ssim: unity at equality, low for inverted pattern, oracle match") {
  Rng rng(136);
  Tensor a = random_image({16, 16, 1}, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  // High-variance checkerboard and its inversion.
  Tensor cb({16, 16, 1}, DType::f64), inv({16, 16, 1}, DType::f64);
  for (int64_t i = 0; i < 16; ++i)
    for (int64_t j = 0; j < 16; ++j) {
      const double v = ((i + j) % 2 == 0) ? 0.9 : 0.1;
      cb.set(i * 16 + j, v);
      inv.set(i * 16 + j, 1.0 - v);
    }
  CHECK(ssim(inv, cb) < 0.2);

  Tensor b = random_image({16, 16, 2}, rng);
  Tensor c = random_image({16, 16, 2}, rng);
  CHECK(std::abs(ssim(b, c) - ssim_direct(b, c)) <= 1e-6);
  CHECK(std::abs(ssim(b, c) - ssim(c, b)) <= 1e-9);  // symmetry
  CHECK_THROWS_AS(ssim(random_image({8, 8, 1}, rng), random_image({8, 8, 1}, rng)), ShapeError);
}

TEST_CASE("q index: unity at equality, shift penalty, oracle match, symmetry") {
  Rng rng(137);
  Tensor a = random_image({33, 33, 1}, rng);
  CHECK(q_index_avg(a, a, 32) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor shifted = a;
  for (int64_t i = 0; i < a.numel(); ++i) shifted.set(i, a.at(i) + 0.3);
  CHECK(q_index_avg(shifted, a, 32) < 1.0);

  Tensor b = random_image({33, 33, 1}, rng);
  CHECK(std::abs(q_index_avg(a, b, 32) - q_direct(a, b, 32)) <= 1e-9);
  CHECK(std::abs(q_index_avg(a, b, 16) - q_direct(a, b, 16)) <= 1e-9);
  CHECK(std::abs(q_index_avg(a, b, 32) - q_index_avg(b, a, 32)) <= 1e-9);

  Tensor flat = Tensor::zeros({32, 32, 1}, DType::f64);
  CHECK_THROWS_AS(q_index_avg(flat, flat, 32), ContractError);
  CHECK_THROWS_AS(q_index_avg(a, b, 64), ShapeError);
}

TEST_CASE("evaluate: aggregates every metric") {
  Rng rng(138);
  Tensor gt = random_image({33, 33, 2}, rng, 0.1, 0.9);
  Tensor pred = gt;
  for (int64_t i = 0; i < pred.numel(); ++i) pred.set(i, gt.at(i) + 0.01 * rng.normal());
  IqaReport r = evaluate(pred, gt);
  CHECK(r.psnr > 30.0);
  CHECK(r.ssim > 0.8);
  CHECK(r.q_avg > 0.8);
  CHECK(r.sam < 0.2);
  CHECK(r.ergas > 0.0);
  CHECK(r.sam_skipped == 0);
}
