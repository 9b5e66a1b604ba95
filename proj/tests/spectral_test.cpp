#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "pansharp/ops.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/spectral.hpp"

using namespace pansharp;

namespace {

Tensor random_image(std::vector<int64_t> shape, Rng& rng) {
  Tensor t(std::move(shape), DType::f64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.normal());
  return t;
}

double spectrum_vs_oracle(const Tensor& x) {
  Tensor fre, fim;
  oracle::dft2_direct(x, fre, fim);
  Spectrum s = rfft2(x);
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int64_t ww = half_width(w);
  double worst = 0;
  for (int64_t u = 0; u < h; ++u)
    for (int64_t v = 0; v < ww; ++v)
      for (int64_t ch = 0; ch < c; ++ch) {
        worst = std::max(worst, std::abs(s.re.at((u * ww + v) * c + ch) -
                                         fre.at((u * w + v) * c + ch)));
        worst = std::max(worst, std::abs(s.im.at((u * ww + v) * c + ch) -
                                         fim.at((u * w + v) * c + ch)));
      }
  return worst;
}

}  // namespace

TEST_CASE("rfft2: zeros map to zeros") {
  Spectrum s = rfft2(Tensor::zeros({4, 4, 2}, DType::f64));
  CHECK(max_abs_all(s.re) == 0.0);
  CHECK(max_abs_all(s.im) == 0.0);
}

TEST_CASE("rfft2: constant image concentrates in the DC bin") {
  const double c = 0.8;
  Tensor x = Tensor::full({6, 8, 1}, DType::f64, c);
  Spectrum s = rfft2(x);
  const double dc = s.re.at(0);
  CHECK(std::abs(dc - c * std::sqrt(48.0)) <= 1e-10);
  CHECK(std::abs(s.im.at(0)) <= 1e-10);
  double off = 0;
  for (int64_t i = 1; i < s.re.numel(); ++i)
    off = std::max({off, std::abs(s.re.at(i)), std::abs(s.im.at(i))});
  CHECK(off <= 1e-10);
}

TEST_CASE("rfft2: random inputs match the direct double-sum oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    const int64_t h = 2 + static_cast<int64_t>(rng.below(7));
    const int64_t w = 2 + static_cast<int64_t>(rng.below(7));
    CHECK(spectrum_vs_oracle(random_image({h, w, 2}, rng)) <= 1e-10);
  }
  CHECK(spectrum_vs_oracle(random_image({4, 4, 1}, rng)) <= 1e-10);
}

TEST_CASE("irfft2: DC-only spectrum gives a constant image") {
  const int64_t h = 4, w = 6;
  Spectrum s{Tensor::zeros({h, half_width(w), 1}, DType::f64),
             Tensor::zeros({h, half_width(w), 1}, DType::f64)};
  const double v = 0.37;
  s.re.set(0, v * std::sqrt(static_cast<double>(h * w)));
  Tensor img = irfft2(s, w);
  for (int64_t i = 0; i < img.numel(); ++i) CHECK(std::abs(img.at(i) - v) <= 1e-12);
}

TEST_CASE("irfft2: round trip is the identity (even and odd widths)") {
  Rng rng(42);
  for (int64_t w : {8, 7, 5}) {
    Tensor x = random_image({8, w, 2}, rng);
    Tensor back = irfft2(rfft2(x), w);
    CHECK(max_abs_diff(back, x) <= 1e-12);
  }
  Spectrum s = rfft2(random_image({4, 6, 1}, rng));
  CHECK_THROWS_AS(irfft2(s, 8), ShapeError);
}

TEST_CASE("irfft2: matches the direct inverse oracle on a 4x6 spectrum") {
  Rng rng(43);
  Tensor x = random_image({4, 6, 1}, rng);
  Tensor fre, fim;
  oracle::dft2_direct(x, fre, fim);
  Tensor via_oracle = oracle::idft2_direct(fre, fim);
  Tensor via_half = irfft2(rfft2(x), 6);
  CHECK(max_abs_diff(via_oracle, via_half) <= 1e-10);
}

TEST_CASE("amp_phase: quadrants and origin convention") {
  Spectrum s{Tensor::zeros({1, 3, 1}, DType::f64), Tensor::zeros({1, 3, 1}, DType::f64)};
  s.re.set(0, 3.0);   // (3, 0)
  s.re.set(1, -1.0);  // (-1, 0)
  // bin 2 stays (0, 0)
  Tensor amp, phase;
  amp_phase(s, amp, phase);
  CHECK(amp.at(0) == doctest::Approx(3.0));
  CHECK(phase.at(0) == doctest::Approx(0.0));
  CHECK(amp.at(1) == doctest::Approx(1.0));
  CHECK(phase.at(1) == doctest::Approx(M_PI));
  CHECK(amp.at(2) == 0.0);
  CHECK(phase.at(2) == 0.0);
}

TEST_CASE("amp_phase: amplitude matches the defining formula") {
  Rng rng(44);
  Spectrum s{random_image({3, 4, 2}, rng), random_image({3, 4, 2}, rng)};
  Tensor amp, phase;
  amp_phase(s, amp, phase);
  for (int64_t i = 0; i < amp.numel(); ++i) {
    const double want = s.re.at(i) * s.re.at(i) + s.im.at(i) * s.im.at(i);
    CHECK(std::abs(amp.at(i) * amp.at(i) - want) <= 1e-10);
    CHECK(phase.at(i) <= M_PI);
    CHECK(phase.at(i) > -M_PI);
  }
}

TEST_CASE("recompose: inverse pair with amp_phase") {
  Rng rng(45);
  Spectrum s{random_image({3, 5, 2}, rng), random_image({3, 5, 2}, rng)};
  Tensor amp, phase;
  amp_phase(s, amp, phase);
  Spectrum back = recompose(amp, phase);
  CHECK(max_abs_diff(back.re, s.re) <= 1e-6);
  CHECK(max_abs_diff(back.im, s.im) <= 1e-6);
}

TEST_CASE("recompose: zero amplitude kills any phase; analytic bin") {
  Rng rng(46);
  Tensor amp = Tensor::zeros({2, 2, 1}, DType::f64);
  Tensor phase = random_image({2, 2, 1}, rng);
  Spectrum s = recompose(amp, phase);
  CHECK(max_abs_all(s.re) == 0.0);
  CHECK(max_abs_all(s.im) == 0.0);

  amp.set(0, 2.0);
  phase.set(0, M_PI / 2);
  Spectrum s2 = recompose(amp, phase);
  CHECK(std::abs(s2.re.at(0)) <= 1e-15);
  CHECK(s2.im.at(0) == doctest::Approx(2.0));
}

TEST_CASE("Parseval: energy preserved with edge bins counted once") {
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t h = 2 + static_cast<int64_t>(rng.below(7));
    const int64_t w = 2 + static_cast<int64_t>(rng.below(7));
    Tensor x = random_image({h, w, 1}, rng);
    Spectrum s = rfft2(x);
    const int64_t ww = half_width(w);
    const bool even = (w % 2 == 0);
    double energy = 0;
    for (int64_t u = 0; u < h; ++u)
      for (int64_t v = 0; v < ww; ++v) {
        const double m = (v == 0 || (even && v == ww - 1)) ? 1.0 : 2.0;
        const int64_t i = u * ww + v;
        energy += m * (s.re.at(i) * s.re.at(i) + s.im.at(i) * s.im.at(i));
      }
    const double spatial = sumsq_all(x);
    CHECK(std::abs(energy - spatial) / spatial <= 1e-9);
  }
}

TEST_CASE("rfft2 is linear") {
  Rng rng(48);
  Tensor x = random_image({5, 6, 2}, rng);
  Tensor y = random_image({5, 6, 2}, rng);
  const double a = 1.3, b = -0.7;
  Spectrum sx = rfft2(x), sy = rfft2(y);
  Spectrum sc = rfft2(add(scale(x, a), scale(y, b)));
  CHECK(max_abs_diff(sc.re, add(scale(sx.re, a), scale(sy.re, b))) <= 1e-6);
  CHECK(max_abs_diff(sc.im, add(scale(sx.im, a), scale(sy.im, b))) <= 1e-6);
}
