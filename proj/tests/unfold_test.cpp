#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pansharp/checkpoint.hpp"
#include "pansharp/ops.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/unfold.hpp"

using namespace pansharp;

namespace {

Tensor random_image(std::vector<int64_t> shape, Rng& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(shape), DType::f64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.uniform(lo, hi));
  return t;
}

UnfoldConfig toy_unfold(int stages, int bands = 4) {
  UnfoldConfig cfg;
  cfg.stages = stages;
  cfg.bands = bands;
  cfg.lgt.channels = 8;
  cfg.lgt.window = 4;
  cfg.lgt.heads = 2;
  return cfg;
}

// The learned forward operators applied with the public ops (used to build
// observations that are exactly consistent with the data module).
Tensor learned_S(const Tensor& z, const ParamMap& p) {
  Tensor s = resample_bicubic(z, 1, 2);
  s = conv_depthwise(s, p.at("data.down0.dw"), 1, Padding::reflect);
  s = resample_bicubic(s, 1, 2);
  return conv_depthwise(s, p.at("data.down1.dw"), 1, Padding::reflect);
}

Tensor learned_R(const Tensor& z, const ParamMap& p) {
  return linear_lastdim(z, p.at("data.r.w"), p.at("data.r.b"));
}

}  // namespace

TEST_CASE("data module: eta = 0 leaves the iterate unchanged") {
  Rng rng(101);
  ModelParams mp = init_model(toy_unfold(1), 5, DType::f64);
  Tensor z = random_image({16, 16, 4}, rng, 0, 1);
  Tensor x = random_image({4, 4, 4}, rng, 0, 1);
  Tensor y = random_image({16, 16, 1}, rng, 0, 1);
  CHECK(max_abs_diff(data_module(z, x, y, 0.0, mp.tensors), z) == 0.0);
}

TEST_CASE("data module: consistent observations under the learned operators are fixed") {
  Rng rng(102);
  ModelParams mp = init_model(toy_unfold(1), 6, DType::f64);
  Tensor z = random_image({16, 16, 4}, rng, 0, 1);
  Tensor x = learned_S(z, mp.tensors);
  Tensor y = learned_R(z, mp.tensors);
  CHECK(max_abs_diff(data_module(z, x, y, 0.37, mp.tensors), z) <= 1e-5);
}

TEST_CASE("data module: matches the manual composition of the learned operators") {
  Rng rng(103);
  ModelParams mp = init_model(toy_unfold(1), 7, DType::f64);
  // Perturb every data-module tensor so the test sees generic weights.
  for (auto& [name, t] : mp.tensors)
    if (name.rfind("data.", 0) == 0)
      for (int64_t i = 0; i < t.numel(); ++i) t.set(i, t.at(i) + 0.1 * rng.uniform(-1, 1));
  Tensor z = random_image({16, 16, 4}, rng);
  Tensor x = random_image({4, 4, 4}, rng);
  Tensor y = random_image({16, 16, 1}, rng);
  const double eta = 0.21;
  Tensor got = data_module(z, x, y, eta, mp.tensors);

  Tensor resid_s = sub(learned_S(z, mp.tensors), x);
  Tensor t = resample_bicubic(resid_s, 2, 1);
  t = conv_depthwise(t, mp.tensors.at("data.up0.dw"), 1, Padding::reflect);
  t = resample_bicubic(t, 2, 1);
  t = conv_depthwise(t, mp.tensors.at("data.up1.dw"), 1, Padding::reflect);
  Tensor resid_r = sub(learned_R(z, mp.tensors), y);
  Tensor rt = linear_lastdim(resid_r, mp.tensors.at("data.rt.w"), mp.tensors.at("data.rt.b"));
  Tensor want = add_scaled(z, add(t, rt), -eta);
  CHECK(max_abs_diff(got, want) <= 1e-6);
}

TEST_CASE("data module: inconsistent extents raise a shape error") {
  Rng rng(104);
  ModelParams mp = init_model(toy_unfold(1), 8, DType::f64);
  Tensor z = random_image({16, 16, 4}, rng);
  Tensor x = random_image({8, 8, 4}, rng);  // wrong: 16/4 != 8
  Tensor y = random_image({16, 16, 1}, rng);
  CHECK_THROWS_AS(data_module(z, x, y, 0.1, mp.tensors), ShapeError);
}

TEST_CASE("unfold: zero stages reduce to the bicubic upsample") {
  Rng rng(105);
  ModelParams mp = init_model(toy_unfold(0), 9, DType::f64);
  Tensor x = random_image({8, 8, 4}, rng, 0, 1);
  Tensor y = random_image({32, 32, 1}, rng, 0, 1);
  Tensor out = unfold_forward(x, y, mp);
  CHECK(max_abs_diff(out, resample_bicubic(x, 4, 1)) == 0.0);
}

TEST_CASE("unfold: two-stage intermediates and output extents") {
  Rng rng(106);
  ModelParams mp = init_model(toy_unfold(2), 10, DType::f64);
  Tensor x = random_image({8, 8, 4}, rng, 0, 1);
  Tensor y = random_image({32, 32, 1}, rng, 0, 1);
  std::vector<Tensor> inter;
  Tensor out = unfold_forward(x, y, mp, &inter);
  CHECK(out.shape() == std::vector<int64_t>{32, 32, 4});
  CHECK(inter.size() == 5);  // z0, z_1/2, z1, z_3/2, z2
  for (const Tensor& t : inter) {
    CHECK(t.shape() == out.shape());
    CHECK(t.all_finite());
  }
  CHECK(max_abs_diff(inter[4], out) == 0.0);
}

TEST_CASE("unfold: stage errors name the offending stage") {
  Rng rng(107);
  UnfoldConfig cfg = toy_unfold(1);
  cfg.lgt.window = 8;  // 32x32 full res ok, but requires divisibility by 16
  ModelParams mp = init_model(cfg, 11, DType::f64);
  Tensor x = random_image({6, 6, 4}, rng, 0, 1);
  Tensor y = random_image({24, 24, 1}, rng, 0, 1);
  try {
    unfold_forward(x, y, mp);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
  }
}

TEST_CASE("unfold: data module weight set is independent of the stage count") {
  ModelParams one = init_model(toy_unfold(1), 12, DType::f64);
  ModelParams two = init_model(toy_unfold(2), 12, DType::f64);
  auto data_names = [](const ModelParams& mp) {
    std::vector<std::string> names;
    for (const auto& [name, t] : mp.tensors)
      if (name.rfind("data.", 0) == 0) names.push_back(name);
    return names;
  };
  CHECK(data_names(one) == data_names(two));
  CHECK(count_params(two) > count_params(one));
  CHECK(two.tensors.count("eta0") == 1);
  CHECK(two.tensors.count("eta1") == 1);
  CHECK(one.tensors.count("eta1") == 0);
}

TEST_CASE("unfold: shared data gradients equal the sum of per-stage contributions") {
  Rng rng(108);
  ModelParams mp = init_model(toy_unfold(2), 13, DType::f64);
  Tensor x = random_image({8, 8, 4}, rng, 0, 1);
  Tensor y = random_image({32, 32, 1}, rng, 0, 1);
  Tensor gt = random_image({32, 32, 4}, rng, 0, 1);

  auto forward_with = [&](bool freeze_stage1_data, bool freeze_stage2_data,
                          std::map<std::string, Tensor>& grads_out) {
    Tape tape;
    ParamTable live = register_params(tape, mp.tensors, true);
    // A frozen copy of the data tensors under the same names, as constants.
    ParamMap data_only;
    for (const auto& [name, t] : mp.tensors)
      if (name.rfind("data.", 0) == 0) data_only[name] = t;
    Tape* tp = &tape;
    ParamTable frozen;
    for (const auto& [name, t] : data_only) frozen[name] = tp->leaf(t, "", false);
    auto table_for = [&](bool freeze) {
      ParamTable t = live;
      if (freeze)
        for (const auto& [name, id] : frozen) t[name] = id;
      return t;
    };
    NodeId xn = tape.constant(x);
    NodeId yn = tape.constant(y);
    NodeId z = tape.resample_bicubic(xn, 4, 1);
    ParamTable t1 = table_for(freeze_stage1_data);
    z = data_module_t(tape, z, xn, yn, param(live, "eta0"), t1);
    z = prior_forward_t(tape, z, live, "stage0.prior", 4, mp.cfg.lgt);
    ParamTable t2 = table_for(freeze_stage2_data);
    z = data_module_t(tape, z, xn, yn, param(live, "eta1"), t2);
    z = prior_forward_t(tape, z, live, "stage1.prior", 4, mp.cfg.lgt);
    grads_out = tape.backward(tape.mean_abs_diff(z, tape.constant(gt)));
  };

  std::map<std::string, Tensor> g_full, g_stage1, g_stage2;
  forward_with(false, false, g_full);
  forward_with(false, true, g_stage1);  // only the stage-1 use is live
  forward_with(true, false, g_stage2);  // only the stage-2 use is live
  for (const auto& [name, g] : g_full) {
    if (name.rfind("data.", 0) != 0) continue;
    Tensor sum = add(g_stage1.at(name), g_stage2.at(name));
    INFO("parameter " << name);
    CHECK(max_abs_diff(g, sum) <= 1e-10);
  }
}

TEST_CASE("unfold: identity priors and exact-consistent inputs are a fixed point") {
  ModelParams mp = init_model(toy_unfold(2), 14, DType::f64);
  for (auto& [name, t] : mp.tensors)
    if (name.find(".prior.") != std::string::npos)
      for (int64_t i = 0; i < t.numel(); ++i) t.set(i, 0.0);
  // Per-band constants: bicubic resampling, delta kernels, and the uniform
  // learned response all map constants to constants.
  Tensor x({8, 8, 4}, DType::f64);
  const double levels[4] = {0.2, 0.4, 0.6, 0.8};
  for (int64_t p = 0; p < 64; ++p)
    for (int64_t b = 0; b < 4; ++b) x.set(p * 4 + b, levels[b]);
  Tensor z0 = resample_bicubic(x, 4, 1);
  Tensor y = learned_R(z0, mp.tensors);
  std::vector<Tensor> inter;
  Tensor out = unfold_forward(x, y, mp, &inter);
  CHECK(max_abs_diff(out, z0) <= 1e-4);
}

TEST_CASE("unfold: flop estimate and parameter count grow with K") {
  for (int64_t hw : {32, 64}) {
    double prev = 0;
    for (int k = 1; k <= 4; ++k) {
      const double f = estimate_flops(toy_unfold(k), hw, hw);
      CHECK(f > prev);
      prev = f;
    }
  }
  CHECK(count_params(init_model(toy_unfold(2), 1, DType::f32)) >
        count_params(init_model(toy_unfold(1), 1, DType::f32)));
}

TEST_CASE("checkpoint: save/load round trip is exact and stable") {
  namespace fs = std::filesystem;
  ModelParams mp = init_model(toy_unfold(2), 15, DType::f32);
  const std::string path = (fs::temp_directory_path() / "ps_ckpt_test.mstc").string();
  save_model(path, mp);
  ModelParams back = load_model(path);
  CHECK(back.cfg.stages == 2);
  CHECK(back.cfg.bands == 4);
  CHECK(back.cfg.lgt.channels == 8);
  CHECK(back.dtype == DType::f32);
  CHECK(back.init_recipe == mp.init_recipe);
  REQUIRE(back.tensors.size() == mp.tensors.size());
  for (const auto& [name, t] : mp.tensors) {
    REQUIRE(back.tensors.count(name) == 1);
    CHECK(max_abs_diff(t, back.tensors.at(name)) == 0.0);
  }
  // Re-saving the loaded model produces identical bytes.
  const std::string path2 = (fs::temp_directory_path() / "ps_ckpt_test2.mstc").string();
  save_model(path2, back);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("checkpoint: bad magic rejected") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "ps_ckpt_bad.mstc").string();
  std::ofstream os(path, std::ios::binary);
  os << "WRONG bytes";
  os.close();
  CHECK_THROWS_AS(load_model(path), FormatError);
}
