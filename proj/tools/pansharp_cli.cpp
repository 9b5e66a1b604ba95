// Command-line surface: synthetic data, training, inference, evaluation,
// classical PGD demo, stage dumps, and self-diagnostics.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "oracles/oracles.hpp"
#include "pansharp/checkpoint.hpp"
#include "pansharp/degradation.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/ops.hpp"
#include "pansharp/pgd.hpp"
#include "pansharp/png_io.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/spectral.hpp"
#include "pansharp/tensor_io.hpp"
#include "pansharp/train.hpp"

namespace fs = std::filesystem;
using namespace pansharp;

namespace {

// ---- config file: plain `key = value` lines, '#' comments, UTF-8. Keys must
// name a flag of the invoked subcommand; flags given on the command line win.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("config file " + path + ": cannot open");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ContractError(path + ":" + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw ContractError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // explicit flag overrides the file
    opt->add_result(value);
    opt->run_callback();
  }
}

struct SharedFlags {
  std::string config;
  uint64_t seed = 0;
  std::string out = ".";
  std::string precision = "single";
  int threads = 1;
  DType dtype() const { return precision == "double" ? DType::f64 : DType::f32; }
};

void add_shared(CLI::App* cmd, SharedFlags& sf) {
  cmd->add_option("--config", sf.config, "key = value configuration file");
  cmd->add_option("--seed", sf.seed, "seed for all randomness");
  cmd->add_option("--out", sf.out, "output directory");
  cmd->add_option("--precision", sf.precision, "single|double")
      ->check(CLI::IsMember({"single", "double"}));
  cmd->add_option("--threads", sf.threads, "parallel per-image evaluation only")
      ->check(CLI::Range(1, 256));
}

std::string stem_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", index);
  return buf;
}

DegradationSpec build_spec(int bands, int scale, int blur_size, double blur_sigma,
                           double noise_x, double noise_y, uint64_t seed) {
  DegradationSpec spec;
  spec.blur = make_gaussian_kernel(blur_size, blur_sigma);
  spec.scale = scale;
  spec.response = Tensor::full({bands}, DType::f64, 1.0 / bands);
  spec.sigma_x = noise_x;
  spec.sigma_y = noise_y;
  spec.seed = seed;
  return spec;
}

Dataset load_dataset(const std::string& dir, DType dt) {
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".gt.mst";
    if (name.size() > suffix.size() && name.ends_with(suffix))
      stems.push_back((fs::path(dir) / name.substr(0, name.size() - suffix.size())).string());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw ContractError("no *.gt.mst files under " + dir);
  Dataset data;
  for (const auto& stem : stems) {
    SceneTriple t = load_triple(stem);
    t.gt = t.gt.astype(dt);
    t.lrms = t.lrms.astype(dt);
    t.pan = t.pan.astype(dt);
    data.push_back(std::move(t));
  }
  return data;
}

void print_metrics_header(std::ostream& os, int q_window) {
  os << "# peak=1 ssim_window=11 ssim_sigma=1.5 q_window=" << q_window
     << " scale_ratio=0.25 sam_unit=radians\n";
  os << "image,psnr,ssim,q_avg,sam,ergas\n";
}

void print_metrics_row(std::ostream& os, const std::string& name, const IqaReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", name.c_str(), r.psnr, r.ssim,
                r.q_avg, r.sam, r.ergas);
  os << buf;
}

// ------------------------------------------------------------------ commands

int cmd_synth(const SharedFlags& sf, int count, int size, int bands, int scale, int blur_size,
              double blur_sigma, double noise_x, double noise_y, bool png) {
  fs::create_directories(sf.out);
  for (int i = 0; i < count; ++i) {
    const uint64_t scene_seed = Rng(sf.seed).child(static_cast<uint64_t>(i)).next_u64();
    Tensor gt = make_scene(size, size, bands, scene_seed, sf.dtype());
    DegradationSpec spec = build_spec(bands, scale, blur_size, blur_sigma, noise_x, noise_y,
                                      scene_seed ^ 0x5eedULL);
    SceneTriple t = synth_wald(gt, spec);
    const std::string stem = (fs::path(sf.out) / stem_name(i)).string();
    save_triple(stem, t);
    if (png) {
      write_band_previews(stem + ".gt", t.gt);
      write_band_previews(stem + ".lrms", t.lrms);
      write_band_previews(stem + ".pan", t.pan);
    }
  }
  std::cout << "wrote " << count << " scene triples to " << sf.out << "\n";
  return 0;
}

int cmd_train(const SharedFlags& sf, const std::string& data_dir, int stages, int channels,
              int window, int heads, int epochs, int max_steps, TrainConfig tc, int ckpt_every) {
  fs::create_directories(sf.out);
  Dataset data = load_dataset(data_dir, sf.dtype());
  const int bands = static_cast<int>(data[0].gt.dim(2));
  UnfoldConfig cfg;
  cfg.stages = stages;
  cfg.bands = bands;
  cfg.lgt.channels = channels > 0 ? channels : 4 * bands;
  cfg.lgt.window = window;
  cfg.lgt.heads = heads;
  ModelParams model = init_model(cfg, sf.seed, sf.dtype());
  AdamState state;
  tc.seed = sf.seed;
  tc.epochs = epochs;

  std::ofstream log((fs::path(sf.out) / "train_log.csv").string());
  log << "epoch,lr,loss\n";
  const int64_t steps_per_epoch = static_cast<int64_t>(data.size()) / tc.batch;
  int64_t steps_done = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    int max_batches = 0;
    if (max_steps > 0) {
      const int64_t left = max_steps - steps_done;
      if (left <= 0) break;
      if (left < steps_per_epoch) max_batches = static_cast<int>(left);
    }
    const double loss = train_epoch(model, data, state, tc, epoch, max_batches);
    steps_done = state.t;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", epoch, lr_schedule(epoch, tc), loss);
    log << buf;
    log.flush();
    if (ckpt_every > 0 && (epoch + 1) % ckpt_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.mstc", epoch + 1);
      save_model((fs::path(sf.out) / name).string(), model);
    }
  }
  save_model((fs::path(sf.out) / "checkpoint.mstc").string(), model);
  std::cout << "trained " << steps_done << " steps; checkpoint at "
            << (fs::path(sf.out) / "checkpoint.mstc").string() << "\n";
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& lrms_path, const std::string& pan_path,
              const std::string& pred_path) {
  ModelParams model = load_model(ckpt);
  Tensor x = load_tensor(lrms_path).astype(model.dtype);
  Tensor y = load_tensor(pan_path).astype(model.dtype);
  Tensor pred = unfold_forward(x, y, model);
  save_tensor(pred_path, pred);
  std::cout << "wrote " << pred_path << "\n";
  return 0;
}

int cmd_eval(const SharedFlags& sf, const std::string& pred_path, const std::string& gt_path,
             const std::string& pred_dir, const std::string& gt_dir, int q_window,
             const std::string& csv_out) {
  std::ostringstream rows;
  if (!pred_path.empty()) {
    IqaReport r = evaluate(load_tensor(pred_path), load_tensor(gt_path), 1.0, 0.25, q_window);
    print_metrics_row(rows, fs::path(pred_path).filename().string(), r);
  } else {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(pred_dir))
      if (e.path().extension() == ".mst") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw ContractError("no .mst files under " + pred_dir);
    std::vector<IqaReport> reports(names.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= names.size()) return;
        Tensor pred = load_tensor((fs::path(pred_dir) / names[i]).string());
        Tensor gt = load_tensor((fs::path(gt_dir) / names[i]).string());
        reports[i] = evaluate(pred, gt, 1.0, 0.25, q_window);
      }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<int>(sf.threads, static_cast<int>(names.size()));
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (size_t i = 0; i < names.size(); ++i) print_metrics_row(rows, names[i], reports[i]);
  }
  std::ostringstream full;
  print_metrics_header(full, q_window);
  full << rows.str();
  std::cout << full.str();
  if (!csv_out.empty()) {
    std::ofstream os(csv_out);
    os << full.str();
  }
  return 0;
}

int cmd_prox_demo(const SharedFlags& sf, const std::string& lrms_path, const std::string& pan_path,
                  int scale, int blur_size, double blur_sigma, const std::string& prox,
                  double lambda, double eta, int iters, double tol) {
  fs::create_directories(sf.out);
  Tensor x = load_tensor(lrms_path).astype(DType::f64);
  Tensor y = load_tensor(pan_path).astype(DType::f64);
  DegradationSpec spec = build_spec(static_cast<int>(x.dim(2)), scale, blur_size, blur_sigma,
                                    0.0, 0.0, sf.seed);
  PgdConfig cfg;
  cfg.eta = eta;
  cfg.lambda = lambda;
  cfg.max_iters = iters;
  cfg.tol = tol;
  cfg.prox = prox == "soft" ? ProxKind::soft_threshold : ProxKind::identity;
  Tensor z0 = resample_bicubic(x, scale, 1);
  PgdResult res = pgd_solve(x, y, z0, cfg, spec);
  save_tensor((fs::path(sf.out) / "result.mst").string(), res.z);
  std::ofstream trace((fs::path(sf.out) / "trace.csv").string());
  trace << "iter,objective\n";
  for (size_t i = 0; i < res.objective.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, res.objective[i]);
    trace << buf;
  }
  std::cout << "pgd: " << res.iterations << " iterations, final objective "
            << res.objective.back() << "\n";
  return 0;
}

int cmd_stages(const SharedFlags& sf, const std::string& ckpt, const std::string& lrms_path,
               const std::string& pan_path) {
  fs::create_directories(sf.out);
  ModelParams model = load_model(ckpt);
  Tensor x = load_tensor(lrms_path).astype(model.dtype);
  Tensor y = load_tensor(pan_path).astype(model.dtype);
  std::vector<Tensor> inter;
  unfold_forward(x, y, model, &inter);
  for (size_t i = 0; i < inter.size(); ++i) {
    std::string name;
    if (i == 0) {
      name = "z0";
    } else {
      const size_t stage = (i + 1) / 2;
      name = (i % 2 == 1) ? "z" + std::to_string(stage) + "_data"
                          : "z" + std::to_string(stage);
    }
    const std::string stem = (fs::path(sf.out) / name).string();
    save_tensor(stem + ".mst", inter[i]);
    write_band_previews(stem, inter[i]);
  }
  std::cout << "wrote " << inter.size() << " stage tensors to " << sf.out << "\n";
  return 0;
}

// Self-diagnostics: the oracle suites, printed one PASS/FAIL line each.
int cmd_selfcheck(const SharedFlags& sf) {
  int failures = 0;
  auto report = [&](const char* name, bool ok, double err) {
    std::printf("%s %-14s max_err=%.3g\n", ok ? "PASS" : "FAIL", name, err);
    if (!ok) ++failures;
  };

  {  // fft vs direct double-sum DFT + round trip
    Rng rng(sf.seed ^ 0xfffULL);
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
      const int64_t h = 2 + static_cast<int64_t>(rng.below(7));
      const int64_t w = 2 + static_cast<int64_t>(rng.below(7));
      Tensor x({h, w, 2}, DType::f64);
      for (int64_t i = 0; i < x.numel(); ++i) x.set(i, rng.normal());
      Tensor fre, fim;
      oracle::dft2_direct(x, fre, fim);
      Spectrum s = rfft2(x);
      const int64_t ww = half_width(w);
      for (int64_t u = 0; u < h; ++u)
        for (int64_t v = 0; v < ww; ++v)
          for (int64_t c = 0; c < 2; ++c) {
            worst = std::max(worst, std::abs(s.re.at((u * ww + v) * 2 + c) -
                                             fre.at((u * w + v) * 2 + c)));
            worst = std::max(worst, std::abs(s.im.at((u * ww + v) * 2 + c) -
                                             fim.at((u * w + v) * 2 + c)));
          }
      worst = std::max(worst, max_abs_diff(irfft2(s, w), x));
    }
    report("fft-oracle", worst <= 1e-10, worst);
  }

  {  // S/R adjointness
    Rng rng(sf.seed ^ 0xadadULL);
    DegradationSpec spec = default_spec(3, 4);
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      Tensor z({16, 16, 3}, DType::f64), xr({4, 4, 3}, DType::f64), yr({16, 16, 1}, DType::f64);
      for (int64_t i = 0; i < z.numel(); ++i) z.set(i, rng.normal());
      for (int64_t i = 0; i < xr.numel(); ++i) xr.set(i, rng.normal());
      for (int64_t i = 0; i < yr.numel(); ++i) yr.set(i, rng.normal());
      const double lhs = dot_all(apply_S(z, spec), xr);
      const double rhs = dot_all(z, apply_S_adjoint(xr, spec));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
      const double lhs2 = dot_all(apply_R(z, spec), yr);
      const double rhs2 = dot_all(z, apply_R_adjoint(yr, spec));
      worst = std::max(worst, std::abs(lhs2 - rhs2) / std::max(1.0, std::abs(lhs2)));
    }
    report("adjointness", worst <= 1e-8, worst);
  }

  {  // window attention vs brute force
    Rng rng(sf.seed ^ 0x3aULL);
    LgtConfig cfg;
    cfg.channels = 16;
    cfg.window = 4;
    cfg.heads = 2;
    ParamMap p;
    Rng prng = rng.child(3);
    init_block_params(p, "blk", cfg.channels, cfg, prng, DType::f64);
    for (int i = 0; i < cfg.heads; ++i) {
      Tensor& pos = p["blk.attn.pos" + std::to_string(i)];
      for (int64_t j = 0; j < pos.numel(); ++j) pos.set(j, rng.uniform(-0.5, 0.5));
    }
    Tensor x({8, 8, 8}, DType::f64);
    for (int64_t i = 0; i < x.numel(); ++i) x.set(i, rng.normal());
    Tensor got = wmsa(x, p, "blk.attn", cfg);
    Tensor want = oracle::wmsa_direct(x, p, "blk.attn", cfg.window, cfg.heads);
    const double err = max_abs_diff(got, want);
    report("wmsa-oracle", err <= 1e-6, err);
  }

  {  // gradient check on a small single-stage model
    UnfoldConfig cfg;
    cfg.stages = 1;
    cfg.bands = 2;
    cfg.lgt.channels = 8;
    cfg.lgt.window = 4;
    cfg.lgt.heads = 2;
    ModelParams model = init_model(cfg, sf.seed ^ 0x9cULL, DType::f64);
    Tensor gt = make_scene(16, 16, 2, sf.seed ^ 0x77ULL, DType::f64);
    DegradationSpec spec = default_spec(2, 4);
    SceneTriple t = synth_wald(gt, spec);
    Tensor pred = unfold_forward(t.lrms, t.pan, model);
    Rng rng(sf.seed ^ 0x55ULL);
    Tensor target = pred;
    for (int64_t i = 0; i < target.numel(); ++i) {
      const double margin = rng.uniform(0.1, 0.3) * (rng.below(2) ? 1.0 : -1.0);
      target.set(i, pred.at(i) + margin);
    }
    GradCheckReport rep = grad_check(model, t.lrms, t.pan, target, 1e-5, 6, sf.seed);
    report("grad-check", rep.passed(1e-4), rep.max_rel_err);
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pan-sharpening unfolding network toolbox"};
  app.require_subcommand(1);

  SharedFlags sf;

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic scene triples");
  int count = 8, size = 128, bands = 4, scale = 4, blur_size = 7;
  double blur_sigma = 1.0, noise_x = 0.0, noise_y = 0.0;
  bool png = false;
  add_shared(synth, sf);
  synth->add_option("--count", count, "number of scenes");
  synth->add_option("--size", size, "ground-truth spatial extent");
  synth->add_option("--bands", bands, "spectral bands");
  synth->add_option("--scale", scale, "downsampling factor");
  synth->add_option("--blur-size", blur_size, "blur kernel extent");
  synth->add_option("--blur-sigma", blur_sigma, "blur kernel sigma");
  synth->add_option("--noise-x", noise_x, "lrms noise sigma");
  synth->add_option("--noise-y", noise_y, "pan noise sigma");
  synth->add_flag("--png", png, "also write 8-bit previews");

  // train
  auto* train = app.add_subcommand("train", "train the unfolding network");
  std::string data_dir;
  int stages = 2, channels = 0, window = 8, heads = 2, epochs = 10, max_steps = 0, ckpt_every = 0;
  TrainConfig tc;
  add_shared(train, sf);
  train->add_option("--data", data_dir, "directory of scene triples")->required();
  train->add_option("--stages", stages, "unfolded stage count");
  train->add_option("--channels", channels, "feature channels (0 = 4*bands)");
  train->add_option("--window", window, "attention window");
  train->add_option("--heads", heads, "attention heads");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--max-steps", max_steps, "stop after this many optimizer steps");
  train->add_option("--batch", tc.batch, "batch size");
  train->add_option("--lr0", tc.lr0, "initial learning rate");
  train->add_option("--decay", tc.decay, "learning-rate decay factor");
  train->add_option("--decay-every", tc.decay_every, "epochs per decay step");
  train->add_option("--beta1", tc.beta1, "Adam beta1");
  train->add_option("--beta2", tc.beta2, "Adam beta2");
  train->add_option("--adam-eps", tc.adam_eps, "Adam epsilon");
  train->add_option("--ckpt-every", ckpt_every, "write a checkpoint every N epochs");

  // infer
  auto* infer = app.add_subcommand("infer", "run a checkpoint on one scene");
  std::string ckpt, lrms_path, pan_path, pred_path = "pred.mst";
  add_shared(infer, sf);
  infer->add_option("--ckpt", ckpt, "checkpoint file")->required();
  infer->add_option("--lrms", lrms_path, "low-resolution multispectral input")->required();
  infer->add_option("--pan", pan_path, "panchromatic input")->required();
  infer->add_option("--pred", pred_path, "output tensor path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "image-quality metrics");
  std::string pred_file, gt_file, pred_dir, gt_dir, csv_out;
  int q_window = 32;
  add_shared(eval_cmd, sf);
  eval_cmd->add_option("--pred", pred_file, "prediction tensor");
  eval_cmd->add_option("--gt", gt_file, "reference tensor");
  eval_cmd->add_option("--pred-dir", pred_dir, "directory of predictions");
  eval_cmd->add_option("--gt-dir", gt_dir, "directory of references (matched by name)");
  eval_cmd->add_option("--q-window", q_window, "Q-index window");
  eval_cmd->add_option("--csv", csv_out, "also write the CSV here");

  // prox-demo
  auto* prox = app.add_subcommand("prox-demo", "classical PGD baseline");
  std::string prox_kind = "identity";
  double lambda = 0.0, eta = 0.0, tol = 0.0;
  int iters = 200, pscale = 4, pblur_size = 7;
  double pblur_sigma = 1.0;
  add_shared(prox, sf);
  prox->add_option("--lrms", lrms_path, "low-resolution multispectral input")->required();
  prox->add_option("--pan", pan_path, "panchromatic input")->required();
  prox->add_option("--scale", pscale, "degradation scale");
  prox->add_option("--blur-size", pblur_size, "blur kernel extent");
  prox->add_option("--blur-sigma", pblur_sigma, "blur kernel sigma");
  prox->add_option("--prox", prox_kind, "identity|soft")
      ->check(CLI::IsMember({"identity", "soft"}));
  prox->add_option("--lambda", lambda, "prior weight");
  prox->add_option("--eta", eta, "step size (0 = 1/L by power iteration)");
  prox->add_option("--iters", iters, "max iterations");
  prox->add_option("--tol", tol, "relative-change stopping threshold");

  // stages
  auto* stages_cmd = app.add_subcommand("stages", "dump per-stage intermediates");
  add_shared(stages_cmd, sf);
  stages_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
  stages_cmd->add_option("--lrms", lrms_path, "low-resolution multispectral input")->required();
  stages_cmd->add_option("--pan", pan_path, "panchromatic input")->required();

  // selfcheck
  auto* selfcheck = app.add_subcommand("selfcheck", "run the oracle suites");
  add_shared(selfcheck, sf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!sf.config.empty()) {
      apply_config_file(cmd, sf.config);
    }
    if (cmd == synth)
      return cmd_synth(sf, count, size, bands, scale, blur_size, blur_sigma, noise_x, noise_y,
                       png);
    if (cmd == train)
      return cmd_train(sf, data_dir, stages, channels, window, heads, epochs, max_steps, tc,
                       ckpt_every);
    if (cmd == infer) return cmd_infer(ckpt, lrms_path, pan_path, pred_path);
    if (cmd == eval_cmd) {
      if (pred_file.empty() == pred_dir.empty())
        throw ContractError("eval: give either --pred/--gt or --pred-dir/--gt-dir");
      if (!pred_file.empty() && gt_file.empty()) throw ContractError("eval: --gt is required");
      if (!pred_dir.empty() && gt_dir.empty()) throw ContractError("eval: --gt-dir is required");
      return cmd_eval(sf, pred_file, gt_file, pred_dir, gt_dir, q_window, csv_out);
    }
    if (cmd == prox)
      return cmd_prox_demo(sf, lrms_path, pan_path, pscale, pblur_size, pblur_sigma, prox_kind,
                           lambda, eta, iters, tol);
    if (cmd == stages_cmd) return cmd_stages(sf, ckpt, lrms_path, pan_path);
    if (cmd == selfcheck) return cmd_selfcheck(sf);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
