// Copyright (c) the Scaleform authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// scaleform: degrade | train | restore | eval | gradcheck | inspect-grid | synth
//
// Exit codes: 0 ok, 1 usage or input error, 2 numeric failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scaleform/checkpoint.hpp"
#include "scaleform/config.hpp"
#include "scaleform/degrade.hpp"
#include "scaleform/errors.hpp"
#include "scaleform/ffup.hpp"
#include "scaleform/gradcheck_suite.hpp"
#include "scaleform/image_io.hpp"
#include "scaleform/objective.hpp"
#include "scaleform/synth.hpp"
#include "scaleform/trainer.hpp"

using namespace scaleform;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

// Config assembled from --config, then SCALEFORM_SEED, then explicit flags.
struct ConfigFlags {
  std::string path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("-c,--config", path, "key = value config file");
    app->add_option("--set", sets, "override a config key, e.g. --set train.batch=4");
    app->add_option("--seed", seed, "random seed (falls back to SCALEFORM_SEED)");
  }

  RunConfig resolve(const ConfigMap& extra = {}) const {
    ConfigMap map;
    if (!path.empty()) map = ConfigMap::load(path);
    if (const char* env = std::getenv("SCALEFORM_SEED"); env && !seed) map.set("train.seed", env);
    if (seed) map.set("train.seed", std::to_string(*seed));
    map.merge(extra);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      map.set(s.substr(0, eq), s.substr(eq + 1));
    }
    RunConfig rc;
    rc.apply(map);
    rc.net.link();
    return rc;
  }
};

std::vector<fs::path> inputs_of(const fs::path& p) {
  if (fs::is_directory(p)) {
    auto files = io::list_images(p);
    if (files.empty()) throw UsageError("no .ppm or .ftns images in " + p.string());
    return files;
  }
  if (!fs::exists(p)) throw UsageError(p.string() + " does not exist");
  return {p};
}

// Output path for `in` when `out` names a directory (or there are many inputs).
fs::path output_for(const fs::path& in, const fs::path& out, bool many, const std::string& ext) {
  if (many || fs::is_directory(out)) return out / (in.stem().string() + ext);
  return out;
}

ffup::ScalePair parse_scale(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) return ffup::ScalePair::uniform(std::stod(text));
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::logic_error&) {
    throw UsageError("bad scale '" + text + "' (expected S or SH,SV)");
  }
}

std::string fmt(double v, const char* f = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_synth(const fs::path& out, std::size_t count, std::size_t size, std::uint64_t seed) {
  fs::create_directories(out);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "face_%03zu.ppm", i);
    io::write_ppm(out / name, synth::face(size, seed, i));
  }
  std::cout << "wrote " << count << " faces to " << out.string() << "\n";
  return kExitOk;
}

int cmd_degrade(const RunConfig& rc, const fs::path& in, const fs::path& out, const std::string& manifest) {
  const auto files = inputs_of(in);
  const bool many = files.size() > 1 || fs::is_directory(in);
  if (many) fs::create_directories(out);
  const auto ranges = training_ranges(rc.train);
  degrade::DegradeOptions options;
  options.resize_back = rc.train.resize_back;
  std::ofstream log;
  if (!manifest.empty()) {
    log.open(manifest);
    if (!log) throw UsageError("cannot write manifest " + manifest);
    log << "file\tsigma\tr\tdelta\tq\tbrightness\tcontrast\tsaturation\tseed\n";
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Tensor hq = io::load_image(files[i]);
    const auto spec = degrade::sample_spec(ranges, rc.train.seed, i);
    const auto d = degrade::degrade(hq, spec, options);
    const fs::path dst = output_for(files[i], out, many, files[i].extension().string());
    io::save_image(dst, d.lq);
    if (log) log << dst.filename().string() << "\t" << degrade::manifest_fields(d) << "\n";
  }
  std::cout << "degraded " << files.size() << " image(s)\n";
  return kExitOk;
}

int cmd_train(const RunConfig& rc, const fs::path& data, const fs::path& out, const std::string& resume) {
  std::vector<Tensor> hq;
  for (const auto& f : io::list_images(data)) hq.push_back(io::load_image(f));
  if (hq.empty()) throw UsageError("training dataset " + data.string() + " is empty");
  fs::create_directories(out);

  std::optional<Trainer> trainer;
  if (resume.empty()) {
    trainer.emplace(rc, hq);
  } else {
    trainer.emplace(Trainer::resume(load_checkpoint(resume), hq));
  }
  const fs::path log_path = out / "loss_log.tsv";
  std::ofstream log(log_path, trainer->iteration() == 0 ? std::ios::trunc : std::ios::app);
  if (!log) throw UsageError("cannot write " + log_path.string());
  if (trainer->iteration() == 0) log << loss_log_header() << "\n";

  const auto every = trainer->config().train.checkpoint_every;
  const auto t0 = std::chrono::steady_clock::now();
  trainer->run(trainer->config().train.total_iters, [&](const LossRow& row) {
    log << row.tsv() << "\n";
    const std::uint64_t done = row.iter + 1;
    if (every && done % every == 0 && done < trainer->config().train.total_iters) {
      char name[40];
      std::snprintf(name, sizeof name, "checkpoint_%06llu.ffck", static_cast<unsigned long long>(done));
      log.flush();
      save_checkpoint(out / name, trainer->checkpoint());
    }
    if (done % 100 == 0) {
      std::cerr << "iter " << done << " l_total " << fmt(row.l_total, "%.6g") << " l_rec "
                << fmt(row.l_rec, "%.6g") << "\n";
    }
  });
  log.flush();
  save_checkpoint(out / "checkpoint.ffck", trainer->checkpoint());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "iterations\t" << trainer->iteration() << "\n"
            << "train_l1\t" << fmt(trainer->train_l1(), "%.17g") << "\n"
            << "seconds\t" << fmt(secs, "%.1f") << "\n";
  return kExitOk;
}

int cmd_restore(const std::string& checkpoint, bool identity, const fs::path& in, const fs::path& out,
                const std::string& scale_text) {
  Model model;
  if (identity) {
    model.config.link();
    model.params = NetParams::identity(model.config);
  } else {
    if (checkpoint.empty()) throw UsageError("restore needs --checkpoint or --identity");
    model = load_model(checkpoint);
  }
  const auto scale = parse_scale(scale_text);
  const auto files = inputs_of(in);
  const bool many = files.size() > 1 || fs::is_directory(in);
  if (many) fs::create_directories(out);
  for (const auto& f : files) {
    const auto r = restore(model, io::load_image(f), scale,
                           [](const std::string& w) { std::cerr << "warning: " << w << "\n"; });
    const fs::path dst = output_for(f, out, many, f.extension().string());
    io::save_image(dst, r.image);
    std::cout << dst.string() << "\t" << r.image.dim(2) << "x" << r.image.dim(1) << "\n";
  }
  return kExitOk;
}

int cmd_eval(const fs::path& restored, const fs::path& reference) {
  const auto files = inputs_of(restored);
  const bool many = files.size() > 1 || fs::is_directory(restored);
  double psnr_sum = 0, ssim_sum = 0;
  std::cout << "file\tpsnr\tssim\n";
  for (const auto& f : files) {
    fs::path ref = reference;
    if (many || fs::is_directory(reference)) ref = reference / f.filename();
    if (!fs::exists(ref)) throw UsageError("no reference image " + ref.string());
    const Tensor a = io::load_image(f), b = io::load_image(ref);
    if (a.shape() != b.shape()) throw UsageError("size mismatch between " + f.string() + " and " + ref.string());
    const double p = objective::psnr(a, b), s = objective::ssim(a, b);
    psnr_sum += p;
    ssim_sum += s;
    std::cout << f.filename().string() << "\t" << fmt(p, "%.4f") << "\t" << fmt(s, "%.6f") << "\n";
  }
  const double n = double(files.size());
  std::cout << "mean\t" << fmt(psnr_sum / n, "%.4f") << "\t" << fmt(ssim_sum / n, "%.6f") << "\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& selector, std::uint64_t seed, std::size_t seeds) {
  std::size_t failed = 0;
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  run_gradcheck_suite(selector, seed, seeds, [&](const SuiteResult& r) {
    worst = std::max(worst, r.report.max_error);
    if (!r.report.passed()) {
      ++failed;
      std::cout << "FAIL\t" << r.module << "/" << r.name << "\tseed " << r.seed << "\t"
                << fmt(r.report.max_error, "%.3e");
      for (const auto& o : r.report.offenders()) std::cout << "\t" << o;
      std::cout << "\n";
    }
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (failed ? "FAILED" : "passed") << "\tmax_rel_err " << fmt(worst, "%.3e") << "\t"
            << fmt(secs, "%.1f") << " s\n";
  return failed ? kExitNumeric : kExitOk;
}

int cmd_inspect_grid(std::size_t h, std::size_t w, const std::string& scale_text) {
  const auto scale = parse_scale(scale_text);
  scale.validate();
  const std::size_t oh = ffup::output_extent(h, scale.vertical);
  const std::size_t ow = ffup::output_extent(w, scale.horizontal);
  const auto grid = ffup::build_grid(oh, ow, scale);
  std::cout << "axis\tindex\tprojected\trelative\n";
  for (std::size_t x = 0; x < ow; ++x) {
    std::cout << "x\t" << x << "\t" << fmt(grid.x_prime()[x], "%.17g") << "\t" << fmt(grid.rx()[x], "%.17g") << "\n";
  }
  for (std::size_t y = 0; y < oh; ++y) {
    std::cout << "y\t" << y << "\t" << fmt(grid.y_prime()[y], "%.17g") << "\t" << fmt(grid.ry()[y], "%.17g") << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-aware blind face restoration toolkit"};
  app.require_subcommand(1);
  int code = kExitOk;

  auto* synth_cmd = app.add_subcommand("synth", "write procedural toy faces");
  std::string synth_out;
  std::size_t synth_count = 8, synth_size = 32;
  ConfigFlags synth_flags;
  synth_cmd->add_option("-o,--output", synth_out, "output directory")->required();
  synth_cmd->add_option("-n,--count", synth_count, "number of faces");
  synth_cmd->add_option("--size", synth_size, "edge length in pixels");
  synth_flags.add(synth_cmd);

  auto* degrade_cmd = app.add_subcommand("degrade", "synthesise low-quality inputs");
  std::string deg_in, deg_out, deg_manifest, deg_scale;
  ConfigFlags deg_flags;
  degrade_cmd->add_option("-i,--input", deg_in, "image or directory")->required();
  degrade_cmd->add_option("-o,--output", deg_out, "output image or directory")->required();
  degrade_cmd->add_option("--manifest", deg_manifest, "TSV of the sampled degradation per image");
  degrade_cmd->add_option("--scale", deg_scale, "downsample range A or A,B (train.scale)");
  bool deg_resize_back = false;
  degrade_cmd->add_flag("--resize-back", deg_resize_back, "resize the LQ back to the input size");
  deg_flags.add(degrade_cmd);

  auto* train_cmd = app.add_subcommand("train", "train on a directory of HQ images");
  std::string train_data, train_out, train_resume;
  std::optional<std::uint64_t> train_iters, train_every;
  std::optional<std::size_t> train_batch;
  ConfigFlags train_flags;
  train_cmd->add_option("-d,--data", train_data, "directory of HQ images")->required();
  train_cmd->add_option("-o,--output", train_out, "run directory")->required();
  train_cmd->add_option("--resume", train_resume, "continue from a checkpoint");
  train_cmd->add_option("--iters", train_iters, "total iterations");
  train_cmd->add_option("--batch", train_batch, "batch size");
  train_cmd->add_option("--checkpoint-every", train_every, "save a checkpoint every N iterations");
  bool train_resize_back = false;
  train_cmd->add_flag("--resize-back", train_resize_back, "train on LQ resized back to the GT size");
  train_flags.add(train_cmd);

  auto* restore_cmd = app.add_subcommand("restore", "restore images at a given scale");
  std::string res_ck, res_in, res_out, res_scale = "1";
  bool res_identity = false;
  restore_cmd->add_option("--checkpoint", res_ck, "trained checkpoint");
  restore_cmd->add_flag("--identity", res_identity, "use the pass-through parameters");
  restore_cmd->add_option("-i,--input", res_in, "image or directory")->required();
  restore_cmd->add_option("-o,--output", res_out, "output image or directory")->required();
  restore_cmd->add_option("-s,--scale", res_scale, "S or SH,SV");

  auto* eval_cmd = app.add_subcommand("eval", "PSNR and SSIM against references");
  std::string eval_in, eval_ref;
  eval_cmd->add_option("-i,--input", eval_in, "restored image or directory")->required();
  eval_cmd->add_option("-r,--reference", eval_ref, "reference image or directory")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string grad_sel = "all";
  std::size_t grad_seeds = 10;
  std::optional<std::uint64_t> grad_seed;
  std::string selectors = "all";
  for (const auto& m : gradcheck_modules()) selectors += "|" + m;
  grad_cmd->add_option("module", grad_sel, selectors);
  grad_cmd->add_option("--seed", grad_seed, "first seed (falls back to SCALEFORM_SEED)");
  grad_cmd->add_option("--seeds", grad_seeds, "number of seeds");

  auto* grid_cmd = app.add_subcommand("inspect-grid", "print projected coordinates and relative distances");
  std::size_t grid_h = 4, grid_w = 4;
  std::string grid_scale = "2";
  grid_cmd->add_option("--height", grid_h, "LR height");
  grid_cmd->add_option("--width", grid_w, "LR width");
  grid_cmd->add_option("-s,--scale", grid_scale, "S or SH,SV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      code = cmd_synth(synth_out, synth_count, synth_size, synth_flags.resolve().train.seed);
    } else if (degrade_cmd->parsed()) {
      ConfigMap extra;
      if (!deg_scale.empty()) extra.set("train.scale", deg_scale);
      if (deg_resize_back) extra.set("train.resize_back", "true");
      code = cmd_degrade(deg_flags.resolve(extra), deg_in, deg_out, deg_manifest);
    } else if (train_cmd->parsed()) {
      ConfigMap extra;
      if (train_iters) extra.set("train.iters", std::to_string(*train_iters));
      if (train_batch) extra.set("train.batch", std::to_string(*train_batch));
      if (train_every) extra.set("train.checkpoint_every", std::to_string(*train_every));
      if (train_resize_back) extra.set("train.resize_back", "true");
      const RunConfig rc = train_flags.resolve(extra);
      rc.train.validate();
      code = cmd_train(rc, train_data, train_out, train_resume);
    } else if (restore_cmd->parsed()) {
      code = cmd_restore(res_ck, res_identity, res_in, res_out, res_scale);
    } else if (eval_cmd->parsed()) {
      code = cmd_eval(eval_in, eval_ref);
    } else if (grad_cmd->parsed()) {
      std::uint64_t seed = 0;
      if (grad_seed) {
        seed = *grad_seed;
      } else if (const char* env = std::getenv("SCALEFORM_SEED")) {
        seed = std::strtoull(env, nullptr, 10);
      }
      code = cmd_gradcheck(grad_sel, seed, grad_seeds);
    } else if (grid_cmd->parsed()) {
      code = cmd_inspect_grid(grid_h, grid_w, grid_scale);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return code;
}
