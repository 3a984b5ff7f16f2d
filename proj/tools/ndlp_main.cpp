// Copyright 2026 The NDLP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ndlp: synthesize, train, infer, evaluate, gradcheck.

#include <Eigen/Core>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ndlp/config.hpp"
#include "ndlp/error.hpp"
#include "ndlp/gradcheck.hpp"
#include "ndlp/image.hpp"
#include "ndlp/metrics.hpp"
#include "ndlp/synth.hpp"
#include "ndlp/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

// Parses "key=value", reading the value as JSON when possible.
json parse_overrides(const std::vector<std::string>& items) {
  json flat = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ndlp::ConfigError("--set expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    flat[key] = value.is_discarded() ? json(text) : value;
  }
  return flat;
}

ndlp::RunConfig resolve(const Common& c) {
  ndlp::RunConfig cfg;
  if (!c.config_path.empty()) cfg = ndlp::RunConfig::load(c.config_path);
  cfg.merge(parse_overrides(c.overrides));
  return cfg;
}

void echo_config(const ndlp::RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream os(out_dir / "config.json");
  if (!os) throw ndlp::IoError("cannot write " + (out_dir / "config.json").string());
  os << cfg.to_json().dump(2) << "\n";
}

void apply_threads() {
  if (const char* env = std::getenv("NDLP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  } else {
    Eigen::setNbThreads(1);
  }
}

int cmd_synth(const Common& c, const std::string& clean_dir, const std::string& out,
              std::optional<std::uint64_t> seed, bool force) {
  ndlp::RunConfig cfg = resolve(c);
  cfg.paths.clean_dir = clean_dir;
  cfg.paths.out = out;
  if (seed) cfg.synth.seed = *seed;
  cfg.validate();
  const auto index = ndlp::build_dataset(clean_dir, out, cfg.synth, force);
  echo_config(cfg, out);
  std::cout << "synth: " << index.ids.size() << " pairs (" << index.train.size() << " train, "
            << index.test.size() << " test) -> " << out << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& data, const std::string& out,
              const std::string& resume, bool disable_ppm, bool disable_eca,
              std::optional<std::uint64_t> seed) {
  std::optional<ndlp::TrainState> state;
  ndlp::RunConfig cfg;
  if (!resume.empty()) {
    state.emplace(ndlp::load_state(resume));
    cfg = state->config;
    if (!c.overrides.empty() || !c.config_path.empty() || disable_ppm || disable_eca || seed)
      std::cerr << "train: resuming, configuration is taken from " << resume << "\n";
  } else {
    cfg = resolve(c);
    if (disable_ppm) cfg.net.disable_ppm = true;
    if (disable_eca) cfg.net.disable_eca = true;
    if (seed) cfg.optim.seed = *seed;
  }
  cfg.paths.data = data;
  cfg.paths.out = out;
  cfg.paths.resume = resume;
  cfg.validate();
  if (!state) state.emplace(ndlp::TrainState::create(cfg));
  state->config.paths = cfg.paths;

  const auto index = ndlp::load_manifest(data);
  ndlp::Dataset ds{ndlp::load_pairs(data, index.train), ndlp::load_pairs(data, index.test)};
  echo_config(cfg, out);
  std::cout << "train: " << state->net.parameters().count() << " parameters"
            << (cfg.net.disable_ppm ? " [ppm disabled]" : "")
            << (cfg.net.disable_eca ? " [eca disabled]" : "") << ", " << ds.train.size()
            << " train / " << ds.test.size() << " test pairs, iterations " << state->t << ".."
            << state->total << std::endl;
  ndlp::train(*state, ds, out, &std::cout);
  std::cout << "train: wrote " << (fs::path(out) / "final.ndlp").string() << "\n";
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& in, const std::string& out) {
  const ndlp::TrainState state = ndlp::load_state(ckpt);
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(in)) {
    fs::create_directories(out);
    for (const auto& e : fs::directory_iterator(in))
      if (e.is_regular_file() && e.path().extension() == ".png")
        jobs.emplace_back(e.path(), fs::path(out) / e.path().filename());
    std::sort(jobs.begin(), jobs.end());
    if (jobs.empty()) throw ndlp::IoError("infer: no .png files in " + in);
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    jobs.emplace_back(in, out);
  }
  for (const auto& [src, dst] : jobs) {
    ndlp::save_png(ndlp::derain(state.net, ndlp::load_png(src)), dst);
    std::cout << src.string() << " -> " << dst.string() << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& pred, const std::string& gt, const std::string& out) {
  const auto report = ndlp::eval_dir(pred, gt);
  const std::string csv = report.to_csv();
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os(out);
    if (!os) throw ndlp::IoError("cannot write " + out);
    os << csv;
    std::cout << "eval: mean psnr " << report.mean_psnr << " ssim " << report.mean_ssim << "\n";
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double tol) {
  const auto cases = ndlp::run_gradcheck_suite(seed, tol);
  int failed = 0;
  for (const auto& c : cases) {
    std::cout << (c.report.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << c.op
              << std::setw(22) << c.shape << " max_rel_err " << std::scientific
              << std::setprecision(3) << c.report.worst << std::defaultfloat << "\n";
    failed += c.report.passed ? 0 : 1;
  }
  std::cout << cases.size() - failed << "/" << cases.size() << " passed at tolerance " << tol
            << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nighttime deraining toolkit"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config with flat dotted keys")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", common.overrides, "Override a config key, e.g. optim.iterations=50");
  };

  std::string clean_dir, out, data, resume, ckpt, in, pred, gt;
  std::optional<std::uint64_t> seed;
  bool force = false, disable_ppm = false, disable_eca = false;
  double tol = ndlp::kGradCheckTolerance;
  std::uint64_t gc_seed = 7;

  auto* synth = app.add_subcommand("synth", "Build a paired rain dataset from clean PNGs");
  synth->add_option("--clean-dir", clean_dir)->required();
  synth->add_option("--out", out)->required();
  synth->add_option("--seed", seed);
  synth->add_flag("--force", force, "Overwrite an existing dataset");
  add_common(synth);

  auto* train = app.add_subcommand("train", "Train on a synthesized dataset");
  train->add_option("--data", data)->required();
  train->add_option("--out", out)->required();
  train->add_option("--resume", resume)->check(CLI::ExistingFile);
  train->add_option("--seed", seed);
  train->add_flag("--disable-ppm", disable_ppm);
  train->add_flag("--disable-eca", disable_eca);
  add_common(train);

  auto* infer = app.add_subcommand("infer", "Derain a PNG or a directory of PNGs");
  infer->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  infer->add_option("--in", in)->required()->check(CLI::ExistingPath);
  infer->add_option("--out", out)->required();

  auto* eval = app.add_subcommand("eval", "PSNR/SSIM of predictions against ground truth");
  eval->add_option("--pred", pred)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt", gt)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", out, "Write the CSV here instead of stdout");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every op");
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--tol", tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  apply_threads();
  try {
    if (*synth) return cmd_synth(common, clean_dir, out, seed, force);
    if (*train) return cmd_train(common, data, out, resume, disable_ppm, disable_eca, seed);
    if (*infer) return cmd_infer(ckpt, in, out);
    if (*eval) return cmd_eval(pred, gt, out);
    if (*gradcheck) return cmd_gradcheck(gc_seed, tol);
  } catch (const ndlp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
