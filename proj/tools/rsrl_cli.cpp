/* Copyright 2026 The RSRL Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// rsrl: command-line front end.
//
//   rsrl gen-synthetic --config synth.json --out DIR [--seed S]
//   rsrl train-rsrl    --config run.json   --out DIR [--seed S] [--select-on-test]
//   rsrl evaluate      --checkpoint FILE --manifest FILE [--out FILE]
//   rsrl highlight     --checkpoint FILE --previous FILE --image FILE --out PREFIX
//   rsrl highlight     --run DIR --round I [--lag K] --image FILE --out PREFIX
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime/data error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsrl/rsrl.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(const rsrl::Error& e) {
  return e.kind() == rsrl::ErrorKind::kBadConfig ? kExitUsage : kExitRuntime;
}

int gen_synthetic(const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed) {
  rsrl::SynthConfig cfg = config.empty() ? rsrl::default_synth_config()
                                         : rsrl::synth_config_from_json(rsrl::read_json_file(config));
  if (seed) cfg.seed = *seed;
  const auto stats = rsrl::export_synthetic(cfg, out);
  const auto top = rsrl::select_majority_classes(stats);
  std::printf("wrote %zu samples to %s (majority share %.4f)\n", stats.total,
              out.string().c_str(), stats.share(top));
  return 0;
}

int train_rsrl(const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed,
               bool select_on_test) {
  rsrl::RunConfig cfg = rsrl::load_run_config(config);
  if (seed) cfg.seed = *seed;
  if (select_on_test) cfg.selection = rsrl::Selection::kTest;
  const auto outcome = rsrl::run_experiment(cfg, out);
  const auto& rec = outcome.result.history.at(outcome.result.best);
  std::printf("best round %u (total F %.6f)\n", outcome.result.best, rec.eval.total_f);
  std::cout << rsrl::canonical_dump(rsrl::to_json(rec.eval)) << '\n';
  return 0;
}

int evaluate(const fs::path& checkpoint, const fs::path& manifest, const fs::path& out) {
  const std::string json = rsrl::evaluate_manifest(checkpoint, manifest);
  std::cout << json << '\n';
  if (!out.empty()) rsrl::write_text(out, json + "\n");
  return 0;
}

int highlight(fs::path current, fs::path previous, const fs::path& run, std::optional<unsigned> round,
              unsigned lag, const fs::path& image, const fs::path& out) {
  if (!run.empty()) {
    if (!round) throw rsrl::Error(rsrl::ErrorKind::kBadConfig, "--run needs --round");
    if (lag == 0 || lag > *round) {
      throw rsrl::Error(rsrl::ErrorKind::kBadConfig, "--lag must be in [1, round]");
    }
    current = run / "checkpoints" / rsrl::checkpoint_name(*round);
    previous = run / "checkpoints" / rsrl::checkpoint_name(*round - lag);
  }
  if (current.empty() || previous.empty()) {
    throw rsrl::Error(rsrl::ErrorKind::kBadConfig,
                      "need --checkpoint and --previous, or --run and --round");
  }
  if (!fs::exists(image)) {
    throw rsrl::Error(rsrl::ErrorKind::kIoError, "image not found: " + image.string());
  }
  const rsrl::Checkpoint a = rsrl::load_checkpoint(current);
  const rsrl::Checkpoint b = rsrl::load_checkpoint(previous);
  if (a.spec == b.spec && a.params == b.params) {
    std::fprintf(stderr, "warning: both checkpoints hold identical parameters; "
                         "the difference map is all zero\n");
  }
  const auto result = rsrl::extract_highlight(a, b, rsrl::read_image(image));
  fs::path pgm = out, sidecar = out;
  pgm += ".pgm";
  sidecar += ".json";
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  rsrl::export_highlight(result, pgm);
  rsrl::write_text(sidecar, rsrl::canonical_dump(rsrl::to_json(result)) + "\n");
  std::printf("channel %zu, wrote %s and %s\n", result.channel, pgm.string().c_str(),
              sidecar.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repetitive self-revised learning for imbalanced image classification"};
  app.require_subcommand(1);

  fs::path config, out, checkpoint, previous, manifest, image, run;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> round;
  unsigned lag = 1;
  bool select_on_test = false;

  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic score-labeled dataset");
  gen->add_option("--config", config, "synthetic generator config (JSON)");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--seed", seed, "override the generator seed");

  auto* train = app.add_subcommand("train-rsrl", "run repetitive self-revised training");
  train->add_option("--config", config, "run config (JSON)")->required();
  train->add_option("--out", out, "run directory")->required();
  train->add_option("--seed", seed, "override the run seed");
  train->add_flag("--select-on-test", select_on_test, "select the best round on the test split");

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a manifest");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--manifest", manifest, "manifest CSV")->required();
  eval->add_option("--out", out, "also write the JSON summary here");

  auto* hl = app.add_subcommand("highlight", "extract a feature-difference highlight map");
  hl->add_option("--checkpoint", checkpoint, "current checkpoint (round I)");
  hl->add_option("--previous", previous, "earlier checkpoint (round I-k)");
  hl->add_option("--run", run, "run directory to take checkpoints from");
  hl->add_option("--round", round, "current round when using --run");
  hl->add_option("--lag", lag, "round lag k when using --run")->check(CLI::PositiveNumber);
  hl->add_option("--image", image, "input image (PGM or raster)")->required();
  hl->add_option("--out", out, "output prefix; writes PREFIX.pgm and PREFIX.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return gen_synthetic(config, out, seed);
    if (*train) return train_rsrl(config, out, seed, select_on_test);
    if (*eval) return evaluate(checkpoint, manifest, out);
    if (*hl) return highlight(checkpoint, previous, run, round, lag, image, out);
  } catch (const rsrl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
