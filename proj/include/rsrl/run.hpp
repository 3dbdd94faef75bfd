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

#ifndef RSRL_RUN_HPP
#define RSRL_RUN_HPP

// Experiment orchestration behind the command-line tool: run configuration,
// dataset preparation and on-disk artifacts.
//
// Run directory layout:
//   config.json              resolved configuration (reproduces the run)
//   history.jsonl            one round record per line
//   checkpoints/round_NNN.ckpt
//   best_round.json          selected round and its evaluation

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>

#include "rsrl/canonical_json.hpp"
#include "rsrl/checkpoint_io.hpp"
#include "rsrl/dataset.hpp"
#include "rsrl/engine.hpp"
#include "rsrl/error.hpp"
#include "rsrl/highlight.hpp"
#include "rsrl/metrics.hpp"

namespace rsrl {

enum class Selection { kValidation, kTest };

struct RunConfig {
  // Exactly one dataset source.
  std::optional<std::filesystem::path> manifest;
  std::size_t manifest_classes = 8;
  std::optional<SynthConfig> synthetic;

  double train_fraction = 0.8;
  double validation_fraction = 0.2;  // carved from the training split
  Selection selection = Selection::kValidation;
  std::uint64_t seed = 0;
  RsrlConfig rsrl;
  std::optional<NetworkSpec> network;

  void validate() const {
    if (manifest.has_value() == synthetic.has_value()) {
      raise(ErrorKind::kBadConfig, "run config needs exactly one of dataset.manifest / dataset.synthetic");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      raise(ErrorKind::kBadConfig, "train_fraction must be in (0, 1)");
    }
    if (selection == Selection::kValidation &&
        !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      raise(ErrorKind::kBadConfig, "validation_fraction must be in (0, 1)");
    }
    if (synthetic) synthetic->validate();
    rsrl.validate();
    if (network) network->validate();
  }
};

inline Json to_json(const RunConfig& c) {
  Json dataset;
  if (c.manifest) {
    dataset = Json{{"manifest", c.manifest->string()}, {"classes", c.manifest_classes}};
  } else if (c.synthetic) {
    dataset = Json{{"synthetic", to_json(*c.synthetic)}};
  }
  Json schedule = Json::array();
  for (const auto& s : c.rsrl.schedule) {
    schedule.push_back({{"from_round", s.from_round}, {"k", s.k}});
  }
  Json j{{"dataset", dataset},
         {"train_fraction", c.train_fraction},
         {"validation_fraction", c.validation_fraction},
         {"selection", c.selection == Selection::kTest ? "test" : "validation"},
         {"seed", c.seed},
         {"rsrl",
          {{"max_rounds", c.rsrl.max_rounds},
           {"epochs", c.rsrl.train.epochs},
           {"batch_size", c.rsrl.train.batch_size},
           {"learning_rate", c.rsrl.train.learning_rate},
           {"membership", to_string(c.rsrl.membership)},
           {"schedule", schedule}}}};
  if (c.network) j["network"] = to_json(*c.network);
  return j;
}

/// Parses a run configuration. Relative manifest paths resolve against
/// `base_dir`. Missing keys take the defaults (30 rounds, 5 epochs, K = 0.9
/// then 0.95 from round 3).
inline RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  try {
    RunConfig c;
    const Json& ds = j.at("dataset");
    if (ds.contains("manifest")) {
      std::filesystem::path p = ds.at("manifest").get<std::string>();
      c.manifest = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      c.manifest_classes = ds.value("classes", c.manifest_classes);
    }
    if (ds.contains("synthetic")) c.synthetic = synth_config_from_json(ds.at("synthetic"));
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    const auto sel = j.value("selection", std::string("validation"));
    if (sel != "validation" && sel != "test") {
      raise(ErrorKind::kBadConfig, "selection must be 'validation' or 'test'");
    }
    c.selection = sel == "test" ? Selection::kTest : Selection::kValidation;
    c.seed = j.value("seed", c.seed);
    if (j.contains("rsrl")) {
      const Json& r = j.at("rsrl");
      c.rsrl.max_rounds = r.value("max_rounds", c.rsrl.max_rounds);
      c.rsrl.train.epochs = r.value("epochs", c.rsrl.train.epochs);
      c.rsrl.train.batch_size = r.value("batch_size", c.rsrl.train.batch_size);
      c.rsrl.train.learning_rate = r.value("learning_rate", c.rsrl.train.learning_rate);
      c.rsrl.membership = membership_from_string(r.value("membership", std::string("sigmoid")));
      if (r.contains("schedule")) {
        c.rsrl.schedule.clear();
        for (const Json& s : r.at("schedule")) {
          c.rsrl.schedule.push_back(
              {s.at("from_round").get<std::uint32_t>(), s.at("k").get<Thresholds>()});
        }
      }
    }
    if (j.contains("network")) c.network = network_from_json(j.at("network"));
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    raise(ErrorKind::kBadConfig, std::string("run config: ") + e.what());
  }
}

inline Json read_json_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::kIoError, "no such file: " + path.string());
  try {
    return Json::parse(detail::read_file(path));
  } catch (const Json::exception& e) {
    raise(ErrorKind::kBadConfig, path.string() + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path), path.parent_path());
}

/// Train / evaluation / test sets for a run.
struct PreparedData {
  Dataset train;  // set that RSRL revises
  Dataset eval;   // model-selection set
  Dataset test;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  cfg.validate();
  Dataset all = cfg.manifest ? load_manifest(*cfg.manifest, cfg.manifest_classes)
                             : generate_synthetic(*cfg.synthetic).data;
  auto [train_set, test_set] = split(all, cfg.train_fraction, stream_key(cfg.seed, 0x5431));
  if (cfg.selection == Selection::kTest) return {train_set, test_set, test_set};
  auto [fit, validation] =
      split(train_set, 1.0 - cfg.validation_fraction, stream_key(cfg.seed, 0x5641));
  return {std::move(fit), std::move(validation), std::move(test_set)};
}

struct RunOutcome {
  RsrlResult result;
  EvalSummary best_test;
  double best_train_accuracy = 0.0;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, text);
}

/// Executes a full run and writes its artifacts to `out_dir`. History and
/// checkpoints are flushed round by round, so an aborted run leaves the
/// completed rounds on disk.
inline RunOutcome run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "checkpoints");
  write_text(out_dir / "config.json", canonical_dump(to_json(cfg)) + "\n");

  const PreparedData data = prepare_data(cfg);
  if (data.train.empty()) raise(ErrorKind::kEmptyDataset, "training split is empty");
  const NetworkSpec spec = cfg.network ? *cfg.network
                                       : default_network(data.train.items.front().pixels.shape(),
                                                         data.train.classes);
  RsrlConfig rc = cfg.rsrl;
  rc.seed = cfg.seed;

  std::ofstream history(out_dir / "history.jsonl", std::ios::binary | std::ios::trunc);
  if (!history) raise(ErrorKind::kIoError, "cannot write " + (out_dir / "history.jsonl").string());
  auto observer = [&](const RoundRecord& rec, const Checkpoint& net) {
    save_checkpoint(net, out_dir / "checkpoints" / rec.checkpoint);
    history << canonical_dump(to_json(rec)) << '\n';
    history.flush();
  };

  RunOutcome out{rsrl_run(data.train, data.eval, spec, rc, observer), {}, 0.0};
  const Checkpoint& best = out.result.best_checkpoint();
  out.best_test = evaluate(best, data.test);
  out.best_train_accuracy = evaluate(best, data.train).accuracy;
  const RoundRecord& rec = out.result.history.at(out.result.best);
  Json marker{{"best_round", out.result.best},
              {"checkpoint", "checkpoints/" + rec.checkpoint},
              {"selection", cfg.selection == Selection::kTest ? "test" : "validation"},
              {"selection_eval", to_json(rec.eval)},
              {"test_eval", to_json(out.best_test)},
              {"train_accuracy", out.best_train_accuracy}};
  write_text(out_dir / "best_round.json", canonical_dump(marker) + "\n");
  return out;
}

/// Writes a synthetic dataset (manifest, PGM images, stats.json and the
/// resolved generator config) into `out_dir`.
inline DatasetStats export_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  const SyntheticDataset syn = generate_synthetic(cfg);
  write_manifest(syn.data, out_dir);
  const DatasetStats stats = syn.data.stats();
  const auto top = select_majority_classes(stats);
  Json j = to_json(stats);
  j["majority_scores"] = top;
  j["majority_share"] = stats.share(top);
  write_text(out_dir / "stats.json", canonical_dump(j) + "\n");
  write_text(out_dir / "synthetic_config.json", canonical_dump(to_json(cfg)) + "\n");
  return stats;
}

/// Evaluates a checkpoint on a manifest; returns the canonical JSON text.
inline std::string evaluate_manifest(const std::filesystem::path& checkpoint,
                                     const std::filesystem::path& manifest) {
  const Checkpoint net = load_checkpoint(checkpoint);
  const Dataset ds = load_manifest(manifest, net.spec.classes);
  if (ds.empty()) raise(ErrorKind::kEmptyDataset, manifest.string() + " lists no samples");
  return canonical_dump(to_json(evaluate(net, ds)));
}

}  // namespace rsrl

#endif  // RSRL_RUN_HPP
