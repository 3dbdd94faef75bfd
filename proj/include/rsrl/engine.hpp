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

#ifndef RSRL_ENGINE_HPP
#define RSRL_ENGINE_HPP

// Repetitive self-revised learning. Round 0 trains on the full training set.
// Every later round scores the *original* training set with the previous
// round's network, drops majority-class samples whose own-class membership
// falls below that class's threshold, and continues training the previous
// network on what remains. Because each revision starts from the original
// set, a sample dropped in one round returns as soon as a later network
// rates it highly enough.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rsrl/canonical_json.hpp"
#include "rsrl/dataset.hpp"
#include "rsrl/error.hpp"
#include "rsrl/layers.hpp"
#include "rsrl/metrics.hpp"
#include "rsrl/network.hpp"
#include "rsrl/train.hpp"

namespace rsrl {

enum class MembershipKind {
  kSigmoid,  // logistic sigmoid of each raw fc activation
  kSoftmax,  // softmax probabilities
};

inline std::string to_string(MembershipKind k) {
  return k == MembershipKind::kSigmoid ? "sigmoid" : "softmax";
}

inline MembershipKind membership_from_string(const std::string& s) {
  if (s == "sigmoid") return MembershipKind::kSigmoid;
  if (s == "softmax") return MembershipKind::kSoftmax;
  raise(ErrorKind::kBadConfig, "membership must be 'sigmoid' or 'softmax', got '" + s + "'");
}

/// Per-class likelihoods in (0, 1) for one image.
inline std::vector<double> fc_memberships(const Checkpoint& net, const Tensor& image,
                                          MembershipKind kind = MembershipKind::kSigmoid) {
  const ActivationRecord rec = forward(net, image);
  if (kind == MembershipKind::kSoftmax) return rec.probabilities().vector();
  std::vector<double> out(rec.fc().size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = sigmoid(rec.fc()[n]);
  return out;
}

/// Scores of the (up to) three most populated classes, largest first; equal
/// counts go to the lower score. Empty classes are never selected.
inline std::vector<int> select_majority_classes(const DatasetStats& stats) {
  if (stats.total == 0) raise(ErrorKind::kEmptyDataset, "no samples to rank classes by");
  std::vector<std::size_t> idx(stats.histogram.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return stats.histogram[a] > stats.histogram[b];
  });
  std::vector<int> out;
  for (std::size_t c : idx) {
    if (out.size() == 3 || stats.histogram[c] == 0) break;
    out.push_back(static_cast<int>(c) + 1);
  }
  return out;
}

using Thresholds = std::array<double, 3>;

/// Thresholds (K1, K2, K3) in force from `from_round` until the next stage.
struct ThresholdStage {
  std::uint32_t from_round = 1;
  Thresholds k{};
};

/// K = 0.9 for rounds 1-2, then 0.95.
inline std::vector<ThresholdStage> default_schedule() {
  return {{1, {0.9, 0.9, 0.9}}, {3, {0.95, 0.95, 0.95}}};
}

inline std::vector<ThresholdStage> constant_schedule(double k) { return {{1, {k, k, k}}}; }

struct DropPolicy {
  std::vector<int> majority;  // s_max1, s_max2, s_max3 (scores)
  std::vector<ThresholdStage> schedule = default_schedule();
  MembershipKind membership = MembershipKind::kSigmoid;

  void validate() const {
    for (std::size_t i = 0; i < majority.size(); ++i)
      for (std::size_t j = i + 1; j < majority.size(); ++j)
        if (majority[i] == majority[j]) raise(ErrorKind::kBadConfig, "majority classes must be distinct");
    if (majority.size() > 3) raise(ErrorKind::kBadConfig, "at most three majority classes");
    if (schedule.empty()) raise(ErrorKind::kBadConfig, "threshold schedule is empty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (i && schedule[i].from_round <= schedule[i - 1].from_round) {
        raise(ErrorKind::kBadConfig, "threshold stages must have increasing start rounds");
      }
      for (double k : schedule[i].k)
        if (!(k >= 0.0 && k <= 1.0)) raise(ErrorKind::kBadConfig, "thresholds must be in [0, 1]");
    }
  }

  Thresholds thresholds(std::uint32_t round) const {
    const ThresholdStage* active = nullptr;
    for (const auto& s : schedule)
      if (s.from_round <= round) active = &s;
    if (!active) {
      raise(ErrorKind::kBadConfig, "round " + std::to_string(round) + " precedes the schedule");
    }
    return active->k;
  }
};

/// True when a sample with `score` and own-class membership `membership`
/// must leave the training set under thresholds `k`.
inline bool should_drop(int score, double membership, const std::vector<int>& majority,
                        const Thresholds& k) {
  for (std::size_t i = 0; i < majority.size(); ++i)
    if (majority[i] == score) return membership < k[i];
  return false;
}

/// Indices of `original` that survive revision under `net`.
inline std::vector<std::size_t> retained_indices(const Checkpoint& net, const Dataset& original,
                                                 const DropPolicy& policy, std::uint32_t round) {
  const Thresholds k = policy.thresholds(round);
  std::vector<std::size_t> keep;
  keep.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& item = original.items[i];
    const bool majority = std::find(policy.majority.begin(), policy.majority.end(), item.score) !=
                          policy.majority.end();
    if (majority) {
      const double m = fc_memberships(net, item.pixels, policy.membership).at(item.label());
      if (should_drop(item.score, m, policy.majority, k)) continue;
    }
    keep.push_back(i);
  }
  return keep;
}

struct Revision {
  Dataset revised;
  std::vector<std::string> dropped;
  Thresholds thresholds{};
};

inline Revision revise_training_set(const Checkpoint& net, const Dataset& original,
                                    const DropPolicy& policy, std::uint32_t round) {
  if (original.empty()) raise(ErrorKind::kEmptyDataset, "original training set is empty");
  policy.validate();
  const auto keep = retained_indices(net, original, policy, round);
  if (keep.empty()) {
    raise(ErrorKind::kEmptyResult, "round " + std::to_string(round) +
                                       " revision would drop every training sample");
  }
  Revision r{{original.classes, {}}, {}, policy.thresholds(round)};
  std::size_t next = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (next < keep.size() && keep[next] == i) {
      r.revised.items.push_back(original.items[i]);
      ++next;
    } else {
      r.dropped.push_back(original.items[i].id);
    }
  }
  return r;
}

/// Throws kSpecMismatch when the two checkpoints have different
/// architectures; otherwise reports whether `next_init` carries exactly the
/// parameters of `prev`.
inline bool warm_start_continuity(const Checkpoint& prev, const Checkpoint& next_init) {
  if (!(prev.spec == next_init.spec)) {
    raise(ErrorKind::kSpecMismatch, "checkpoints have different architectures");
  }
  return prev.params == next_init.params;
}

inline std::vector<std::size_t> predictions(const Checkpoint& net, const Dataset& ds) {
  std::vector<std::size_t> out;
  out.reserve(ds.size());
  for (const auto& item : ds.items) out.push_back(predict(net, item.pixels));
  return out;
}

inline EvalSummary evaluate(const Checkpoint& net, const Dataset& ds) {
  if (ds.empty()) raise(ErrorKind::kEmptyDataset, "evaluation set is empty");
  if (ds.classes != net.spec.classes) {
    raise(ErrorKind::kSpecMismatch, "dataset has " + std::to_string(ds.classes) +
                                        " classes, network " + std::to_string(net.spec.classes));
  }
  std::vector<std::size_t> truth;
  truth.reserve(ds.size());
  for (const auto& item : ds.items) truth.push_back(item.label());
  return summarize(confusion(truth, predictions(net, ds), ds.classes));
}

struct RsrlConfig {
  std::uint32_t max_rounds = 30;
  TrainConfig train;  // its seed is replaced by `seed`
  std::vector<ThresholdStage> schedule = default_schedule();
  MembershipKind membership = MembershipKind::kSigmoid;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_rounds < 1) raise(ErrorKind::kBadConfig, "max rounds must be >= 1");
    train.validate();
    DropPolicy{{}, schedule, membership}.validate();
  }
};

inline std::string checkpoint_name(std::uint32_t round) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "round_%03u.ckpt", round);
  return buf;
}

struct RoundRecord {
  std::uint32_t round = 0;
  std::size_t revised_size = 0;
  std::vector<std::size_t> composition;  // revised-set histogram, index = score - 1
  std::vector<std::string> dropped_ids;
  std::vector<double> thresholds;  // empty for round 0
  std::string checkpoint;
  EvalSummary eval;
};

inline Json to_json(const RoundRecord& r) {
  return Json{{"round", r.round},
              {"revised_size", r.revised_size},
              {"dropped_count", r.dropped_ids.size()},
              {"composition", r.composition},
              {"dropped_ids", r.dropped_ids},
              {"thresholds", r.thresholds},
              {"checkpoint", r.checkpoint},
              {"eval", to_json(r.eval)}};
}

/// Smallest round with the largest total F.
inline std::uint32_t best_round(const std::vector<RoundRecord>& history) {
  if (history.empty()) raise(ErrorKind::kEmptyInput, "empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i].eval.total_f > history[best].eval.total_f) best = i;
  return history[best].round;
}

struct RsrlResult {
  std::vector<RoundRecord> history;
  std::vector<Checkpoint> checkpoints;  // index = round
  std::vector<int> majority;
  std::uint32_t best = 0;

  const Checkpoint& best_checkpoint() const { return checkpoints.at(best); }
};

/// Raised when a revision would empty the training set; carries the rounds
/// completed before the abort.
class RunAborted : public Error {
 public:
  RunAborted(const std::string& message, std::vector<RoundRecord> partial)
      : Error(ErrorKind::kEmptyResult, message), history(std::move(partial)) {}
  std::vector<RoundRecord> history;
};

using RoundObserver = std::function<void(const RoundRecord&, const Checkpoint&)>;

/// Runs rounds 0..max_rounds and selects the best by total F on `eval`.
/// `observer`, if set, sees every round as soon as it finishes.
inline RsrlResult rsrl_run(const Dataset& original, const Dataset& eval, const NetworkSpec& spec,
                           const RsrlConfig& cfg, const RoundObserver& observer = {}) {
  cfg.validate();
  spec.validate();
  if (original.empty()) raise(ErrorKind::kEmptyDataset, "training set is empty");
  if (eval.empty()) raise(ErrorKind::kEmptyDataset, "evaluation set is empty");
  if (original.classes != spec.classes || eval.classes != spec.classes) {
    raise(ErrorKind::kSpecMismatch, "class count differs between datasets and network");
  }

  RsrlResult result;
  result.majority = select_majority_classes(original.stats());
  const DropPolicy policy{result.majority, cfg.schedule, cfg.membership};
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;

  auto finish_round = [&](RoundRecord rec, Checkpoint net) {
    rec.checkpoint = checkpoint_name(rec.round);
    rec.eval = evaluate(net, eval);
    if (observer) observer(rec, net);
    result.history.push_back(std::move(rec));
    result.checkpoints.push_back(std::move(net));
  };

  {
    const auto examples = original.examples();
    RoundRecord rec;
    rec.round = 0;
    rec.revised_size = original.size();
    rec.composition = original.stats().histogram;
    finish_round(std::move(rec), train(initialize(spec, cfg.seed), examples, tc, 0));
  }

  for (std::uint32_t round = 1; round <= cfg.max_rounds; ++round) {
    const Checkpoint& prev = result.checkpoints.back();
    const auto keep = retained_indices(prev, original, policy, round);
    if (keep.empty()) {
      throw RunAborted("round " + std::to_string(round) +
                           " revision would drop every training sample",
                       result.history);
    }
    RoundRecord rec;
    rec.round = round;
    rec.revised_size = keep.size();
    rec.composition.assign(original.classes, 0);
    const Thresholds k = policy.thresholds(round);
    rec.thresholds.assign(k.begin(), k.end());
    std::vector<LabeledExample> examples;
    examples.reserve(keep.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
      const auto& item = original.items[i];
      if (next < keep.size() && keep[next] == i) {
        examples.push_back({&item.pixels, item.label()});
        ++rec.composition[item.label()];
        ++next;
      } else {
        rec.dropped_ids.push_back(item.id);
      }
    }
    Checkpoint init = prev;
    if (!warm_start_continuity(prev, init)) {
      raise(ErrorKind::kSpecMismatch, "warm start lost the previous parameters");
    }
    Checkpoint net = train(init, examples, tc, round);
    net.thresholds = rec.thresholds;
    finish_round(std::move(rec), std::move(net));
  }
  result.best = best_round(result.history);
  return result;
}

inline RsrlResult rsrl_run(const Dataset& original, const Dataset& eval, const RsrlConfig& cfg,
                           const RoundObserver& observer = {}) {
  if (original.empty()) raise(ErrorKind::kEmptyDataset, "training set is empty");
  return rsrl_run(original, eval,
                  default_network(original.items.front().pixels.shape(), original.classes), cfg,
                  observer);
}

}  // namespace rsrl

#endif  // RSRL_ENGINE_HPP
