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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "oracles.hpp"
#include "rsrl/dataset.hpp"
#include "rsrl/engine.hpp"

namespace rsrl {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIoError;
}

// fc = w * pixel + b on a single-pixel image (conv1 is the identity)
Checkpoint linear_net(std::vector<double> w, std::vector<double> b) {
  const std::size_t n = w.size();
  Checkpoint net = initialize(
      NetworkSpec{{1, 1, 1}, {LayerSpec::conv(1, 1), LayerSpec::dense(n), LayerSpec::softmax()}, n}, 0);
  net.params[0] = {1.0, 0.0};
  net.params[1] = w;
  net.params[1].insert(net.params[1].end(), b.begin(), b.end());
  return net;
}

Dataset single(int score, double pixel = 1.0, const std::string& id = "x") {
  return Dataset{3, {{id, Tensor({1, 1, 1}, pixel), score}}};
}

DatasetStats stats_of(std::vector<std::size_t> hist) {
  Dataset ds{hist.size(), {}};
  for (std::size_t c = 0; c < hist.size(); ++c)
    for (std::size_t k = 0; k < hist[c]; ++k)
      ds.items.push_back({std::to_string(c) + "_" + std::to_string(k), Tensor({1, 1, 1}),
                          static_cast<int>(c) + 1});
  return ds.stats();
}

// ---- memberships ------------------------------------------------------------

TEST(Membership, SigmoidOfRawFcScores) {
  const auto zero = fc_memberships(linear_net({0, 0, 0}, {0, 0, 0}), Tensor({1, 1, 1}, 1.0));
  for (double m : zero) EXPECT_DOUBLE_EQ(m, 0.5);
  const auto m = fc_memberships(linear_net({0, 0, 0}, {10, -10, 0}), Tensor({1, 1, 1}, 1.0));
  EXPECT_NEAR(m[0], 0.9999546, 1e-7);
  EXPECT_NEAR(m[1], 4.54e-5, 1e-7);
}

TEST(Membership, MatchesOracleForwardPass) {
  CounterRng rng(7);
  const NetworkSpec spec{{8, 8, 1},
                         {LayerSpec::conv(3, 4), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
                          LayerSpec::dense(5), LayerSpec::softmax()},
                         5};
  for (int trial = 0; trial < 20; ++trial) {
    const Checkpoint net = initialize(spec, trial);
    const Tensor img = oracle::random_tensor(spec.input, rng, 0.0, 1.0);
    const auto ref = oracle::network(net, img);
    const Tensor& fc = ref[spec.fc_index()];
    const auto sig = fc_memberships(net, img);
    const auto soft = fc_memberships(net, img, MembershipKind::kSoftmax);
    double total = 0.0;
    for (std::size_t n = 0; n < 5; ++n) {
      EXPECT_NEAR(sig[n], 1.0 / (1.0 + std::exp(-fc[n])), 1e-14);
      EXPECT_NEAR(soft[n], ref.back()[n], 1e-14);
      total += soft[n];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Membership, KindParsing) {
  EXPECT_EQ(membership_from_string("sigmoid"), MembershipKind::kSigmoid);
  EXPECT_EQ(membership_from_string(to_string(MembershipKind::kSoftmax)), MembershipKind::kSoftmax);
  EXPECT_EQ(kind_of([] { membership_from_string("tanh"); }), ErrorKind::kBadConfig);
}

// ---- majority classes -------------------------------------------------------

TEST(MajorityClasses, AestheticShapeGivesMiddleScores) {
  EXPECT_EQ(select_majority_classes(stats_of(apportion(aesthetic_proportions(), 2480))),
            (std::vector<int>{4, 3, 5}));
}

TEST(MajorityClasses, TiesGoToTheLowerScore) {
  EXPECT_EQ(select_majority_classes(stats_of({5, 5, 1})), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(select_majority_classes(stats_of({2, 7, 2, 2})), (std::vector<int>{2, 1, 3}));
}

TEST(MajorityClasses, EmptyClassesAreNeverSelected) {
  EXPECT_EQ(select_majority_classes(stats_of({4, 0, 2})), (std::vector<int>{1, 3}));
  EXPECT_EQ(kind_of([] { select_majority_classes(stats_of({0, 0, 0})); }), ErrorKind::kEmptyDataset);
}

// ---- drop rule --------------------------------------------------------------

TEST(DropRule, Examples) {
  const std::vector<int> maj{4, 3, 5};
  EXPECT_TRUE(should_drop(4, 0.85, maj, {0.9, 0.9, 0.9}));
  EXPECT_FALSE(should_drop(4, 0.9, maj, {0.9, 0.9, 0.9}));
  EXPECT_FALSE(should_drop(1, 0.01, maj, {0.9, 0.9, 0.9}));
  EXPECT_TRUE(should_drop(5, 0.5, maj, {1.0, 1.0, 0.6}));
  EXPECT_FALSE(should_drop(5, 0.5, maj, {1.0, 1.0, 0.4}));
}

TEST(DropRule, MatchesBruteForceOn500Cases) {
  CounterRng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + rng.below(7);
    std::vector<int> scores(n);
    std::iota(scores.begin(), scores.end(), 1);
    shuffle(std::span<int>(scores), rng);
    const std::vector<int> maj(scores.begin(), scores.begin() + 3);
    const Thresholds k{rng.uniform(), rng.uniform(), rng.uniform()};
    const int score = 1 + static_cast<int>(rng.below(n));
    const double m = rng.uniform();
    bool expected = false;
    for (int i = 0; i < 3; ++i) expected = expected || (score == maj[i] && m < k[i]);
    EXPECT_EQ(should_drop(score, m, maj, k), expected);
  }
}

TEST(DropRule, NonMajoritySamplesSurviveAnyThreshold) {
  CounterRng rng(19);
  Dataset ds{3, {}};
  for (int i = 0; i < 60; ++i)
    ds.items.push_back({"s" + std::to_string(i), Tensor({1, 1, 1}, rng.uniform(-3, 3)), 1 + i % 3});
  const Checkpoint net = linear_net({1.0, -2.0, 0.5}, {0.1, 0.2, -0.3});
  for (std::vector<int> maj : {std::vector<int>{1}, std::vector<int>{2, 3}}) {
    const DropPolicy policy{maj, constant_schedule(1.0)};
    const auto kept = revise_training_set(net, ds, policy, 1).revised.ids();
    for (const auto& it : ds.items) {
      if (std::find(maj.begin(), maj.end(), it.score) != maj.end()) continue;
      EXPECT_NE(std::find(kept.begin(), kept.end(), it.id), kept.end());
    }
  }
}

TEST(DropRule, OwnClassMembershipDecides) {
  // class 2's membership is high but only class 1's counts for a class-1 sample
  const Checkpoint net = linear_net({0, 0, 0}, {0.0, 8.0, 0.0});
  const DropPolicy policy{{1, 2, 3}, constant_schedule(0.9)};
  EXPECT_EQ(revise_training_set(net, single(2), policy, 1).revised.size(), 1u);
  EXPECT_EQ(kind_of([&] { revise_training_set(net, single(1), policy, 1); }), ErrorKind::kEmptyResult);
}

TEST(DropRule, DroppedSampleReentersWhenMembershipRises) {
  Dataset ds = single(1, 1.0, "target");
  ds.items.push_back({"keeper", Tensor({1, 1, 1}, 1.0), 3});
  const DropPolicy policy{{1, 2}, default_schedule()};
  const Checkpoint round_r = linear_net({0, 0, 0}, {0.0, 0, 0});  // membership 0.5
  const Checkpoint round_r1 = linear_net({4.0, 0, 0}, {0.0, 0, 0});  // membership 0.982
  const auto at_r = revise_training_set(round_r, ds, policy, 2);
  EXPECT_EQ(at_r.dropped, std::vector<std::string>{"target"});
  const auto at_r1 = revise_training_set(round_r1, ds, policy, 3);
  EXPECT_TRUE(at_r1.dropped.empty());
  EXPECT_EQ(at_r1.revised.ids(), (std::vector<std::string>{"target", "keeper"}));
}

TEST(DropRule, RevisionIsIdempotentForAFixedNetwork) {
  CounterRng rng(23);
  Dataset ds{3, {}};
  for (int i = 0; i < 200; ++i)
    ds.items.push_back({"s" + std::to_string(i), Tensor({1, 1, 1}, rng.uniform(-2, 2)), 1 + i % 3});
  const Checkpoint net = linear_net({2.0, -1.0, 0.3}, {1.0, 2.0, -0.5});
  const DropPolicy policy{{1, 2, 3}, constant_schedule(0.8)};
  const auto once = revise_training_set(net, ds, policy, 1);
  const auto twice = revise_training_set(net, once.revised, policy, 1);
  EXPECT_EQ(twice.revised.ids(), once.revised.ids());
  EXPECT_TRUE(twice.dropped.empty());
}

TEST(DropRule, HigherThresholdsNeverKeepMore) {
  CounterRng rng(29);
  Dataset ds{3, {}};
  for (int i = 0; i < 300; ++i)
    ds.items.push_back({"s" + std::to_string(i), Tensor({1, 1, 1}, rng.uniform(-3, 3)), 1 + i % 3});
  const Checkpoint net = linear_net({1.5, -0.7, 0.2}, {0.5, 1.0, 0.0});
  std::size_t previous = ds.size() + 1;
  for (double k = 0.0; k <= 0.95; k += 0.05) {
    const auto r = revise_training_set(net, ds, DropPolicy{{1, 2, 3}, constant_schedule(k)}, 1);
    EXPECT_LE(r.revised.size(), previous);
    previous = r.revised.size();
  }
}

TEST(DropPolicy, ScheduleAndValidation) {
  const DropPolicy p{{4, 3, 5}};
  EXPECT_EQ(p.thresholds(1), (Thresholds{0.9, 0.9, 0.9}));
  EXPECT_EQ(p.thresholds(2), (Thresholds{0.9, 0.9, 0.9}));
  EXPECT_EQ(p.thresholds(3), (Thresholds{0.95, 0.95, 0.95}));
  EXPECT_EQ(p.thresholds(30), (Thresholds{0.95, 0.95, 0.95}));
  EXPECT_EQ(kind_of([] { DropPolicy{{1, 1}}.validate(); }), ErrorKind::kBadConfig);
  EXPECT_EQ(kind_of([] { DropPolicy{{1}, constant_schedule(1.2)}.validate(); }), ErrorKind::kBadConfig);
  EXPECT_EQ(kind_of([] { DropPolicy{{1}, {{3, {}}, {2, {}}}}.validate(); }), ErrorKind::kBadConfig);
}

// ---- warm start -------------------------------------------------------------

TEST(WarmStart, ContinuityAndMismatch) {
  const Checkpoint a = linear_net({1, 2, 3}, {0, 0, 0});
  Checkpoint b = a;
  EXPECT_TRUE(warm_start_continuity(a, b));
  const Dataset ds = single(1);
  const auto ex = ds.examples();
  EXPECT_DOUBLE_EQ(batch_loss(a, ex), batch_loss(b, ex));
  b = train(b, ex, TrainConfig{1, 1, 0.1, 0}, 1);
  EXPECT_FALSE(warm_start_continuity(a, b));
  const Checkpoint c = linear_net({1, 2}, {0, 0});
  EXPECT_EQ(kind_of([&] { warm_start_continuity(a, c); }), ErrorKind::kSpecMismatch);
}

// ---- best round -------------------------------------------------------------

std::vector<RoundRecord> history_of(const std::vector<double>& fs) {
  std::vector<RoundRecord> h(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    h[i].round = static_cast<std::uint32_t>(i);
    h[i].eval.total_f = fs[i];
  }
  return h;
}

TEST(BestRound, ArgmaxWithEarliestTie) {
  EXPECT_EQ(best_round(history_of({0.2, 0.5, 0.4})), 1u);
  EXPECT_EQ(best_round(history_of({0.3, 0.6, 0.6, 0.1})), 1u);
  EXPECT_EQ(best_round(history_of({0.7})), 0u);
  EXPECT_EQ(kind_of([] { best_round({}); }), ErrorKind::kEmptyInput);
}

// ---- full loop --------------------------------------------------------------

NetworkSpec tiny_spec(std::size_t classes) {
  return NetworkSpec{{8, 8, 1},
                     {LayerSpec::conv(3, 4), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
                      LayerSpec::dense(classes), LayerSpec::softmax()},
                     classes};
}

SyntheticDataset tiny_data(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.classes = 5;
  cfg.proportions = {0.05, 0.3, 0.35, 0.25, 0.05};
  cfg.size = 120;
  cfg.image_size = 8;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

RsrlConfig tiny_config(std::uint32_t rounds) {
  RsrlConfig cfg;
  cfg.max_rounds = rounds;
  cfg.train = TrainConfig{1, 8, 0.05, 0};
  cfg.seed = 3;
  return cfg;
}

TEST(RsrlRun, ZeroThresholdsKeepEverySample) {
  const auto data = tiny_data(1).data;
  RsrlConfig cfg = tiny_config(3);
  cfg.schedule = constant_schedule(0.0);
  const auto r = rsrl_run(data, data, tiny_spec(5), cfg);
  ASSERT_EQ(r.history.size(), 4u);
  for (const auto& rec : r.history) {
    EXPECT_EQ(rec.revised_size, data.size());
    EXPECT_TRUE(rec.dropped_ids.empty());
  }
}

TEST(RsrlRun, MaximalThresholdsLeaveOnlyMinorityClasses) {
  const auto data = tiny_data(2).data;
  RsrlConfig cfg = tiny_config(1);
  cfg.schedule = constant_schedule(1.0);
  const auto r = rsrl_run(data, data, tiny_spec(5), cfg);
  EXPECT_EQ(r.majority, (std::vector<int>{3, 2, 4}));
  const auto& rec = r.history.at(1);
  EXPECT_EQ(rec.composition[1] + rec.composition[2] + rec.composition[3], 0u);
  EXPECT_EQ(rec.composition[0], data.stats().count(1));
  EXPECT_EQ(rec.composition[4], data.stats().count(5));
}

TEST(RsrlRun, RecordsAreConsistentAndDeterministic) {
  const auto data = tiny_data(3).data;
  const RsrlConfig cfg = tiny_config(4);
  const auto a = rsrl_run(data, data, tiny_spec(5), cfg);
  const auto b = rsrl_run(data, data, tiny_spec(5), cfg);
  ASSERT_EQ(a.history.size(), 5u);
  ASSERT_EQ(a.checkpoints.size(), 5u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const auto& rec = a.history[i];
    EXPECT_EQ(rec.round, i);
    EXPECT_EQ(rec.revised_size + rec.dropped_ids.size(), data.size());
    std::size_t sum = 0;
    for (auto c : rec.composition) sum += c;
    EXPECT_EQ(sum, rec.revised_size);
    EXPECT_EQ(rec.checkpoint, checkpoint_name(rec.round));
    EXPECT_EQ(a.checkpoints[i].round, i);
    EXPECT_EQ(canonical_dump(to_json(rec)), canonical_dump(to_json(b.history[i])));
    EXPECT_EQ(a.checkpoints[i].params, b.checkpoints[i].params);
  }
  EXPECT_TRUE(a.history[0].thresholds.empty());
  EXPECT_EQ(a.history[3].thresholds, (std::vector<double>{0.95, 0.95, 0.95}));
  EXPECT_EQ(a.best, best_round(a.history));
  EXPECT_EQ(checkpoint_name(7), "round_007.ckpt");
}

TEST(RsrlRun, SingleRoundRunsRoundsZeroAndOne) {
  const auto data = tiny_data(4).data;
  const auto r = rsrl_run(data, data, tiny_spec(5), tiny_config(1));
  ASSERT_EQ(r.history.size(), 2u);
  EXPECT_EQ(r.history[1].round, 1u);
}

TEST(RsrlRun, Errors) {
  const auto data = tiny_data(5).data;
  EXPECT_EQ(kind_of([&] { rsrl_run(data, Dataset{5, {}}, tiny_spec(5), tiny_config(1)); }),
            ErrorKind::kEmptyDataset);
  EXPECT_EQ(kind_of([&] { rsrl_run(data, data, tiny_spec(4), tiny_config(1)); }),
            ErrorKind::kSpecMismatch);
  EXPECT_EQ(kind_of([&] { rsrl_run(data, data, tiny_spec(5), tiny_config(0)); }),
            ErrorKind::kBadConfig);
}

}  // namespace
}  // namespace rsrl
