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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance --work DIR [--cli PATH] [--seeds N]

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradient_checks.hpp"
#include "oracles.hpp"
#include "rsrl/rsrl.hpp"

namespace fs = std::filesystem;
using namespace rsrl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- P1 ---------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto layers = oracle::layer_gradient_check(1001, 100);
  const auto net = oracle::network_gradient_check(1002, 100);
  const double secs = seconds_since(t0);
  const double worst = std::max(layers.worst, net.worst);
  return {worst < 1e-6 && layers.cases >= 100 && net.cases >= 100 && secs < 60.0,
          fmt("worst rel err %.2e over %zu layer + %zu network cases (%zu derivatives), %.1f s",
              worst, layers.cases, net.cases, layers.checked + net.checked, secs)};
}

// ---- P2 ---------------------------------------------------------------------

Outcome metrics_oracle() {
  CounterRng rng(2001);
  double worst = 0.0;
  std::size_t count_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    const std::size_t len = 1 + rng.below(200);
    std::vector<std::size_t> t(len), p(len);
    for (auto& v : t) v = rng.below(n);
    for (auto& v : p) v = rng.below(n);
    const auto cm = confusion(t, p, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < len; ++i) c += t[i] == a && p[i] == b;
        count_mismatch += cm(a, b) != c;
      }
    const auto ref = oracle::tally(t, p, n);
    const auto m = class_metrics(cm);
    for (std::size_t c = 0; c < n; ++c) {
      worst = std::max({worst, std::abs(m[c].precision - ref.precision[c]),
                        std::abs(m[c].recall - ref.recall[c]), std::abs(m[c].f - ref.f[c])});
    }
    worst = std::max(worst, std::abs(accuracy(cm) - ref.accuracy));
  }
  const double f = f_measure(0.3, 0.2);
  return {count_mismatch == 0 && worst <= 1e-12 && f == 0.24,
          fmt("1000 labelings, %zu count mismatches, worst metric deviation %.1e, "
              "f_measure(0.3, 0.2) = %.17g",
              count_mismatch, worst, f)};
}

// ---- P3 ---------------------------------------------------------------------

// fc = w * pixel + b through an identity conv1
Checkpoint linear_net(std::vector<double> w, std::vector<double> b) {
  const std::size_t n = w.size();
  Checkpoint net = initialize(
      NetworkSpec{{1, 1, 1}, {LayerSpec::conv(1, 1), LayerSpec::dense(n), LayerSpec::softmax()}, n}, 0);
  net.params[0] = {1.0, 0.0};
  net.params[1] = w;
  net.params[1].insert(net.params[1].end(), b.begin(), b.end());
  return net;
}

Outcome drop_rule_suite() {
  CounterRng rng(3001);
  // (a) non-majority samples survive a revision with K = 1
  Dataset ds{6, {}};
  for (int i = 0; i < 300; ++i) {
    ds.items.push_back({"s" + std::to_string(i), Tensor({1, 1, 1}, rng.uniform(-3, 3)), 1 + i % 6});
  }
  std::vector<double> w(6), b(6);
  for (double& v : w) v = rng.uniform(-2, 2);
  for (double& v : b) v = rng.uniform(-2, 2);
  const Checkpoint net = linear_net(w, b);
  const auto rev = revise_training_set(net, ds, DropPolicy{{2, 3, 4}, constant_schedule(1.0)}, 1);
  std::size_t minority_lost = 0, majority_kept = 0;
  const auto kept_ids = rev.revised.ids();
  const std::set<std::string> kept(kept_ids.begin(), kept_ids.end());
  for (const auto& it : ds.items) {
    const bool is_major = it.score >= 2 && it.score <= 4;
    if (!is_major && !kept.count(it.id)) ++minority_lost;
    if (is_major && kept.count(it.id)) ++majority_kept;
  }

  // (b) brute force over (membership, label) cases, through the full revision path
  std::size_t disagreements = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 4 + rng.below(6);
    std::vector<int> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = static_cast<int>(i) + 1;
    shuffle(std::span<int>(scores), rng);
    const std::vector<int> maj(scores.begin(), scores.begin() + 3);
    const Thresholds k{rng.uniform(), rng.uniform(), rng.uniform()};
    const int score = 1 + static_cast<int>(rng.below(n));
    const double logit = rng.uniform(-6, 6);
    std::vector<double> bias(n, 0.0);
    bias[static_cast<std::size_t>(score - 1)] = logit;
    const Checkpoint one = linear_net(std::vector<double>(n, 0.0), bias);
    const double m = 1.0 / (1.0 + std::exp(-logit));
    bool expect_drop = false;
    for (int i = 0; i < 3; ++i) expect_drop = expect_drop || (score == maj[i] && m < k[i]);
    // the anchor has a non-majority score, so the revision never empties
    const Dataset single{n, {{"x", Tensor({1, 1, 1}, 1.0), score},
                             {"anchor", Tensor({1, 1, 1}, 1.0), scores[3]}}};
    const auto r = revise_training_set(one, single, DropPolicy{maj, {{1, k}}}, 1);
    const bool dropped = std::find(r.dropped.begin(), r.dropped.end(), "x") != r.dropped.end();
    disagreements += dropped != expect_drop;
    disagreements += should_drop(score, m, maj, k) != expect_drop;
  }

  // (c) re-entry
  Dataset pair{3, {{"target", Tensor({1, 1, 1}, 1.0), 1}, {"keeper", Tensor({1, 1, 1}, 1.0), 3}}};
  const DropPolicy policy{{1, 2}, default_schedule()};
  const auto at_r = revise_training_set(linear_net({0, 0, 0}, {0, 0, 0}), pair, policy, 2);
  const auto at_r1 = revise_training_set(linear_net({4, 0, 0}, {0, 0, 0}), pair, policy, 3);
  const bool reentered = at_r.dropped == std::vector<std::string>{"target"} && at_r1.dropped.empty();

  return {minority_lost == 0 && majority_kept == 0 && disagreements == 0 && reentered,
          fmt("(a) %zu non-majority samples lost; (b) %zu disagreements in 500 cases; "
              "(c) re-entry %s",
              minority_lost, disagreements, reentered ? "observed" : "missing")};
}

// ---- P4 ---------------------------------------------------------------------

struct SeedReport {
  std::uint64_t seed = 0;
  std::size_t size0 = 0, size1 = 0, size25 = 0, size30 = 0;
  double f0 = 0, fbest = 0;
  std::uint32_t best = 0;
  std::vector<int> newly_correct;  // minority scores unpredicted at round 0, correct at best
  double train_acc = 0, test_acc = 0;
  std::size_t reentries = 0;
};

SeedReport run_seed(std::uint64_t seed, const fs::path& dir) {
  RunConfig cfg;
  cfg.synthetic = default_synth_config();
  cfg.synthetic->seed = seed;
  cfg.seed = seed;
  cfg.selection = Selection::kTest;
  const RunOutcome out = run_experiment(cfg, dir);
  const auto& h = out.result.history;
  SeedReport r;
  r.seed = seed;
  r.size0 = h.at(0).revised_size;
  r.size1 = h.at(1).revised_size;
  r.size25 = h.at(25).revised_size;
  r.size30 = h.at(30).revised_size;
  r.best = out.result.best;
  r.f0 = h.at(0).eval.total_f;
  r.fbest = h.at(r.best).eval.total_f;
  const auto& maj = out.result.majority;
  const auto& cm0 = h.at(0).eval.confusion;
  const auto& cmb = h.at(r.best).eval.confusion;
  for (std::size_t c = 0; c < h.at(0).eval.classes.size(); ++c) {
    const int score = static_cast<int>(c) + 1;
    if (std::find(maj.begin(), maj.end(), score) != maj.end()) continue;
    if (cm0.predicted(c) == 0 && cmb(c, c) > 0) r.newly_correct.push_back(score);
  }
  r.train_acc = out.best_train_accuracy;
  r.test_acc = out.best_test.accuracy;
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    const std::set<std::string> next(h[i + 1].dropped_ids.begin(), h[i + 1].dropped_ids.end());
    for (const auto& id : h[i].dropped_ids) r.reentries += !next.count(id);
  }
  return r;
}

std::vector<Outcome> rsrl_experiment(const fs::path& work, int seeds, double* elapsed) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SeedReport> reps;
  for (int s = 1; s <= seeds; ++s) {
    reps.push_back(run_seed(static_cast<std::uint64_t>(s), work / ("p4_seed" + std::to_string(s))));
    const auto& r = reps.back();
    std::printf("      seed %llu: sizes %zu -> %zu (r1) ... %zu (r25) %zu (r30); F r0 %.4f, best r%u "
                "%.4f; minority newly correct {",
                static_cast<unsigned long long>(r.seed), r.size0, r.size1, r.size25, r.size30, r.f0,
                r.best, r.fbest);
    for (std::size_t i = 0; i < r.newly_correct.size(); ++i)
      std::printf("%s%d", i ? "," : "", r.newly_correct[i]);
    std::printf("}; train acc %.4f, test acc %.4f; %zu re-entries\n", r.train_acc, r.test_acc,
                r.reentries);
    std::fflush(stdout);
  }
  *elapsed = seconds_since(t0);

  std::size_t a = 0, b = 0, c = 0, d = 0, e = 0;
  for (const auto& r : reps) {
    a += r.size1 < r.size0;
    b += std::abs(static_cast<double>(r.size30) - static_cast<double>(r.size25)) /
             static_cast<double>(r.size0) < 0.1;
    c += !r.newly_correct.empty();
    d += r.fbest >= r.f0;
    e += r.train_acc > r.test_acc;
  }
  const std::size_t n = reps.size();
  const bool full = seeds == 5;
  return {
      {full && *elapsed < 900.0, fmt("%d seeds, 3100 samples split %zu/%zu, 30 rounds in %.1f s",
                                     seeds, reps.front().size0, std::size_t{3100} - reps.front().size0,
                                     *elapsed)},
      {a == n, fmt("(a) round-1 revised size below original in %zu/%zu seeds", a, n)},
      {b == n, fmt("(b) |size30 - size25| / size0 < 0.1 in %zu/%zu seeds", b, n)},
      {c >= 3, fmt("(c) a minority class unpredicted at round 0 is correctly predicted by the best "
                   "network in %zu/%zu seeds (need 3)", c, n)},
      {d >= 4, fmt("(d) best-round total F >= round-0 total F in %zu/%zu seeds (need 4)", d, n)},
      {e == n, fmt("(e) best-network train accuracy > test accuracy in %zu/%zu seeds", e, n)},
  };
}

// ---- P5 ---------------------------------------------------------------------

Outcome highlight_oracle(const fs::path& checkpoint) {
  CounterRng rng(5001);
  auto random_map = [&](std::size_t h, std::size_t w) {
    FeatureMap m{h, w, std::vector<double>(h * w)};
    for (double& v : m.values) v = rng.uniform(-1, 1);
    return m;
  };
  std::size_t scan_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 1 + rng.below(16), h = 2 + rng.below(12), w = 2 + rng.below(12);
    FeatureMapStack a, b;
    for (std::size_t j = 0; j < c; ++j) {
      a.channels.push_back(random_map(h, w));
      b.channels.push_back(random_map(h, w));
    }
    std::size_t best = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      const double r = oracle::pearson(a.channels[j], b.channels[j]);
      if (r < lowest) lowest = r, best = j;
    }
    scan_mismatch += min_corr_channel(a, b) != best;
  }

  const Checkpoint net = load_checkpoint(checkpoint);
  SynthConfig sc = default_synth_config();
  sc.size = 10;
  sc.seed = 77;
  std::size_t nonzero = 0;
  for (const auto& item : generate_synthetic(sc).data.items) {
    for (double v : extract_highlight(net, net, item.pixels).diff.values) nonzero += v != 0.0;
  }

  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t h = 2 + rng.below(14), w = 2 + rng.below(14);
    const FeatureMap a = random_map(h, w), b = random_map(h, w);
    FeatureMap neg = a, affine = b;
    for (double& v : neg.values) v = -v;
    const double s = rng.uniform(0.1, 10.0), t = rng.uniform(-5, 5);
    for (double& v : affine.values) v = s * v + t;
    const double r = pearson_corr(a, b);
    worst = std::max({worst, std::abs(pearson_corr(b, a) - r), std::abs(pearson_corr(a, a) - 1.0),
                      std::abs(pearson_corr(a, neg) + 1.0), std::abs(pearson_corr(a, affine) - r)});
  }
  return {scan_mismatch == 0 && nonzero == 0 && worst <= 1e-12,
          fmt("%zu/200 channel scans disagree; identical checkpoints leave %zu non-zero diff "
              "values over 10 images; worst Pearson property deviation %.1e",
              scan_mismatch, nonzero, worst)};
}

// ---- P6 ---------------------------------------------------------------------

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const fs::path& work, const std::string& cli) {
  Json synth = to_json(default_synth_config());
  synth["size"] = 400;
  synth["seed"] = 6;
  const Json cfg{{"dataset", {{"synthetic", synth}}},
                 {"seed", 6},
                 {"rsrl", {{"max_rounds", 4}, {"epochs", 2}}}};
  const fs::path dir = work / "p6";
  fs::create_directories(dir);
  write_text(dir / "run.json", canonical_dump(cfg));
  std::size_t compared = 0, differing = 0;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" train-rsrl --config \"" + (dir / "run.json").string() +
                            "\" --out \"" + (dir / run).string() + "\" > /dev/null";
    if (shell(cmd) != 0) return {false, "train-rsrl exited with an error"};
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    ++compared;
    differing += !fs::exists(dir / "b" / rel) ||
                 detail::read_file(entry.path()) != detail::read_file(dir / "b" / rel);
  }
  return {differing == 0 && compared >= 7,
          fmt("two train-rsrl runs (400 samples, 4 rounds): %zu files compared, %zu differ",
              compared, differing)};
}

// ---- P7 ---------------------------------------------------------------------

Outcome persistence(const fs::path& work, const fs::path& checkpoint) {
  const fs::path dir = work / "p7";
  fs::create_directories(dir);
  std::size_t ckpt_bad = 0, ckpt_checked = 0;
  std::vector<Checkpoint> nets{load_checkpoint(checkpoint)};
  CounterRng rng(7001);
  for (int i = 0; i < 20; ++i) {
    Checkpoint n = initialize(i % 2 ? oracle::strided_spec() : oracle::small_spec(), i);
    oracle::randomize(n, rng, 3.0);
    n.round = static_cast<std::uint32_t>(i);
    n.seed = rng();
    if (i % 3) n.thresholds = {0.9, 0.95, rng.uniform()};
    nets.push_back(n);
  }
  for (const auto& n : nets) {
    save_checkpoint(n, dir / "a.ckpt");
    const Checkpoint back = load_checkpoint(dir / "a.ckpt");
    save_checkpoint(back, dir / "b.ckpt");
    ckpt_bad += detail::read_file(dir / "a.ckpt") != detail::read_file(dir / "b.ckpt") ||
                back.params != n.params;
    ++ckpt_checked;
  }

  const Dataset ds = generate_synthetic(default_synth_config()).data;
  const Dataset back = load_manifest(write_manifest(ds, dir / "manifest"), 8);
  std::size_t pair_bad = back.size() != ds.size();
  for (std::size_t i = 0; i < std::min(ds.size(), back.size()); ++i) {
    pair_bad += back.items[i].id != ds.items[i].id || back.items[i].score != ds.items[i].score;
  }
  return {ckpt_bad == 0 && pair_bad == 0,
          fmt("%zu/%zu checkpoints re-save differently; %zu of %zu (id, score) pairs lost",
              ckpt_bad, ckpt_checked, pair_bad, ds.size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  fs::path work = fs::temp_directory_path() / "rsrl_acceptance";
  std::string cli;
  int seeds = 5;
  app.add_option("--work", work, "scratch directory for run artifacts");
  app.add_option("--cli", cli, "rsrl executable (defaults to $RSRL_CLI)");
  app.add_option("--seeds", seeds, "seeds for the desk-scale experiment")->check(CLI::Range(1, 5));
  CLI11_PARSE(app, argc, argv);
  if (cli.empty() && std::getenv("RSRL_CLI")) cli = std::getenv("RSRL_CLI");

  fs::remove_all(work);
  fs::create_directories(work);
  int failures = 0;
  auto report = [&](const char* id, const char* name, const Outcome& o) {
    std::printf("%s %-3s %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guarded = [&](const char* id, const char* name, const std::function<Outcome()>& f) {
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("threw: ") + e.what()});
    }
  };

  guarded("P1", "gradient oracle", gradient_oracle);
  guarded("P2", "metrics oracle", metrics_oracle);
  guarded("P3", "drop rule", drop_rule_suite);

  double elapsed = 0.0;
  std::vector<Outcome> p4;
  try {
    p4 = rsrl_experiment(work, seeds, &elapsed);
  } catch (const std::exception& e) {
    p4.assign(6, Outcome{false, std::string("threw: ") + e.what()});
  }
  const char* p4_names[] = {"desk-scale run", "size shrinks", "size settles",
                            "minority recovery", "F improves", "overfit signature"};
  const char* p4_ids[] = {"P4", "P4a", "P4b", "P4c", "P4d", "P4e"};
  for (std::size_t i = 0; i < p4.size(); ++i) report(p4_ids[i], p4_names[i], p4[i]);

  const fs::path ckpt = work / "p4_seed1" / "checkpoints" / checkpoint_name(10);
  guarded("P5", "highlight oracle", [&] { return highlight_oracle(ckpt); });
  if (cli.empty()) {
    report("P6", "determinism", {false, "no rsrl executable given (--cli or RSRL_CLI)"});
  } else {
    guarded("P6", "determinism", [&] { return determinism(work, cli); });
  }
  guarded("P7", "persistence", [&] { return persistence(work, ckpt); });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
