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

#ifndef RSRL_METRICS_HPP
#define RSRL_METRICS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rsrl/canonical_json.hpp"
#include "rsrl/error.hpp"

namespace rsrl {

/// N x N counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : n_(classes), cells_(classes * classes, 0) {}

  std::size_t classes() const { return n_; }
  std::size_t& operator()(std::size_t truth, std::size_t pred) { return cells_[truth * n_ + pred]; }
  std::size_t operator()(std::size_t truth, std::size_t pred) const {
    return cells_[truth * n_ + pred];
  }

  std::size_t total() const {
    std::size_t s = 0;
    for (std::size_t v : cells_) s += v;
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }
  std::size_t support(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += (*this)(c, p);
    return s;
  }
  std::size_t predicted(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < n_; ++t) s += (*this)(t, c);
    return s;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::size_t> cells_;
};

inline ConfusionMatrix confusion(std::span<const std::size_t> truths,
                                 std::span<const std::size_t> preds, std::size_t classes) {
  if (truths.size() != preds.size()) {
    raise(ErrorKind::kLengthMismatch, std::to_string(truths.size()) + " truths vs " +
                                          std::to_string(preds.size()) + " predictions");
  }
  if (truths.empty()) raise(ErrorKind::kEmptyInput, "no labels to tally");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= classes || preds[i] >= classes) {
      raise(ErrorKind::kShapeMismatch, "label out of range at position " + std::to_string(i));
    }
    ++cm(truths[i], preds[i]);
  }
  return cm;
}

/// Harmonic mean of precision and recall; 0 when both are 0.
inline double f_measure(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

inline double accuracy(const ConfusionMatrix& cm) {
  const std::size_t all = cm.total();
  if (all == 0) raise(ErrorKind::kEmptyMatrix, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(all);
}

struct ClassMetric {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
};

/// Per-class precision/recall/F. A class nobody predicted has precision 0; a
/// class with no true samples has recall 0.
inline std::vector<ClassMetric> class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetric> out(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    auto& m = out[c];
    m.support = cm.support(c);
    m.predicted = cm.predicted(c);
    const auto tp = static_cast<double>(cm(c, c));
    m.precision = m.predicted ? tp / static_cast<double>(m.predicted) : 0.0;
    m.recall = m.support ? tp / static_cast<double>(m.support) : 0.0;
    m.f = f_measure(m.precision, m.recall);
  }
  return out;
}

/// Mean F over classes with nonzero support.
inline double total_f(std::span<const ClassMetric> metrics) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : metrics) {
    if (m.support == 0) continue;
    sum += m.f;
    ++n;
  }
  if (n == 0) raise(ErrorKind::kNoSupportedClass, "no class has evaluation support");
  return sum / static_cast<double>(n);
}

struct EvalSummary {
  ConfusionMatrix confusion{2};
  std::vector<ClassMetric> classes;
  double accuracy = 0.0;
  double total_f = 0.0;
  std::vector<std::size_t> included;  // class indices counted in total_f

  double sum_f() const {
    double s = 0.0;
    for (std::size_t c : included) s += classes[c].f;
    return s;
  }
};

inline EvalSummary summarize(const ConfusionMatrix& cm) {
  EvalSummary s{cm, class_metrics(cm), accuracy(cm), 0.0, {}};
  s.total_f = total_f(s.classes);
  for (std::size_t c = 0; c < s.classes.size(); ++c)
    if (s.classes[c].support > 0) s.included.push_back(c);
  return s;
}

/// Class entries are reported by score (class index + 1).
inline Json to_json(const EvalSummary& s) {
  Json classes = Json::array();
  for (std::size_t c = 0; c < s.classes.size(); ++c) {
    const auto& m = s.classes[c];
    classes.push_back({{"score", c + 1},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f_measure", m.f},
                       {"support", m.support},
                       {"predicted", m.predicted}});
  }
  Json matrix = Json::array();
  for (std::size_t t = 0; t < s.confusion.classes(); ++t) {
    Json row = Json::array();
    for (std::size_t p = 0; p < s.confusion.classes(); ++p) row.push_back(s.confusion(t, p));
    matrix.push_back(row);
  }
  Json included = Json::array();
  for (std::size_t c : s.included) included.push_back(c + 1);
  return Json{{"accuracy", s.accuracy},       {"total_f", s.total_f},
              {"classes", classes},           {"confusion", matrix},
              {"included_scores", included},  {"evaluated", s.confusion.total()}};
}

}  // namespace rsrl

#endif  // RSRL_METRICS_HPP
