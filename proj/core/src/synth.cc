// Copyright 2026 The DualScribe Authors
// SPDX-License-Identifier: Apache-2.0
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

#include "dualscribe/synth.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "dualscribe/errors.h"
#include "dualscribe/random.h"

namespace dualscribe {

namespace {

constexpr std::size_t kLayout = 4;

std::string Join(const TokenSequence& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string Capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

void AddBlob(std::vector<double>& pixels, std::size_t size, double cy, double cx,
             double amplitude, double sigma) {
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      pixels[r * size + c] += amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
    }
  }
}

}  // namespace

void SynthConfig::Validate() const {
  if (n < 1) throw InvalidArgument("synth: n must be >= 1");
  if (image_size < 16 || image_size % kLayout != 0) {
    throw InvalidArgument("synth: image_size must be a multiple of 4 and >= 16");
  }
  if (!(max_frequency > 0.0 && max_frequency <= 1.0)) {
    throw InvalidArgument("synth: max_frequency must be in (0, 1]");
  }
  if (!(skew >= 0.0)) throw InvalidArgument("synth: skew must be >= 0");
  if (!(uncertain_rate >= 0.0 && negative_rate >= 0.0 && uncertain_rate + negative_rate <= 1.0)) {
    throw InvalidArgument("synth: mention rates must be >= 0 and sum to at most 1");
  }
  if (!(noise >= 0.0)) throw InvalidArgument("synth: noise must be >= 0");
}

const std::array<Condition, kNumConditions - 1>& FrequencyOrder() {
  static const std::array<Condition, kNumConditions - 1> order = {
      Condition::kSupportDevices, Condition::kPleuralEffusion,
      Condition::kLungOpacity,    Condition::kAtelectasis,
      Condition::kCardiomegaly,   Condition::kEdema,
      Condition::kPneumonia,      Condition::kConsolidation,
      Condition::kPneumothorax,   Condition::kEnlargedCardiomediastinum,
      Condition::kFracture,       Condition::kLungLesion,
      Condition::kPleuralOther,
  };
  return order;
}

std::size_t TargetPositiveCount(const SynthConfig& config, std::size_t rank) {
  const double expected = static_cast<double>(config.n) * config.max_frequency /
                          std::pow(static_cast<double>(rank + 1), config.skew);
  // Nudge so exact halves such as 35 / 10 are not rounded down by
  // representation error.
  return static_cast<std::size_t>(std::llround(expected * (1.0 + 1e-12)));
}

LabelVector CanonicalLabels(LabelVector labels) {
  bool any = false;
  for (Condition c : FrequencyOrder()) any = any || labels[c] == Label::kPositive;
  labels[Condition::kNoFinding] = any ? Label::kBlank : Label::kPositive;
  return labels;
}

std::string SyntheticReport(const LabelVector& labels) {
  const RuleSet& rules = RuleSet::Default();
  std::string report;
  auto sentence = [&](const std::string& s) {
    if (!report.empty()) report.push_back(' ');
    report += s;
  };
  if (CanonicalLabels(labels)[Condition::kNoFinding] == Label::kPositive) {
    sentence(Capitalized(Join(rules.rules(Condition::kNoFinding).phrases[0])) + ".");
  }
  for (Condition c : FrequencyOrder()) {
    const std::string phrase = Join(rules.rules(c).phrases[0]);
    switch (labels[c]) {
      case Label::kPositive: sentence(Capitalized(phrase) + " is present."); break;
      case Label::kUncertain: sentence("Possible " + phrase + "."); break;
      case Label::kNegative: sentence("No " + phrase + "."); break;
      case Label::kBlank: break;
    }
  }
  return report;
}

SyntheticImage RenderImage(const LabelVector& labels, const SynthConfig& config,
                           std::uint64_t seed) {
  const std::size_t size = config.image_size;
  const double cell = static_cast<double>(size) / kLayout;
  Rng rng(seed);
  std::vector<double> pixels(size * size);
  for (auto& p : pixels) p = 0.1 + config.noise * rng.Normal();
  const auto& order = FrequencyOrder();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double cy = (static_cast<double>(k / kLayout) + 0.5) * cell - 0.5 + rng.Uniform(-1.0, 1.0);
    const double cx = (static_cast<double>(k % kLayout) + 0.5) * cell - 0.5 + rng.Uniform(-1.0, 1.0);
    switch (labels[order[k]]) {
      case Label::kPositive: AddBlob(pixels, size, cy, cx, 0.8, cell / 5.0); break;
      case Label::kUncertain: AddBlob(pixels, size, cy, cx, 0.35, cell / 5.0); break;
      case Label::kNegative: AddBlob(pixels, size, cy, cx, 0.15, cell / 10.0); break;
      case Label::kBlank: break;
    }
  }
  for (auto& p : pixels) p = std::clamp(p, 0.0, 1.0);
  return SyntheticImage(size, size, std::move(pixels));
}

std::vector<CorpusEntry> SynthesizeCorpus(const SynthConfig& config) {
  config.Validate();
  const std::size_t n = config.n;
  std::vector<LabelVector> labels(n);
  const auto& order = FrequencyOrder();
  for (std::size_t k = 0; k < order.size(); ++k) {
    // Exact positive count on a seeded subset, then optional mentions.
    Rng rng(Rng::Derive(config.seed, 100 + k));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.Shuffle(idx);
    const std::size_t positives = std::min(n, TargetPositiveCount(config, k));
    for (std::size_t r = 0; r < n; ++r) {
      Label& l = labels[idx[r]][order[k]];
      if (r < positives) {
        l = Label::kPositive;
        continue;
      }
      const double u = rng.Uniform();
      if (u < config.uncertain_rate) l = Label::kUncertain;
      else if (u < config.uncertain_rate + config.negative_rate) l = Label::kNegative;
    }
  }

  std::vector<CorpusEntry> corpus;
  corpus.reserve(n);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n - 1).size());
  for (std::size_t i = 0; i < n; ++i) {
    const LabelVector truth = CanonicalLabels(labels[i]);
    std::string id = std::to_string(i);
    id = "synth-" + std::string(width - id.size(), '0') + id;
    corpus.push_back(CorpusEntry{id, RenderImage(truth, config, Rng::Derive(config.seed, 10000 + i)),
                                 SyntheticReport(truth), truth});
  }
  return corpus;
}

}  // namespace dualscribe
