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

#include "dualscribe/decoding.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dualscribe/errors.h"

namespace dualscribe {

void DecodeConfig::Validate() const {
  if (beam_width < 1) throw InvalidArgument("decode config: beam_width must be >= 1");
  if (max_len < 1) throw InvalidArgument("decode config: max_len must be >= 1");
}

DecodeStrategy ParseDecodeStrategy(std::string_view name) {
  if (name == "greedy") return DecodeStrategy::kGreedy;
  if (name == "beam") return DecodeStrategy::kBeam;
  throw InvalidArgument("unknown decode strategy '" + std::string(name) + "'");
}

std::string_view DecodeStrategyName(DecodeStrategy strategy) {
  return strategy == DecodeStrategy::kGreedy ? "greedy" : "beam";
}

double Hypothesis::NormalizedScore() const {
  const std::size_t length = tokens.size() + (finished ? 1 : 0);
  return length == 0 ? 0.0 : log_prob / static_cast<double>(length);
}

namespace {

// Log-softmax of the last position's logits for every row of the batch.
std::vector<std::vector<double>> NextTokenLogProbs(const ReportModel& model,
                                                   const EncoderTrace& trace,
                                                   const std::vector<std::vector<int>>& prefixes) {
  TokenBatch batch;
  batch.batch = prefixes.size();
  batch.length = prefixes[0].size() + 1;
  for (const auto& p : prefixes) {
    batch.ids.push_back(kBosId);
    batch.ids.insert(batch.ids.end(), p.begin(), p.end());
  }
  const Tensor logits = model.Logits(batch, trace);
  const std::size_t vocab = logits.dim(2);
  auto data = logits.data();
  std::vector<std::vector<double>> out(prefixes.size(), std::vector<double>(vocab));
  for (std::size_t b = 0; b < prefixes.size(); ++b) {
    const double* row = data.data() + (b * batch.length + batch.length - 1) * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(row[v] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t v = 0; v < vocab; ++v) out[b][v] = row[v] - lse;
  }
  return out;
}

bool Emittable(std::size_t token) { return token != kPadId && token != kBosId; }

struct Candidate {
  double score;
  std::size_t beam;
  int token;
};

// Every hypothesis that left the beam: those that emitted EOS plus the live
// ones cut off by the cap.
std::vector<Hypothesis> BeamSearch(const ReportModel& model, const EncoderTrace& trace,
                                   std::size_t cap, std::size_t width) {
  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> finished;
  for (std::size_t step = 0; step < cap && !live.empty(); ++step) {
    std::vector<std::vector<int>> prefixes;
    for (const auto& h : live) prefixes.push_back(h.tokens);
    const auto log_probs = NextTokenLogProbs(
        model, live.size() == 1 ? trace : RepeatTrace(trace, live.size()), prefixes);

    // Live hypotheses all have step + 1 emitted tokens after extension, so
    // ranking by the length-normalized score equals ranking by log_prob.
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < live.size(); ++b) {
      for (std::size_t v = 0; v < log_probs[b].size(); ++v) {
        if (!Emittable(v)) continue;
        candidates.push_back({live[b].log_prob + log_probs[b][v], b, static_cast<int>(v)});
      }
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [](const Candidate& x, const Candidate& y) {
                        if (x.score != y.score) return x.score > y.score;
                        if (x.beam != y.beam) return x.beam < y.beam;
                        return x.token < y.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t r = 0; r < keep; ++r) {
      const Candidate& c = candidates[r];
      Hypothesis h = live[c.beam];
      h.log_prob = c.score;
      if (c.token == kEosId) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  for (auto& h : live) finished.push_back(std::move(h));
  return finished;
}

// Highest normalized score among hypotheses whose raw log-probability is at
// least `floor`; earlier entries win ties.
const Hypothesis* BestAbove(const std::vector<Hypothesis>& hypotheses, double floor) {
  const Hypothesis* best = nullptr;
  for (const auto& h : hypotheses) {
    if (h.log_prob < floor) continue;
    if (best == nullptr || h.NormalizedScore() > best->NormalizedScore()) best = &h;
  }
  return best;
}

}  // namespace

Hypothesis Decode(const ReportModel& model, const ImageFeatures& image,
                  const DecodeConfig& config) {
  config.Validate();
  if (Tape::Active() != nullptr) {
    throw InvalidArgument("decode must not run while a tape is recording");
  }
  const ImageFeatures* batch[] = {&image};
  const EncoderTrace trace = model.EncodeImages(batch);
  const std::size_t cap = std::min(config.max_len, model.config().max_len);
  const std::size_t width =
      config.strategy == DecodeStrategy::kGreedy ? 1 : config.beam_width;

  const std::vector<Hypothesis> greedy = BeamSearch(model, trace, cap, 1);
  const Hypothesis greedy_best =
      *BestAbove(greedy, -std::numeric_limits<double>::infinity());
  if (width == 1) return greedy_best;

  // Length normalization can prefer a longer hypothesis that the model finds
  // less likely overall than the greedy one. The greedy result is a floor:
  // beam search never returns a lower total log-probability.
  std::vector<Hypothesis> pool = BeamSearch(model, trace, cap, width);
  pool.push_back(greedy_best);
  return *BestAbove(pool, greedy_best.log_prob);
}

std::vector<int> Generate(const ReportModel& model, const ImageFeatures& image,
                          const DecodeConfig& config) {
  return Decode(model, image, config).tokens;
}

double SequenceLogProb(const ReportModel& model, const ImageFeatures& image,
                       std::span<const int> tokens, bool with_eos) {
  const ImageFeatures* batch[] = {&image};
  const EncoderTrace trace = model.EncodeImages(batch);
  TokenBatch input;
  input.batch = 1;
  input.length = tokens.size() + 1;
  input.ids.push_back(kBosId);
  input.ids.insert(input.ids.end(), tokens.begin(), tokens.end());
  const Tensor logits = model.Logits(input, trace);
  const std::size_t vocab = logits.dim(2);
  auto data = logits.data();
  double total = 0.0;
  const std::size_t scored = tokens.size() + (with_eos ? 1 : 0);
  for (std::size_t t = 0; t < scored && t < input.length; ++t) {
    const double* row = data.data() + t * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(row[v] - mx);
    const int target = t < tokens.size() ? tokens[t] : kEosId;
    total += row[target] - (mx + std::log(z));
  }
  return total;
}

}  // namespace dualscribe
