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

#pragma once

// Corpus-level BLEU-1..4, ROUGE-L and CIDEr-D over tokenized reports.
// Scores are on the [0, 1] scale (CIDEr-D on [0, 10]); multiply by 100 for
// the percent convention some tables use.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dualscribe {

using Tokens = std::vector<std::string>;

struct EvalPair {
  Tokens candidate;
  std::vector<Tokens> references;  // at least one
};

inline constexpr std::size_t kMaxBleuOrder = 4;

struct BleuResult {
  std::vector<double> scores;      // BLEU-1..max_n
  std::vector<double> precisions;  // clipped p_1..p_max_n
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  // closest-length references, summed
};

// Aggregate clipped n-gram counts over the corpus, no smoothing. The
// effective reference length of a pair is the reference length closest to
// the candidate's, ties going to the shorter one.
BleuResult Bleu(std::span<const EvalPair> pairs, std::size_t max_n = kMaxBleuOrder);

inline constexpr double kRougeBeta = 1.2;
std::size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b);
// Max over references of the LCS F-score for one pair.
double RougeLPair(const EvalPair& pair);
// Mean of RougeLPair over the corpus.
double RougeL(std::span<const EvalPair> pairs);

inline constexpr double kCiderSigma = 6.0;
inline constexpr std::size_t kCiderOrder = 4;
// Per-pair CIDEr-D scores. Document frequencies count, for every n-gram, the
// pairs whose reference set contains it; the IDF uses log(#pairs), so a
// single-pair corpus scores 0.
std::vector<double> CiderDScores(std::span<const EvalPair> pairs);
double CiderD(std::span<const EvalPair> pairs);

struct MetricScores {
  std::array<double, kMaxBleuOrder> bleu{};  // BLEU-1..4
  double rouge_l = 0.0;
  double cider_d = 0.0;
};

MetricScores ScoreCorpus(std::span<const EvalPair> pairs);

// One line of evaluation input, before tokenization.
struct TextPair {
  std::string id;
  std::string candidate;
  std::vector<std::string> references;
};

// JSON Lines {id, candidate, references: [..]}; blank lines are skipped.
// `source` names the stream in DataError messages.
std::vector<TextPair> ReadTextPairs(std::istream& in, const std::string& source);
void WriteTextPairs(std::ostream& out, std::span<const TextPair> pairs);

// Tokenizes candidates and references with Tokenize().
std::vector<EvalPair> TokenizePairs(std::span<const TextPair> pairs);

}  // namespace dualscribe
