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

#include "dualscribe/metrics.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "dualscribe/errors.h"
#include "dualscribe/parallel.h"
#include "dualscribe/text.h"
#include "json.hpp"

namespace dualscribe {

namespace {

// n-grams keyed by their tokens joined with a separator that Tokenize never
// produces.
using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts CountNgrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

void CheckPair(const EvalPair& pair) {
  if (pair.references.empty()) throw InvalidArgument("evaluation pair has no references");
}

// Order-independent sum: sorting first makes the result a function of the
// multiset of values.
double StableMean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace

BleuResult Bleu(std::span<const EvalPair> pairs, std::size_t max_n) {
  if (max_n < 1 || max_n > kMaxBleuOrder) {
    throw InvalidArgument("bleu: max_n must be in 1.." + std::to_string(kMaxBleuOrder));
  }
  std::vector<std::size_t> matched(max_n, 0), total(max_n, 0);
  BleuResult result;
  for (const auto& pair : pairs) {
    CheckPair(pair);
    const std::size_t c = pair.candidate.size();
    result.candidate_length += c;
    std::size_t best = pair.references[0].size();
    for (const auto& ref : pair.references) {
      const std::size_t r = ref.size();
      const std::size_t dr = r > c ? r - c : c - r;
      const std::size_t db = best > c ? best - c : c - best;
      if (dr < db || (dr == db && r < best)) best = r;
    }
    result.reference_length += best;

    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts cand = CountNgrams(pair.candidate, n);
      if (cand.empty()) continue;
      NgramCounts max_ref;
      for (const auto& ref : pair.references) {
        for (const auto& [gram, count] : CountNgrams(ref, n)) {
          auto& slot = max_ref[gram];
          slot = std::max(slot, count);
        }
      }
      for (const auto& [gram, count] : cand) {
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matched[n - 1] += std::min(count, it->second);
      }
      total[n - 1] += c - n + 1;
    }
  }

  const double c = static_cast<double>(result.candidate_length);
  const double r = static_cast<double>(result.reference_length);
  result.brevity_penalty = c == 0.0 ? 0.0 : (c > r ? 1.0 : std::exp(1.0 - r / c));
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < max_n; ++n) {
    const double p = total[n] == 0 ? 0.0
                                   : static_cast<double>(matched[n]) / static_cast<double>(total[n]);
    result.precisions.push_back(p);
    if (p == 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    result.scores.push_back(
        zero ? 0.0 : result.brevity_penalty * std::exp(log_sum / static_cast<double>(n + 1)));
  }
  return result;
}

std::size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double RougeLPair(const EvalPair& pair) {
  CheckPair(pair);
  double best = 0.0;
  for (const auto& ref : pair.references) {
    const std::size_t lcs = LcsLength(pair.candidate, ref);
    if (lcs == 0) continue;
    const double p = static_cast<double>(lcs) / static_cast<double>(pair.candidate.size());
    const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
    const double b2 = kRougeBeta * kRougeBeta;
    best = std::max(best, (1.0 + b2) * r * p / (r + b2 * p));
  }
  return best;
}

double RougeL(std::span<const EvalPair> pairs) {
  std::vector<double> scores(pairs.size());
  ParallelFor(pairs.size(), [&](std::size_t i) { scores[i] = RougeLPair(pairs[i]); });
  return StableMean(std::move(scores));
}

namespace {

struct TfIdf {
  std::array<std::map<std::string, double>, kCiderOrder> vec;
  std::array<double, kCiderOrder> norm{};
  std::size_t length = 0;
};

TfIdf Vectorize(const Tokens& tokens, const std::unordered_map<std::string, std::size_t>& df,
                double log_corpus) {
  TfIdf out;
  out.length = tokens.size();
  for (std::size_t n = 1; n <= kCiderOrder; ++n) {
    for (const auto& [gram, tf] : CountNgrams(tokens, n)) {
      auto it = df.find(gram);
      const double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
      const double w = static_cast<double>(tf) * (log_corpus - std::log(std::max(1.0, d)));
      out.vec[n - 1][gram] = w;
      out.norm[n - 1] += w * w;
    }
    out.norm[n - 1] = std::sqrt(out.norm[n - 1]);
  }
  return out;
}

std::array<double, kCiderOrder> Similarity(const TfIdf& hyp, const TfIdf& ref) {
  const double delta = static_cast<double>(hyp.length) - static_cast<double>(ref.length);
  const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
  std::array<double, kCiderOrder> sim{};
  for (std::size_t n = 0; n < kCiderOrder; ++n) {
    double dot = 0.0;
    for (const auto& [gram, h] : hyp.vec[n]) {
      auto it = ref.vec[n].find(gram);
      if (it != ref.vec[n].end()) dot += std::min(h, it->second) * it->second;
    }
    if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) dot /= hyp.norm[n] * ref.norm[n];
    sim[n] = dot * penalty;
  }
  return sim;
}

}  // namespace

std::vector<double> CiderDScores(std::span<const EvalPair> pairs) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& pair : pairs) {
    CheckPair(pair);
    std::unordered_set<std::string> seen;
    for (const auto& ref : pair.references) {
      for (std::size_t n = 1; n <= kCiderOrder; ++n) {
        for (const auto& entry : CountNgrams(ref, n)) seen.insert(entry.first);
      }
    }
    for (const auto& gram : seen) ++df[gram];
  }
  const double log_corpus = pairs.empty() ? 0.0 : std::log(static_cast<double>(pairs.size()));

  std::vector<double> scores(pairs.size());
  ParallelFor(pairs.size(), [&](std::size_t i) {
    const EvalPair& pair = pairs[i];
    const TfIdf hyp = Vectorize(pair.candidate, df, log_corpus);
    std::array<double, kCiderOrder> acc{};
    for (const auto& ref : pair.references) {
      const auto sim = Similarity(hyp, Vectorize(ref, df, log_corpus));
      for (std::size_t n = 0; n < kCiderOrder; ++n) acc[n] += sim[n];
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(kCiderOrder);
    scores[i] = mean / static_cast<double>(pair.references.size()) * 10.0;
  });
  return scores;
}

double CiderD(std::span<const EvalPair> pairs) { return StableMean(CiderDScores(pairs)); }

MetricScores ScoreCorpus(std::span<const EvalPair> pairs) {
  MetricScores scores;
  const BleuResult bleu = Bleu(pairs, kMaxBleuOrder);
  std::copy(bleu.scores.begin(), bleu.scores.end(), scores.bleu.begin());
  scores.rouge_l = RougeL(pairs);
  scores.cider_d = CiderD(pairs);
  return scores;
}

std::vector<TextPair> ReadTextPairs(std::istream& in, const std::string& source) {
  std::vector<TextPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("candidate") || !j["candidate"].is_string() ||
        !j.contains("references") || !j["references"].is_array()) {
      throw DataError(where + ": expected {id, candidate: string, references: [string]}");
    }
    TextPair pair;
    if (j.contains("id")) {
      pair.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    } else {
      pair.id = std::to_string(line_no);
    }
    pair.candidate = j["candidate"].get<std::string>();
    for (const auto& r : j["references"]) {
      if (!r.is_string()) throw DataError(where + ": non-string reference");
      pair.references.push_back(r.get<std::string>());
    }
    if (pair.references.empty()) throw DataError(where + ": pair '" + pair.id + "' has no references");
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void WriteTextPairs(std::ostream& out, std::span<const TextPair> pairs) {
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["candidate"] = p.candidate;
    j["references"] = p.references;
    out << j.dump() << '\n';
  }
}

std::vector<EvalPair> TokenizePairs(std::span<const TextPair> pairs) {
  std::vector<EvalPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    EvalPair e;
    e.candidate = Tokenize(p.candidate);
    for (const auto& r : p.references) e.references.push_back(Tokenize(r));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace dualscribe
