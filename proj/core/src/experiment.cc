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

#include "dualscribe/experiment.h"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>

#include "dualscribe/errors.h"
#include "dualscribe/parallel.h"
#include "dualscribe/random.h"
#include "json.hpp"
#include "json_values.h"

namespace dualscribe {

std::string FormatDouble(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

ExperimentSpec ExperimentSpec::Default() {
  ExperimentSpec spec;
  spec.model.d_model = 32;
  spec.model.memory_slots = 4;
  spec.model.n_enc_layers = 2;
  spec.model.n_dec_layers = 2;
  spec.model.n_heads = 2;
  spec.model.ffn_dim = 64;
  spec.model.max_len = 64;
  spec.model.dropout_rate = 0.1;
  spec.train.batch_size = 24;
  spec.train.epochs = 60;
  spec.decode.max_len = 60;
  spec.general = {BackboneKind::kStubGeneral, 4, 4, 16, 11, "", 0.1};
  spec.domain = {BackboneKind::kStubDomain, 4, 4, 16, 23, "", 0.1};
  return spec;
}

std::uint64_t ExperimentSpec::model_seed() const { return Rng::Derive(seed, 1); }

namespace {

const std::set<std::string, std::less<>>& KnownKeys() {
  static const std::set<std::string, std::less<>> keys = [] {
    std::set<std::string, std::less<>> k = {"seed", "variant", "min_freq", "test_fraction"};
    for (const char* m : {"d_model", "memory_slots", "n_enc_layers", "n_dec_layers", "n_heads",
                          "ffn_dim", "max_len", "dropout_rate"}) {
      k.insert(std::string("model.") + m);
    }
    for (const char* t : {"batch_size", "epochs", "max_steps", "lr", "lr_schedule", "beta1", "beta2",
                          "epsilon", "grad_clip_norm"}) {
      k.insert(std::string("train.") + t);
    }
    for (const char* d : {"strategy", "beam_width", "max_len"}) k.insert(std::string("decode.") + d);
    for (const char* side : {"general", "domain"}) {
      for (const char* b : {"kind", "grid_h", "grid_w", "out_channels", "seed", "path",
                            "bias_scale"}) {
        k.insert(std::string(side) + "." + b);
      }
    }
    return k;
  }();
  return keys;
}

void ApplyBackbone(const KeyValueConfig& c, const std::string& side, BackboneSpec& b) {
  try {
    b.kind = ParseBackboneKind(c.GetString(side + ".kind", std::string(BackboneKindName(b.kind))));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  b.grid_h = c.GetUnsigned(side + ".grid_h", b.grid_h);
  b.grid_w = c.GetUnsigned(side + ".grid_w", b.grid_w);
  b.out_channels = c.GetUnsigned(side + ".out_channels", b.out_channels);
  b.seed = c.GetUnsigned(side + ".seed", b.seed);
  b.path = c.GetString(side + ".path", b.path);
  b.bias_scale = c.GetDouble(side + ".bias_scale", b.bias_scale);
}

void WriteBackbone(KeyValueConfig& c, const std::string& side, const BackboneSpec& b) {
  c.Set(side + ".kind", std::string(BackboneKindName(b.kind)));
  c.Set(side + ".grid_h", std::to_string(b.grid_h));
  c.Set(side + ".grid_w", std::to_string(b.grid_w));
  c.Set(side + ".out_channels", std::to_string(b.out_channels));
  c.Set(side + ".seed", std::to_string(b.seed));
  if (!b.path.empty()) c.Set(side + ".path", b.path);
  c.Set(side + ".bias_scale", FormatDouble(b.bias_scale));
}

}  // namespace

void ExperimentSpec::Apply(const KeyValueConfig& c) {
  for (const auto& [key, value] : c.values()) {
    if (!KnownKeys().contains(key)) throw DataError("config: unknown key '" + key + "'");
  }
  seed = c.GetUnsigned("seed", seed);
  try {
    if (auto v = c.Get("variant")) variant = ParseVariant(*v);
    if (auto s = c.Get("decode.strategy")) decode.strategy = ParseDecodeStrategy(*s);
    if (auto s = c.Get("train.lr_schedule")) train.lr_schedule = ParseLrSchedule(*s);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  min_freq = c.GetUnsigned("min_freq", min_freq);
  test_fraction = c.GetDouble("test_fraction", test_fraction);

  model.d_model = c.GetUnsigned("model.d_model", model.d_model);
  model.memory_slots = c.GetUnsigned("model.memory_slots", model.memory_slots);
  model.n_enc_layers = c.GetUnsigned("model.n_enc_layers", model.n_enc_layers);
  model.n_dec_layers = c.GetUnsigned("model.n_dec_layers", model.n_dec_layers);
  model.n_heads = c.GetUnsigned("model.n_heads", model.n_heads);
  model.ffn_dim = c.GetUnsigned("model.ffn_dim", model.ffn_dim);
  model.max_len = c.GetUnsigned("model.max_len", model.max_len);
  model.dropout_rate = c.GetDouble("model.dropout_rate", model.dropout_rate);

  train.batch_size = c.GetUnsigned("train.batch_size", train.batch_size);
  train.epochs = c.GetUnsigned("train.epochs", train.epochs);
  train.max_steps = c.GetUnsigned("train.max_steps", train.max_steps);
  train.lr = c.GetDouble("train.lr", train.lr);
  train.beta1 = c.GetDouble("train.beta1", train.beta1);
  train.beta2 = c.GetDouble("train.beta2", train.beta2);
  train.epsilon = c.GetDouble("train.epsilon", train.epsilon);
  if (c.Contains("train.grad_clip_norm")) {
    const double clip = c.GetDouble("train.grad_clip_norm", 0.0);
    if (clip > 0.0) train.grad_clip_norm = clip;
    else train.grad_clip_norm.reset();
  }

  decode.beam_width = c.GetUnsigned("decode.beam_width", decode.beam_width);
  decode.max_len = c.GetUnsigned("decode.max_len", decode.max_len);
  ApplyBackbone(c, "general", general);
  ApplyBackbone(c, "domain", domain);
}

KeyValueConfig ExperimentSpec::ToConfig() const {
  KeyValueConfig c;
  c.Set("seed", std::to_string(seed));
  c.Set("variant", std::string(VariantName(variant)));
  c.Set("min_freq", std::to_string(min_freq));
  c.Set("test_fraction", FormatDouble(test_fraction));
  c.Set("model.d_model", std::to_string(model.d_model));
  c.Set("model.memory_slots", std::to_string(model.memory_slots));
  c.Set("model.n_enc_layers", std::to_string(model.n_enc_layers));
  c.Set("model.n_dec_layers", std::to_string(model.n_dec_layers));
  c.Set("model.n_heads", std::to_string(model.n_heads));
  c.Set("model.ffn_dim", std::to_string(model.ffn_dim));
  c.Set("model.max_len", std::to_string(model.max_len));
  c.Set("model.dropout_rate", FormatDouble(model.dropout_rate));
  c.Set("train.batch_size", std::to_string(train.batch_size));
  c.Set("train.epochs", std::to_string(train.epochs));
  c.Set("train.max_steps", std::to_string(train.max_steps));
  c.Set("train.lr", FormatDouble(train.lr));
  c.Set("train.lr_schedule", std::string(LrScheduleName(train.lr_schedule)));
  c.Set("train.beta1", FormatDouble(train.beta1));
  c.Set("train.beta2", FormatDouble(train.beta2));
  c.Set("train.epsilon", FormatDouble(train.epsilon));
  c.Set("train.grad_clip_norm", FormatDouble(train.grad_clip_norm.value_or(0.0)));
  c.Set("decode.strategy", std::string(DecodeStrategyName(decode.strategy)));
  c.Set("decode.beam_width", std::to_string(decode.beam_width));
  c.Set("decode.max_len", std::to_string(decode.max_len));
  WriteBackbone(c, "general", general);
  WriteBackbone(c, "domain", domain);
  return c;
}

std::vector<ImageFeatures> ExtractFeatures(std::span<const CorpusEntry> corpus,
                                           const ExperimentSpec& spec) {
  const bool need_general = spec.variant != Variant::kDomainOnly;
  const bool need_domain = spec.variant != Variant::kGeneralOnly;
  std::optional<Backbone> general, domain;
  if (need_general) general.emplace(spec.general);
  if (need_domain) domain.emplace(spec.domain);

  auto run = [](const Backbone& b, const CorpusEntry& e) {
    if (const auto* key = std::get_if<FeatureKey>(&e.image)) {
      if (b.spec().kind != BackboneKind::kPrecomputed) {
        throw DataError("entry '" + e.id + "' has only a feature key but the " +
                        std::string(BackboneKindName(b.spec().kind)) +
                        " backbone needs pixels");
      }
      return b.Extract(nullptr, key->key);
    }
    return b.Extract(&std::get<SyntheticImage>(e.image), e.id);
  };

  std::vector<ImageFeatures> out(corpus.size());
  ParallelFor(corpus.size(), [&](std::size_t i) {
    if (general) out[i].general = run(*general, corpus[i]);
    if (domain) out[i].domain = run(*domain, corpus[i]);
  });
  return out;
}

InputGeometry GeometryOf(const ImageFeatures& f) {
  InputGeometry g;
  if (f.general) g.general = {f.general->height(), f.general->width(), f.general->channels()};
  if (f.domain) g.domain = {f.domain->height(), f.domain->width(), f.domain->channels()};
  return g;
}

std::vector<TextPair> GenerateReports(const ReportModel& model, const Vocabulary& vocab,
                                      std::span<const CorpusEntry> entries,
                                      std::span<const ImageFeatures> features,
                                      const DecodeConfig& decode) {
  if (entries.size() != features.size()) {
    throw InvalidArgument("generate: entries and features differ in length");
  }
  std::vector<TextPair> out(entries.size());
  ParallelFor(entries.size(), [&](std::size_t i) {
    const std::vector<int> ids = Generate(model, features[i], decode);
    const std::vector<std::string> tokens = vocab.Decode(ids);
    out[i] = TextPair{entries[i].id, Detokenize(tokens), {entries[i].report}};
  });
  return out;
}

MetricReport ScoreGenerations(std::span<const TextPair> generations, const RuleSet& rules) {
  MetricReport report;
  const std::vector<EvalPair> pairs = TokenizePairs(generations);
  report.nlg = ScoreCorpus(pairs);
  std::vector<std::string> predicted, truth;
  for (const auto& g : generations) {
    predicted.push_back(g.candidate);
    truth.push_back(g.references.at(0));
  }
  report.clinical = ClinicalF1FromText(predicted, truth, rules);
  report.test_count = generations.size();
  report.scored_count = pairs.size();
  return report;
}

ExperimentResult RunExperiment(const ExperimentSpec& spec, std::span<const CorpusEntry> corpus,
                               const ExperimentHooks& hooks) {
  spec.train.Validate();
  spec.decode.Validate();
  if (corpus.empty()) throw InvalidArgument("experiment: empty corpus");
  const CorpusSplit split = SplitCorpus(corpus, spec.test_fraction, spec.split_seed());
  const std::vector<ImageFeatures> features = ExtractFeatures(corpus, spec);

  std::vector<std::vector<std::string>> train_tokens;
  for (std::size_t i : split.train) train_tokens.push_back(Tokenize(corpus[i].report));

  ExperimentResult result;
  result.vocab = Vocabulary::Build(train_tokens, spec.min_freq);
  ModelConfig config = spec.model;
  config.vocab_size = result.vocab.size();
  result.model = std::make_unique<ReportModel>(config, spec.variant,
                                               GeometryOf(features[split.train.at(0)]),
                                               spec.model_seed());
  std::mutex hook_mu;
  if (hooks.on_encoder_input) {
    result.model->set_input_hook([&hooks, &hook_mu, variant = spec.variant](std::string_view r) {
      std::lock_guard<std::mutex> lock(hook_mu);
      hooks.on_encoder_input(variant, r);
    });
  }

  std::vector<TrainingExample> examples;
  for (std::size_t k = 0; k < split.train.size(); ++k) {
    examples.push_back({&features[split.train[k]], result.vocab.Encode(train_tokens[k])});
  }
  TrainConfig train = spec.train;
  train.seed = Rng::Derive(spec.seed, 2);
  result.losses = Train(*result.model, examples, train, hooks.on_step);

  std::vector<CorpusEntry> test_entries;
  std::vector<ImageFeatures> test_features;
  for (std::size_t i : split.test) {
    test_entries.push_back(corpus[i]);
    test_features.push_back(features[i]);
  }
  result.generations =
      GenerateReports(*result.model, result.vocab, test_entries, test_features, spec.decode);
  result.model->set_input_hook({});

  result.report = ScoreGenerations(result.generations);
  result.report.variant = spec.variant;
  result.report.train_count = split.train.size();
  result.report.final_loss = result.losses.empty() ? 0.0 : result.losses.back().loss;
  return result;
}

std::vector<MetricReport> Compare(const ExperimentSpec& spec, std::span<const CorpusEntry> corpus,
                                  const ExperimentHooks& hooks) {
  std::vector<MetricReport> reports;
  for (Variant v : kAllVariants) {
    ExperimentSpec s = spec;
    s.variant = v;
    reports.push_back(RunExperiment(s, corpus, hooks).report);
  }
  return reports;
}

void WriteSummaryCsv(std::ostream& out, std::span<const MetricReport> reports) {
  out << "variant,bleu_1,bleu_2,bleu_3,bleu_4,rouge_l,cider_d,chexbert_f1\n";
  for (const auto& r : reports) {
    out << VariantName(r.variant);
    for (double b : r.nlg.bleu) out << ',' << FormatDouble(b);
    out << ',' << FormatDouble(r.nlg.rouge_l) << ',' << FormatDouble(r.nlg.cider_d) << ','
        << FormatDouble(r.clinical.overall.value) << '\n';
  }
}

void WriteConditionCsv(std::ostream& out, std::span<const MetricReport> reports) {
  out << "condition,frequency";
  for (const auto& r : reports) out << ',' << VariantName(r.variant);
  out << '\n';
  for (Condition c : AllConditions()) {
    const double freq = reports.empty() ? 0.0 : reports[0].clinical.frequency[Index(c)];
    out << ConditionName(c) << ',' << FormatDouble(freq);
    for (const auto& r : reports) out << ',' << FormatDouble(r.clinical.per_condition[Index(c)].value);
    out << '\n';
  }
}

namespace {

nlohmann::ordered_json ReportJson(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["variant"] = VariantName(r.variant);
  for (std::size_t n = 0; n < kMaxBleuOrder; ++n) j["bleu_" + std::to_string(n + 1)] = r.nlg.bleu[n];
  j["rouge_l"] = r.nlg.rouge_l;
  j["cider_d"] = r.nlg.cider_d;
  j["chexbert_f1"] = r.clinical.overall.value;
  j["train_count"] = r.train_count;
  j["test_count"] = r.test_count;
  j["scored_count"] = r.scored_count;
  j["final_loss"] = r.final_loss;
  return j;
}

}  // namespace

std::string MetricReportJson(const MetricReport& report) {
  nlohmann::ordered_json j = ReportJson(report);
  j["clinical"] = internal::ClinicalF1Json(report.clinical);
  return j.dump(2);
}

std::string ComparisonJson(const ExperimentSpec& spec, std::span<const MetricReport> reports,
                           std::size_t corpus_size) {
  nlohmann::ordered_json j;
  j["banner"] = kSyntheticBanner;
  j["metric_scale"] = "fractions in [0, 1]; cider_d in [0, 10]";
  j["clinical_f1_averaging"] = ClinicalF1Report::kAveraging;
  j["corpus_size"] = corpus_size;
  j["seed"] = spec.seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  const KeyValueConfig settings = spec.ToConfig();
  for (const auto& [k, v] : settings.values()) {
    if (k != "variant") config[k] = v;
  }
  j["config"] = std::move(config);

  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& r : reports) summary.push_back(ReportJson(r));
  j["summary"] = std::move(summary);

  nlohmann::ordered_json conditions = nlohmann::ordered_json::array();
  for (Condition c : AllConditions()) {
    nlohmann::ordered_json row;
    row["condition"] = ConditionName(c);
    row["frequency"] = reports.empty() ? 0.0 : reports[0].clinical.frequency[Index(c)];
    nlohmann::ordered_json f1 = nlohmann::ordered_json::object();
    nlohmann::ordered_json no_support = nlohmann::ordered_json::object();
    for (const auto& r : reports) {
      f1[std::string(VariantName(r.variant))] = r.clinical.per_condition[Index(c)].value;
      no_support[std::string(VariantName(r.variant))] = r.clinical.per_condition[Index(c)].no_support;
    }
    row["f1"] = std::move(f1);
    row["no_support"] = std::move(no_support);
    conditions.push_back(std::move(row));
  }
  j["conditions"] = std::move(conditions);

  nlohmann::ordered_json clinical = nlohmann::ordered_json::object();
  for (const auto& r : reports) {
    clinical[std::string(VariantName(r.variant))] = internal::ClinicalF1Json(r.clinical);
  }
  j["clinical"] = std::move(clinical);
  return j.dump(2);
}

void WriteComparison(const std::filesystem::path& dir, const ExperimentSpec& spec,
                     std::span<const MetricReport> reports, std::size_t corpus_size) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write '" + (dir / name).string() + "'");
    return out;
  };
  {
    auto out = open("compare.json");
    out << ComparisonJson(spec, reports, corpus_size) << '\n';
  }
  {
    auto out = open("summary.csv");
    WriteSummaryCsv(out, reports);
  }
  {
    auto out = open("conditions.csv");
    WriteConditionCsv(out, reports);
  }
}

}  // namespace dualscribe
