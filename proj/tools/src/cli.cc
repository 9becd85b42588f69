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

#include "cli.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualscribe/checkpoint.h"
#include "dualscribe/corpus.h"
#include "dualscribe/errors.h"
#include "dualscribe/experiment.h"
#include "dualscribe/labeler.h"
#include "dualscribe/metrics.h"
#include "dualscribe/synth.h"
#include "json.hpp"

namespace dualscribe::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModelFile = "model.m2ck";
constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kSpecFile = "experiment.toml";
constexpr const char* kLossFile = "loss.csv";

std::ofstream OpenOut(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream OpenIn(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "': no such readable file");
  return in;
}

// Writes to `path`, or to `fallback` when the path is empty.
template <typename Fn>
void Emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  auto out = OpenOut(path);
  write(out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

// Experiment settings shared by train and compare: an optional config file
// plus flag overrides, later ones winning.
struct SpecFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> max_steps;
  std::optional<double> lr;

  void Register(CLI::App* app, bool with_variant) {
    app->add_option("--config", config_path, "TOML-style experiment config");
    app->add_option("--set", sets, "Override a config key (key=value); repeatable");
    app->add_option("--seed", seed, "Experiment seed");
    if (with_variant) {
      app->add_option("--variant", variant, "general_only | domain_only | double_feature");
    }
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--max-steps", max_steps, "Cap on optimizer steps (0 = none)");
    app->add_option("--lr", lr, "Adam learning rate");
  }

  ExperimentSpec Build() const {
    KeyValueConfig config;
    if (!config_path.empty()) config = KeyValueConfig::FromFile(config_path);
    KeyValueConfig overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw InvalidArgument("--set expects key=value, got '" + s + "'");
      }
      overrides.Set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) overrides.Set("seed", std::to_string(*seed));
    if (variant) overrides.Set("variant", *variant);
    if (epochs) overrides.Set("train.epochs", std::to_string(*epochs));
    if (max_steps) overrides.Set("train.max_steps", std::to_string(*max_steps));
    if (lr) overrides.Set("train.lr", FormatDouble(*lr));
    config.Merge(overrides);
    ExperimentSpec spec = ExperimentSpec::Default();
    spec.Apply(config);
    return spec;
  }
};

std::vector<CorpusEntry> Select(const std::vector<CorpusEntry>& corpus, const ExperimentSpec& spec,
                                const std::string& split) {
  if (split == "all") return corpus;
  const CorpusSplit s = SplitCorpus(corpus, spec.test_fraction, spec.split_seed());
  std::vector<CorpusEntry> out;
  for (std::size_t i : split == "train" ? s.train : s.test) out.push_back(corpus[i]);
  return out;
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  SynthConfig config;
  std::string out;
};

void DoSynth(const SynthArgs& a, std::ostream& out) {
  const auto corpus = SynthesizeCorpus(a.config);
  Emit(a.out, out, [&](std::ostream& o) { WriteCorpus(o, corpus); });
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  SpecFlags flags;
  std::string corpus;
  std::string out_dir;
};

void DoTrain(const TrainArgs& a, std::ostream& out) {
  const ExperimentSpec spec = a.flags.Build();
  const auto corpus = ReadCorpusFile(a.corpus);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);

  // Trains on the train split; the held-out split is scored on the way.
  ExperimentResult result = RunExperiment(spec, corpus);
  SaveCheckpoint(dir / kModelFile, result.model->config(), result.model->parameters());
  {
    auto o = OpenOut(dir / kVocabFile);
    result.vocab.Write(o);
  }
  {
    auto o = OpenOut(dir / kSpecFile);
    spec.ToConfig().Write(o);
  }
  {
    auto o = OpenOut(dir / kLossFile);
    WriteLossCsv(o, result.losses);
  }
  out << "trained " << VariantName(spec.variant) << " for " << result.losses.size()
      << " steps; final loss " << FormatDouble(result.report.final_loss) << "; wrote "
      << dir.string() << '\n';
}

// --- generate ------------------------------------------------------------

struct GenerateArgs {
  std::string model_dir;
  std::string corpus;
  std::string out;
  std::string split = "test";
  std::optional<std::string> strategy;
  std::optional<std::size_t> beam_width;
  std::optional<std::size_t> max_len;
};

void DoGenerate(const GenerateArgs& a, std::ostream& out) {
  const fs::path dir = a.model_dir;
  ExperimentSpec spec = ExperimentSpec::Default();
  spec.Apply(KeyValueConfig::FromFile(dir / kSpecFile));
  if (a.strategy) spec.decode.strategy = ParseDecodeStrategy(*a.strategy);
  if (a.beam_width) spec.decode.beam_width = *a.beam_width;
  if (a.max_len) spec.decode.max_len = *a.max_len;
  spec.decode.Validate();

  Vocabulary vocab;
  {
    auto in = OpenIn(dir / kVocabFile);
    vocab = Vocabulary::Read(in);
  }
  const Checkpoint checkpoint = ReadCheckpoint(dir / kModelFile);
  if (checkpoint.config.vocab_size != vocab.size()) {
    throw DataError("checkpoint vocabulary size " + std::to_string(checkpoint.config.vocab_size) +
                    " does not match " + (dir / kVocabFile).string() + " (" +
                    std::to_string(vocab.size()) + " tokens)");
  }
  const auto corpus = ReadCorpusFile(a.corpus);
  const auto entries = Select(corpus, spec, a.split);
  if (entries.empty()) throw DataError("no corpus entries in split '" + a.split + "'");
  const auto features = ExtractFeatures(entries, spec);
  ReportModel model(checkpoint.config, spec.variant, GeometryOf(features[0]), spec.model_seed());
  LoadCheckpoint(dir / kModelFile, checkpoint.config, model.parameters());
  const auto generations = GenerateReports(model, vocab, entries, features, spec.decode);
  Emit(a.out, out, [&](std::ostream& o) { WriteTextPairs(o, generations); });
}

// --- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string input;
  std::string candidates;
  std::string references;
  std::string rules;
  std::string out;
};

// Reads {id, candidate|report} and {id, references|report} files and joins
// them on id, in candidate-file order.
std::vector<TextPair> JoinById(const std::string& cand_path, const std::string& ref_path) {
  auto read = [](const std::string& path, bool candidates) {
    auto in = OpenIn(path);
    std::vector<std::pair<std::string, nlohmann::json>> rows;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path + ":" + std::to_string(n) + ": invalid JSON: " + e.what());
      }
      if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
        throw DataError(path + ":" + std::to_string(n) + ": expected an object with a string id");
      }
      const char* field = candidates ? "candidate" : "references";
      if (!j.contains(field) && !j.contains("report")) {
        throw DataError(path + ":" + std::to_string(n) + ": missing '" + field + "' or 'report'");
      }
      rows.emplace_back(j["id"].get<std::string>(), std::move(j));
    }
    return rows;
  };
  const auto cands = read(cand_path, true);
  std::map<std::string, std::vector<std::string>> refs;
  for (const auto& [id, j] : read(ref_path, false)) {
    std::vector<std::string> list;
    try {
      if (j.contains("references")) {
        list = j["references"].get<std::vector<std::string>>();
      } else {
        list.push_back(j["report"].get<std::string>());
      }
    } catch (const nlohmann::json::exception&) {
      throw DataError(ref_path + ": entry '" + id + "' has malformed references");
    }
    if (list.empty()) throw DataError(ref_path + ": entry '" + id + "' has no references");
    if (!refs.emplace(id, std::move(list)).second) {
      throw DataError(ref_path + ": duplicate id '" + id + "'");
    }
  }
  std::vector<TextPair> pairs;
  for (const auto& [id, j] : cands) {
    auto it = refs.find(id);
    if (it == refs.end()) throw DataError(ref_path + ": no references for id '" + id + "'");
    const auto& field = j.contains("candidate") ? j["candidate"] : j["report"];
    if (!field.is_string()) throw DataError(cand_path + ": entry '" + id + "' candidate is not a string");
    pairs.push_back({id, field.get<std::string>(), it->second});
  }
  return pairs;
}

void DoEvaluate(const EvaluateArgs& a, std::ostream& out) {
  std::vector<TextPair> pairs;
  if (!a.input.empty()) {
    auto in = OpenIn(a.input);
    pairs = ReadTextPairs(in, a.input);
  } else {
    pairs = JoinById(a.candidates, a.references);
  }
  if (pairs.empty()) throw DataError("no evaluation pairs");
  const RuleSet rules = a.rules.empty() ? RuleSet::Default() : RuleSet::FromFile(a.rules);
  const MetricReport report = ScoreGenerations(pairs, rules);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(MetricReportJson(report));
  j.erase("variant");
  j.erase("train_count");
  j.erase("final_loss");
  j["pairs"] = pairs.size();
  Emit(a.out, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

// --- label ---------------------------------------------------------------

struct LabelArgs {
  std::vector<std::string> texts;
  std::string input;
  std::string rules;
  std::string out;
};

void DoLabel(const LabelArgs& a, std::ostream& out) {
  const RuleSet rules = a.rules.empty() ? RuleSet::Default() : RuleSet::FromFile(a.rules);
  std::vector<std::pair<std::string, std::string>> items;  // id, text
  for (std::size_t i = 0; i < a.texts.size(); ++i) items.emplace_back(std::to_string(i + 1), a.texts[i]);
  if (!a.input.empty()) {
    // JSON Lines with "report" or "candidate"; any other line is raw text.
    auto in = OpenIn(a.input);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_object()) {
        std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                 : std::to_string(n);
        if (j.contains("report") && j["report"].is_string()) {
          items.emplace_back(id, j["report"].get<std::string>());
        } else if (j.contains("candidate") && j["candidate"].is_string()) {
          items.emplace_back(id, j["candidate"].get<std::string>());
        } else {
          throw DataError(a.input + ":" + std::to_string(n) + ": no 'report' or 'candidate' text");
        }
      } else {
        items.emplace_back(std::to_string(n), line);
      }
    }
  }
  if (items.empty()) throw InvalidArgument("label: give --text or --input");
  Emit(a.out, out, [&](std::ostream& o) {
    for (const auto& [id, text] : items) {
      const LabelVector labels = LabelReport(text, rules);
      nlohmann::ordered_json j;
      j["id"] = id;
      nlohmann::ordered_json l = nlohmann::ordered_json::object();
      for (Condition c : AllConditions()) l[std::string(ConditionName(c))] = LabelName(labels[c]);
      j["labels"] = std::move(l);
      o << j.dump() << '\n';
    }
  });
}

// --- compare -------------------------------------------------------------

struct CompareArgs {
  SpecFlags flags;
  std::string corpus;
  std::size_t synth_n = 200;
  std::string out_dir = "compare_out";
};

void DoCompare(const CompareArgs& a, std::ostream& out) {
  const ExperimentSpec spec = a.flags.Build();
  std::vector<CorpusEntry> corpus;
  if (!a.corpus.empty()) {
    corpus = ReadCorpusFile(a.corpus);
  } else {
    SynthConfig synth;
    synth.n = a.synth_n;
    synth.seed = spec.seed;
    corpus = SynthesizeCorpus(synth);
  }
  const auto reports = Compare(spec, corpus);
  WriteComparison(a.out_dir, spec, reports, corpus.size());
  out << kSyntheticBanner << '\n';
  WriteSummaryCsv(out, reports);
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-backbone report generation: synthesize, train, generate, evaluate, label, compare"};
  app.name("dualscribe");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic image/report corpus (JSON Lines)");
  s->add_option("--n", synth.config.n, "Number of entries")->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.config.seed, "Generator seed");
  s->add_option("--image-size", synth.config.image_size, "Image side in pixels");
  s->add_option("--max-frequency", synth.config.max_frequency, "Positive rate of the commonest finding");
  s->add_option("--skew", synth.config.skew, "Zipf exponent of finding frequencies");
  s->add_option("--out", synth.out, "Output file (default stdout)");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one variant; writes checkpoint, vocabulary, config and loss CSV");
  t->add_option("--corpus", train.corpus, "Corpus JSON Lines")->required();
  t->add_option("--out-dir", train.out_dir, "Model directory")->required();
  train.flags.Register(t, true);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Decode reports with a trained model (JSON Lines)");
  g->add_option("--model-dir", gen.model_dir, "Directory written by train")->required();
  g->add_option("--corpus", gen.corpus, "Corpus JSON Lines")->required();
  g->add_option("--split", gen.split, "test | train | all")->check(CLI::IsMember({"test", "train", "all"}));
  g->add_option("--strategy", gen.strategy, "greedy | beam");
  g->add_option("--beam-width", gen.beam_width, "Beam width");
  g->add_option("--max-len", gen.max_len, "Maximum generated tokens");
  g->add_option("--out", gen.out, "Output file (default stdout)");

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Score candidates against references");
  auto* e_in = e->add_option("--input", eval.input, "Pairs JSON Lines {id, candidate, references}");
  auto* e_c = e->add_option("--candidates", eval.candidates, "Candidates JSON Lines {id, candidate}");
  auto* e_r = e->add_option("--references", eval.references, "References JSON Lines {id, references}");
  e_in->excludes(e_c)->excludes(e_r);
  e_c->needs(e_r);
  e_r->needs(e_c);
  e->add_option("--rules", eval.rules, "Labeler rules JSON (default: built in)");
  e->add_option("--out", eval.out, "Output file (default stdout)");

  LabelArgs label;
  auto* l = app.add_subcommand("label", "Label report text with the rule labeler");
  l->add_option("--text", label.texts, "Report text; repeatable");
  l->add_option("--input", label.input, "JSON Lines with report/candidate fields, or plain lines");
  l->add_option("--rules", label.rules, "Labeler rules JSON (default: built in)");
  l->add_option("--out", label.out, "Output file (default stdout)");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Run all three variants and write comparison tables");
  c->add_option("--corpus", cmp.corpus, "Corpus JSON Lines (default: synthesize one)");
  c->add_option("--synth-n", cmp.synth_n, "Synthetic corpus size when no corpus is given");
  c->add_option("--out-dir", cmp.out_dir, "Output directory");
  cmp.flags.Register(c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& ex) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error[usage]: " << ex.what() << '\n';
    return kUsageError;
  }
  if (e->parsed() && eval.input.empty() && eval.candidates.empty()) {
    err << "error[usage]: evaluate needs --input or --candidates/--references\n";
    return kUsageError;
  }

  try {
    if (s->parsed()) DoSynth(synth, out);
    else if (t->parsed()) DoTrain(train, out);
    else if (g->parsed()) DoGenerate(gen, out);
    else if (e->parsed()) DoEvaluate(eval, out);
    else if (l->parsed()) DoLabel(label, out);
    else if (c->parsed()) DoCompare(cmp, out);
    return kOk;
  } catch (const DataError& ex) {
    err << "error[data]: " << ex.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& ex) {
    err << "error[data]: " << ex.what() << '\n';
    return kDataError;
  } catch (const ShapeError& ex) {
    err << "error[internal]: " << ex.what() << '\n';
    return kInternalError;
  } catch (const InvalidArgument& ex) {
    err << "error[usage]: " << ex.what() << '\n';
    return kUsageError;
  } catch (const std::exception& ex) {
    err << "error[internal]: " << ex.what() << '\n';
    return kInternalError;
  }
}

}  // namespace dualscribe::cli
