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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace dualscribe {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "dualscribe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dualscribe_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(RunCli({}).code, cli::kUsageError);
  EXPECT_EQ(RunCli({"fly"}).code, cli::kUsageError);
  const Result r = RunCli({"synth", "--n", "0"});
  EXPECT_EQ(r.code, cli::kUsageError);
  EXPECT_EQ(r.err.rfind("error[usage]: ", 0), 0u) << r.err;
  EXPECT_EQ(RunCli({"evaluate"}).code, cli::kUsageError);
  EXPECT_EQ(RunCli({"label"}).code, cli::kUsageError);
  EXPECT_EQ(RunCli({"compare", "--set", "novalue"}).code, cli::kUsageError);
  EXPECT_EQ(RunCli({"--help"}).code, cli::kOk);
}

TEST(CliTest, MissingFileIsADataErrorNamingThePath) {
  const std::string path = "/nonexistent/dir/pairs.jsonl";
  const Result r = RunCli({"evaluate", "--input", path});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_EQ(r.err.rfind("error[data]: ", 0), 0u) << r.err;
  EXPECT_NE(r.err.find(path), std::string::npos) << r.err;
  EXPECT_EQ(RunCli({"compare", "--corpus", path}).code, cli::kDataError);
  EXPECT_EQ(RunCli({"train", "--corpus", path, "--out-dir", Scratch("m").string()}).code,
            cli::kDataError);
}

TEST(CliTest, SynthIsDeterministicAndReadable) {
  const Result a = RunCli({"synth", "--n", "5", "--seed", "3"});
  const Result b = RunCli({"synth", "--n", "5", "--seed", "3"});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 5);
  const auto first = nlohmann::json::parse(a.out.substr(0, a.out.find('\n')));
  EXPECT_TRUE(first.contains("report"));
  EXPECT_TRUE(first.contains("labels"));
}

TEST(CliTest, EvaluateIdentityScoresPerfectly) {
  const fs::path pairs = Scratch("identity.jsonl");
  {
    std::ofstream out(pairs);
    out << R"({"id": "1", "candidate": "Cardiomegaly is present. No pleural effusion.", "references": ["Cardiomegaly is present. No pleural effusion."]})" "\n";
    out << R"({"id": "2", "candidate": "Small right pneumothorax with chest tube in place.", "references": ["Small right pneumothorax with chest tube in place."]})" "\n";
  }
  const Result r = RunCli({"evaluate", "--input", pairs.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["bleu_1"].get<double>(), 1.0);
  EXPECT_EQ(j["bleu_4"].get<double>(), 1.0);
  EXPECT_EQ(j["rouge_l"].get<double>(), 1.0);
  EXPECT_EQ(j["cider_d"].get<double>(), 10.0);
  EXPECT_EQ(j["chexbert_f1"].get<double>(), 1.0);
  EXPECT_EQ(j["pairs"], 2);
}

TEST(CliTest, EvaluateJoinsCandidatesAndReferencesById) {
  const fs::path cands = Scratch("cands.jsonl"), refs = Scratch("refs.jsonl");
  std::ofstream(cands) << R"({"id": "b", "candidate": "No edema."})" "\n"
                       << R"({"id": "a", "candidate": "Edema."})" "\n";
  std::ofstream(refs) << R"({"id": "a", "report": "Mild edema."})" "\n"
                      << R"({"id": "b", "references": ["No edema.", "Lungs clear."]})" "\n";
  const Result r = RunCli({"evaluate", "--candidates", cands.string(), "--references", refs.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["pairs"], 2);

  std::ofstream(refs) << R"({"id": "a", "report": "Mild edema."})" "\n";
  const Result missing =
      RunCli({"evaluate", "--candidates", cands.string(), "--references", refs.string()});
  EXPECT_EQ(missing.code, cli::kDataError);
  EXPECT_NE(missing.err.find("'b'"), std::string::npos) << missing.err;
}

TEST(CliTest, LabelPrintsOneJsonLinePerText) {
  const Result r = RunCli({"label", "--text", "Severe cardiomegaly.", "--text",
                           "No evidence of pneumonia."});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["labels"]["Cardiomegaly"], "Positive");
  EXPECT_EQ(rows[1]["labels"]["Pneumonia"], "Negative");
  EXPECT_EQ(rows[1]["labels"]["Edema"], "Blank");
  EXPECT_EQ(rows[0]["labels"].size(), 14u);
}

TEST(CliTest, TrainGenerateRoundTrip) {
  const fs::path corpus = Scratch("train_corpus.jsonl");
  const fs::path model = Scratch("model");
  fs::remove_all(model);
  std::ofstream(corpus) << RunCli({"synth", "--n", "20", "--seed", "2"}).out;
  const std::vector<std::string> tiny = {"--set", "model.d_model=16", "--set", "model.ffn_dim=32",
                                         "--set", "min_freq=1", "--max-steps", "3"};
  std::vector<std::string> train = {"train", "--corpus", corpus.string(), "--out-dir",
                                    model.string()};
  train.insert(train.end(), tiny.begin(), tiny.end());
  const Result t = RunCli(train);
  ASSERT_EQ(t.code, cli::kOk) << t.err;
  for (const char* f : {"model.m2ck", "vocab.txt", "experiment.toml", "loss.csv"}) {
    EXPECT_TRUE(fs::exists(model / f)) << f;
  }
  const std::string losses = Slurp(model / "loss.csv");
  EXPECT_EQ(std::count(losses.begin(), losses.end(), '\n'), 4);

  const Result g = RunCli({"generate", "--model-dir", model.string(), "--corpus", corpus.string(),
                           "--split", "test", "--max-len", "6"});
  ASSERT_EQ(g.code, cli::kOk) << g.err;
  std::istringstream lines(g.out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j["candidate"].is_string());
    EXPECT_EQ(j["references"].size(), 1u);
    ++n;
  }
  EXPECT_EQ(n, 2u);  // ceil(0.1 * 20)

  const Result again = RunCli({"generate", "--model-dir", model.string(), "--corpus",
                               corpus.string(), "--split", "test", "--max-len", "6"});
  EXPECT_EQ(again.out, g.out);
}

TEST(CliTest, CompareTwiceIsBytewiseIdentical) {
  const fs::path a = Scratch("cmp_a"), b = Scratch("cmp_b");
  fs::remove_all(a);
  fs::remove_all(b);
  const std::vector<std::string> common = {"compare", "--synth-n", "30", "--seed", "7",
                                           "--set", "model.d_model=16", "--set",
                                           "model.ffn_dim=32", "--epochs", "2"};
  auto with_dir = [&](const fs::path& dir) {
    auto args = common;
    args.push_back("--out-dir");
    args.push_back(dir.string());
    return RunCli(args);
  };
  const Result ra = with_dir(a);
  ASSERT_EQ(ra.code, cli::kOk) << ra.err;
  const Result rb = with_dir(b);
  ASSERT_EQ(rb.code, cli::kOk) << rb.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(ra.out.substr(0, ra.out.find('\n')),
            "synthetic corpus - values not comparable to published MIMIC-CXR results");
  for (const char* f : {"compare.json", "summary.csv", "conditions.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(Slurp(a / f), Slurp(b / f)) << f;
  }
  const auto j = nlohmann::json::parse(Slurp(a / "compare.json"));
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["config"]["train.epochs"], "2");
}

}  // namespace
}  // namespace dualscribe
