/*
 * Copyright 2026 The pbt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// C++ standard libraries
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// external libraries
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

// local sources
#include "pbt/cli.hpp"

namespace pbt::test
{
namespace
{
struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome
Invoke(std::vector<std::string> args)
{
  args.insert(args.begin(), "pbt");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::Main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string
WriteFile(const std::string &name, const std::string &text)
{
  const auto path = std::filesystem::temp_directory_path() / ("pbt_cli_" + name);
  std::ofstream{path} << text;
  return path.string();
}
}  // namespace

TEST(CliTest, EmptyWorkloadDoesNoIo)
{
  const auto r = Invoke({"run", WriteFile("empty.pbtw", "")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["io"]["transfers"], 0);
  EXPECT_EQ(j["height"], 0);
  EXPECT_TRUE(j["ok"].get<bool>());
}

TEST(CliTest, FourLineWorkload)
{
  const auto file = WriteFile("four.pbtw", "I 5 10\nU 5 11  # overwrite\nD 7\nQ 0 9 2\n");
  const auto r = Invoke({"run", file});
  // D 7 targets a missing key
  ASSERT_EQ(r.code, cli::kExitInvariant) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["structural_errors"].size(), 1U);
  EXPECT_EQ(j["structural_errors"][0]["op"], 3);
  EXPECT_EQ(j["structural_errors"][0]["reason"], "unresolved delete");
  ASSERT_EQ(j["results"].size(), 1U);
  const auto &entries = j["results"][0]["entries"];
  ASSERT_EQ(entries.size(), 1U);
  EXPECT_EQ(entries[0]["key"], 5);
  EXPECT_EQ(entries[0]["info"], 11);
}

TEST(CliTest, LegalWorkloadAnswersEveryVersion)
{
  const auto file =
      WriteFile("legal.pbtw", "I 1 100\nI 2 200\nU 1 101\nD 2\nQ 0 9 0\nQ 0 9 2\nQ 0 9 4\n");
  const auto r = Invoke({"run", file, "-B", "2", "-m", "4"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto &res = j["results"];
  ASSERT_EQ(res.size(), 3U);
  EXPECT_TRUE(res[0]["entries"].empty());
  EXPECT_EQ(res[1]["entries"].size(), 2U);
  ASSERT_EQ(res[2]["entries"].size(), 1U);
  EXPECT_EQ(res[2]["entries"][0]["info"], 101);
}

TEST(CliTest, CsvOutput)
{
  const auto r = Invoke({"run", WriteFile("csv.pbtw", "I 1 1\n"), "--out", "csv"});
  ASSERT_EQ(r.code, cli::kExitOk);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), CsvHeader());
}

TEST(CliTest, FileStore)
{
  const auto store = std::filesystem::temp_directory_path() / "pbt_cli_store.pbt";
  const auto r = Invoke({"run", WriteFile("fs.pbtw", "I 1 1\nI 2 2\nQ 0 5 2\n"), "--store",
                      store.string()});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(store));
  std::filesystem::remove(store);
}

TEST(CliTest, MalformedLineNamesTheLine)
{
  const auto r = Invoke({"run", WriteFile("bad.pbtw", "I 1 1\nI 2 2\nX 3\n")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(CliTest, FutureQueryVersionIsAUsageError)
{
  const auto r = Invoke({"run", WriteFile("future.pbtw", "I 1 1\nQ 0 5 3\n")});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST(CliTest, UpdateOnEmptyTreeIsAnInvariantFailure)
{
  const auto r = Invoke({"run", WriteFile("upd.pbtw", "U 1 1\n")});
  EXPECT_EQ(r.code, cli::kExitInvariant);
}

TEST(CliTest, BadFanoutIsRejected)
{
  EXPECT_EQ(Invoke({"run", WriteFile("e.pbtw", ""), "-m", "5"}).code, cli::kExitUsage);
  EXPECT_EQ(Invoke({"run", WriteFile("e.pbtw", ""), "-m", "2"}).code, cli::kExitUsage);
  EXPECT_EQ(Invoke({"run", WriteFile("e.pbtw", ""), "-B", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(Invoke({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(Invoke({}).code, cli::kExitUsage);
}

TEST(CliTest, VerifyWithNoSeeds)
{
  const auto r = Invoke({"verify", "--seeds", "0"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("verify: ok"), std::string::npos);
}

TEST(CliTest, SmallVerify)
{
  const auto r = Invoke({"verify", "--ops", "1500", "--seeds", "3", "-j", "3", "-B", "4", "-m", "4"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.out;
  EXPECT_NE(r.out.find("3/3 seeds clean"), std::string::npos);
}

TEST(CliTest, InjectedFaultFailsVerify)
{
  const auto dir = std::filesystem::temp_directory_path() / "pbt_cli_failures";
  std::filesystem::remove_all(dir);
  const auto r = Invoke({"verify", "--ops", "3000", "--seeds", "2", "--inject-fault", "-B", "4",
                      "-m", "4", "--artifact-dir", dir.string()});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.out.find("verify: FAILED"), std::string::npos);
  EXPECT_NE(r.out.find("failure artifact"), std::string::npos);
  EXPECT_FALSE(std::filesystem::is_empty(dir));
  std::filesystem::remove_all(dir);
}

TEST(CliTest, SingleGridPoint)
{
  const auto r = Invoke({"scale", "--n-grid", "12..12", "--out", "json"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.out << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["points"].size(), 1U);
  EXPECT_EQ(j["ratio_spread"], 1.0);
}

TEST(CliTest, ScaleTable)
{
  const auto r = Invoke({"scale", "--n-grid", "1024,2048"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("ratio spread"), std::string::npos);
}

TEST(CliTest, SeedFromEnvironment)
{
  const auto file = WriteFile("seed.pbtw", "I 1 1\n");
  ::setenv("PBT_SEED", "77", 1);
  const auto env = Invoke({"run", file});
  ::unsetenv("PBT_SEED");
  const auto flag = Invoke({"run", file, "--seed", "77"});
  ASSERT_EQ(env.code, cli::kExitOk);
  EXPECT_EQ(nlohmann::json::parse(env.out)["config"]["seed"], 77);
  EXPECT_EQ(env.out, flag.out);
}

}  // namespace pbt::test
