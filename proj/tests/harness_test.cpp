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
#include <filesystem>
#include <set>

// external libraries
#include <gtest/gtest.h>

// local sources
#include "pbt/harness.hpp"

namespace pbt::test
{
namespace
{
std::filesystem::path
ScratchDir(const std::string &name)
{
  auto dir = std::filesystem::temp_directory_path() / ("pbt_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

RunConfig
Small()
{
  RunConfig cfg;
  cfg.store = {4, 4};
  return cfg;
}
}  // namespace

/*######################################################################################
 * Generation
 *####################################################################################*/

TEST(HarnessTest, ZeroOpsGeneratesNothing)
{
  WorkloadSpec spec;
  const auto gen = Generate(spec);
  EXPECT_TRUE(gen.ops.empty());
  EXPECT_EQ(gen.oracle.Version(), 0U);
  const auto rep = RunWorkload(gen.ops, {});
  EXPECT_EQ(rep.TotalIo(), 0U);
  EXPECT_EQ(rep.height, 0U);
  EXPECT_TRUE(rep.Clean());
}

TEST(HarnessTest, SameSeedSameWorkload)
{
  WorkloadSpec spec;
  spec.n_ops = 2000;
  spec.seed = 17;
  EXPECT_EQ(Generate(spec).ops, Generate(spec).ops);
  auto other = spec;
  other.seed = 18;
  EXPECT_NE(Generate(spec).ops, Generate(other).ops);
}

TEST(HarnessTest, InsertOnlyMixHasDistinctKeys)
{
  WorkloadSpec spec;
  spec.n_ops = 100;
  spec.mix = {1, 0, 0, 0};
  const auto gen = Generate(spec);
  std::set<Key> keys;
  for (const auto &op : gen.ops) {
    ASSERT_EQ(op.kind, OpKind::kInsert);
    keys.insert(op.key);
  }
  EXPECT_EQ(keys.size(), 100U);
}

TEST(HarnessTest, GeneratedWorkloadsAreLegal)
{
  for (auto dist : {KeyDist::kUniform, KeyDist::kClustered, KeyDist::kSequential}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      WorkloadSpec spec;
      spec.n_ops = 3000;
      spec.key_dist = dist;
      spec.seed = seed;
      spec.mix = {0.3, 0.3, 0.2, 0.2};
      const auto gen = Generate(spec);
      EXPECT_TRUE(gen.illegal_ops.empty());
      Oracle replay;
      for (const auto &op : gen.ops) {
        if (op.kind == OpKind::kQuery) {
          ASSERT_LE(op.key, op.highkey);
          ASSERT_LE(op.version, replay.Version());
          continue;
        }
        const Kind kind = op.kind == OpKind::kInsert   ? Kind::kInsert
                          : op.kind == OpKind::kUpdate ? Kind::kUpdate
                                                       : Kind::kDelete;
        ASSERT_FALSE(replay.Apply(kind, op.key, MakeInfo(op.info)));
      }
    }
  }
}

TEST(HarnessTest, UpdatesBeforeAnyInsertAreDeferred)
{
  WorkloadSpec spec;
  spec.n_ops = 50;
  spec.mix = {0, 0.5, 0.5, 0};
  const auto gen = Generate(spec);
  // the first slot always lacks a live key
  EXPECT_GE(gen.deferred, 1U);
  EXPECT_EQ(gen.ops.front().kind, OpKind::kInsert);
  EXPECT_TRUE(gen.illegal_ops.empty());
}

TEST(HarnessTest, IllegalInjectionIsRecorded)
{
  WorkloadSpec spec;
  spec.n_ops = 2000;
  spec.illegal_rate = 0.05;
  const auto gen = Generate(spec);
  EXPECT_FALSE(gen.illegal_ops.empty());
  EXPECT_EQ(gen.oracle.Version() + gen.illegal_ops.size(),
            static_cast<VersionId>(std::count_if(gen.ops.begin(), gen.ops.end(), [](const auto &op) {
              return op.kind != OpKind::kQuery;
            })));
}

TEST(HarnessTest, MixMustSumToOne)
{
  EXPECT_THROW((Mix{0.5, 0.5, 0.5, 0}.Validate()), std::invalid_argument);
  EXPECT_THROW((Mix{-0.1, 0.6, 0.5, 0}.Validate()), std::invalid_argument);
  EXPECT_NO_THROW((Mix{0.25, 0.25, 0.25, 0.25}.Validate()));
}

/*######################################################################################
 * Running
 *####################################################################################*/

TEST(HarnessTest, SmallEquivalenceRunsAreClean)
{
  WorkloadSpec spec;
  spec.n_ops = 3000;
  const auto res = RunEquivalence(spec, Small(), 1, 6, 3);
  ASSERT_EQ(res.reports.size(), 6U);
  EXPECT_TRUE(res.Passed());
  for (const auto &r : res.reports) {
    EXPECT_GT(r.queries, 0U);
    EXPECT_EQ(r.budget.over_budget, 0U);
    EXPECT_EQ(r.budget.occupancy_failures, 0U);
  }
}

TEST(HarnessTest, ExhaustiveQueriesOverAShortHistory)
{
  WorkloadSpec spec;
  spec.n_ops = 30;
  spec.mix = {0.5, 0.3, 0.2, 0};
  spec.key_space = 10;
  auto ops = Generate(spec).ops;
  Oracle o;
  for (const auto &op : ops) {
    const Kind kind = op.kind == OpKind::kInsert   ? Kind::kInsert
                      : op.kind == OpKind::kUpdate ? Kind::kUpdate
                                                   : Kind::kDelete;
    o.Apply(kind, op.key, MakeInfo(op.info));
  }
  for (Key lo = 0; lo < 10; ++lo) {
    for (Key hi = lo; hi < 10; ++hi) {
      for (VersionId v = 0; v <= o.Version(); ++v) ops.push_back({OpKind::kQuery, lo, hi, v, 0});
    }
  }
  const auto rep = RunWorkload(ops, Small());
  EXPECT_TRUE(rep.Clean());
  EXPECT_EQ(rep.queries, 55 * (o.Version() + 1));
}

TEST(HarnessTest, QueriesOnlyWorkload)
{
  Workload ops(20, WorkloadOp{OpKind::kQuery, 0, 100, 0, 0});
  const auto rep = RunWorkload(ops, Small());
  EXPECT_TRUE(rep.Clean());
  EXPECT_EQ(rep.queries, 20U);
  EXPECT_EQ(rep.r_total, 0U);
  // queries ride in staging blocks like updates
  EXPECT_GT(rep.TotalIo(), 0U);
  EXPECT_EQ(rep.per_class[3].transfers + rep.flush_io, rep.TotalIo());
}

TEST(HarnessTest, FutureQueryVersionIsRejected)
{
  const Workload ops{{OpKind::kInsert, 1, 0, 0, 5}, {OpKind::kQuery, 0, 9, 2, 0}};
  EXPECT_THROW(RunWorkload(ops, Small()), WorkloadError);
}

TEST(HarnessTest, PerClassCountsAddUp)
{
  WorkloadSpec spec;
  spec.n_ops = 4000;
  const auto gen = Generate(spec);
  const auto rep = RunWorkload(gen.ops, Small());
  std::uint64_t count = 0;
  std::uint64_t transfers = rep.flush_io;
  for (const auto &c : rep.per_class) {
    count += c.count;
    transfers += c.transfers;
  }
  EXPECT_EQ(count, 4000U);
  EXPECT_EQ(transfers, rep.TotalIo());
}

TEST(HarnessTest, FileStoreGivesTheSameCounts)
{
  WorkloadSpec spec;
  spec.n_ops = 2000;
  const auto gen = Generate(spec);
  auto cfg = Small();
  const auto mem = RunWorkload(gen.ops, cfg);
  cfg.store_path = std::filesystem::temp_directory_path() / "pbt_harness_store.pbt";
  const auto file = RunWorkload(gen.ops, cfg);
  std::filesystem::remove(cfg.store_path);
  EXPECT_TRUE(file.Clean());
  EXPECT_EQ(file.io, mem.io);
}

/*######################################################################################
 * Structural errors and faults
 *####################################################################################*/

TEST(HarnessTest, IllegalOpsAreFlaggedExactly)
{
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    WorkloadSpec spec;
    spec.n_ops = 3000;
    spec.seed = seed;
    spec.illegal_rate = 0.05;
    const auto gen = Generate(spec);
    auto cfg = Small();
    cfg.tree_seed = seed;
    const auto rep = RunWorkload(gen.ops, cfg);
    EXPECT_EQ(rep.rejected_ops, gen.illegal_ops);
    EXPECT_EQ(rep.flagged_ops, rep.rejected_ops) << "seed " << seed;
  }
}

TEST(HarnessTest, InjectedFaultLeavesAnArtifact)
{
  const auto dir = ScratchDir("fault");
  WorkloadSpec spec;
  spec.n_ops = 4000;
  spec.max_query_width = 4000;
  auto cfg = Small();
  cfg.inject_fault = true;
  const auto res = RunEquivalence(spec, cfg, 1, 2, 1, dir);
  EXPECT_FALSE(res.Passed());
  ASSERT_FALSE(res.artifacts.empty());
  const auto replay = LoadWorkload(res.artifacts.front());
  spec.seed = 1;
  EXPECT_EQ(replay, Generate(spec).ops);
  std::filesystem::remove_all(dir);
}

/*######################################################################################
 * Serialization and scaling
 *####################################################################################*/

TEST(HarnessTest, JsonIsReproducible)
{
  WorkloadSpec spec;
  spec.n_ops = 1500;
  const auto gen = Generate(spec);
  auto cfg = Small();
  cfg.keep_results = true;
  const auto a = ToJson(RunWorkload(gen.ops, cfg)).dump();
  const auto b = ToJson(RunWorkload(gen.ops, cfg)).dump();
  EXPECT_EQ(a, b);
}

TEST(HarnessTest, JsonCarriesTheDocumentedKeys)
{
  WorkloadSpec spec;
  spec.n_ops = 500;
  auto cfg = Small();
  cfg.keep_results = true;
  const auto j = ToJson(RunWorkload(Generate(spec).ops, cfg));
  for (const char *key :
       {"config", "io", "per_op", "height", "height_samples", "node_count", "node_table_blocks",
        "empty_buffer", "queries", "report_transfers", "r_total", "deferred_ops",
        "structural_errors", "audit_violations", "mismatches", "results", "ok"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  for (const char *cls : {"insert", "update", "delete", "query"}) {
    EXPECT_TRUE(j["per_op"][cls].contains("amortized")) << cls;
  }
  EXPECT_TRUE(j["ok"].get<bool>());
  EXPECT_EQ(j["config"]["block_size"], 4);
}

TEST(HarnessTest, CsvRowMatchesHeader)
{
  const auto header = CsvHeader();
  const auto row = ToCsvRow(RunWorkload({}, Small()));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 16);
}

TEST(HarnessTest, SmallScalingGrid)
{
  WorkloadSpec spec;
  spec.mix = {1, 0, 0, 0};
  const auto res = RunScaling({1U << 10, 1U << 11, 1U << 12}, spec, {}, 3);
  ASSERT_EQ(res.points.size(), 3U);
  EXPECT_TRUE(res.StableWithin(2.0));
  EXPECT_TRUE(res.PerOpWithinBound());
  EXPECT_TRUE(res.SpaceWithinBound());
  for (const auto &p : res.points) EXPECT_TRUE(p.report.Clean());
}

}  // namespace pbt::test
