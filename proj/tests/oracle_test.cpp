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
#include <random>
#include <vector>

// external libraries
#include <gtest/gtest.h>

// local sources
#include "pbt/oracle.hpp"

namespace pbt::test
{
namespace
{
/// Random legal log over a small key space, biased towards long per-key histories.
Oracle
RandomLog(std::uint64_t seed, std::size_t len, Key keys)
{
  std::mt19937_64 rng{seed};
  Oracle o;
  for (std::size_t attempt = 0; attempt < 20 * len && o.Version() < len; ++attempt) {
    // rejected ops are skipped, so the log stays legal
    o.Apply(static_cast<Kind>(rng() % 3), rng() % keys, MakeInfo(rng()));
  }
  return o;
}
}  // namespace

TEST(OracleTest, FirstInsertCreatesVersionOne)
{
  Oracle o;
  EXPECT_FALSE(o.Apply(Kind::kInsert, 5, MakeInfo(1)));
  EXPECT_EQ(o.Version(), 1U);
  EXPECT_EQ(o.Log().front().version, 1U);
}

TEST(OracleTest, RejectsIllegalOpsWithoutAppending)
{
  Oracle o;
  EXPECT_EQ(o.Apply(Kind::kUpdate, 5, MakeInfo(2)), "update of a missing key");
  EXPECT_EQ(o.Apply(Kind::kDelete, 5), "delete of a missing key");
  EXPECT_EQ(o.Version(), 0U);
  EXPECT_FALSE(o.Apply(Kind::kInsert, 5, MakeInfo(1)));
  EXPECT_EQ(o.Apply(Kind::kInsert, 5, MakeInfo(1)), "duplicate live insert");
  EXPECT_FALSE(o.Apply(Kind::kDelete, 5));
  EXPECT_EQ(o.Apply(Kind::kInsert, 5, MakeInfo(3)), "insert of a deleted key");
  EXPECT_EQ(o.Apply(Kind::kUpdate, 5, MakeInfo(3)), "update of a deleted key");
  EXPECT_EQ(o.Apply(Kind::kDelete, 5), "delete of a deleted key");
  EXPECT_EQ(o.Version(), 2U);
}

TEST(OracleTest, RangeOverEmptyPrefixIsEmpty)
{
  Oracle o;
  EXPECT_TRUE(o.Range(0, kMaxKey, 0).empty());
  o.Apply(Kind::kInsert, 1, MakeInfo(1));
  EXPECT_TRUE(o.Range(0, kMaxKey, 0).empty());
  EXPECT_THROW(o.Range(0, 1, 2), std::out_of_range);
}

TEST(OracleTest, DeleteEndsTheLifespan)
{
  Oracle o;
  o.Apply(Kind::kInsert, 5, MakeInfo(7));
  o.Apply(Kind::kDelete, 5);
  EXPECT_EQ(o.Range(0, 9, 1), (Answer{{5, MakeInfo(7)}}));
  EXPECT_TRUE(o.Range(0, 9, 2).empty());
}

TEST(OracleTest, UpdateChainIsVisiblePerVersion)
{
  Oracle o;
  o.Apply(Kind::kInsert, 3, MakeInfo(100));
  for (std::uint64_t i = 1; i <= 10; ++i) o.Apply(Kind::kUpdate, 3, MakeInfo(100 + i));
  for (VersionId v = 1; v <= 11; ++v) {
    EXPECT_EQ(o.Range(3, 3, v), (Answer{{3, MakeInfo(99 + v)}}));
  }
}

TEST(OracleTest, RangeBoundsAreInclusive)
{
  Oracle o;
  for (Key k = 0; k < 10; ++k) o.Apply(Kind::kInsert, k, MakeInfo(k));
  const auto a = o.Range(3, 6, o.Version());
  ASSERT_EQ(a.size(), 4U);
  EXPECT_EQ(a.begin()->first, 3U);
  EXPECT_EQ(a.rbegin()->first, 6U);
}

TEST(OracleTest, LifespanReconstructionAgreesWithReplay)
{
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto o = RandomLog(seed, 200, 12);
    const LifespanIndex index{o.Log()};
    for (VersionId v = 0; v <= o.Version(); ++v) {
      for (Key lo = 0; lo < 13; lo += 3) {
        for (Key hi = lo; hi < 14; hi += 4) {
          ASSERT_EQ(index.Range(lo, hi, v), o.Range(lo, hi, v))
              << "seed " << seed << " range [" << lo << "," << hi << "] @" << v;
        }
      }
    }
  }
}

TEST(OracleTest, ReconstructedChainsAreContiguous)
{
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto o = RandomLog(seed, 300, 10);
    const LifespanIndex index{o.Log()};
    for (const auto &[key, chain] : index.Chains()) {
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        EXPECT_EQ(chain[i].lifespan.del_version, chain[i + 1].lifespan.in_version);
      }
      if (o.State(key) == Oracle::KeyState::kLive) {
        EXPECT_EQ(chain.back().lifespan.del_version, kOpen);
      } else {
        EXPECT_NE(chain.back().lifespan.del_version, kOpen);
      }
    }
  }
}

TEST(OracleTest, AnswersDependOnlyOnThePrefix)
{
  auto o = RandomLog(5, 100, 40);
  std::vector<Answer> before;
  for (VersionId v = 0; v <= o.Version(); ++v) before.push_back(o.Range(0, kMaxKey, v));
  for (int i = 0; i < 200; ++i) o.Apply(static_cast<Kind>(i % 3), static_cast<Key>(i % 48), MakeInfo(i));
  for (VersionId v = 0; v < before.size(); ++v) EXPECT_EQ(o.Range(0, kMaxKey, v), before[v]);
}

}  // namespace pbt::test
