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
#include <algorithm>
#include <array>
#include <random>
#include <vector>

// external libraries
#include <gtest/gtest.h>

// local sources
#include "pbt/core_model.hpp"

namespace pbt::test
{
namespace
{
Element
RandomElement(std::mt19937_64 &rng)
{
  Element e;
  e.key = rng();
  e.priority = rng();
  e.info = MakeInfo(rng());
  e.kind = static_cast<Kind>(rng() % 3);
  e.resolved = (rng() & 1U) != 0;
  e.lifespan.in_version = e.kind == Kind::kDelete ? kDeleteSentinel : rng() % 1000 + 1;
  e.lifespan.del_version = (rng() & 1U) != 0 ? kOpen : e.lifespan.in_version + rng() % 100 + 1;
  return e;
}
}  // namespace

TEST(LifespanTest, HalfOpenInterval)
{
  const Lifespan span{1, 2};
  EXPECT_FALSE(LifespanContains(span, 0));
  EXPECT_TRUE(LifespanContains(span, 1));
  EXPECT_FALSE(LifespanContains(span, 2));
  EXPECT_TRUE(LifespanContains(Lifespan{3, kOpen}, 1'000'000));
  EXPECT_FALSE(LifespanContains(Lifespan{5, 5}, 5));
}

TEST(ElementTest, FactoriesFollowTheElementConventions)
{
  const auto ins = MakeInsert(5, 1, 7, MakeInfo(42));
  EXPECT_EQ(ins.lifespan, (Lifespan{1, kOpen}));
  EXPECT_TRUE(ins.resolved);
  EXPECT_EQ(ins.OpVersion(), 1U);

  const auto upd = MakeUpdate(5, 2, 7, MakeInfo(43));
  EXPECT_FALSE(upd.resolved);
  EXPECT_EQ(upd.OpVersion(), 2U);

  const auto del = MakeDelete(5, 12, 7);
  EXPECT_EQ(del.lifespan.in_version, kDeleteSentinel);
  EXPECT_EQ(del.lifespan.del_version, 12U);
  EXPECT_EQ(del.OpVersion(), 12U);
  EXPECT_TRUE(del.IsDelete());
  EXPECT_FALSE(del.resolved);
}

TEST(ElementTest, InfoRoundTrips)
{
  for (std::uint64_t v : {0ULL, 1ULL, 255ULL, 0xDEADBEEFULL, ~0ULL}) {
    EXPECT_EQ(InfoValue(MakeInfo(v)), v);
  }
}

TEST(OrderTest, DeleteSortsAfterEarlierLiveItemsOfItsKey)
{
  std::vector<Element> group{MakeDelete(4, 12, 1), MakeUpdate(4, 9, 2, {}), MakeInsert(4, 5, 3, {}),
                             MakeInsert(3, 20, 4, {})};
  std::sort(group.begin(), group.end(), KeyVersionLess{});
  EXPECT_EQ(group[0].key, 3U);
  EXPECT_EQ(group[1].lifespan.in_version, 5U);
  EXPECT_EQ(group[2].lifespan.in_version, 9U);
  EXPECT_TRUE(group[3].IsDelete());
}

TEST(OrderTest, PriorityOrderIsTotal)
{
  std::mt19937_64 rng{7};
  for (int i = 0; i < 2000; ++i) {
    auto a = RandomElement(rng);
    auto b = RandomElement(rng);
    if (i % 3 == 0) b.priority = a.priority;
    const PriorityLess less;
    const bool same = a.priority == b.priority && a.key == b.key && a.OpVersion() == b.OpVersion();
    EXPECT_NE(less(a, b) || less(b, a), same);
    EXPECT_FALSE(less(a, b) && less(b, a));
  }
}

TEST(PriorityGeneratorTest, SeedDeterminesSequence)
{
  PriorityGenerator a{99};
  PriorityGenerator b{99};
  PriorityGenerator c{100};
  bool differs = false;
  for (int i = 0; i < 32; ++i) {
    const auto x = a.Next();
    EXPECT_EQ(x, b.Next());
    differs |= x != c.Next();
  }
  EXPECT_TRUE(differs);
}

TEST(PriorityGeneratorTest, RestoreResumesTheSequence)
{
  PriorityGenerator a{7};
  for (int i = 0; i < 1000; ++i) a.Next();
  PriorityGenerator b{0};
  b.Restore(a.Seed(), a.Draws());
  EXPECT_EQ(b.Draws(), 1000U);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(a.Next(), b.Next());
}

TEST(RecordCodecTest, ElementsRoundTrip)
{
  std::mt19937_64 rng{1};
  std::array<std::byte, kRecordSize> raw{};
  for (int i = 0; i < 5000; ++i) {
    const auto e = RandomElement(rng);
    EncodeRecord(e, raw);
    const auto back = DecodeRecord(raw);
    ASSERT_TRUE(std::holds_alternative<Element>(back));
    EXPECT_EQ(std::get<Element>(back), e);
  }
}

TEST(RecordCodecTest, QueriesRoundTripAndAreTagged)
{
  std::mt19937_64 rng{2};
  std::array<std::byte, kRecordSize> raw{};
  for (int i = 0; i < 1000; ++i) {
    const QueryElement q{rng(), rng() % 100, 100 + rng() % 100, rng() % 50};
    EncodeRecord(Record{q}, raw);
    const auto back = DecodeRecord(raw);
    ASSERT_TRUE(std::holds_alternative<QueryElement>(back));
    EXPECT_EQ(std::get<QueryElement>(back), q);
  }
}

TEST(RecordCodecTest, RejectsMalformedInput)
{
  std::array<std::byte, kRecordSize> raw{};
  EncodeRecord(MakeInsert(1, 1, 1, {}), raw);
  raw[32] = std::byte{0x40};
  EXPECT_THROW(DecodeRecord(raw), DecodeError);
  raw[32] = std::byte{kQueryTag | kResolvedBit};
  EXPECT_THROW(DecodeRecord(raw), DecodeError);
  EXPECT_THROW(DecodeRecord(std::span{raw}.first(kRecordSize - 1)), DecodeError);
  std::array<std::byte, kRecordSize - 1> small{};
  EXPECT_THROW(EncodeRecord(MakeInsert(1, 1, 1, {}), small), std::length_error);
}

}  // namespace pbt::test
