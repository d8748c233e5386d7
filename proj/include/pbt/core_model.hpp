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

#ifndef PBT_CORE_MODEL_HPP
#define PBT_CORE_MODEL_HPP

// C++ standard libraries
#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <tuple>
#include <variant>

#ifndef PBT_INFO_SIZE
#define PBT_INFO_SIZE 8
#endif

namespace pbt
{
/*######################################################################################
 * Scalar vocabulary
 *####################################################################################*/

using Key = std::uint64_t;
using VersionId = std::uint64_t;
using Priority = std::uint64_t;
using QueryId = std::uint64_t;

inline constexpr Key kMinKey = 0;
inline constexpr Key kMaxKey = std::numeric_limits<Key>::max();

/// The present version ("still live"). Compares greater than every real version.
inline constexpr VersionId kOpen = std::numeric_limits<VersionId>::max();

/// in_version of a delete element.
inline constexpr VersionId kDeleteSentinel = 0;

inline constexpr std::size_t kInfoSize = PBT_INFO_SIZE;
static_assert(kInfoSize > 0, "payload must be at least one byte");

using Info = std::array<std::byte, kInfoSize>;

/// Packs an unsigned integer into a payload (little-endian, truncated or zero-padded).
inline Info
MakeInfo(std::uint64_t value)
{
  Info info{};
  for (std::size_t i = 0; i < kInfoSize && i < sizeof(value); ++i) {
    info[i] = static_cast<std::byte>((value >> (8 * i)) & 0xFFU);
  }
  return info;
}

inline std::uint64_t
InfoValue(const Info &info)
{
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < kInfoSize && i < sizeof(value); ++i) {
    value |= static_cast<std::uint64_t>(info[i]) << (8 * i);
  }
  return value;
}

/*######################################################################################
 * Lifespans
 *####################################################################################*/

/// Half-open version interval [in_version, del_version).
struct Lifespan {
  VersionId in_version{kDeleteSentinel};
  VersionId del_version{kOpen};

  constexpr auto operator<=>(const Lifespan &) const = default;
};

/// True iff version v lies in the half-open span.
constexpr bool
LifespanContains(const Lifespan &span, VersionId v)
{
  return span.in_version <= v && v < span.del_version;
}

/*######################################################################################
 * Elements
 *####################################################################################*/

enum class Kind : std::uint8_t {
  kInsert = 0,
  kUpdate = 1,
  kDelete = 2,
};

struct Element {
  Key key{};
  Lifespan lifespan{};
  Priority priority{};
  Info info{};
  Kind kind{Kind::kInsert};
  bool resolved{true};

  /// The version of the operation that created this element.
  [[nodiscard]] constexpr VersionId
  OpVersion() const
  {
    return kind == Kind::kDelete ? lifespan.del_version : lifespan.in_version;
  }

  [[nodiscard]] constexpr bool
  IsDelete() const
  {
    return kind == Kind::kDelete;
  }

  [[nodiscard]] constexpr bool
  IsOpen() const
  {
    return lifespan.del_version == kOpen;
  }

  bool operator==(const Element &) const = default;
};

inline Element
MakeInsert(Key key, VersionId version, Priority priority, const Info &info)
{
  return Element{key, {version, kOpen}, priority, info, Kind::kInsert, true};
}

inline Element
MakeUpdate(Key key, VersionId version, Priority priority, const Info &info)
{
  return Element{key, {version, kOpen}, priority, info, Kind::kUpdate, false};
}

inline Element
MakeDelete(Key key, VersionId version, Priority priority)
{
  return Element{key, {kDeleteSentinel, version}, priority, Info{}, Kind::kDelete, false};
}

/// A batched range query travelling through the buffers.
struct QueryElement {
  QueryId query_id{};
  Key lowkey{};
  Key highkey{};
  VersionId version{};

  bool operator==(const QueryElement &) const = default;
};

using Record = std::variant<Element, QueryElement>;

/*######################################################################################
 * Orders
 *####################################################################################*/

/**
 * @brief Composite sort key used when grouping a buffer by key.
 *
 * Within a key group elements are ordered by the version of the operation that
 * created them. A delete element therefore sits after every insert/update that
 * precedes it in time, which places it last in the group for any legal history.
 */
constexpr std::pair<Key, VersionId>
ElementOrderKey(const Element &e)
{
  return {e.key, e.OpVersion()};
}

struct KeyVersionLess {
  constexpr bool
  operator()(const Element &a, const Element &b) const
  {
    return ElementOrderKey(a) < ElementOrderKey(b);
  }
};

/// Strict total order on priorities; ties broken by (key, op version).
struct PriorityLess {
  constexpr bool
  operator()(const Element &a, const Element &b) const
  {
    return std::make_tuple(a.priority, a.key, a.OpVersion())
           < std::make_tuple(b.priority, b.key, b.OpVersion());
  }
};

/*######################################################################################
 * Priorities
 *####################################################################################*/

/// Seeded source of 64-bit uniform priorities.
class PriorityGenerator
{
 public:
  explicit PriorityGenerator(std::uint64_t seed = 0) : seed_{seed}, engine_{seed} {}

  Priority
  Next()
  {
    ++draws_;
    return engine_();
  }

  [[nodiscard]] std::uint64_t
  Seed() const
  {
    return seed_;
  }

  [[nodiscard]] std::uint64_t
  Draws() const
  {
    return draws_;
  }

  /// Puts the generator where a fresh one with `seed` would be after `draws` calls.
  void
  Restore(std::uint64_t seed, std::uint64_t draws)
  {
    seed_ = seed;
    draws_ = draws;
    engine_.seed(seed);
    engine_.discard(draws);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_{0};
  std::mt19937_64 engine_;
};

/*######################################################################################
 * Record encoding
 *####################################################################################*/

/// key (8) | in_version (8) | del_version (8) | priority (8) | kind+resolved (1) | info
inline constexpr std::size_t kRecordSize = 8 + 8 + 8 + 8 + 1 + kInfoSize;

inline constexpr std::uint8_t kQueryTag = 3;
inline constexpr std::uint8_t kResolvedBit = 0x80;
inline constexpr std::uint8_t kKindMask = 0x03;

class DecodeError : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

namespace detail
{
inline void
PutU64(std::span<std::byte> out, std::size_t offset, std::uint64_t v)
{
  for (std::size_t i = 0; i < 8; ++i) {
    out[offset + i] = static_cast<std::byte>((v >> (8 * i)) & 0xFFU);
  }
}

inline std::uint64_t
GetU64(std::span<const std::byte> in, std::size_t offset)
{
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  }
  return v;
}
}  // namespace detail

inline void
EncodeRecord(const Element &e, std::span<std::byte> out)
{
  if (out.size() < kRecordSize) throw std::length_error{"record slot too small"};
  detail::PutU64(out, 0, e.key);
  detail::PutU64(out, 8, e.lifespan.in_version);
  detail::PutU64(out, 16, e.lifespan.del_version);
  detail::PutU64(out, 24, e.priority);
  auto tag = static_cast<std::uint8_t>(e.kind);
  if (e.resolved) tag |= kResolvedBit;
  out[32] = static_cast<std::byte>(tag);
  std::memcpy(out.data() + 33, e.info.data(), kInfoSize);
}

/// Queries reuse the slot: key=lowkey, in=version, del=highkey, priority=query id.
inline void
EncodeRecord(const QueryElement &q, std::span<std::byte> out)
{
  if (out.size() < kRecordSize) throw std::length_error{"record slot too small"};
  detail::PutU64(out, 0, q.lowkey);
  detail::PutU64(out, 8, q.version);
  detail::PutU64(out, 16, q.highkey);
  detail::PutU64(out, 24, q.query_id);
  out[32] = static_cast<std::byte>(kQueryTag);
  std::memset(out.data() + 33, 0, kInfoSize);
}

inline void
EncodeRecord(const Record &r, std::span<std::byte> out)
{
  std::visit([&](const auto &v) { EncodeRecord(v, out); }, r);
}

inline Record
DecodeRecord(std::span<const std::byte> in)
{
  if (in.size() < kRecordSize) throw DecodeError{"record slot too small"};
  const auto tag = static_cast<std::uint8_t>(in[32]);
  if ((tag & kKindMask) == kQueryTag) {
    if (tag != kQueryTag) throw DecodeError{"query record with flag bits set"};
    return QueryElement{detail::GetU64(in, 24), detail::GetU64(in, 0), detail::GetU64(in, 16),
                        detail::GetU64(in, 8)};
  }
  if ((tag & ~(kKindMask | kResolvedBit)) != 0) throw DecodeError{"unknown record flags"};
  Element e;
  e.key = detail::GetU64(in, 0);
  e.lifespan.in_version = detail::GetU64(in, 8);
  e.lifespan.del_version = detail::GetU64(in, 16);
  e.priority = detail::GetU64(in, 24);
  e.kind = static_cast<Kind>(tag & kKindMask);
  e.resolved = (tag & kResolvedBit) != 0;
  std::memcpy(e.info.data(), in.data() + 33, kInfoSize);
  return e;
}

}  // namespace pbt

#endif  // PBT_CORE_MODEL_HPP
