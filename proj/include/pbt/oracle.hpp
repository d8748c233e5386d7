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

#ifndef PBT_ORACLE_HPP
#define PBT_ORACLE_HPP

// C++ standard libraries
#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// local sources
#include "pbt/core_model.hpp"

namespace pbt
{
using Answer = std::map<Key, Info>;

struct LogEntry {
  VersionId version{};
  Kind kind{};
  Key key{};
  Info info{};

  bool operator==(const LogEntry &) const = default;
};

/**
 * @brief Naive multiversion reference: an append-only log answered by replay.
 *
 * Also acts as the legality checker for workloads. Per key the states are
 * absent -> live -> deleted, and a deleted key never comes back.
 */
class Oracle
{
 public:
  enum class KeyState { kAbsent, kLive, kDeleted };

  /// Appends the op if legal; otherwise returns the rejection reason and leaves the log alone.
  std::optional<std::string>
  Apply(Kind kind, Key key, const Info &info = {})
  {
    auto it = state_.find(key);
    const auto st = it == state_.end() ? KeyState::kAbsent : it->second;
    switch (kind) {
      case Kind::kInsert:
        if (st == KeyState::kLive) return "duplicate live insert";
        if (st == KeyState::kDeleted) return "insert of a deleted key";
        state_[key] = KeyState::kLive;
        break;
      case Kind::kUpdate:
        if (st == KeyState::kAbsent) return "update of a missing key";
        if (st == KeyState::kDeleted) return "update of a deleted key";
        break;
      case Kind::kDelete:
        if (st == KeyState::kAbsent) return "delete of a missing key";
        if (st == KeyState::kDeleted) return "delete of a deleted key";
        state_[key] = KeyState::kDeleted;
        break;
    }
    log_.push_back({log_.size() + 1, kind, key, kind == Kind::kDelete ? Info{} : info});
    return std::nullopt;
  }

  [[nodiscard]] KeyState
  State(Key key) const
  {
    auto it = state_.find(key);
    return it == state_.end() ? KeyState::kAbsent : it->second;
  }

  [[nodiscard]] VersionId
  Version() const
  {
    return log_.size();
  }

  [[nodiscard]] const std::vector<LogEntry> &
  Log() const
  {
    return log_;
  }

  /// Replays the first `version` ops into a map and filters by key.
  [[nodiscard]] Answer
  Range(Key lowkey, Key highkey, VersionId version) const
  {
    if (version > log_.size()) throw std::out_of_range{"version beyond the log"};
    Answer state;
    for (VersionId i = 0; i < version; ++i) {
      const auto &op = log_[i];
      if (op.kind == Kind::kDelete) {
        state.erase(op.key);
      } else {
        state[op.key] = op.info;
      }
    }
    Answer out;
    for (auto it = state.lower_bound(lowkey); it != state.end() && it->first <= highkey; ++it) {
      out.insert(*it);
    }
    return out;
  }

 private:
  std::vector<LogEntry> log_;
  std::map<Key, KeyState> state_;
};

/**
 * @brief Second route to the same answers: per-key lifespans chained from the log.
 *
 * Each insert/update gets [version, next op on the key), which is exactly what
 * globally applied chain resolution produces.
 */
class LifespanIndex
{
 public:
  struct Entry {
    Lifespan lifespan;
    Info info;
  };

  explicit LifespanIndex(const std::vector<LogEntry> &log)
  {
    for (const auto &op : log) {
      auto &chain = chains_[op.key];
      if (!chain.empty() && chain.back().lifespan.del_version == kOpen) {
        chain.back().lifespan.del_version = op.version;
      }
      if (op.kind != Kind::kDelete) chain.push_back({{op.version, kOpen}, op.info});
    }
  }

  [[nodiscard]] Answer
  Range(Key lowkey, Key highkey, VersionId version) const
  {
    Answer out;
    for (auto it = chains_.lower_bound(lowkey); it != chains_.end() && it->first <= highkey;
         ++it) {
      const auto &chain = it->second;
      // chains are sorted by in_version; the candidate is the last one starting at or before v
      auto pos = std::upper_bound(chain.begin(), chain.end(), version,
                                  [](VersionId v, const Entry &e) { return v < e.lifespan.in_version; });
      if (pos == chain.begin()) continue;
      --pos;
      if (LifespanContains(pos->lifespan, version)) out.emplace(it->first, pos->info);
    }
    return out;
  }

  [[nodiscard]] const std::map<Key, std::vector<Entry>> &
  Chains() const
  {
    return chains_;
  }

 private:
  std::map<Key, std::vector<Entry>> chains_;
};

}  // namespace pbt

#endif  // PBT_ORACLE_HPP
