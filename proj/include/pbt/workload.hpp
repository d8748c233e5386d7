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

#ifndef PBT_WORKLOAD_HPP
#define PBT_WORKLOAD_HPP

// C++ standard libraries
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// local sources
#include "pbt/core_model.hpp"

namespace pbt
{
enum class OpKind : std::uint8_t { kInsert, kUpdate, kDelete, kQuery };

/// One line of a workload. Query versions count accepted updates, as the oracle does.
struct WorkloadOp {
  OpKind kind{OpKind::kInsert};
  Key key{};       // lowkey for queries
  Key highkey{};   // queries only
  VersionId version{};  // queries only
  std::uint64_t info{};

  bool operator==(const WorkloadOp &) const = default;
};

using Workload = std::vector<WorkloadOp>;

class ParseError : public std::runtime_error
{
 public:
  ParseError(std::size_t line, const std::string &what)
      : std::runtime_error{"line " + std::to_string(line) + ": " + what}, line_{line}
  {
  }

  [[nodiscard]] std::size_t
  Line() const
  {
    return line_;
  }

 private:
  std::size_t line_;
};

namespace detail
{
inline std::vector<std::string_view>
SplitWords(std::string_view s)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    auto j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::uint64_t
ParseU64(std::string_view word, std::size_t line)
{
  std::uint64_t v = 0;
  const auto *end = word.data() + word.size();
  auto [ptr, ec] = std::from_chars(word.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError{line, "expected an unsigned decimal integer, got '" + std::string{word} + "'"};
  }
  return v;
}
}  // namespace detail

inline Workload
ParseWorkload(std::istream &in)
{
  Workload out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view{line};
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto words = detail::SplitWords(view);
    if (words.empty()) continue;
    const auto arity = [&](std::size_t n) {
      if (words.size() != n + 1) {
        throw ParseError{lineno, "'" + std::string{words[0]} + "' takes " + std::to_string(n)
                                     + " argument(s)"};
      }
    };
    WorkloadOp op;
    if (words[0] == "I" || words[0] == "U") {
      arity(2);
      op.kind = words[0] == "I" ? OpKind::kInsert : OpKind::kUpdate;
      op.key = detail::ParseU64(words[1], lineno);
      op.info = detail::ParseU64(words[2], lineno);
    } else if (words[0] == "D") {
      arity(1);
      op.kind = OpKind::kDelete;
      op.key = detail::ParseU64(words[1], lineno);
    } else if (words[0] == "Q") {
      arity(3);
      op.kind = OpKind::kQuery;
      op.key = detail::ParseU64(words[1], lineno);
      op.highkey = detail::ParseU64(words[2], lineno);
      op.version = detail::ParseU64(words[3], lineno);
      if (op.key > op.highkey) throw ParseError{lineno, "lowkey exceeds highkey"};
    } else {
      throw ParseError{lineno, "unknown operation '" + std::string{words[0]} + "'"};
    }
    out.push_back(op);
  }
  return out;
}

inline Workload
ParseWorkload(const std::string &text)
{
  std::istringstream in{text};
  return ParseWorkload(in);
}

inline Workload
LoadWorkload(const std::filesystem::path &path)
{
  std::ifstream in{path};
  if (!in) throw std::runtime_error{"cannot open workload " + path.string()};
  return ParseWorkload(in);
}

inline void
WriteWorkload(std::ostream &out, const Workload &w)
{
  for (const auto &op : w) {
    switch (op.kind) {
      case OpKind::kInsert:
        out << "I " << op.key << ' ' << op.info << '\n';
        break;
      case OpKind::kUpdate:
        out << "U " << op.key << ' ' << op.info << '\n';
        break;
      case OpKind::kDelete:
        out << "D " << op.key << '\n';
        break;
      case OpKind::kQuery:
        out << "Q " << op.key << ' ' << op.highkey << ' ' << op.version << '\n';
        break;
    }
  }
}

inline std::string
FormatWorkload(const Workload &w)
{
  std::ostringstream out;
  WriteWorkload(out, w);
  return out.str();
}

}  // namespace pbt

#endif  // PBT_WORKLOAD_HPP
