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

#ifndef PBT_HARNESS_HPP
#define PBT_HARNESS_HPP

// C++ standard libraries
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

// external libraries
#include <nlohmann/json.hpp>

// local sources
#include "pbt/block_store.hpp"
#include "pbt/buffer_tree.hpp"
#include "pbt/core_model.hpp"
#include "pbt/oracle.hpp"
#include "pbt/workload.hpp"

namespace pbt
{
/*######################################################################################
 * Workload generation
 *####################################################################################*/

struct Mix {
  double insert{0.5};
  double update{0.2};
  double del{0.1};
  double query{0.2};

  void
  Validate() const
  {
    if (insert < 0 || update < 0 || del < 0 || query < 0) {
      throw std::invalid_argument{"mix fractions must be non-negative"};
    }
    if (std::abs(insert + update + del + query - 1.0) > 1e-9) {
      throw std::invalid_argument{"mix fractions must sum to 1"};
    }
  }
};

enum class KeyDist { kUniform, kClustered, kSequential };
enum class VersionSel { kPresent, kUniformPast };

struct WorkloadSpec {
  std::uint64_t n_ops{0};
  Mix mix{};
  KeyDist key_dist{KeyDist::kUniform};
  Key key_space{0};  // 0 picks 4 * n_ops
  Key max_query_width{64};
  VersionSel versions{VersionSel::kUniformPast};
  std::uint64_t seed{1};

  /// Probability that an update-class slot is replaced by a deliberately illegal op.
  double illegal_rate{0.0};
};

struct GeneratedWorkload {
  Workload ops;
  Oracle oracle;
  std::uint64_t deferred{0};             // update/delete slots turned into inserts
  std::vector<std::size_t> illegal_ops;  // op indices the oracle rejects
};

namespace detail
{
/// Live key pool with O(1) uniform sampling and removal.
class KeyPool
{
 public:
  void
  Add(Key k)
  {
    pos_[k] = keys_.size();
    keys_.push_back(k);
  }

  void
  Remove(Key k)
  {
    const auto i = pos_.at(k);
    pos_[keys_.back()] = i;
    keys_[i] = keys_.back();
    keys_.pop_back();
    pos_.erase(k);
  }

  [[nodiscard]] bool
  Empty() const
  {
    return keys_.empty();
  }

  Key
  Sample(std::mt19937_64 &rng) const
  {
    return keys_[std::uniform_int_distribution<std::size_t>{0, keys_.size() - 1}(rng)];
  }

 private:
  std::vector<Key> keys_;
  std::unordered_map<Key, std::size_t> pos_;
};
}  // namespace detail

/// Deterministic for a given spec; legal by construction unless illegal_rate > 0.
inline GeneratedWorkload
Generate(const WorkloadSpec &spec)
{
  spec.mix.Validate();
  GeneratedWorkload out;
  std::mt19937_64 rng{spec.seed};
  std::uniform_real_distribution<double> unit{0.0, 1.0};
  const Key space = spec.key_space != 0 ? spec.key_space : std::max<Key>(16, 4 * spec.n_ops);
  constexpr std::size_t kClusters = 16;
  std::vector<Key> centers(kClusters);
  for (auto &c : centers) c = std::uniform_int_distribution<Key>{0, space - 1}(rng);
  Key next_sequential = 0;

  std::set<Key> used;  // ever inserted keys, never reusable
  std::vector<Key> deleted;
  detail::KeyPool live;

  const auto draw_key = [&]() -> Key {
    switch (spec.key_dist) {
      case KeyDist::kUniform:
        return std::uniform_int_distribution<Key>{0, space - 1}(rng);
      case KeyDist::kClustered: {
        const auto c = centers[std::uniform_int_distribution<std::size_t>{0, kClusters - 1}(rng)];
        const auto off = static_cast<Key>(std::geometric_distribution<std::uint64_t>{0.05}(rng));
        return (c + off) % space;
      }
      case KeyDist::kSequential:
        return next_sequential++;
    }
    return 0;
  };
  const auto fresh_key = [&]() -> Key {
    auto k = draw_key();
    for (int tries = 0; used.contains(k) && tries < 64; ++tries) k = draw_key();
    while (used.contains(k)) ++k;
    return k;
  };
  const auto info = [&]() { return std::uniform_int_distribution<std::uint64_t>{0, 1U << 30}(rng); };

  const auto emit = [&](WorkloadOp op) {
    if (op.kind != OpKind::kQuery) {
      static constexpr std::array kinds{Kind::kInsert, Kind::kUpdate, Kind::kDelete};
      const auto kind = kinds[static_cast<std::size_t>(op.kind)];
      if (out.oracle.Apply(kind, op.key, MakeInfo(op.info))) {
        out.illegal_ops.push_back(out.ops.size());
      } else if (op.kind == OpKind::kInsert) {
        used.insert(op.key);
        live.Add(op.key);
      } else if (op.kind == OpKind::kDelete) {
        live.Remove(op.key);
        deleted.push_back(op.key);
      }
    }
    out.ops.push_back(op);
  };

  for (std::uint64_t i = 0; i < spec.n_ops; ++i) {
    const auto r = unit(rng);
    const auto &mx = spec.mix;
    OpKind kind = r < mx.insert                        ? OpKind::kInsert
                  : r < mx.insert + mx.update          ? OpKind::kUpdate
                  : r < mx.insert + mx.update + mx.del ? OpKind::kDelete
                                                       : OpKind::kQuery;
    if (kind != OpKind::kQuery && spec.illegal_rate > 0 && unit(rng) < spec.illegal_rate) {
      WorkloadOp op;
      switch (std::uniform_int_distribution<int>{0, 3}(rng)) {
        case 0:  // update of a missing key
          op = {OpKind::kUpdate, fresh_key(), 0, 0, info()};
          break;
        case 1:  // delete of a missing key
          op = {OpKind::kDelete, fresh_key(), 0, 0, 0};
          break;
        case 2:  // re-insert after delete
          if (!deleted.empty()) {
            op = {OpKind::kInsert,
                  deleted[std::uniform_int_distribution<std::size_t>{0, deleted.size() - 1}(rng)],
                  0, 0, info()};
            break;
          }
          [[fallthrough]];
        default:  // duplicate live insert
          op = live.Empty() ? WorkloadOp{OpKind::kUpdate, fresh_key(), 0, 0, info()}
                            : WorkloadOp{OpKind::kInsert, live.Sample(rng), 0, 0, info()};
          break;
      }
      emit(op);
      continue;
    }
    if ((kind == OpKind::kUpdate || kind == OpKind::kDelete) && live.Empty()) {
      kind = OpKind::kInsert;
      ++out.deferred;
    }
    switch (kind) {
      case OpKind::kInsert:
        emit({OpKind::kInsert, fresh_key(), 0, 0, info()});
        break;
      case OpKind::kUpdate:
        emit({OpKind::kUpdate, live.Sample(rng), 0, 0, info()});
        break;
      case OpKind::kDelete:
        emit({OpKind::kDelete, live.Sample(rng), 0, 0, 0});
        break;
      case OpKind::kQuery: {
        const auto lo = spec.key_dist == KeyDist::kSequential
                            ? std::uniform_int_distribution<Key>{0, std::max<Key>(next_sequential, 1) - 1}(rng)
                            : draw_key();
        const auto width = std::uniform_int_distribution<Key>{0, spec.max_query_width}(rng);
        const auto hi = lo > kMaxKey - width ? kMaxKey : lo + width;
        const auto now = out.oracle.Version();
        const auto v = spec.versions == VersionSel::kPresent
                           ? now
                           : std::uniform_int_distribution<VersionId>{0, now}(rng);
        emit({OpKind::kQuery, lo, hi, v, 0});
        break;
      }
    }
  }
  return out;
}

/*######################################################################################
 * Running workloads
 *####################################################################################*/

class WorkloadError : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  StoreConfig store{};
  std::uint64_t tree_seed{1};
  bool strict_audit{false};
  bool inject_fault{false};
  std::filesystem::path store_path{};  // empty selects the in-memory store
  bool audit{true};
  bool keep_results{false};
  std::size_t height_samples{8};
};

struct QueryOutcome {
  std::size_t op_index{};
  Key lowkey{};
  Key highkey{};
  VersionId version{};  // as written in the workload
  Answer answer;
};

struct OpClassIo {
  std::uint64_t count{0};
  std::uint64_t transfers{0};

  [[nodiscard]] double
  Amortized() const
  {
    return count == 0 ? 0.0 : static_cast<double>(transfers) / static_cast<double>(count);
  }
};

struct ErrorRecord {
  std::size_t op_index{};
  VersionId version{};
  Key key{};
  std::string reason;
};

struct Mismatch {
  std::size_t op_index{};
  QueryElement query{};
  std::size_t expected{};
  std::size_t got{};
};

struct EmptyBudget {
  std::uint64_t invocations{0};
  std::uint64_t max_io{0};
  std::uint64_t over_budget{0};  // invocations above 4m transfers
  std::uint64_t arrival_checks{0};
  std::uint64_t min_arrival{std::numeric_limits<std::uint64_t>::max()};
  std::uint64_t short_arrivals{0};  // consecutive normal empties with < m/2 arrivals
  std::uint64_t occupancy_checks{0};
  std::uint64_t occupancy_failures{0};
  std::uint64_t peak_decoded{0};
  std::uint64_t decode_over_budget{0};  // empties holding more than (m + 2) * B records
};

struct RunReport {
  std::uint64_t block_elems{0};
  std::uint64_t fanout{0};
  std::uint64_t n_ops{0};
  std::uint64_t seed{0};
  IoStats io{};
  std::array<OpClassIo, 4> per_class{};  // insert, update, delete, query
  std::uint64_t flush_io{0};
  std::vector<std::size_t> height_samples;
  std::size_t height{0};
  std::uint64_t node_count{0};
  std::uint64_t node_table_blocks{0};
  std::uint64_t empty_count{0};
  std::uint64_t flush_empty_count{0};
  std::uint64_t report_io{0};
  std::uint64_t r_total{0};
  std::uint64_t queries{0};
  std::uint64_t deferred{0};
  EmptyBudget budget{};
  std::vector<ErrorRecord> structural_errors;
  std::vector<std::string> audit_violations;
  std::vector<std::size_t> rejected_ops;  // oracle view
  std::vector<std::size_t> flagged_ops;   // tree view: structural errors and illegal-op audit hits
  std::vector<Mismatch> mismatches;
  std::vector<QueryOutcome> results;  // only with RunConfig::keep_results
  std::uint64_t result_conflicts{0};

  [[nodiscard]] std::uint64_t
  TotalIo() const
  {
    return io.Transfers();
  }

  [[nodiscard]] bool
  Clean() const
  {
    return structural_errors.empty() && audit_violations.empty() && mismatches.empty()
           && result_conflicts == 0;
  }
};

inline const char *const kOpClassNames[] = {"insert", "update", "delete", "query"};

/**
 * @brief Runs a workload on a fresh tree, flushes, audits, and compares every query
 * against the oracle.
 *
 * Query versions in the workload count oracle-accepted updates; they are translated to
 * tree versions, since the tree also spends a version on each rejected op.
 */
inline RunReport
RunWorkload(const Workload &ops, const RunConfig &cfg)
{
  RunReport rep;
  rep.block_elems = cfg.store.block_elems;
  rep.fanout = cfg.store.fanout;
  rep.n_ops = ops.size();
  rep.seed = cfg.tree_seed;

  TreeConfig tc{cfg.store, cfg.tree_seed, cfg.strict_audit, cfg.inject_fault};
  std::unique_ptr<BlockStore> store;
  if (cfg.store_path.empty()) {
    store = std::make_unique<MemoryBlockStore>(cfg.store);
  } else {
    store = FileBlockStore::Create(cfg.store_path, cfg.store);
  }
  PersistentBufferTree tree{std::move(store), tc};

  const auto m = cfg.store.fanout;
  const auto b = cfg.store.block_elems;
  auto &budget = rep.budget;
  tree.SetEmptyObserver([&](const EmptyEvent &ev) {
    ++budget.invocations;
    budget.max_io = std::max(budget.max_io, ev.io);
    if (ev.io > 4 * m) ++budget.over_budget;
    budget.peak_decoded = std::max(budget.peak_decoded, ev.peak_decoded);
    if (ev.peak_decoded > (m + 2) * b) ++budget.decode_over_budget;
    if (!ev.flush_mode) {
      if (ev.follows_normal_empty) {
        ++budget.arrival_checks;
        budget.min_arrival = std::min(budget.min_arrival, ev.arrived_blocks);
        if (ev.arrived_blocks < (m + 1) / 2) ++budget.short_arrivals;
      }
      if (ev.internal) {
        ++budget.occupancy_checks;
        if (ev.retained != std::min<std::uint64_t>(ev.resolved, ((m + 1) / 2) * b)) {
          ++budget.occupancy_failures;
        }
      }
    }
  });

  Oracle oracle;
  std::vector<VersionId> tree_version_of{0};  // oracle version -> tree version
  std::vector<std::size_t> op_of_version{0};  // tree version -> op index
  std::vector<std::pair<std::size_t, QueryId>> queries;
  const auto sample_every =
      cfg.height_samples == 0 ? 0 : std::max<std::size_t>(1, ops.size() / cfg.height_samples);

  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto &op = ops[i];
    const auto before = tree.Store().SnapshotStats().Transfers();
    auto &cls = rep.per_class[static_cast<std::size_t>(op.kind)];
    if (op.kind == OpKind::kQuery) {
      if (op.version >= tree_version_of.size()) {
        throw WorkloadError{"op " + std::to_string(i + 1) + ": query version "
                            + std::to_string(op.version) + " is in the future"};
      }
      queries.emplace_back(i, tree.RangeSearch(op.key, op.highkey, tree_version_of[op.version]));
    } else {
      VersionId v = 0;
      std::optional<std::string> rejected;
      switch (op.kind) {
        case OpKind::kInsert:
          rejected = oracle.Apply(Kind::kInsert, op.key, MakeInfo(op.info));
          v = tree.Insert(op.key, MakeInfo(op.info));
          break;
        case OpKind::kUpdate:
          rejected = oracle.Apply(Kind::kUpdate, op.key, MakeInfo(op.info));
          v = tree.Update(op.key, MakeInfo(op.info));
          break;
        default:
          rejected = oracle.Apply(Kind::kDelete, op.key);
          v = tree.Delete(op.key);
          break;
      }
      op_of_version.push_back(i);
      if (rejected) {
        rep.rejected_ops.push_back(i);
      } else {
        tree_version_of.push_back(v);
      }
    }
    cls.count += 1;
    cls.transfers += tree.Store().SnapshotStats().Transfers() - before;
    if (sample_every != 0 && (i + 1) % sample_every == 0) rep.height_samples.push_back(tree.Height());
  }

  const auto before_flush = tree.Store().SnapshotStats().Transfers();
  tree.Flush();
  rep.io = tree.Store().SnapshotStats();
  rep.flush_io = rep.io.Transfers() - before_flush;
  rep.height = tree.Height();
  rep.height_samples.push_back(rep.height);

  const auto stats = tree.Stats();
  rep.node_count = stats.node_count;
  rep.empty_count = stats.empty_count;
  rep.flush_empty_count = stats.flush_empty_count;
  rep.report_io = stats.report_io;
  rep.result_conflicts = stats.result_conflicts;
  rep.node_table_blocks = tree.NodeTableBlocks();

  std::set<std::size_t> flagged;
  const auto op_index = [&](VersionId v) { return v < op_of_version.size() ? op_of_version[v] : 0; };
  for (const auto &e : tree.StructuralErrors()) {
    rep.structural_errors.push_back({op_index(e.version), e.version, e.key, e.reason});
    flagged.insert(op_index(e.version));
  }
  if (cfg.audit) {
    for (const auto &v : tree.Audit()) {
      if (v.type == Violation::Type::kIllegalOp) {
        flagged.insert(op_index(v.version));
        rep.structural_errors.push_back({op_index(v.version), v.version, 0, v.message});
      } else {
        rep.audit_violations.push_back(std::string{ToString(v.type)} + ": " + v.message);
      }
    }
  }
  rep.flagged_ops.assign(flagged.begin(), flagged.end());

  const LifespanIndex index{oracle.Log()};
  rep.queries = queries.size();
  for (const auto &[i, id] : queries) {
    const auto &rs = tree.Result(id);
    rep.r_total += (rs.reported.size() + b - 1) / b;
    const auto &op = ops[i];
    const auto expected = index.Range(op.key, op.highkey, op.version);
    Answer got;
    for (const auto &[k, e] : rs.reported) got.emplace(k, e.info);
    if (got != expected || !rs.complete) {
      rep.mismatches.push_back({i, rs.query, expected.size(), got.size()});
    }
    if (cfg.keep_results) rep.results.push_back({i, op.key, op.highkey, op.version, std::move(got)});
  }
  return rep;
}

/*######################################################################################
 * Sweeps
 *####################################################################################*/

struct EquivalenceResult {
  std::vector<RunReport> reports;
  std::vector<std::filesystem::path> artifacts;

  [[nodiscard]] bool
  Passed() const
  {
    return std::all_of(reports.begin(), reports.end(), [](const auto &r) { return r.Clean(); });
  }
};

/// Writes a replayable workload with its seed in a comment header.
inline std::filesystem::path
WriteFailureArtifact(const std::filesystem::path &dir, const Workload &ops, std::uint64_t seed,
                     const RunConfig &cfg)
{
  std::filesystem::create_directories(dir);
  const auto path = dir / ("failure_seed_" + std::to_string(seed) + ".pbtw");
  std::ofstream out{path};
  out << "# seed " << seed << " block-size " << cfg.store.block_elems << " fanout "
      << cfg.store.fanout << "\n";
  WriteWorkload(out, ops);
  return path;
}

/// Runs seeds [first_seed, first_seed + seeds) in up to `jobs` parallel cells.
inline EquivalenceResult
RunEquivalence(WorkloadSpec spec, RunConfig cfg, std::uint64_t first_seed, std::uint64_t seeds,
               std::size_t jobs = 1, const std::filesystem::path &artifact_dir = {})
{
  EquivalenceResult out;
  out.reports.resize(seeds);
  std::vector<Workload> workloads(seeds);
  const auto cell = [&](std::uint64_t i) {
    auto s = spec;
    s.seed = first_seed + i;
    auto c = cfg;
    c.tree_seed = s.seed;
    if (!c.store_path.empty()) {
      c.store_path += "." + std::to_string(s.seed);
    }
    auto gen = Generate(s);
    out.reports[i] = RunWorkload(gen.ops, c);
    out.reports[i].deferred = gen.deferred;
    out.reports[i].seed = s.seed;
    workloads[i] = std::move(gen.ops);
  };
  jobs = std::max<std::size_t>(1, jobs);
  for (std::uint64_t base = 0; base < seeds; base += jobs) {
    std::vector<std::future<void>> running;
    for (std::uint64_t i = base; i < std::min<std::uint64_t>(seeds, base + jobs); ++i) {
      running.push_back(std::async(std::launch::async, cell, i));
    }
    for (auto &f : running) f.get();
  }
  if (!artifact_dir.empty()) {
    for (std::uint64_t i = 0; i < seeds; ++i) {
      if (!out.reports[i].Clean()) {
        out.artifacts.push_back(
            WriteFailureArtifact(artifact_dir, workloads[i], first_seed + i, cfg));
      }
    }
  }
  return out;
}

struct ScalingPoint {
  std::uint64_t n_ops{0};
  double n_blocks{0};
  double log_m_n{0};
  std::uint64_t total_io{0};
  std::uint64_t r_total{0};
  double ratio{0};           // (totalIO - r_total) / (n log_m n)
  double per_op_io{0};       // (totalIO - r_total) / N
  double per_op_bound{0};    // 8 log_m(n) / B
  std::uint64_t high_water{0};
  std::uint64_t space_bound{0};  // 4n + node-table blocks
  RunReport report;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  double ratio_spread{1.0};  // max ratio / min ratio

  [[nodiscard]] bool
  StableWithin(double factor) const
  {
    return ratio_spread <= factor;
  }

  [[nodiscard]] bool
  PerOpWithinBound() const
  {
    return std::all_of(points.begin(), points.end(),
                       [](const auto &p) { return p.per_op_io <= p.per_op_bound; });
  }

  [[nodiscard]] bool
  SpaceWithinBound() const
  {
    return std::all_of(points.begin(), points.end(),
                       [](const auto &p) { return p.high_water <= p.space_bound; });
  }
};

inline ScalingResult
RunScaling(const std::vector<std::uint64_t> &grid, WorkloadSpec spec, RunConfig cfg,
           std::size_t jobs = 1)
{
  ScalingResult out;
  out.points.resize(grid.size());
  const auto cell = [&](std::size_t i) {
    auto s = spec;
    s.n_ops = grid[i];
    auto gen = Generate(s);
    auto &p = out.points[i];
    p.report = RunWorkload(gen.ops, cfg);
    p.report.deferred = gen.deferred;
    const auto b = static_cast<double>(cfg.store.block_elems);
    const auto m = static_cast<double>(cfg.store.fanout);
    p.n_ops = grid[i];
    p.n_blocks = static_cast<double>(grid[i]) / b;
    p.log_m_n = p.n_blocks > 1 ? std::log(p.n_blocks) / std::log(m) : 1.0;
    p.total_io = p.report.TotalIo();
    p.r_total = p.report.r_total;
    const auto net = static_cast<double>(p.total_io) - static_cast<double>(p.r_total);
    p.ratio = net / (std::max(p.n_blocks, 1.0) * p.log_m_n);
    p.per_op_io = grid[i] == 0 ? 0.0 : net / static_cast<double>(grid[i]);
    p.per_op_bound = 8.0 * p.log_m_n / b;
    p.high_water = p.report.io.high_water_blocks;
    p.space_bound = 4 * static_cast<std::uint64_t>(std::ceil(p.n_blocks)) + p.report.node_table_blocks;
  };
  jobs = std::max<std::size_t>(1, jobs);
  for (std::size_t base = 0; base < grid.size(); base += jobs) {
    std::vector<std::future<void>> running;
    for (auto i = base; i < std::min(grid.size(), base + jobs); ++i) {
      running.push_back(std::async(std::launch::async, cell, i));
    }
    for (auto &f : running) f.get();
  }
  if (!out.points.empty()) {
    double lo = out.points.front().ratio;
    double hi = lo;
    for (const auto &p : out.points) {
      lo = std::min(lo, p.ratio);
      hi = std::max(hi, p.ratio);
    }
    out.ratio_spread = lo > 0 ? hi / lo : 1.0;
  }
  return out;
}

/*######################################################################################
 * Report serialization
 *####################################################################################*/

inline nlohmann::json
ToJson(const RunReport &r)
{
  nlohmann::json j;
  j["config"] = {{"block_size", r.block_elems}, {"fanout", r.fanout}, {"n_ops", r.n_ops},
                 {"seed", r.seed}};
  j["io"] = {{"reads", r.io.reads},
             {"writes", r.io.writes},
             {"allocs", r.io.allocs},
             {"frees", r.io.frees},
             {"high_water_blocks", r.io.high_water_blocks},
             {"transfers", r.io.Transfers()},
             {"flush_transfers", r.flush_io}};
  auto &per = j["per_op"];
  per = nlohmann::json::object();
  for (std::size_t i = 0; i < r.per_class.size(); ++i) {
    per[kOpClassNames[i]] = {{"count", r.per_class[i].count},
                             {"transfers", r.per_class[i].transfers},
                             {"amortized", r.per_class[i].Amortized()}};
  }
  j["height"] = r.height;
  j["height_samples"] = r.height_samples;
  j["node_count"] = r.node_count;
  j["node_table_blocks"] = r.node_table_blocks;
  j["empty_buffer"] = {{"invocations", r.empty_count},
                       {"flush_invocations", r.flush_empty_count},
                       {"max_transfers", r.budget.max_io},
                       {"over_budget", r.budget.over_budget},
                       {"min_arrival_blocks",
                        r.budget.arrival_checks == 0 ? nlohmann::json(nullptr)
                                                     : nlohmann::json(r.budget.min_arrival)},
                       {"occupancy_failures", r.budget.occupancy_failures},
                       {"peak_decoded", r.budget.peak_decoded}};
  j["queries"] = r.queries;
  j["report_transfers"] = r.report_io;
  j["r_total"] = r.r_total;
  j["deferred_ops"] = r.deferred;
  auto &errs = j["structural_errors"];
  errs = nlohmann::json::array();
  for (const auto &e : r.structural_errors) {
    errs.push_back({{"op", e.op_index + 1}, {"version", e.version}, {"key", e.key},
                    {"reason", e.reason}});
  }
  j["audit_violations"] = r.audit_violations;
  j["mismatches"] = r.mismatches.size();
  if (!r.results.empty()) {
    auto &res = j["results"];
    res = nlohmann::json::array();
    for (const auto &q : r.results) {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto &[k, info] : q.answer) entries.push_back({{"key", k}, {"info", InfoValue(info)}});
      res.push_back({{"op", q.op_index + 1},
                     {"lowkey", q.lowkey},
                     {"highkey", q.highkey},
                     {"version", q.version},
                     {"entries", entries}});
    }
  }
  j["ok"] = r.Clean();
  return j;
}

inline std::string
CsvHeader()
{
  return "block_size,fanout,n_ops,seed,reads,writes,transfers,high_water_blocks,height,"
         "node_count,empty_invocations,max_empty_transfers,queries,r_total,structural_errors,"
         "audit_violations,mismatches";
}

inline std::string
ToCsvRow(const RunReport &r)
{
  std::ostringstream os;
  os << r.block_elems << ',' << r.fanout << ',' << r.n_ops << ',' << r.seed << ',' << r.io.reads
     << ',' << r.io.writes << ',' << r.io.Transfers() << ',' << r.io.high_water_blocks << ','
     << r.height << ',' << r.node_count << ',' << r.empty_count << ',' << r.budget.max_io << ','
     << r.queries << ',' << r.r_total << ',' << r.structural_errors.size() << ','
     << r.audit_violations.size() << ',' << r.mismatches.size();
  return os.str();
}

}  // namespace pbt

#endif  // PBT_HARNESS_HPP
