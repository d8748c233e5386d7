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

#ifndef PBT_BUFFER_TREE_HPP
#define PBT_BUFFER_TREE_HPP

// C++ standard libraries
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

// local sources
#include "pbt/block_store.hpp"
#include "pbt/core_model.hpp"

namespace pbt
{
/*######################################################################################
 * Public vocabulary
 *####################################################################################*/

using NodeId = std::uint32_t;

inline constexpr NodeId kRootNode = 0;

struct TreeConfig {
  StoreConfig store{};
  std::uint64_t seed{1};

  /// Throw on structural errors instead of recording them.
  bool strict_audit{false};

  /// Drops subtree reports; exists only so verification tooling can prove it detects faults.
  bool inject_fault{false};
};

/// A lazily detected precondition violation, attributed to the offending operation.
struct StructuralEvent {
  VersionId version{};
  Key key{};
  std::string reason;

  bool operator==(const StructuralEvent &) const = default;
};

class StructuralError : public std::runtime_error
{
 public:
  explicit StructuralError(StructuralEvent event)
      : std::runtime_error{"structural error at version " + std::to_string(event.version) + ": "
                           + event.reason},
        event_{std::move(event)}
  {
  }

  [[nodiscard]] const StructuralEvent &
  Event() const
  {
    return event_;
  }

 private:
  StructuralEvent event_;
};

struct ReportedEntry {
  Info info{};
  Lifespan lifespan{};

  bool operator==(const ReportedEntry &) const = default;
};

struct ResultSet {
  QueryElement query{};
  std::map<Key, ReportedEntry> reported;
  bool complete{false};
};

/// Instrumentation emitted once per buffer-emptying invocation.
struct EmptyEvent {
  NodeId node{};
  std::uint32_t depth{};
  bool flush_mode{false};
  bool internal{false};             // node has children once the invocation finishes
  std::uint64_t io{0};              // transfers, excluding subtree reports and recursion
  std::uint64_t report_io{0};       // transfers spent in subtree reports
  std::uint64_t blocks_loaded{0};
  std::uint64_t records_loaded{0};
  std::uint64_t resolved{0};        // resolved elements present after resolution
  std::uint64_t retained{0};        // resolved elements kept in the node
  bool follows_normal_empty{false}; // a non-flush empty of this node happened before
  std::uint64_t arrived_blocks{0};  // blocks appended since that previous non-flush empty
  std::uint64_t peak_decoded{0};
};

struct TreeStats {
  IoStats io{};
  std::uint64_t node_count{0};
  std::uint64_t stored_elements{0};
  std::uint64_t live_elements{0};
  VersionId current_version{0};

  std::uint64_t empty_count{0};
  std::uint64_t flush_empty_count{0};
  std::uint64_t max_empty_io{0};
  std::uint64_t report_io{0};
  std::uint64_t peak_decoded{0};
  std::uint64_t result_conflicts{0};
};

struct Violation {
  enum class Type {
    kHeapOrder,
    kSearchOrder,
    kSplitters,
    kOccupancy,
    kSpace,
    kPending,
    kUniqueness,
    kLifespanChain,
    kIllegalOp,
  };

  Type type{};
  NodeId node{};
  VersionId version{};  // offending operation for kIllegalOp, 0 otherwise
  std::string message;
};

inline const char *
ToString(Violation::Type t)
{
  switch (t) {
    case Violation::Type::kHeapOrder:
      return "heap-order";
    case Violation::Type::kSearchOrder:
      return "search-order";
    case Violation::Type::kSplitters:
      return "splitters";
    case Violation::Type::kOccupancy:
      return "occupancy";
    case Violation::Type::kSpace:
      return "space";
    case Violation::Type::kPending:
      return "pending";
    case Violation::Type::kUniqueness:
      return "uniqueness";
    case Violation::Type::kLifespanChain:
      return "lifespan-chain";
    case Violation::Type::kIllegalOp:
      return "illegal-op";
  }
  return "unknown";
}

/*######################################################################################
 * The tree
 *####################################################################################*/

/**
 * @brief Partially persistent buffer tree over a simulated block device.
 *
 * Updates create versions 1, 2, ...; range searches may target any version up to the
 * current one and are answered lazily by buffer-emptying passes. `Flush()` forces all
 * pending work down so that every submitted query is complete.
 *
 * Nodes form a heap on element priorities and a search tree on keys. Each node owns
 * a list of buffer blocks; the node table itself is resident and only written to the
 * store by `Checkpoint()`.
 */
class PersistentBufferTree
{
 public:
  /*####################################################################################
   * Construction
   *##################################################################################*/

  explicit PersistentBufferTree(TreeConfig config = {})
      : PersistentBufferTree{std::make_unique<MemoryBlockStore>(config.store), config}
  {
  }

  PersistentBufferTree(std::unique_ptr<BlockStore> store, TreeConfig config)
      : config_{config}, store_{std::move(store)}, priorities_{config.seed}
  {
    config_.store = store_->Config();
    config_.store.Validate();
    nodes_.push_back(MakeNode(KeyRange{kMinKey, kMaxKey, false}, 0));
  }

  /// Reopens a tree persisted with `Checkpoint()`.
  static PersistentBufferTree
  Open(std::unique_ptr<FileBlockStore> store, TreeConfig config = {})
  {
    auto *file = store.get();
    const auto header = file->Header();
    PersistentBufferTree tree{std::move(store), config};
    tree.LoadMetadata(*file, header);
    return tree;
  }

  PersistentBufferTree(PersistentBufferTree &&) noexcept = default;
  PersistentBufferTree &operator=(PersistentBufferTree &&) noexcept = default;

  /*####################################################################################
   * Updates and queries
   *##################################################################################*/

  VersionId
  Insert(Key key, const Info &info)
  {
    const auto v = ++current_version_;
    Stage(MakeInsert(key, v, priorities_.Next(), info));
    return v;
  }

  VersionId
  Update(Key key, const Info &info)
  {
    const auto v = ++current_version_;
    Stage(MakeUpdate(key, v, priorities_.Next(), info));
    return v;
  }

  VersionId
  Delete(Key key)
  {
    const auto v = ++current_version_;
    Stage(MakeDelete(key, v, priorities_.Next()));
    return v;
  }

  /**
   * @brief Submits a batched range query over [lowkey, highkey] at `version`.
   *
   * Version 0 names the initial empty version. The answer is complete once `Flush()`
   * returns.
   */
  QueryId
  RangeSearch(Key lowkey, Key highkey, VersionId version)
  {
    if (lowkey > highkey) throw std::invalid_argument{"lowkey exceeds highkey"};
    if (version > current_version_) {
      throw std::invalid_argument{"query version " + std::to_string(version)
                                  + " is newer than the current version "
                                  + std::to_string(current_version_)};
    }
    const QueryElement q{next_query_id_++, lowkey, highkey, version};
    results_.emplace(q.query_id, ResultSet{q, {}, false});
    Stage(q);
    return q.query_id;
  }

  /**
   * @brief Pushes every pending operation and query down until it settles.
   *
   * Processes nodes top-down. Nodes holding unresolved elements, queries, or arrivals
   * that may break heap order are emptied even when below the overflow threshold.
   */
  const std::map<QueryId, ResultSet> &
  Flush()
  {
    PushStaging();
    std::deque<NodeId> work{kRootNode};
    while (!work.empty()) {
      const auto u = work.front();
      work.pop_front();
      if (NeedsFlush(u)) {
        if (PhysicalBlocks(u) > Fanout()) {
          EmptyBuffer(u, Mode::kNormal);
        } else {
          EmptyBuffer(u, Mode::kFlush);
        }
      } else {
        nodes_[u].dirty = false;
      }
      for (auto c : nodes_[u].children) work.push_back(c);
    }
    for (auto &[id, rs] : results_) rs.complete = true;
    return results_;
  }

  [[nodiscard]] const std::map<QueryId, ResultSet> &
  Results() const
  {
    return results_;
  }

  [[nodiscard]] const ResultSet &
  Result(QueryId id) const
  {
    return results_.at(id);
  }

  /// Forgets completed results, e.g. between verification batches.
  void
  ClearCompletedResults()
  {
    std::erase_if(results_, [](const auto &kv) { return kv.second.complete; });
  }

  [[nodiscard]] const std::vector<StructuralEvent> &
  StructuralErrors() const
  {
    return errors_;
  }

  /*####################################################################################
   * Introspection
   *##################################################################################*/

  [[nodiscard]] VersionId
  CurrentVersion() const
  {
    return current_version_;
  }

  [[nodiscard]] std::size_t
  Height() const
  {
    std::uint32_t h = 0;
    for (const auto &n : nodes_) h = std::max(h, n.depth);
    return h;
  }

  [[nodiscard]] TreeStats
  Stats() const
  {
    TreeStats s = stats_;
    s.io = store_->SnapshotStats();
    s.node_count = nodes_.size();
    s.current_version = current_version_;
    for (const auto &n : nodes_) {
      s.stored_elements += n.elements;
      s.live_elements += n.open;
    }
    return s;
  }

  void
  SetEmptyObserver(std::function<void(const EmptyEvent &)> observer)
  {
    observer_ = std::move(observer);
  }

  [[nodiscard]] const TreeConfig &
  Config() const
  {
    return config_;
  }

  BlockStore &
  Store()
  {
    return *store_;
  }

  [[nodiscard]] std::size_t
  NodeCount() const
  {
    return nodes_.size();
  }

  /// Blocks a checkpoint of the node table would occupy.
  [[nodiscard]] std::uint64_t
  NodeTableBlocks() const
  {
    const auto bytes = SerializeMetadata().size();
    const auto per_block = store_->PayloadBytes() - kChainHeader;
    return (bytes + per_block - 1) / per_block;
  }

  /*####################################################################################
   * Audit
   *##################################################################################*/

  /**
   * @brief Full traversal checking structural properties; empty result iff healthy.
   *
   * Checks heap order over resolved elements, search order against inherited splitter
   * ranges, splitter shape, buffer occupancy, the space bound, absence of pending work,
   * and per-key lifespan chains. Chain breaks that stem from illegal operations are
   * reported as kIllegalOp with the offending version.
   */
  std::vector<Violation>
  Audit()
  {
    std::vector<Violation> out;
    const auto m = Fanout();
    const auto b = BlockElems();
    const auto half = (m / 2) * b;
    std::vector<std::vector<Element>> contents(nodes_.size());
    std::vector<bool> has_queries(nodes_.size(), false);

    for (NodeId u = 0; u < nodes_.size(); ++u) {
      const auto &n = nodes_[u];
      std::uint64_t counted = 0;
      for (const auto &bb : n.buffer) {
        counted += bb.count;
        for (auto &r : DecodeBlock(store_->ReadBlock(bb.id), bb.count)) {
          if (auto *e = std::get_if<Element>(&r)) {
            contents[u].push_back(*e);
          } else {
            has_queries[u] = true;
          }
        }
      }
      if (counted != n.elements + n.queries) {
        out.push_back({Violation::Type::kOccupancy, u, 0, "buffer count mismatch"});
      }
      if (n.buffer.size() > m) {
        out.push_back({Violation::Type::kOccupancy, u, 0,
                       "buffer holds " + std::to_string(n.buffer.size()) + " blocks"});
      }
      if (has_queries[u]) out.push_back({Violation::Type::kPending, u, 0, "pending query"});
      std::uint64_t resolved = 0;
      for (const auto &e : contents[u]) {
        if (!e.resolved) {
          out.push_back({Violation::Type::kPending, u, 0,
                         "unresolved element for key " + std::to_string(e.key)});
        } else {
          ++resolved;
        }
        if (n.range.empty || e.key < n.range.lo || e.key > n.range.hi) {
          out.push_back({Violation::Type::kSearchOrder, u, 0,
                         "key " + std::to_string(e.key) + " outside node range"});
        }
      }
      if (!n.children.empty()) {
        if (n.children.size() != m || n.splitters.size() != m - 1
            || !std::is_sorted(n.splitters.begin(), n.splitters.end())) {
          out.push_back({Violation::Type::kSplitters, u, 0, "malformed child table"});
        }
        for (std::size_t i = 0; i < n.children.size() && i < m; ++i) {
          const auto &cr = nodes_[n.children[i]].range;
          if (!(cr == ChildRange(n, i))) {
            out.push_back({Violation::Type::kSplitters, u, 0, "child range disagrees"});
          }
        }
        if (n.has_limit && resolved < half) {
          out.push_back({Violation::Type::kOccupancy, u, 0,
                         "internal node holds fewer than m/2 blocks of elements"});
        }
      }
    }

    // heap order: max over node < min over proper descendants
    std::vector<std::optional<Rank>> node_max(nodes_.size()), subtree_min(nodes_.size());
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      for (const auto &e : contents[u]) {
        if (!e.resolved) continue;
        const auto r = RankOf(e);
        if (!node_max[u] || *node_max[u] < r) node_max[u] = r;
      }
    }
    std::function<std::optional<Rank>(NodeId)> visit = [&](NodeId u) -> std::optional<Rank> {
      std::optional<Rank> below;
      for (auto c : nodes_[u].children) {
        auto sub = visit(c);
        if (sub && (!below || *sub < *below)) below = sub;
      }
      if (node_max[u] && below && !(*node_max[u] < *below)) {
        out.push_back({Violation::Type::kHeapOrder, u, 0,
                       "node priority exceeds a descendant's priority"});
      }
      std::optional<Rank> own;
      for (const auto &e : contents[u]) {
        if (!e.resolved) continue;
        const auto r = RankOf(e);
        if (!own || r < *own) own = r;
      }
      if (own && (!below || *own < *below)) return own;
      return below;
    };
    visit(kRootNode);

    // space
    std::uint64_t stored = 0;
    for (const auto &c : contents) stored += c.size();
    const auto n_blocks = std::max<std::uint64_t>(1, (stored + b - 1) / b);
    const auto live = store_->LiveBlocks() - metadata_blocks_.size();
    if (live > 4 * n_blocks + 1) {
      out.push_back({Violation::Type::kSpace, kRootNode, 0,
                     std::to_string(live) + " live blocks for " + std::to_string(stored)
                         + " elements"});
    }

    AuditChains(contents, out);
    return out;
  }

  /*####################################################################################
   * Persistence
   *##################################################################################*/

  /// Writes the node table and tree state through the store; file backends only.
  void
  Checkpoint()
  {
    auto *file = dynamic_cast<FileBlockStore *>(store_.get());
    if (file == nullptr) throw StoreError{"checkpoint requires a file-backed store"};
    for (auto id : metadata_blocks_) store_->Free(id);
    metadata_blocks_.clear();

    const auto per_block = store_->PayloadBytes() - kChainHeader;
    auto bytes = SerializeMetadata();
    auto needed = (bytes.size() + per_block - 1) / per_block;
    while (true) {
      while (metadata_blocks_.size() < needed) metadata_blocks_.push_back(store_->Alloc());
      bytes = SerializeMetadata();
      needed = (bytes.size() + per_block - 1) / per_block;
      if (needed <= metadata_blocks_.size()) break;
    }
    for (std::size_t i = 0; i < metadata_blocks_.size(); ++i) {
      BlockStore::Payload payload(store_->PayloadBytes());
      auto out = std::span{payload};
      const auto next = i + 1 < metadata_blocks_.size() ? metadata_blocks_[i + 1] : kNullBlock;
      const auto begin = std::min(bytes.size(), i * per_block);
      const auto len = std::min(per_block, bytes.size() - begin);
      detail::PutU64(out, 0, next.value);
      detail::PutU64(out, 8, len);
      std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(begin), len,
                  payload.begin() + kChainHeader);
      store_->WriteBlock(metadata_blocks_[i], payload);
    }
    StoreHeader header;
    header.block_elems = BlockElems();
    header.fanout = Fanout();
    header.current_version = current_version_;
    header.root = BlockId{kRootNode};
    header.node_table = metadata_blocks_.empty() ? kNullBlock : metadata_blocks_.front();
    file->WriteHeader(header);
    file->Flush();
  }

  /*####################################################################################
   * Fault injection for tests
   *##################################################################################*/

  /// Overwrites the priority of the first element stored at `node`.
  void
  ForTestingSetPriority(NodeId node, Priority priority)
  {
    auto &n = nodes_.at(node);
    for (auto &bb : n.buffer) {
      auto records = DecodeBlock(store_->ReadBlock(bb.id), bb.count);
      for (auto &r : records) {
        if (auto *e = std::get_if<Element>(&r)) {
          e->priority = priority;
          WriteRecords(bb.id, records);
          return;
        }
      }
    }
    throw std::logic_error{"node holds no elements"};
  }

  [[nodiscard]] std::vector<NodeId>
  ForTestingChildren(NodeId node) const
  {
    return nodes_.at(node).children;
  }

  [[nodiscard]] std::uint64_t
  ForTestingBufferBlocks(NodeId node) const
  {
    return nodes_.at(node).buffer.size();
  }

 private:
  /*####################################################################################
   * Internal types
   *##################################################################################*/

  enum class Mode { kNormal, kFlush };

  using Rank = std::tuple<Priority, Key, VersionId>;

  static Rank
  RankOf(const Element &e)
  {
    return {e.priority, e.key, e.OpVersion()};
  }

  struct KeyRange {
    Key lo{kMinKey};
    Key hi{kMaxKey};
    bool empty{false};

    bool operator==(const KeyRange &) const = default;

    [[nodiscard]] bool
    Contains(Key k) const
    {
      return !empty && lo <= k && k <= hi;
    }
  };

  struct BufferBlock {
    BlockId id{};
    std::uint32_t count{0};
  };

  struct Node {
    KeyRange range{};
    std::uint32_t depth{0};
    std::vector<Key> splitters;
    std::vector<NodeId> children;
    std::vector<BufferBlock> buffer;
    std::uint64_t elements{0};
    std::uint64_t queries{0};
    std::uint64_t pending{0};  // unresolved elements plus queries
    std::uint64_t open{0};     // insert/update elements with an open lifespan
    bool has_limit{false};
    Rank limit{};
    bool dirty{false};
    bool emptied{false};
    std::uint64_t arrived_blocks{0};
  };

  static Node
  MakeNode(KeyRange range, std::uint32_t depth)
  {
    Node n;
    n.range = range;
    n.depth = depth;
    return n;
  }

  struct ReportTask {
    NodeId child;
    QueryElement query;
  };

  static constexpr std::size_t kChainHeader = 16;

  [[nodiscard]] std::size_t
  Fanout() const
  {
    return config_.store.fanout;
  }

  [[nodiscard]] std::size_t
  BlockElems() const
  {
    return config_.store.block_elems;
  }

  [[nodiscard]] std::size_t
  PhysicalBlocks(NodeId u) const
  {
    return nodes_[u].buffer.size();
  }

  /*####################################################################################
   * Ingestion
   *##################################################################################*/

  void
  Stage(Record r)
  {
    staging_.push_back(std::move(r));
    if (staging_.size() == BlockElems()) PushStaging();
  }

  void
  PushStaging()
  {
    if (staging_.empty()) return;
    auto batch = std::move(staging_);
    staging_.clear();
    AppendRecords(kRootNode, batch);
    if (PhysicalBlocks(kRootNode) > Fanout()) EmptyBuffer(kRootNode, Mode::kNormal);
  }

  void
  WriteRecords(BlockId id, const std::vector<Record> &records)
  {
    BlockStore::Payload payload(store_->PayloadBytes());
    for (std::size_t i = 0; i < records.size(); ++i) {
      EncodeRecord(records[i], std::span{payload}.subspan(i * kRecordSize, kRecordSize));
    }
    store_->WriteBlock(id, payload);
  }

  [[nodiscard]] std::vector<Record>
  DecodeBlock(const BlockStore::Payload &payload, std::size_t count) const
  {
    std::vector<Record> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(DecodeRecord(std::span{payload}.subspan(i * kRecordSize, kRecordSize)));
    }
    return out;
  }

  void
  Account(Node &n, const Record &r)
  {
    if (const auto *e = std::get_if<Element>(&r)) {
      ++n.elements;
      if (!e->resolved) ++n.pending;
      if (!e->IsDelete() && e->IsOpen()) ++n.open;
    } else {
      ++n.queries;
      ++n.pending;
    }
  }

  /// Appends records to a node's buffer; the last block may be short.
  void
  AppendRecords(NodeId u, const std::vector<Record> &records, bool fill_tail = false)
  {
    const auto b = BlockElems();
    std::size_t begin = 0;
    if (fill_tail && !records.empty() && !nodes_[u].buffer.empty()
        && nodes_[u].buffer.back().count < b) {
      auto &tail = nodes_[u].buffer.back();
      auto merged = DecodeBlock(store_->ReadBlock(tail.id), tail.count);
      const auto take = std::min(records.size(), b - merged.size());
      merged.insert(merged.end(), records.begin(), records.begin() + static_cast<std::ptrdiff_t>(take));
      WriteRecords(tail.id, merged);
      tail.count = static_cast<std::uint32_t>(merged.size());
      for (std::size_t i = 0; i < take; ++i) Account(nodes_[u], records[i]);
      nodes_[u].dirty = true;
      begin = take;
    }
    for (; begin < records.size(); begin += b) {
      const auto end = std::min(records.size(), begin + b);
      std::vector<Record> chunk(records.begin() + static_cast<std::ptrdiff_t>(begin),
                                records.begin() + static_cast<std::ptrdiff_t>(end));
      const auto id = store_->Alloc();
      WriteRecords(id, chunk);
      auto &n = nodes_[u];
      n.buffer.push_back({id, static_cast<std::uint32_t>(chunk.size())});
      for (const auto &r : chunk) Account(n, r);
      n.dirty = true;
      ++n.arrived_blocks;
    }
  }

  [[nodiscard]] bool
  NeedsFlush(NodeId u) const
  {
    const auto &n = nodes_[u];
    if (!n.dirty) return false;
    if (n.pending > 0) return true;
    if (PhysicalBlocks(u) > Fanout()) return true;
    // resolved arrivals only matter where they can violate heap order
    return !n.children.empty() && n.has_limit;
  }

  /*####################################################################################
   * Buffer emptying
   *##################################################################################*/

  void
  RecordError(VersionId version, Key key, std::string reason)
  {
    StructuralEvent ev{version, key, std::move(reason)};
    errors_.push_back(ev);
    if (config_.strict_audit) throw StructuralError{std::move(ev)};
  }

  /**
   * @brief Chains same-key groups: each update/delete links to the element right before
   * it in time, provided that element is still open.
   *
   * A linked element becomes resolved once its predecessor is resolved; a resolved
   * delete is absorbed into its predecessor's del_version. Inserts preceded by any
   * resolved element of the same key are illegal and dropped.
   */
  std::vector<Element>
  Resolve(std::vector<Element> elems)
  {
    std::stable_sort(elems.begin(), elems.end(), KeyVersionLess{});
    std::vector<Element> kept;
    kept.reserve(elems.size());
    std::size_t i = 0;
    while (i < elems.size()) {
      const auto key = elems[i].key;
      std::optional<std::size_t> prev;
      for (; i < elems.size() && elems[i].key == key; ++i) {
        auto x = elems[i];
        Element *p = prev ? &kept[*prev] : nullptr;
        if (x.kind == Kind::kInsert) {
          if (p != nullptr && !p->IsDelete() && p->resolved) {
            RecordError(x.OpVersion(), key,
                        p->IsOpen() ? "duplicate live insert" : "insert of a deleted key");
            continue;
          }
        } else if (!x.resolved && p != nullptr && !p->IsDelete()) {
          if (p->IsOpen()) p->lifespan.del_version = x.OpVersion();
          if (p->lifespan.del_version == x.OpVersion() && p->resolved) {
            if (x.IsDelete()) continue;
            x.resolved = true;
            if (x.priority < p->priority) x.priority = p->priority;
          }
        }
        kept.push_back(x);
        prev = kept.size() - 1;
      }
    }
    return kept;
  }

  void
  Report(QueryId id, const Element &e)
  {
    auto &rs = results_.at(id);
    auto [it, fresh] = rs.reported.try_emplace(e.key, ReportedEntry{e.info, e.lifespan});
    if (!fresh && it->second.lifespan.in_version != e.lifespan.in_version) {
      ++stats_.result_conflicts;
    }
  }

  /// Matches every query against the (key-sorted, resolved) buffer contents.
  void
  MatchQueries(const std::vector<QueryElement> &queries, const std::vector<Element> &elems)
  {
    for (const auto &q : queries) {
      auto first = std::lower_bound(elems.begin(), elems.end(), q.lowkey,
                                    [](const Element &e, Key k) { return e.key < k; });
      for (auto it = first; it != elems.end() && it->key <= q.highkey; ++it) {
        if (!it->IsDelete() && LifespanContains(it->lifespan, q.version)) Report(q.query_id, *it);
      }
    }
  }

  [[nodiscard]] KeyRange
  ChildRange(const Node &n, std::size_t i) const
  {
    const auto m = n.splitters.size() + 1;
    KeyRange r{};
    if (n.range.empty) return {0, 0, true};
    if (i == 0) {
      r.lo = n.range.lo;
    } else {
      if (n.splitters[i - 1] == kMaxKey) return {0, 0, true};
      r.lo = std::max(n.range.lo, n.splitters[i - 1] + 1);
    }
    r.hi = (i + 1 == m) ? n.range.hi : std::min(n.range.hi, n.splitters[i]);
    r.empty = r.lo > r.hi;
    if (r.empty) r = {0, 0, true};
    return r;
  }

  [[nodiscard]] std::size_t
  ChildIndex(const Node &n, Key k) const
  {
    return static_cast<std::size_t>(
        std::lower_bound(n.splitters.begin(), n.splitters.end(), k) - n.splitters.begin());
  }

  /// Picks m-1 splitters as evenly spaced quantiles of `keys` and creates the children.
  void
  CreateChildren(NodeId u, std::vector<Key> keys)
  {
    const auto m = Fanout();
    std::sort(keys.begin(), keys.end());
    std::vector<Key> splitters(m - 1);
    const auto cnt = keys.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const auto pos = (i + 1) * cnt / m;
      auto s = keys[pos == 0 ? 0 : pos - 1];
      const auto &range = nodes_[u].range;
      s = std::clamp(s, range.lo, range.hi);
      if (i > 0) s = std::max(s, splitters[i - 1]);
      splitters[i] = s;
    }
    nodes_[u].splitters = std::move(splitters);
    const auto depth = nodes_[u].depth + 1;
    std::vector<NodeId> children;
    for (std::size_t i = 0; i < m; ++i) {
      children.push_back(static_cast<NodeId>(nodes_.size()));
      nodes_.push_back(MakeNode(ChildRange(nodes_[u], i), depth));
    }
    nodes_[u].children = std::move(children);
  }

  void
  EmptyBuffer(NodeId u, Mode mode)
  {
    const auto m = Fanout();
    const auto b = BlockElems();
    const auto half = (m / 2) * b;
    const auto io_before = store_->SnapshotStats().Transfers();

    EmptyEvent ev;
    ev.node = u;
    ev.depth = nodes_[u].depth;
    ev.flush_mode = mode == Mode::kFlush;
    ev.follows_normal_empty = nodes_[u].emptied;
    ev.arrived_blocks = nodes_[u].arrived_blocks;

    // load the buffer
    std::vector<Element> elems;
    std::vector<QueryElement> queries;
    {
      auto blocks = std::move(nodes_[u].buffer);
      nodes_[u].buffer.clear();
      ev.blocks_loaded = blocks.size();
      for (const auto &bb : blocks) {
        for (auto &r : DecodeBlock(store_->ReadBlock(bb.id), bb.count)) {
          if (auto *e = std::get_if<Element>(&r)) {
            elems.push_back(*e);
          } else {
            queries.push_back(std::get<QueryElement>(r));
          }
        }
        store_->Free(bb.id);
      }
      auto &n = nodes_[u];
      n.elements = n.queries = n.pending = n.open = 0;
    }
    ev.records_loaded = elems.size() + queries.size();
    ev.peak_decoded = ev.records_loaded;
    stats_.peak_decoded = std::max(stats_.peak_decoded, ev.peak_decoded);

    // resolve update/delete chains
    elems = Resolve(std::move(elems));
    const bool childless = nodes_[u].children.empty();
    if (childless) {
      std::vector<Element> keep;
      keep.reserve(elems.size());
      for (auto &e : elems) {
        if (e.resolved) {
          keep.push_back(e);
        } else {
          RecordError(e.OpVersion(), e.key,
                      e.IsDelete() ? "unresolved delete" : "unresolved update");
        }
      }
      elems = std::move(keep);
    }

    // answer co-resident queries against the chained lifespans
    MatchQueries(queries, elems);

    // split into retained and pushed elements
    std::vector<Element> resolved;
    std::vector<Element> pushed;
    for (auto &e : elems) (e.resolved ? resolved : pushed).push_back(e);
    ev.resolved = resolved.size();
    std::sort(resolved.begin(), resolved.end(), PriorityLess{});
    std::size_t keep = resolved.size();
    if (mode == Mode::kNormal) {
      keep = std::min(resolved.size(), half);
    } else if (!childless && nodes_[u].has_limit) {
      const auto limit = nodes_[u].limit;
      keep = static_cast<std::size_t>(
          std::partition_point(resolved.begin(), resolved.end(),
                               [&](const Element &e) { return !(limit < RankOf(e)); })
          - resolved.begin());
    }
    const bool pushes_resolved = keep < resolved.size();
    pushed.insert(pushed.end(), resolved.begin() + static_cast<std::ptrdiff_t>(keep),
                  resolved.end());
    resolved.resize(keep);
    if (pushes_resolved) {
      nodes_[u].has_limit = true;
      nodes_[u].limit = RankOf(resolved.back());
    }

    // retained elements go back in priority order
    {
      const auto arrived = nodes_[u].arrived_blocks;
      std::vector<Record> records(resolved.begin(), resolved.end());
      AppendRecords(u, records);
      nodes_[u].arrived_blocks = mode == Mode::kNormal ? 0 : arrived;
    }
    ev.retained = resolved.size();

    // distribute by key, splitting queries that straddle children
    std::vector<ReportTask> reports;
    std::uint64_t nested_io = 0;  // transfers of child invocations run during delivery
    if (childless && !pushed.empty()) {
      std::vector<Key> keys;
      keys.reserve(pushed.size());
      for (const auto &e : pushed) keys.push_back(e.key);
      CreateChildren(u, std::move(keys));
    }
    if (!nodes_[u].children.empty() && (!pushed.empty() || (!childless && !queries.empty()))) {
      std::vector<std::vector<Record>> buckets(m);
      const auto &node = nodes_[u];
      for (const auto &e : pushed) buckets[ChildIndex(node, e.key)].push_back(e);
      if (!childless) {
        for (const auto &q : queries) RouteQuery(node, q, buckets, reports);
      }
      const auto children = node.children;
      const auto spent = store_->SnapshotStats().Transfers() - io_before;
      const auto fill = PlanTailFills(children, buckets, spent);
      for (std::size_t i = 0; i < m; ++i) {
        if (buckets[i].empty()) continue;
        std::stable_sort(buckets[i].begin(), buckets[i].end(), [](const Record &x, const Record &y) {
          return ArrivalOrder(x) < ArrivalOrder(y);
        });
        nested_io += Deliver(children[i], buckets[i], fill[i]);
      }
    }

    auto &n = nodes_[u];
    n.dirty = false;
    if (mode == Mode::kNormal) n.emptied = true;
    ev.internal = !n.children.empty();
    ev.io = store_->SnapshotStats().Transfers() - io_before - nested_io;

    const auto report_before = store_->SnapshotStats().Transfers();
    if (!config_.inject_fault) {
      for (const auto &t : reports) ReportSubtree(t.child, t.query, {});
    }
    ev.report_io = store_->SnapshotStats().Transfers() - report_before;
    stats_.report_io += ev.report_io;

    ++stats_.empty_count;
    if (mode == Mode::kFlush) ++stats_.flush_empty_count;
    stats_.max_empty_io = std::max(stats_.max_empty_io, ev.io);
    if (observer_) observer_(ev);

    // recurse into children that still overflow
    const auto children = nodes_[u].children;
    for (auto c : children) {
      if (PhysicalBlocks(c) > m) EmptyBuffer(c, Mode::kNormal);
    }
  }

  /// Queries sort after every element of their version, so any prefix is a consistent past.
  static std::uint64_t
  ArrivalOrder(const Record &r)
  {
    if (const auto *e = std::get_if<Element>(&r)) return 2 * e->OpVersion();
    return 2 * std::get<QueryElement>(r).version + 1;
  }

  /**
   * @brief Appends a version-ordered bucket to child `c` in block-aligned slices.
   *
   * The child is emptied each time it passes m blocks, so no invocation loads more than
   * m + 1 blocks. Returns the transfers spent inside those child invocations.
   */
  std::uint64_t
  Deliver(NodeId c, const std::vector<Record> &records, bool fill_tail)
  {
    const auto m = Fanout();
    const auto b = BlockElems();
    std::uint64_t nested = 0;
    std::size_t begin = 0;
    while (begin < records.size()) {
      const auto &buf = nodes_[c].buffer;
      const bool top_up = fill_tail && begin == 0 && !buf.empty() && buf.back().count < b;
      const auto free_blocks = m + 1 - std::min(PhysicalBlocks(c), m);
      const auto room = (top_up ? b - buf.back().count : 0) + free_blocks * b;
      const auto end = std::min(records.size(), begin + std::max<std::size_t>(room, 1));
      AppendRecords(c, {records.begin() + static_cast<std::ptrdiff_t>(begin),
                        records.begin() + static_cast<std::ptrdiff_t>(end)},
                    top_up);
      begin = end;
      if (PhysicalBlocks(c) > m) {
        const auto before = store_->SnapshotStats().Transfers();
        EmptyBuffer(c, Mode::kNormal);
        nested += store_->SnapshotStats().Transfers() - before;
      }
    }
    return nested;
  }

  /**
   * @brief Chooses which children get their short tail block topped up.
   *
   * Topping up costs one extra read and may save a write; fills are granted cheapest
   * first, emptiest tail first, while the invocation stays within 4m transfers.
   */
  [[nodiscard]] std::vector<bool>
  PlanTailFills(const std::vector<NodeId> &children,
                const std::vector<std::vector<Record>> &buckets, std::uint64_t spent) const
  {
    const auto m = Fanout();
    const auto b = BlockElems();
    std::vector<bool> fill(m, false);
    std::uint64_t baseline = spent;
    for (const auto &bucket : buckets) baseline += (bucket.size() + b - 1) / b;
    if (baseline >= 4 * m) return fill;
    auto slack = 4 * m - baseline;

    struct Candidate {
      std::uint64_t cost;
      std::uint32_t tail;
      std::size_t child;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < m; ++i) {
      const auto &buf = nodes_[children[i]].buffer;
      const auto e = buckets[i].size();
      if (e == 0 || buf.empty() || buf.back().count >= b) continue;
      const auto take = std::min<std::size_t>(e, b - buf.back().count);
      const auto cost = 2 + (e - take + b - 1) / b - (e + b - 1) / b;
      candidates.push_back({cost, buf.back().count, i});
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto &x, const auto &y) {
      return std::tie(x.cost, x.tail, x.child) < std::tie(y.cost, y.tail, y.child);
    });
    for (const auto &c : candidates) {
      if (c.cost > slack) continue;
      slack -= c.cost;
      fill[c.child] = true;
    }
    return fill;
  }

  void
  RouteQuery(const Node &node, const QueryElement &q, std::vector<std::vector<Record>> &buckets,
             std::vector<ReportTask> &reports) const
  {
    const auto first = ChildIndex(node, q.lowkey);
    const auto last = ChildIndex(node, q.highkey);
    for (auto i = first; i <= last; ++i) {
      const auto r = ChildRange(node, i);
      if (r.empty) continue;
      QueryElement part = q;
      part.lowkey = std::max(q.lowkey, r.lo);
      part.highkey = std::min(q.highkey, r.hi);
      if (part.lowkey > part.highkey) continue;
      const bool covered = part.lowkey == r.lo && part.highkey == r.hi;
      if (first != last && covered) {
        reports.push_back({node.children[i], part});
      } else {
        buckets[i].push_back(part);
      }
    }
  }

  /**
   * @brief Reports every element of a fully covered subtree that is alive at q.version.
   *
   * Reads each buffer block once and modifies nothing. Unresolved operations seen on
   * the way down supersede older elements of the same key further below.
   */
  void
  ReportSubtree(NodeId u, const QueryElement &q, std::map<Key, VersionId> overrides)
  {
    std::vector<Element> elems;
    for (const auto &bb : nodes_[u].buffer) {
      for (auto &r : DecodeBlock(store_->ReadBlock(bb.id), bb.count)) {
        if (auto *e = std::get_if<Element>(&r)) elems.push_back(*e);
      }
    }
    for (const auto &e : elems) {
      if (e.resolved || e.OpVersion() > q.version) continue;
      auto &v = overrides[e.key];
      v = std::max(v, e.OpVersion());
    }
    for (const auto &e : elems) {
      if (e.IsDelete() || e.key < q.lowkey || e.key > q.highkey) continue;
      if (!LifespanContains(e.lifespan, q.version)) continue;
      if (auto it = overrides.find(e.key);
          it != overrides.end() && it->second > e.lifespan.in_version) {
        continue;
      }
      Report(q.query_id, e);
    }
    for (auto c : nodes_[u].children) ReportSubtree(c, q, overrides);
  }

  /*####################################################################################
   * Chain audit
   *##################################################################################*/

  struct TraceOp {
    VersionId version;
    Kind kind;
  };

  /**
   * @brief Rebuilds each key's operation trace from the stored elements and checks it.
   *
   * Insert/update elements contribute their in_version; a del_version that is not the
   * in_version of another element of the key marks a delete. Replaying the trace
   * through the per-key state machine (absent -> live -> deleted) flags illegal ops;
   * for legal traces the chain and uniqueness properties are checked directly.
   */
  void
  AuditChains(const std::vector<std::vector<Element>> &contents, std::vector<Violation> &out) const
  {
    std::map<Key, std::vector<Element>> by_key;
    for (const auto &c : contents) {
      for (const auto &e : c) by_key[e.key].push_back(e);
    }
    for (auto &[key, group] : by_key) {
      std::sort(group.begin(), group.end(), KeyVersionLess{});
      std::vector<TraceOp> trace;
      std::vector<VersionId> starts;
      for (const auto &e : group) {
        if (!e.IsDelete()) starts.push_back(e.lifespan.in_version);
      }
      std::sort(starts.begin(), starts.end());
      for (const auto &e : group) {
        trace.push_back({e.OpVersion(), e.kind});
        if (!e.IsDelete() && !e.IsOpen()
            && !std::binary_search(starts.begin(), starts.end(), e.lifespan.del_version)) {
          trace.push_back({e.lifespan.del_version, Kind::kDelete});
        }
      }
      std::sort(trace.begin(), trace.end(),
                [](const TraceOp &a, const TraceOp &b) { return a.version < b.version; });
      enum class State { kAbsent, kLive, kDeleted } state = State::kAbsent;
      bool illegal = false;
      for (const auto &op : trace) {
        bool ok = false;
        switch (op.kind) {
          case Kind::kInsert:
            ok = state == State::kAbsent;
            if (ok) state = State::kLive;
            break;
          case Kind::kUpdate:
            ok = state == State::kLive;
            break;
          case Kind::kDelete:
            ok = state == State::kLive;
            if (ok) state = State::kDeleted;
            break;
        }
        if (!ok) {
          illegal = true;
          out.push_back({Violation::Type::kIllegalOp, kRootNode, op.version,
                         "illegal operation on key " + std::to_string(key)});
        }
      }
      if (illegal) continue;

      std::size_t open = 0;
      for (std::size_t i = 0; i < group.size(); ++i) {
        const auto &e = group[i];
        if (e.IsOpen()) ++open;
        if (i + 1 < group.size() && e.lifespan.del_version != group[i + 1].lifespan.in_version) {
          out.push_back({Violation::Type::kLifespanChain, kRootNode, 0,
                         "broken chain for key " + std::to_string(key)});
        }
      }
      if (open > 1) {
        out.push_back({Violation::Type::kUniqueness, kRootNode, 0,
                       "key " + std::to_string(key) + " has several open elements"});
      }
    }
  }

  /*####################################################################################
   * Metadata serialization
   *##################################################################################*/

  class Writer
  {
   public:
    void
    U64(std::uint64_t v)
    {
      for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }

    void
    Bytes(std::span<const std::byte> b)
    {
      U64(b.size());
      bytes.insert(bytes.end(), b.begin(), b.end());
    }

    std::vector<std::byte> bytes;
  };

  class Reader
  {
   public:
    explicit Reader(std::span<const std::byte> b) : bytes_{b} {}

    std::uint64_t
    U64()
    {
      if (pos_ + 8 > bytes_.size()) throw StoreError{"truncated node table"};
      auto v = detail::GetU64(bytes_, pos_);
      pos_ += 8;
      return v;
    }

    std::vector<std::byte>
    Bytes()
    {
      const auto n = U64();
      if (pos_ + n > bytes_.size()) throw StoreError{"truncated node table"};
      std::vector<std::byte> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
      pos_ += n;
      return out;
    }

   private:
    std::span<const std::byte> bytes_;
    std::size_t pos_{0};
  };

  static constexpr std::uint64_t kMetadataMagic = 0x314D544250ULL;  // "PBTM1"

  [[nodiscard]] std::vector<std::byte>
  SerializeMetadata() const
  {
    Writer w;
    w.U64(kMetadataMagic);
    w.U64(current_version_);
    w.U64(next_query_id_);
    w.U64(priorities_.Seed());
    w.U64(priorities_.Draws());
    w.U64(staging_.size());
    for (const auto &r : staging_) {
      std::array<std::byte, kRecordSize> raw{};
      EncodeRecord(r, raw);
      w.Bytes(raw);
    }
    w.U64(nodes_.size());
    for (const auto &n : nodes_) {
      w.U64(n.range.lo);
      w.U64(n.range.hi);
      w.U64(n.range.empty);
      w.U64(n.depth);
      w.U64(n.splitters.size());
      for (auto s : n.splitters) w.U64(s);
      w.U64(n.children.size());
      for (auto c : n.children) w.U64(c);
      w.U64(n.buffer.size());
      for (const auto &bb : n.buffer) {
        w.U64(bb.id.value);
        w.U64(bb.count);
      }
      w.U64(n.elements);
      w.U64(n.queries);
      w.U64(n.pending);
      w.U64(n.open);
      w.U64(n.has_limit);
      w.U64(std::get<0>(n.limit));
      w.U64(std::get<1>(n.limit));
      w.U64(std::get<2>(n.limit));
      w.U64(n.dirty);
      w.U64(n.emptied);
      w.U64(n.arrived_blocks);
    }
    w.U64(results_.size());
    for (const auto &[id, rs] : results_) {
      w.U64(id);
      w.U64(rs.query.lowkey);
      w.U64(rs.query.highkey);
      w.U64(rs.query.version);
      w.U64(rs.complete);
      w.U64(rs.reported.size());
      for (const auto &[k, entry] : rs.reported) {
        w.U64(k);
        w.Bytes(entry.info);
        w.U64(entry.lifespan.in_version);
        w.U64(entry.lifespan.del_version);
      }
    }
    w.U64(errors_.size());
    for (const auto &e : errors_) {
      w.U64(e.version);
      w.U64(e.key);
      w.Bytes(std::as_bytes(std::span{e.reason.data(), e.reason.size()}));
    }
    const auto free_list = store_->FreeList();
    w.U64(free_list.size());
    for (auto id : free_list) w.U64(id.value);
    w.U64(metadata_blocks_.size());
    for (auto id : metadata_blocks_) w.U64(id.value);
    return std::move(w.bytes);
  }

  void
  LoadMetadata(FileBlockStore &file, const StoreHeader &header)
  {
    if (header.node_table.IsNull()) return;
    // the chain is read before the allocation map exists, so mark everything live
    file.RestoreAllocation(header.slot_count, {});
    std::vector<std::byte> bytes;
    for (auto id = header.node_table; !id.IsNull();) {
      const auto payload = file.ReadBlock(id);
      const auto next = BlockId{detail::GetU64(payload, 0)};
      const auto len = detail::GetU64(payload, 8);
      if (len > payload.size() - kChainHeader) throw StoreError{"corrupt node table block"};
      bytes.insert(bytes.end(), payload.begin() + kChainHeader,
                   payload.begin() + static_cast<std::ptrdiff_t>(kChainHeader + len));
      id = next;
    }
    Reader r{bytes};
    if (r.U64() != kMetadataMagic) throw StoreError{"bad node table magic"};
    current_version_ = r.U64();
    next_query_id_ = r.U64();
    {
      const auto seed = r.U64();
      priorities_.Restore(seed, r.U64());
    }
    staging_.clear();
    for (auto n = r.U64(); n > 0; --n) staging_.push_back(DecodeRecord(r.Bytes()));
    nodes_.clear();
    for (auto count = r.U64(); count > 0; --count) {
      Node n;
      n.range.lo = r.U64();
      n.range.hi = r.U64();
      n.range.empty = r.U64() != 0;
      n.depth = static_cast<std::uint32_t>(r.U64());
      for (auto k = r.U64(); k > 0; --k) n.splitters.push_back(r.U64());
      for (auto k = r.U64(); k > 0; --k) n.children.push_back(static_cast<NodeId>(r.U64()));
      for (auto k = r.U64(); k > 0; --k) {
        BufferBlock bb;
        bb.id = BlockId{r.U64()};
        bb.count = static_cast<std::uint32_t>(r.U64());
        n.buffer.push_back(bb);
      }
      n.elements = r.U64();
      n.queries = r.U64();
      n.pending = r.U64();
      n.open = r.U64();
      n.has_limit = r.U64() != 0;
      const auto p = r.U64();
      const auto k = r.U64();
      const auto v = r.U64();
      n.limit = Rank{p, k, v};
      n.dirty = r.U64() != 0;
      n.emptied = r.U64() != 0;
      n.arrived_blocks = r.U64();
      nodes_.push_back(std::move(n));
    }
    results_.clear();
    for (auto count = r.U64(); count > 0; --count) {
      ResultSet rs;
      rs.query.query_id = r.U64();
      rs.query.lowkey = r.U64();
      rs.query.highkey = r.U64();
      rs.query.version = r.U64();
      rs.complete = r.U64() != 0;
      for (auto k = r.U64(); k > 0; --k) {
        const auto key = r.U64();
        ReportedEntry entry;
        const auto raw = r.Bytes();
        if (raw.size() != kInfoSize) throw StoreError{"payload size mismatch"};
        std::copy(raw.begin(), raw.end(), entry.info.begin());
        entry.lifespan.in_version = r.U64();
        entry.lifespan.del_version = r.U64();
        rs.reported.emplace(key, entry);
      }
      results_.emplace(rs.query.query_id, std::move(rs));
    }
    errors_.clear();
    for (auto count = r.U64(); count > 0; --count) {
      StructuralEvent e;
      e.version = r.U64();
      e.key = r.U64();
      const auto raw = r.Bytes();
      e.reason.assign(reinterpret_cast<const char *>(raw.data()), raw.size());
      errors_.push_back(std::move(e));
    }
    std::vector<BlockId> free_list;
    for (auto count = r.U64(); count > 0; --count) free_list.push_back(BlockId{r.U64()});
    metadata_blocks_.clear();
    for (auto count = r.U64(); count > 0; --count) metadata_blocks_.push_back(BlockId{r.U64()});
    file.RestoreAllocation(header.slot_count, free_list);
    file.ResetStats();
  }

  /*####################################################################################
   * State
   *##################################################################################*/

  TreeConfig config_;
  std::unique_ptr<BlockStore> store_;
  PriorityGenerator priorities_;
  VersionId current_version_{0};
  QueryId next_query_id_{1};
  std::vector<Record> staging_;
  std::vector<Node> nodes_;
  std::map<QueryId, ResultSet> results_;
  std::vector<StructuralEvent> errors_;
  std::vector<BlockId> metadata_blocks_;
  TreeStats stats_{};
  std::function<void(const EmptyEvent &)> observer_;
};

}  // namespace pbt

#endif  // PBT_BUFFER_TREE_HPP
