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

#ifndef PBT_BLOCK_STORE_HPP
#define PBT_BLOCK_STORE_HPP

// C++ standard libraries
#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// local sources
#include "pbt/core_model.hpp"

namespace pbt
{
/*######################################################################################
 * Configuration and counters
 *####################################################################################*/

/**
 * @brief Parameters of the simulated external memory.
 *
 * `block_elems` is B (records per block) and `fanout` is m (blocks per buffer, and
 * children per node); internal memory is M = m * B records.
 */
struct StoreConfig {
  std::size_t block_elems{16};
  std::size_t fanout{8};

  void
  Validate() const
  {
    if (block_elems < 2) throw std::invalid_argument{"block size B must be at least 2"};
    if (fanout < 4 || fanout % 2 != 0) {
      throw std::invalid_argument{"fanout m must be even and at least 4"};
    }
  }

  [[nodiscard]] std::size_t
  PayloadBytes() const
  {
    return block_elems * kRecordSize;
  }
};

struct BlockId {
  std::uint64_t value{std::numeric_limits<std::uint64_t>::max()};

  constexpr auto operator<=>(const BlockId &) const = default;

  [[nodiscard]] constexpr bool
  IsNull() const
  {
    return value == std::numeric_limits<std::uint64_t>::max();
  }
};

inline constexpr BlockId kNullBlock{};

struct IoStats {
  std::uint64_t reads{0};
  std::uint64_t writes{0};
  std::uint64_t allocs{0};
  std::uint64_t frees{0};
  std::uint64_t high_water_blocks{0};

  [[nodiscard]] std::uint64_t
  Transfers() const
  {
    return reads + writes;
  }

  /// Delta of the additive counters; the high-water mark is carried from `*this`.
  IoStats
  operator-(const IoStats &before) const
  {
    return {reads - before.reads, writes - before.writes, allocs - before.allocs,
            frees - before.frees, high_water_blocks};
  }

  bool operator==(const IoStats &) const = default;
};

class StoreError : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/*######################################################################################
 * Block store interface
 *####################################################################################*/

/**
 * @brief Fixed-size block device with exact transfer accounting.
 *
 * Every read_block/write_block call is one I/O. Allocation bookkeeping is free of
 * charge. Calls must be serialized per instance; the counters themselves are atomic
 * so a monitor thread may snapshot them.
 */
class BlockStore
{
 public:
  using Payload = std::vector<std::byte>;

  explicit BlockStore(StoreConfig config) : config_{config}
  {
    config_.Validate();
  }

  BlockStore(const BlockStore &) = delete;
  BlockStore &operator=(const BlockStore &) = delete;
  virtual ~BlockStore() = default;

  [[nodiscard]] const StoreConfig &
  Config() const
  {
    return config_;
  }

  [[nodiscard]] std::size_t
  PayloadBytes() const
  {
    return config_.PayloadBytes();
  }

  BlockId
  Alloc()
  {
    BlockId id;
    if (!free_list_.empty()) {
      id = free_list_.back();
      free_list_.pop_back();
    } else {
      id = BlockId{allocated_.size()};
      GrowTo(allocated_.size() + 1);
      allocated_.push_back(false);
    }
    allocated_[id.value] = true;
    ++live_;
    allocs_.fetch_add(1, std::memory_order_relaxed);
    auto hw = high_water_.load(std::memory_order_relaxed);
    if (live_ > hw) high_water_.store(live_, std::memory_order_relaxed);
    return id;
  }

  void
  Free(BlockId id)
  {
    CheckAllocated(id);
    allocated_[id.value] = false;
    free_list_.push_back(id);
    --live_;
    frees_.fetch_add(1, std::memory_order_relaxed);
  }

  Payload
  ReadBlock(BlockId id)
  {
    CheckAllocated(id);
    Payload out(PayloadBytes());
    DoRead(id, out);
    reads_.fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  void
  WriteBlock(BlockId id, std::span<const std::byte> payload)
  {
    CheckAllocated(id);
    if (payload.size() != PayloadBytes()) throw StoreError{"payload is not exactly one block"};
    DoWrite(id, payload);
    writes_.fetch_add(1, std::memory_order_relaxed);
  }

  [[nodiscard]] IoStats
  SnapshotStats() const
  {
    return {reads_.load(), writes_.load(), allocs_.load(), frees_.load(), high_water_.load()};
  }

  /// Zeroes the counters; the high-water mark restarts at the current live count.
  void
  ResetStats()
  {
    reads_ = 0;
    writes_ = 0;
    allocs_ = 0;
    frees_ = 0;
    high_water_ = live_;
  }

  [[nodiscard]] bool
  IsAllocated(BlockId id) const
  {
    return !id.IsNull() && id.value < allocated_.size() && allocated_[id.value];
  }

  [[nodiscard]] std::uint64_t
  LiveBlocks() const
  {
    return live_;
  }

  [[nodiscard]] std::uint64_t
  SlotCount() const
  {
    return allocated_.size();
  }

  /// Allocation map, for persisting alongside the structure that owns the blocks.
  [[nodiscard]] std::vector<BlockId>
  FreeList() const
  {
    return free_list_;
  }

  /// Rebuilds the allocation map after reopening a persisted store.
  void
  RestoreAllocation(std::uint64_t slot_count, const std::vector<BlockId> &free_list)
  {
    GrowTo(slot_count);
    allocated_.assign(slot_count, true);
    for (auto id : free_list) {
      if (id.value >= slot_count) throw StoreError{"free list entry out of range"};
      allocated_[id.value] = false;
    }
    free_list_ = free_list;
    live_ = slot_count - free_list.size();
    high_water_ = std::max<std::uint64_t>(high_water_, live_);
  }

 protected:
  virtual void DoRead(BlockId id, std::span<std::byte> out) = 0;
  virtual void DoWrite(BlockId id, std::span<const std::byte> payload) = 0;
  virtual void GrowTo(std::uint64_t slot_count) = 0;

 private:
  void
  CheckAllocated(BlockId id) const
  {
    if (!IsAllocated(id)) {
      throw StoreError{"invalid block id " + std::to_string(id.value)};
    }
  }

  StoreConfig config_;
  std::vector<bool> allocated_;
  std::vector<BlockId> free_list_;
  std::uint64_t live_{0};

  std::atomic<std::uint64_t> reads_{0};
  std::atomic<std::uint64_t> writes_{0};
  std::atomic<std::uint64_t> allocs_{0};
  std::atomic<std::uint64_t> frees_{0};
  std::atomic<std::uint64_t> high_water_{0};
};

/*######################################################################################
 * In-memory backend
 *####################################################################################*/

class MemoryBlockStore final : public BlockStore
{
 public:
  explicit MemoryBlockStore(StoreConfig config) : BlockStore{config} {}

 protected:
  void
  DoRead(BlockId id, std::span<std::byte> out) override
  {
    const auto &slot = slots_[id.value];
    std::copy(slot.begin(), slot.end(), out.begin());
  }

  void
  DoWrite(BlockId id, std::span<const std::byte> payload) override
  {
    slots_[id.value].assign(payload.begin(), payload.end());
  }

  void
  GrowTo(std::uint64_t slot_count) override
  {
    if (slots_.size() < slot_count) slots_.resize(slot_count, Payload(PayloadBytes()));
  }

 private:
  std::vector<Payload> slots_;
};

/*######################################################################################
 * Single-file backend
 *####################################################################################*/

/// Fields of the file header slot; the tree fills the structural ones.
struct StoreHeader {
  std::uint64_t block_elems{0};
  std::uint64_t fanout{0};
  std::uint64_t record_size{kRecordSize};
  std::uint64_t current_version{0};
  BlockId root{kNullBlock};
  BlockId node_table{kNullBlock};
  std::uint64_t slot_count{0};

  bool operator==(const StoreHeader &) const = default;
};

inline constexpr std::size_t kFileSlotAlign = 4096;
inline constexpr char kFileMagic[4] = {'P', 'B', 'T', '1'};

/**
 * @brief Store backed by one file: a header slot followed by the block array.
 *
 * Slots are 4 KiB aligned regardless of the logical payload size. Block i lives in
 * slot i + 1. Header layout (little-endian u64 after the 4-byte magic and 4 bytes of
 * padding): block_elems, fanout, record_size, current_version, root, node_table,
 * slot_count.
 */
class FileBlockStore final : public BlockStore
{
 public:
  /// Creates (truncating) a store file.
  static std::unique_ptr<FileBlockStore>
  Create(const std::filesystem::path &path, StoreConfig config, std::uint64_t max_blocks = 0)
  {
    std::unique_ptr<FileBlockStore> store{new FileBlockStore{path, config, max_blocks, true}};
    StoreHeader header;
    header.block_elems = config.block_elems;
    header.fanout = config.fanout;
    store->WriteHeader(header);
    return store;
  }

  /// Opens an existing store; the allocation map must be restored by the owner.
  static std::unique_ptr<FileBlockStore>
  Open(const std::filesystem::path &path, std::uint64_t max_blocks = 0)
  {
    auto header = PeekHeader(path);
    StoreConfig config{header.block_elems, header.fanout};
    std::unique_ptr<FileBlockStore> store{new FileBlockStore{path, config, max_blocks, false}};
    store->header_ = header;
    return store;
  }

  static StoreHeader
  PeekHeader(const std::filesystem::path &path)
  {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw StoreError{"cannot open store file " + path.string()};
    std::array<char, 64> raw{};
    in.read(raw.data(), raw.size());
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw StoreError{"truncated store header"};
    }
    if (std::memcmp(raw.data(), kFileMagic, 4) != 0) throw StoreError{"bad store magic"};
    auto bytes = std::as_bytes(std::span{raw});
    StoreHeader h;
    h.block_elems = detail::GetU64(bytes, 8);
    h.fanout = detail::GetU64(bytes, 16);
    h.record_size = detail::GetU64(bytes, 24);
    h.current_version = detail::GetU64(bytes, 32);
    h.root = BlockId{detail::GetU64(bytes, 40)};
    h.node_table = BlockId{detail::GetU64(bytes, 48)};
    h.slot_count = detail::GetU64(bytes, 56);
    if (h.record_size != kRecordSize) throw StoreError{"record size mismatch"};
    return h;
  }

  void
  WriteHeader(const StoreHeader &header)
  {
    header_ = header;
    header_.slot_count = SlotCount();
    std::vector<std::byte> raw(kFileSlotAlign);
    std::memcpy(raw.data(), kFileMagic, 4);
    auto out = std::span{raw};
    detail::PutU64(out, 8, header_.block_elems);
    detail::PutU64(out, 16, header_.fanout);
    detail::PutU64(out, 24, header_.record_size);
    detail::PutU64(out, 32, header_.current_version);
    detail::PutU64(out, 40, header_.root.value);
    detail::PutU64(out, 48, header_.node_table.value);
    detail::PutU64(out, 56, header_.slot_count);
    RawWrite(0, raw);
    ++header_writes_;
    file_.flush();
  }

  [[nodiscard]] const StoreHeader &
  Header() const
  {
    return header_;
  }

  [[nodiscard]] std::uint64_t
  HeaderWrites() const
  {
    return header_writes_;
  }

  /// Number of write calls issued to the file, headers included.
  [[nodiscard]] std::uint64_t
  PhysicalWrites() const
  {
    return physical_writes_;
  }

  [[nodiscard]] std::size_t
  SlotBytes() const
  {
    return slot_bytes_;
  }

  void
  Flush()
  {
    file_.flush();
  }

 protected:
  void
  DoRead(BlockId id, std::span<std::byte> out) override
  {
    file_.seekg(static_cast<std::streamoff>(SlotOffset(id)));
    file_.read(reinterpret_cast<char *>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file_) {
      file_.clear();
      // never-written slot inside the file extent reads as zeros
      std::fill(out.begin(), out.end(), std::byte{0});
    }
  }

  void
  DoWrite(BlockId id, std::span<const std::byte> payload) override
  {
    RawWrite(SlotOffset(id), payload);
  }

  void
  GrowTo(std::uint64_t slot_count) override
  {
    if (max_blocks_ != 0 && slot_count > max_blocks_) {
      throw StoreError{"backing file is full"};
    }
  }

 private:
  FileBlockStore(const std::filesystem::path &path, StoreConfig config, std::uint64_t max_blocks,
                 bool truncate)
      : BlockStore{config}, path_{path}, max_blocks_{max_blocks}
  {
    auto mode = std::ios::in | std::ios::out | std::ios::binary;
    if (truncate) mode |= std::ios::trunc;
    file_.open(path_, mode);
    if (!file_) throw StoreError{"cannot open store file " + path_.string()};
    slot_bytes_ = ((PayloadBytes() + kFileSlotAlign - 1) / kFileSlotAlign) * kFileSlotAlign;
  }

  [[nodiscard]] std::uint64_t
  SlotOffset(BlockId id) const
  {
    return kFileSlotAlign + id.value * slot_bytes_;
  }

  void
  RawWrite(std::uint64_t offset, std::span<const std::byte> bytes)
  {
    file_.seekp(static_cast<std::streamoff>(offset));
    file_.write(reinterpret_cast<const char *>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    if (!file_) throw StoreError{"write failed on " + path_.string()};
    ++physical_writes_;
  }

  std::filesystem::path path_;
  std::fstream file_;
  std::uint64_t max_blocks_{0};
  std::size_t slot_bytes_{0};
  StoreHeader header_{};
  std::uint64_t header_writes_{0};
  std::uint64_t physical_writes_{0};
};

}  // namespace pbt

#endif  // PBT_BLOCK_STORE_HPP
