#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "streamlda/inference.hpp"
#include "streamlda/util.hpp"

namespace streamlda {

// Fixed-stride binary column array: a 32-byte header (magic "OBPS", version,
// endianness tag, K, W) followed by W columns of K little-endian doubles.
// Column w lives at header_size + w*K*8. Columns that were never written
// read back as zeros.
//
// Durability: write_columns appends every column image to a sidecar journal,
// flushes it, and only then patches the main file in place. open() replays
// complete journal records and discards a torn tail, so a crash anywhere in
// the cycle leaves each column either at its old or its new value.
class ColumnStore {
 public:
  ColumnStore(const std::string& path, int32_t topics);
  ~ColumnStore();

  ColumnStore(ColumnStore&&) noexcept;
  ColumnStore& operator=(ColumnStore&&) = delete;
  ColumnStore(const ColumnStore&) = delete;
  ColumnStore& operator=(const ColumnStore&) = delete;

  int32_t topics() const { return topics_; }
  int64_t vocab_size() const { return vocab_; }
  const std::string& path() const { return path_; }

  void extend_vocab(int64_t new_vocab);
  void read_column(int64_t w, std::span<double> out);
  void write_column(int64_t w, std::span<const double> data);
  // Journaled batch write; `rows` are (word id, column data) pairs and must
  // be sorted ascending by word id.
  void write_columns(std::span<const int64_t> words,
                     const std::function<std::span<const double>(size_t)>& row);
  void sync();

  int64_t reads() const { return reads_; }
  int64_t writes() const { return writes_; }
  void reset_counters() { reads_ = writes_ = 0; }

  // Fault injection for the crash tests: invoked just before each in-place
  // column write; throwing from it abandons the store mid-cycle.
  std::function<void(int64_t w)> test_fault_hook;

 private:
  void write_header();
  void replay_journal();
  int64_t column_offset(int64_t w) const;

  std::string path_;
  std::string journal_path_;
  int fd_ = -1;
  int32_t topics_ = 0;
  int64_t vocab_ = 0;
  int64_t reads_ = 0;
  int64_t writes_ = 0;
};

// Bounded LRU cache of store columns. The column handed out by the latest
// fetch() is pinned (it is the live working set of the sweep) and exempt
// from eviction; everything else honors the byte capacity. Dirty columns are
// written back (journaled) before eviction.
class BufferCache {
 public:
  BufferCache(size_t capacity_bytes, int32_t topics);

  std::span<double> fetch(ColumnStore& store, int64_t w);
  void mark_dirty(int64_t w);
  void unpin() { pinned_ = -1; }

  // Ascending prefetch of whatever fits; skips already-resident columns.
  void fetch_columns(ColumnStore& store, std::span<const int64_t> words);
  // Writes all dirty columns back in ascending order and clears the flags.
  void flush(ColumnStore& store);

  size_t resident_bytes() const { return entries_.size() * column_bytes_; }
  size_t capacity_bytes() const { return capacity_; }
  int64_t hits() const { return hits_; }
  int64_t misses() const { return misses_; }

 private:
  struct Entry {
    std::vector<double> data;
    bool dirty = false;
    std::list<int64_t>::iterator lru_pos;
  };

  void evict_over_capacity(ColumnStore& store);

  size_t capacity_;
  size_t column_bytes_;
  int32_t topics_;
  std::unordered_map<int64_t, Entry> entries_;
  std::list<int64_t> lru_;  // front = most recently used
  int64_t pinned_ = -1;
  int64_t hits_ = 0;
  int64_t misses_ = 0;
};

// GlobalStats backed by a ColumnStore through a BufferCache. Topic totals
// are rebuilt from a full column scan when the store is opened.
class StoreStats final : public GlobalStats {
 public:
  StoreStats(const std::string& path, int32_t topics, size_t buffer_bytes);

  int64_t vocab_size() const override { return store_.vocab_size(); }
  void grow_vocab(int64_t new_size) override;
  std::span<const double> column(int64_t w) override;
  std::span<double> column_mut(int64_t w) override;
  void batch_end() override;
  void prepare(std::span<const int32_t> word_ids) override;

  ColumnStore& store() { return store_; }
  BufferCache& cache() { return cache_; }

 private:
  ColumnStore store_;
  BufferCache cache_;
};

// Copies an in-memory model into a fresh store file (helper for "train in
// memory, persist at the end").
void export_stats(GlobalStats& stats, const std::string& path);

// Reads just the header of an existing store.
struct StoreInfo {
  int32_t topics = 0;
  int64_t vocab = 0;
  int64_t file_bytes = 0;
};
StoreInfo probe_store(const std::string& path);

}  // namespace streamlda
