#include "streamlda/modelstore.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <numeric>

namespace streamlda {

namespace {

constexpr char kMagic[4] = {'O', 'B', 'P', 'S'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kEndianTag = 0x01020304u;
constexpr int64_t kHeaderSize = 32;

void pread_full(int fd, void* buf, size_t len, int64_t offset, const char* what) {
  auto* p = static_cast<char*>(buf);
  while (len > 0) {
    ssize_t n = ::pread(fd, p, len, offset);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("read failed (") + what + "): " + std::strerror(errno));
    }
    if (n == 0) throw IoError(std::string("short read (") + what + ")");
    p += n;
    len -= static_cast<size_t>(n);
    offset += n;
  }
}

void pwrite_full(int fd, const void* buf, size_t len, int64_t offset, const char* what) {
  const auto* p = static_cast<const char*>(buf);
  while (len > 0) {
    ssize_t n = ::pwrite(fd, p, len, offset);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("write failed (") + what + "): " + std::strerror(errno));
    }
    p += n;
    len -= static_cast<size_t>(n);
    offset += n;
  }
}

int64_t file_size(int fd) {
  struct stat st{};
  if (::fstat(fd, &st) != 0) throw IoError("fstat failed");
  return static_cast<int64_t>(st.st_size);
}

uint64_t fnv1a(const void* data, size_t len, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed ^ 0xcbf29ce484222325ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

ColumnStore::ColumnStore(const std::string& path, int32_t topics)
    : path_(path), journal_path_(path + ".journal"), topics_(topics) {
  if (topics < 1) throw ArgumentError("store needs a positive topic count");
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) throw IoError("cannot open " + path + ": " + std::strerror(errno));

  if (file_size(fd_) == 0) {
    write_header();
  } else {
    char magic[4];
    uint32_t version = 0, endian = 0, k = 0;
    uint64_t w = 0;
    pread_full(fd_, magic, 4, 0, "magic");
    pread_full(fd_, &version, 4, 4, "version");
    pread_full(fd_, &endian, 4, 8, "endianness");
    pread_full(fd_, &k, 4, 12, "topics");
    pread_full(fd_, &w, 8, 16, "vocab");
    if (std::memcmp(magic, kMagic, 4) != 0) {
      throw FormatError(path + ": not a model store (bad magic)");
    }
    if (version != kVersion) {
      throw FormatError(path + ": unsupported version " + std::to_string(version));
    }
    if (endian != kEndianTag) {
      throw FormatError(path + ": endianness mismatch");
    }
    if (static_cast<int32_t>(k) != topics) {
      throw FormatError(path + ": store has K=" + std::to_string(k) +
                        ", requested K=" + std::to_string(topics));
    }
    vocab_ = static_cast<int64_t>(w);
  }
  replay_journal();
}

ColumnStore::~ColumnStore() {
  if (fd_ >= 0) ::close(fd_);
}

ColumnStore::ColumnStore(ColumnStore&& other) noexcept
    : path_(std::move(other.path_)), journal_path_(std::move(other.journal_path_)),
      fd_(other.fd_), topics_(other.topics_), vocab_(other.vocab_),
      reads_(other.reads_), writes_(other.writes_) {
  other.fd_ = -1;
}

void ColumnStore::write_header() {
  char buf[kHeaderSize] = {};
  std::memcpy(buf, kMagic, 4);
  std::memcpy(buf + 4, &kVersion, 4);
  std::memcpy(buf + 8, &kEndianTag, 4);
  auto k = static_cast<uint32_t>(topics_);
  std::memcpy(buf + 12, &k, 4);
  auto w = static_cast<uint64_t>(vocab_);
  std::memcpy(buf + 16, &w, 8);
  pwrite_full(fd_, buf, kHeaderSize, 0, "header");
}

int64_t ColumnStore::column_offset(int64_t w) const {
  return kHeaderSize + w * static_cast<int64_t>(topics_) * 8;
}

void ColumnStore::extend_vocab(int64_t new_vocab) {
  if (new_vocab < vocab_) throw ArgumentError("vocabulary cannot shrink");
  if (new_vocab == vocab_) return;
  vocab_ = new_vocab;
  write_header();
}

void ColumnStore::read_column(int64_t w, std::span<double> out) {
  if (w < 0 || w >= vocab_) throw ArgumentError("column index out of range");
  if (out.size() != static_cast<size_t>(topics_)) throw ArgumentError("bad column size");
  const int64_t off = column_offset(w);
  const int64_t bytes = static_cast<int64_t>(out.size()) * 8;
  const int64_t size = file_size(fd_);
  const int64_t avail = std::clamp<int64_t>(size - off, 0, bytes);
  if (avail > 0) pread_full(fd_, out.data(), static_cast<size_t>(avail), off, "column");
  if (avail < bytes) {
    std::memset(reinterpret_cast<char*>(out.data()) + avail, 0,
                static_cast<size_t>(bytes - avail));
  }
  ++reads_;
}

void ColumnStore::write_column(int64_t w, std::span<const double> data) {
  int64_t words[1] = {w};
  write_columns(words, [&](size_t) { return data; });
}

void ColumnStore::write_columns(
    std::span<const int64_t> words,
    const std::function<std::span<const double>(size_t)>& row) {
  if (words.empty()) return;
  const size_t payload = static_cast<size_t>(topics_) * 8;

  int jfd = ::open(journal_path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (jfd < 0) throw IoError("cannot open journal: " + std::string(std::strerror(errno)));
  int64_t joff = 0;
  for (size_t i = 0; i < words.size(); ++i) {
    const int64_t w = words[i];
    if (w < 0 || w >= vocab_) {
      ::close(jfd);
      throw ArgumentError("column index out of range");
    }
    auto data = row(i);
    const uint64_t header[2] = {static_cast<uint64_t>(w), payload};
    const uint64_t check = fnv1a(data.data(), payload, static_cast<uint64_t>(w));
    try {
      pwrite_full(jfd, header, 16, joff, "journal");
      pwrite_full(jfd, data.data(), payload, joff + 16, "journal");
      pwrite_full(jfd, &check, 8, joff + 16 + static_cast<int64_t>(payload), "journal");
    } catch (...) {
      ::close(jfd);
      throw;
    }
    joff += 24 + static_cast<int64_t>(payload);
  }
  if (::fdatasync(jfd) != 0) {
    ::close(jfd);
    throw IoError("journal fsync failed");
  }
  ::close(jfd);

  // Journal is durable; patch the main file in place.
  for (size_t i = 0; i < words.size(); ++i) {
    if (test_fault_hook) test_fault_hook(words[i]);
    auto data = row(i);
    pwrite_full(fd_, data.data(), payload, column_offset(words[i]), "column");
    ++writes_;
  }
  if (::unlink(journal_path_.c_str()) != 0 && errno != ENOENT) {
    throw IoError("cannot clear journal");
  }
}

void ColumnStore::replay_journal() {
  int jfd = ::open(journal_path_.c_str(), O_RDONLY);
  if (jfd < 0) return;  // no pending journal
  const int64_t size = file_size(jfd);
  const size_t payload = static_cast<size_t>(topics_) * 8;
  std::vector<double> buf(static_cast<size_t>(topics_));
  int64_t off = 0;
  int replayed = 0;
  while (off + 24 + static_cast<int64_t>(payload) <= size) {
    uint64_t header[2];
    uint64_t check = 0;
    pread_full(jfd, header, 16, off, "journal");
    if (header[1] != payload) break;
    const auto w = static_cast<int64_t>(header[0]);
    if (w < 0 || w >= vocab_) break;
    pread_full(jfd, buf.data(), payload, off + 16, "journal");
    pread_full(jfd, &check, 8, off + 16 + static_cast<int64_t>(payload), "journal");
    if (check != fnv1a(buf.data(), payload, header[0])) break;
    pwrite_full(fd_, buf.data(), payload, column_offset(w), "column");
    off += 24 + static_cast<int64_t>(payload);
    ++replayed;
  }
  ::close(jfd);
  if (replayed > 0) {
    log_info("replayed %d journaled column write(s) into %s", replayed, path_.c_str());
    if (::fdatasync(fd_) != 0) throw IoError("fsync failed after journal replay");
  }
  ::unlink(journal_path_.c_str());
}

void ColumnStore::sync() {
  write_header();
  if (::fdatasync(fd_) != 0) throw IoError("fsync failed");
}

// ---- BufferCache -----------------------------------------------------------

BufferCache::BufferCache(size_t capacity_bytes, int32_t topics)
    : capacity_(capacity_bytes), column_bytes_(static_cast<size_t>(topics) * 8),
      topics_(topics) {}

std::span<double> BufferCache::fetch(ColumnStore& store, int64_t w) {
  auto it = entries_.find(w);
  if (it != entries_.end()) {
    ++hits_;
    lru_.erase(it->second.lru_pos);
    lru_.push_front(w);
    it->second.lru_pos = lru_.begin();
    pinned_ = w;
    return it->second.data;
  }
  ++misses_;
  Entry entry;
  entry.data.resize(static_cast<size_t>(topics_));
  store.read_column(w, entry.data);
  lru_.push_front(w);
  entry.lru_pos = lru_.begin();
  auto [pos, inserted] = entries_.emplace(w, std::move(entry));
  (void)inserted;
  pinned_ = w;
  evict_over_capacity(store);
  return pos->second.data;
}

void BufferCache::mark_dirty(int64_t w) {
  auto it = entries_.find(w);
  if (it == entries_.end()) throw ArgumentError("column not resident");
  it->second.dirty = true;
}

void BufferCache::evict_over_capacity(ColumnStore& store) {
  while (resident_bytes() > capacity_ && !lru_.empty()) {
    // Evict from the cold end, skipping the pinned working column.
    auto victim = lru_.end();
    for (auto it = lru_.rbegin(); it != lru_.rend(); ++it) {
      if (*it != pinned_) {
        victim = std::next(it).base();
        break;
      }
    }
    if (victim == lru_.end()) break;  // only the pinned column remains
    const int64_t w = *victim;
    auto& entry = entries_.at(w);
    if (entry.dirty) store.write_column(w, entry.data);
    lru_.erase(victim);
    entries_.erase(w);
  }
}

void BufferCache::fetch_columns(ColumnStore& store, std::span<const int64_t> words) {
  for (size_t i = 1; i < words.size(); ++i) {
    if (words[i] <= words[i - 1]) throw ArgumentError("word ids must be sorted ascending");
  }
  for (int64_t w : words) {
    if (entries_.contains(w)) continue;
    if (resident_bytes() + column_bytes_ > capacity_) break;  // cache full
    ++misses_;
    Entry entry;
    entry.data.resize(static_cast<size_t>(topics_));
    store.read_column(w, entry.data);
    lru_.push_back(w);  // prefetched columns start colder than touched ones
    entry.lru_pos = std::prev(lru_.end());
    entries_.emplace(w, std::move(entry));
  }
}

void BufferCache::flush(ColumnStore& store) {
  std::vector<int64_t> dirty;
  for (const auto& [w, entry] : entries_) {
    if (entry.dirty) dirty.push_back(w);
  }
  if (dirty.empty()) return;
  std::sort(dirty.begin(), dirty.end());
  store.write_columns(dirty, [&](size_t i) {
    return std::span<const double>(entries_.at(dirty[i]).data);
  });
  for (int64_t w : dirty) entries_.at(w).dirty = false;
}

// ---- StoreStats ------------------------------------------------------------

StoreStats::StoreStats(const std::string& path, int32_t topics, size_t buffer_bytes)
    : GlobalStats(topics), store_(path, topics), cache_(buffer_bytes, topics) {
  // Topic totals are tiny and critical; rebuild them with one sequential scan.
  std::vector<double> col(static_cast<size_t>(topics));
  for (int64_t w = 0; w < store_.vocab_size(); ++w) {
    store_.read_column(w, col);
    for (size_t t = 0; t < col.size(); ++t) n_k_[t] += col[t];
  }
  store_.reset_counters();
}

void StoreStats::grow_vocab(int64_t new_size) { store_.extend_vocab(new_size); }

std::span<const double> StoreStats::column(int64_t w) {
  cache_.unpin();
  return cache_.fetch(store_, w);
}

std::span<double> StoreStats::column_mut(int64_t w) {
  cache_.unpin();
  auto span = cache_.fetch(store_, w);
  cache_.mark_dirty(w);
  return span;
}

void StoreStats::batch_end() {
  cache_.unpin();
  cache_.flush(store_);
  store_.sync();
}

void StoreStats::prepare(std::span<const int32_t> word_ids) {
  std::vector<int64_t> ws(word_ids.begin(), word_ids.end());
  cache_.fetch_columns(store_, ws);
}

StoreInfo probe_store(const std::string& path) {
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  StoreInfo info;
  try {
    char magic[4];
    uint32_t version = 0, endian = 0, k = 0;
    uint64_t w = 0;
    pread_full(fd, magic, 4, 0, "magic");
    pread_full(fd, &version, 4, 4, "version");
    pread_full(fd, &endian, 4, 8, "endianness");
    pread_full(fd, &k, 4, 12, "topics");
    pread_full(fd, &w, 8, 16, "vocab");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path + ": not a model store");
    if (version != kVersion) throw FormatError(path + ": unsupported version");
    if (endian != kEndianTag) throw FormatError(path + ": endianness mismatch");
    info.topics = static_cast<int32_t>(k);
    info.vocab = static_cast<int64_t>(w);
    info.file_bytes = file_size(fd);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  return info;
}

void export_stats(GlobalStats& stats, const std::string& path) {
  ColumnStore store(path, stats.topics());
  if (store.vocab_size() != 0) throw IoError("refusing to export into a non-empty store: " + path);
  store.extend_vocab(stats.vocab_size());
  std::vector<int64_t> words(static_cast<size_t>(stats.vocab_size()));
  std::iota(words.begin(), words.end(), 0);
  store.write_columns(words, [&](size_t i) {
    return std::span<const double>(stats.column(static_cast<int64_t>(i)));
  });
  store.sync();
}

}  // namespace streamlda
