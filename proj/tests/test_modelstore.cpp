#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "streamlda/modelstore.hpp"
#include "streamlda/online.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace streamlda;
using testsupport::TempDir;

TEST_CASE("a new store starts empty and reads zeros after extension") {
  TempDir dir;
  ColumnStore store(dir.file("m.obps"), 10);
  CHECK(store.vocab_size() == 0);
  store.extend_vocab(8);
  std::vector<double> col(10, 42.0);
  store.read_column(5, col);
  for (double v : col) CHECK(v == 0.0);

  store.extend_vocab(8);  // growing by zero is a no-op
  CHECK(store.vocab_size() == 8);
  CHECK_THROWS_AS(store.extend_vocab(4), ArgumentError);
}

TEST_CASE("reopening with a different K is a format error") {
  TempDir dir;
  {
    ColumnStore store(dir.file("m.obps"), 10);
    store.extend_vocab(2);
    store.sync();
  }
  CHECK_THROWS_AS(ColumnStore(dir.file("m.obps"), 11), FormatError);
  ColumnStore ok(dir.file("m.obps"), 10);
  CHECK(ok.vocab_size() == 2);
}

TEST_CASE("garbage files are rejected") {
  TempDir dir;
  {
    std::ofstream out(dir.file("junk.bin"), std::ios::binary);
    out << "this is not a model store at all, padded to header size....";
  }
  CHECK_THROWS_AS(ColumnStore(dir.file("junk.bin"), 4), FormatError);
  CHECK_THROWS_AS(probe_store(dir.file("junk.bin")), FormatError);
}

TEST_CASE("columns round-trip bit for bit across reopen") {
  TempDir dir;
  std::vector<double> data = {1.5, -0.25, 3e-300, 1e300};
  {
    ColumnStore store(dir.file("m.obps"), 4);
    store.extend_vocab(3);
    store.write_column(1, data);
    store.sync();
  }
  ColumnStore store(dir.file("m.obps"), 4);
  std::vector<double> back(4);
  store.read_column(1, back);
  CHECK(std::memcmp(back.data(), data.data(), 4 * sizeof(double)) == 0);
}

TEST_CASE("cache hits avoid disk reads; capacity zero reads every fetch") {
  TempDir dir;
  ColumnStore store(dir.file("m.obps"), 2);
  store.extend_vocab(6);
  for (int64_t w = 0; w < 6; ++w) {
    std::vector<double> col = {static_cast<double>(w), 1.0};
    store.write_column(w, col);
  }
  store.reset_counters();

  SUBCASE("warm cache") {
    BufferCache cache(1 << 20, 2);
    std::vector<int64_t> words = {0, 1, 2, 3, 4, 5};
    cache.fetch_columns(store, words);
    CHECK(store.reads() == 6);
    for (int64_t w : words) {
      auto col = cache.fetch(store, w);
      CHECK(col[0] == static_cast<double>(w));
    }
    CHECK(store.reads() == 6);  // all hits
    CHECK(cache.hits() == 6);
  }

  SUBCASE("degenerate cache") {
    BufferCache cache(0, 2);
    for (int round = 0; round < 3; ++round) {
      for (int64_t w = 0; w < 6; ++w) {
        auto col = cache.fetch(store, w);
        CHECK(col[0] == static_cast<double>(w));  // still correct
      }
    }
    CHECK(store.reads() == 18);  // every fetch misses
    CHECK(cache.hits() == 0);
  }
}

TEST_CASE("repeated iteration over one batch reads only on the first pass") {
  TempDir dir;
  ColumnStore store(dir.file("m.obps"), 3);
  store.extend_vocab(40);
  std::vector<int64_t> batch_words = {2, 7, 11, 23, 31};
  const size_t footprint = batch_words.size() * 3 * sizeof(double);
  BufferCache cache(footprint, 3);
  std::vector<double> expected(3, 0.0);
  for (int iteration = 0; iteration < 5; ++iteration) {
    for (int64_t w : batch_words) {
      auto col = cache.fetch(store, w);
      for (size_t t = 0; t < 3; ++t) CHECK(col[t] == expected[t]);
      col[0] += 1.0;  // mutate through the view
      cache.mark_dirty(w);
    }
    expected[0] += 1.0;
  }
  CHECK(store.reads() == static_cast<int64_t>(batch_words.size()));
  cache.flush(store);
  CHECK(store.writes() == static_cast<int64_t>(batch_words.size()));

  // after flush, a cold read sees exactly what the cache held
  std::vector<double> cold(3);
  store.read_column(7, cold);
  CHECK(cold[0] == 5.0);
}

TEST_CASE("flush without dirty columns writes nothing") {
  TempDir dir;
  ColumnStore store(dir.file("m.obps"), 2);
  store.extend_vocab(4);
  BufferCache cache(1 << 20, 2);
  std::vector<int64_t> words = {0, 1, 2, 3};
  cache.fetch_columns(store, words);
  store.reset_counters();
  cache.flush(store);
  CHECK(store.writes() == 0);
}

TEST_CASE("a crash between column writes never tears a column") {
  TempDir dir;
  const std::string path = dir.file("m.obps");
  std::vector<double> old0 = {1, 1, 1}, old1 = {2, 2, 2}, old2 = {3, 3, 3};
  {
    ColumnStore store(path, 3);
    store.extend_vocab(3);
    store.write_column(0, old0);
    store.write_column(1, old1);
    store.write_column(2, old2);
    store.sync();
  }
  std::vector<double> new0 = {10, 10, 10}, new1 = {20, 20, 20}, new2 = {30, 30, 30};

  SUBCASE("fault while patching the main file") {
    {
      ColumnStore store(path, 3);
      int patched = 0;
      store.test_fault_hook = [&](int64_t) {
        if (++patched == 2) throw IoError("injected crash");
      };
      std::vector<int64_t> words = {0, 1, 2};
      std::vector<std::vector<double>> rows = {new0, new1, new2};
      CHECK_THROWS_AS(store.write_columns(
                          words, [&](size_t i) { return std::span<const double>(rows[i]); }),
                      IoError);
    }
    // reopen: journal replay completes the interrupted cycle
    ColumnStore store(path, 3);
    std::vector<double> col(3);
    store.read_column(0, col);
    CHECK(col == new0);
    store.read_column(1, col);
    CHECK(col == new1);
    store.read_column(2, col);
    CHECK(col == new2);
  }

  SUBCASE("journal torn mid-append") {
    {
      ColumnStore store(path, 3);
      int patched = 0;
      store.test_fault_hook = [&](int64_t) {
        if (++patched == 1) throw IoError("injected crash");
      };
      std::vector<int64_t> words = {0, 1, 2};
      std::vector<std::vector<double>> rows = {new0, new1, new2};
      CHECK_THROWS_AS(store.write_columns(
                          words, [&](size_t i) { return std::span<const double>(rows[i]); }),
                      IoError);
    }
    // Simulate losing the journal tail: keep the first record only, and chop
    // the second mid-payload.
    const std::string journal = path + ".journal";
    REQUIRE(std::filesystem::exists(journal));
    const auto record = 24 + 3 * sizeof(double);
    std::filesystem::resize_file(journal, record + 30);

    ColumnStore store(path, 3);  // replays record 0, discards the torn tail
    std::vector<double> col(3);
    store.read_column(0, col);
    CHECK(col == new0);
    store.read_column(1, col);
    CHECK(col == old1);  // old value, not torn
    store.read_column(2, col);
    CHECK(col == old2);
    CHECK_FALSE(std::filesystem::exists(journal));
  }
}

TEST_CASE("randomized grow/write/read agrees with an in-memory reference") {
  TempDir dir;
  const int32_t k = 4;
  ColumnStore store(dir.file("m.obps"), k);
  std::map<int64_t, std::vector<double>> reference;
  int64_t vocab = 0;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int step = 0; step < 300; ++step) {
    const int action = static_cast<int>(rng() % 3);
    if (action == 0 || vocab == 0) {
      vocab += 1 + static_cast<int64_t>(rng() % 3);
      store.extend_vocab(vocab);
    } else if (action == 1) {
      const auto w = static_cast<int64_t>(rng() % static_cast<uint64_t>(vocab));
      std::vector<double> col(k);
      for (double& v : col) v = unif(rng);
      store.write_column(w, col);
      reference[w] = col;
    } else {
      const auto w = static_cast<int64_t>(rng() % static_cast<uint64_t>(vocab));
      std::vector<double> col(k);
      store.read_column(w, col);
      auto it = reference.find(w);
      std::vector<double> expected = it == reference.end()
                                         ? std::vector<double>(k, 0.0)
                                         : it->second;
      CHECK(col == expected);
    }
  }
}

TEST_CASE("store-backed training is bit-identical to in-memory training") {
  std::mt19937_64 rng(12);
  auto model = synthetic::Model::random(4, 30, 0.2, 0.2, rng);
  auto docs = model.draw_corpus(30, 20, rng);

  OnlineConfig cfg;
  cfg.hyper = {0.01, 0.01, 4};
  cfg.schedule.kind = Schedule::active;
  cfg.schedule.topic_budget = 2;
  cfg.schedule.max_iters = 10;
  cfg.seed = 42;

  MemoryStats memory(4, 0);
  {
    OnlineTrainer trainer(memory, cfg);
    BatchStream stream(docs, 10);
    while (auto batch = stream.next()) trainer.process_batch(*batch);
  }

  for (size_t capacity : {size_t{0}, size_t{15 * 4 * sizeof(double)}, size_t{1} << 20}) {
    TempDir dir;
    StoreStats disk(dir.file("m.obps"), 4, capacity);
    OnlineTrainer trainer(disk, cfg);
    BatchStream stream(docs, 10);
    while (auto batch = stream.next()) trainer.process_batch(*batch);

    REQUIRE(disk.vocab_size() == memory.vocab_size());
    std::vector<double> col(4);
    for (int64_t w = 0; w < memory.vocab_size(); ++w) {
      auto expect = memory.column(w);
      auto got = disk.column(w);
      REQUIRE(std::memcmp(got.data(), expect.data(), 4 * sizeof(double)) == 0);
      (void)col;
    }
  }
}

TEST_CASE("disk reads per batch never increase with buffer capacity") {
  std::mt19937_64 rng(5);
  auto model = synthetic::Model::random(3, 40, 0.3, 0.2, rng);
  auto docs = model.draw_corpus(40, 15, rng);

  OnlineConfig cfg;
  cfg.hyper = {0.01, 0.01, 3};
  cfg.schedule.max_iters = 6;
  cfg.seed = 7;

  std::vector<int64_t> reads;
  const size_t column_bytes = 3 * sizeof(double);
  for (size_t capacity : {size_t{0}, 5 * column_bytes, 20 * column_bytes, size_t{1} << 20}) {
    TempDir dir;
    StoreStats disk(dir.file("m.obps"), 3, capacity);
    OnlineTrainer trainer(disk, cfg);
    BatchStream stream(docs, 8);
    while (auto batch = stream.next()) trainer.process_batch(*batch);
    reads.push_back(disk.store().reads());
  }
  for (size_t i = 1; i < reads.size(); ++i) CHECK(reads[i] <= reads[i - 1]);
  CHECK(reads.back() < reads.front());
}
