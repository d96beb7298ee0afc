#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamlda {

// Error taxonomy. Everything user-facing derives from std::runtime_error so
// the CLI can report one diagnostic line and exit nonzero.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Verbosity is controlled by the STREAMLDA_LOG environment variable:
// quiet|warn|info|debug (or 0..3). Default is warn.
enum class LogLevel : int { quiet = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();

#if defined(__GNUC__)
#define STREAMLDA_PRINTF(a, b) __attribute__((format(printf, a, b)))
#else
#define STREAMLDA_PRINTF(a, b)
#endif

void log_warn(const char* fmt, ...) STREAMLDA_PRINTF(1, 2);
void log_info(const char* fmt, ...) STREAMLDA_PRINTF(1, 2);
void log_debug(const char* fmt, ...) STREAMLDA_PRINTF(1, 2);

// Per-stream RNG seed derivation (splitmix64 finalizer). Mini-batch s of a
// run seeded with `master` uses derive_seed(master, s); a whole-corpus batch
// run is stream 1, so it draws the same initialization as the first
// mini-batch of a streaming run.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Gauge of live per-batch workspace bytes (messages, doc stats, residuals).
// The streaming trainer must leave this at zero between batches; tests
// assert that to pin the memory contract.
namespace memgauge {

std::atomic<int64_t>& bytes();

inline void add(int64_t n) { bytes().fetch_add(n, std::memory_order_relaxed); }
inline int64_t current() { return bytes().load(std::memory_order_relaxed); }

}  // namespace memgauge

}  // namespace streamlda
