#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "streamlda/inference.hpp"

namespace streamlda {

// The state that survives across mini-batches: the accumulated topic-word
// statistics live in the GlobalStats passed to the trainer; this records
// the stream bookkeeping around them.
struct OnlineState {
  int64_t batches_seen = 0;
  int64_t docs_seen = 0;
  int64_t tokens_seen = 0;
  std::vector<int32_t> batch_iterations;  // T_s per batch
};

struct BatchMetrics {
  int64_t batch_index = 0;
  int64_t docs_seen = 0;   // cumulative, including this batch
  int32_t iterations = 0;  // T_s
  double wall_ms = 0.0;
  double stop_residual = 0.0;  // average residual at stop
};

// The converged batch contribution: for each word of the batch, the K-vector
// it added to the accumulated statistics. Rows align with the originating
// batch's word_ids.
struct BatchGradient {
  int32_t topics = 0;
  std::vector<int32_t> word_ids;
  std::vector<double> values;  // word_ids.size() x K
  int64_t token_count = 0;

  std::span<const double> row(size_t i) const {
    return {values.data() + i * static_cast<size_t>(topics),
            static_cast<size_t>(topics)};
  }
};

struct BatchResult {
  bool skipped = false;
  BatchMetrics metrics;
  BatchGradient gradient;
};

struct OnlineConfig {
  Hyperparams hyper;
  ScheduleConfig schedule;  // kind defaults to active
  uint64_t seed = 0;
};

// Streaming trainer: each mini-batch is warm-started from the accumulated
// statistics, run to local convergence, merged, and discarded. Strictly
// sequential over batches.
class OnlineTrainer {
 public:
  OnlineTrainer(GlobalStats& stats, OnlineConfig config);

  BatchResult process_batch(const SparseBatch& batch);

  const OnlineState& state() const { return state_; }
  GlobalStats& stats() { return stats_; }

  // Test/diagnostic hook, called after every sweep of every batch.
  std::function<void(const SweepStats&)> sweep_observer;

 private:
  GlobalStats& stats_;
  OnlineConfig config_;
  OnlineState state_;
};

// The implicit step size of batch s under raw accumulation; analysis-only
// (the trainer accumulates directly, which realizes this rate).
double learning_rate(int64_t s);

// Whole-corpus batch training through the same engine; seeds exactly like
// the first mini-batch of a streaming run. Returns per-sweep stats; the
// final statistics are left in `stats`, the engine is handed to `per_sweep`
// for inspection while it is alive.
std::vector<SweepStats> run_batch_training(
    const SparseBatch& batch, GlobalStats& stats, const Hyperparams& hp,
    const ScheduleConfig& config, uint64_t master_seed,
    const std::function<void(const BatchEngine&, const SweepStats&)>& per_sweep = {});

// ---- topic shift reporting -------------------------------------------------

struct RankChange {
  int32_t word = 0;
  int32_t rank_before = -1;  // -1 = not in the top list
  int32_t rank_after = -1;
};

struct TopicShift {
  int32_t topic = 0;
  std::vector<int32_t> before;  // word ids, best first
  std::vector<int32_t> after;
  std::vector<RankChange> entered;
  std::vector<RankChange> exited;
  std::vector<RankChange> moved;
};

struct ShiftReport {
  int64_t batch_index = 0;
  int32_t top_n = 0;
  std::vector<TopicShift> topics;

  bool empty() const;
};

// Compares per-topic top-n rankings before and after one batch gradient.
// `stats` holds the merged (after) statistics; the before values are
// reconstructed by subtracting the gradient.
ShiftReport topic_shift_report(GlobalStats& stats, const BatchGradient& gradient,
                               int32_t top_n);

}  // namespace streamlda
