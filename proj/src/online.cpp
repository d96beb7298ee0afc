#include "streamlda/online.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace streamlda {

OnlineTrainer::OnlineTrainer(GlobalStats& stats, OnlineConfig config)
    : stats_(stats), config_(std::move(config)) {
  config_.hyper.validate();
  config_.schedule.validate();
  if (config_.hyper.K != stats.topics()) {
    throw ArgumentError("topic count mismatch between config and stats");
  }
}

BatchResult OnlineTrainer::process_batch(const SparseBatch& batch) {
  if (batch.index != state_.batches_seen + 1) {
    throw ArgumentError("batch index " + std::to_string(batch.index) +
                        " does not follow batch " +
                        std::to_string(state_.batches_seen));
  }
  BatchResult result;
  result.metrics.batch_index = batch.index;
  if (batch.nnz() == 0) {
    log_warn("skipping batch %lld: no nonzero entries",
             static_cast<long long>(batch.index));
    ++state_.batches_seen;
    state_.docs_seen += batch.doc_count;
    state_.batch_iterations.push_back(0);
    result.skipped = true;
    result.metrics.docs_seen = state_.docs_seen;
    result.gradient.topics = config_.hyper.K;
    return result;
  }

  const auto start = std::chrono::steady_clock::now();
  if (batch.max_word() >= stats_.vocab_size()) {
    stats_.grow_vocab(batch.max_word() + 1);
  }
  stats_.prepare(batch.word_ids);

  SweepStats last{};
  BatchGradient gradient;
  {
    BatchEngine engine(batch, stats_, config_.hyper, config_.schedule,
                       derive_seed(config_.seed, static_cast<uint64_t>(batch.index)));
    while (engine.iteration() < config_.schedule.max_iters) {
      last = engine.run_sweep();
      if (sweep_observer) sweep_observer(last);
      if (last.converged) break;
    }
    gradient.topics = config_.hyper.K;
    gradient.word_ids = batch.word_ids;
    gradient.values = engine.take_contribution();
    gradient.token_count = batch.token_count();
  }
  // The engine (messages, doc stats, residuals) is gone; only the merged
  // statistics survive. Persist them before reporting.
  stats_.batch_end();

  ++state_.batches_seen;
  state_.docs_seen += batch.doc_count;
  state_.tokens_seen += gradient.token_count;
  state_.batch_iterations.push_back(last.iteration);

  result.metrics.docs_seen = state_.docs_seen;
  result.metrics.iterations = last.iteration;
  result.metrics.stop_residual = last.avg_residual;
  result.metrics.wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count();
  result.gradient = std::move(gradient);
  return result;
}

double learning_rate(int64_t s) {
  if (s < 2) throw ArgumentError("learning rate is defined for s >= 2");
  return 1.0 / static_cast<double>(s - 1);
}

std::vector<SweepStats> run_batch_training(
    const SparseBatch& batch, GlobalStats& stats, const Hyperparams& hp,
    const ScheduleConfig& config, uint64_t master_seed,
    const std::function<void(const BatchEngine&, const SweepStats&)>& per_sweep) {
  if (batch.max_word() >= stats.vocab_size()) {
    stats.grow_vocab(batch.max_word() + 1);
  }
  stats.prepare(batch.word_ids);
  std::vector<SweepStats> sweeps;
  BatchEngine engine(batch, stats, hp, config, derive_seed(master_seed, 1));
  while (engine.iteration() < config.max_iters) {
    SweepStats s = engine.run_sweep();
    sweeps.push_back(s);
    if (per_sweep) per_sweep(engine, s);
    if (s.converged) break;
  }
  stats.batch_end();
  return sweeps;
}

// ---- topic shift reporting -------------------------------------------------

bool ShiftReport::empty() const {
  for (const auto& t : topics) {
    if (!t.entered.empty() || !t.exited.empty() || !t.moved.empty()) return false;
  }
  return true;
}

namespace {

struct Scored {
  double weight;
  int32_t word;
};

// Descending weight, ties by lower word id.
bool better(const Scored& a, const Scored& b) {
  return a.weight > b.weight || (a.weight == b.weight && a.word < b.word);
}

void push_top(std::vector<Scored>& heap, size_t limit, Scored candidate) {
  // Min-heap on `better`: heap.front() is the weakest kept entry.
  auto cmp = [](const Scored& a, const Scored& b) { return better(a, b); };
  if (heap.size() < limit) {
    heap.push_back(candidate);
    std::push_heap(heap.begin(), heap.end(), cmp);
    return;
  }
  if (better(candidate, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    heap.back() = candidate;
    std::push_heap(heap.begin(), heap.end(), cmp);
  }
}

std::vector<int32_t> ranked(std::vector<Scored> heap) {
  std::sort(heap.begin(), heap.end(), better);
  std::vector<int32_t> out;
  out.reserve(heap.size());
  for (const auto& s : heap) out.push_back(s.word);
  return out;
}

int32_t rank_of(const std::vector<int32_t>& list, int32_t word) {
  auto it = std::find(list.begin(), list.end(), word);
  return it == list.end() ? -1 : static_cast<int32_t>(it - list.begin());
}

}  // namespace

ShiftReport topic_shift_report(GlobalStats& stats, const BatchGradient& gradient,
                               int32_t top_n) {
  if (top_n < 1) throw ArgumentError("top_n must be >= 1");
  const int32_t k = stats.topics();
  if (gradient.topics != 0 && gradient.topics != k) {
    throw ArgumentError("gradient topic count mismatch");
  }
  const auto limit = static_cast<size_t>(top_n);
  std::vector<std::vector<Scored>> before_heap(static_cast<size_t>(k));
  std::vector<std::vector<Scored>> after_heap(static_cast<size_t>(k));

  size_t gi = 0;  // cursor into the gradient's sorted word ids
  for (int64_t w = 0; w < stats.vocab_size(); ++w) {
    auto col = stats.column(w);
    const double* delta = nullptr;
    if (gi < gradient.word_ids.size() && gradient.word_ids[gi] == w) {
      delta = gradient.row(gi).data();
      ++gi;
    }
    for (int32_t t = 0; t < k; ++t) {
      const double after = col[static_cast<size_t>(t)];
      const double before = delta ? after - delta[t] : after;
      push_top(before_heap[static_cast<size_t>(t)], limit,
               {before, static_cast<int32_t>(w)});
      push_top(after_heap[static_cast<size_t>(t)], limit,
               {after, static_cast<int32_t>(w)});
    }
  }

  ShiftReport report;
  report.top_n = top_n;
  report.topics.resize(static_cast<size_t>(k));
  for (int32_t t = 0; t < k; ++t) {
    TopicShift& shift = report.topics[static_cast<size_t>(t)];
    shift.topic = t;
    shift.before = ranked(std::move(before_heap[static_cast<size_t>(t)]));
    shift.after = ranked(std::move(after_heap[static_cast<size_t>(t)]));
    for (int32_t r = 0; r < static_cast<int32_t>(shift.after.size()); ++r) {
      const int32_t word = shift.after[static_cast<size_t>(r)];
      const int32_t rb = rank_of(shift.before, word);
      if (rb < 0) {
        shift.entered.push_back({word, -1, r});
      } else if (rb != r) {
        shift.moved.push_back({word, rb, r});
      }
    }
    for (int32_t r = 0; r < static_cast<int32_t>(shift.before.size()); ++r) {
      const int32_t word = shift.before[static_cast<size_t>(r)];
      if (rank_of(shift.after, word) < 0) {
        shift.exited.push_back({word, r, -1});
      }
    }
  }
  return report;
}

}  // namespace streamlda
