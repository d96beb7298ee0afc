#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamlda/corpus.hpp"
#include "streamlda/inference.hpp"

namespace streamlda {

// Read-only view of the normalized topic-word distributions implied by a set
// of accumulated statistics. Words beyond the known vocabulary get the
// prior-only column (zero statistics under the same smoothing).
class PhiModel {
 public:
  PhiModel(GlobalStats& stats, double beta);

  int32_t topics() const { return stats_->topics(); }
  int64_t vocab_size() const { return stats_->vocab_size(); }
  void column(int64_t w, std::span<double> out) const;

 private:
  GlobalStats* stats_;
  double beta_;
};

struct FoldInConfig {
  int32_t max_iters = 30;
  double residual_threshold = 0.1;
};

// Estimates a held-out document's topic proportions against frozen topics:
// synchronous message updates with only the document-side exclusion active,
// then the smoothed normalization.
std::vector<double> fold_in(const Document& doc, const PhiModel& phi,
                            const Hyperparams& hp, const FoldInConfig& config = {});

struct PerplexityRecord {
  int64_t docs_seen = 0;
  double perplexity = 0.0;
  int64_t tokens_evaluated = 0;
};

struct EvalConfig {
  FoldInConfig fold_in;
  // Word-split protocol: estimate theta on ~estimate_fraction of each
  // document's tokens and evaluate on the rest. Off by default (fold in and
  // evaluate on the full document).
  bool word_split = false;
  double estimate_fraction = 0.8;
  uint64_t split_seed = 0;
};

PerplexityRecord predictive_perplexity(std::span<const Document> test_docs,
                                       const PhiModel& phi, const Hyperparams& hp,
                                       const EvalConfig& config = {},
                                       int64_t docs_seen = 0);

// Perplexity of the training batch itself under the current statistics
// (theta from the engine's document stats, phi from the global columns).
double training_perplexity(const SparseBatch& batch,
                           std::span<const double> theta_hat, GlobalStats& stats,
                           const Hyperparams& hp);

struct RankedWord {
  int32_t word = 0;
  double weight = 0.0;
};

// The n heaviest words of one topic's statistics column, ties by lower id.
std::vector<RankedWord> top_words(GlobalStats& stats, int32_t topic, int32_t n);

}  // namespace streamlda
