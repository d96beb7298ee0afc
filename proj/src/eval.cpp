#include "streamlda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace streamlda {

PhiModel::PhiModel(GlobalStats& stats, double beta) : stats_(&stats), beta_(beta) {}

void PhiModel::column(int64_t w, std::span<double> out) const {
  if (w >= 0 && w < stats_->vocab_size()) {
    estimate_phi_column(stats_->column(w), stats_->topic_totals(),
                        stats_->vocab_size(), beta_, out);
    return;
  }
  // Unseen word: smoothed zero-statistics column.
  std::vector<double> zeros(out.size(), 0.0);
  estimate_phi_column(zeros, stats_->topic_totals(), stats_->vocab_size(), beta_, out);
}

std::vector<double> fold_in(const Document& doc, const PhiModel& phi,
                            const Hyperparams& hp, const FoldInConfig& config) {
  if (doc.words.empty()) throw ArgumentError("cannot fold in an empty document");
  const auto k = static_cast<size_t>(hp.K);
  const size_t n = doc.words.size();

  std::vector<double> phi_cols(n * k);
  for (size_t i = 0; i < n; ++i) {
    phi.column(doc.words[i], {phi_cols.data() + i * k, k});
  }

  // Uniform start; the update only ever excludes the document-side term.
  std::vector<double> mu(n * k, 1.0 / static_cast<double>(k));
  std::vector<double> mu_new(n * k);
  std::vector<double> theta_hat(k, 0.0);
  int64_t tokens = 0;
  for (size_t i = 0; i < n; ++i) {
    tokens += doc.counts[i];
    for (size_t t = 0; t < k; ++t) {
      theta_hat[t] += doc.counts[i] * mu[i * k + t];
    }
  }

  for (int32_t iter = 0; iter < config.max_iters; ++iter) {
    double residual = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double x = doc.counts[i];
      const double* col = phi_cols.data() + i * k;
      const double* m = mu.data() + i * k;
      double* out = mu_new.data() + i * k;
      double sum = 0.0;
      for (size_t t = 0; t < k; ++t) {
        double theta_ex = theta_hat[t] - x * m[t];
        if (theta_ex < 0.0) theta_ex = 0.0;
        out[t] = (theta_ex + hp.alpha) * col[t];
        sum += out[t];
      }
      if (!(sum > 0.0)) throw NumericError("fold-in normalizer is non-positive");
      const double inv = 1.0 / sum;
      for (size_t t = 0; t < k; ++t) out[t] *= inv;
    }
    for (size_t i = 0; i < n; ++i) {
      const double x = doc.counts[i];
      for (size_t t = 0; t < k; ++t) {
        const double delta = x * (mu_new[i * k + t] - mu[i * k + t]);
        theta_hat[t] += delta;
        residual += std::fabs(delta);
        mu[i * k + t] = mu_new[i * k + t];
      }
    }
    if (residual / static_cast<double>(n) < config.residual_threshold) break;
  }

  std::vector<double> theta(k);
  estimate_theta(theta_hat, hp.alpha, theta);
  return theta;
}

namespace {

// Deterministic token split for the word-split protocol: each token of an
// entry lands in the estimation part with probability `fraction`.
void split_document(const Document& doc, double fraction, uint64_t seed,
                    Document& estimate, Document& holdout) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (size_t i = 0; i < doc.words.size(); ++i) {
    int32_t est = 0;
    for (int32_t c = 0; c < doc.counts[i]; ++c) {
      if (unif(rng) < fraction) ++est;
    }
    if (est > 0) estimate.add(doc.words[i], est);
    if (est < doc.counts[i]) holdout.add(doc.words[i], doc.counts[i] - est);
  }
}

double doc_log_likelihood(const Document& doc, std::span<const double> theta,
                          const PhiModel& phi, std::vector<double>& col) {
  double ll = 0.0;
  for (size_t i = 0; i < doc.words.size(); ++i) {
    phi.column(doc.words[i], col);
    double p = 0.0;
    for (size_t t = 0; t < theta.size(); ++t) p += theta[t] * col[t];
    if (!(p > 0.0)) throw NumericError("zero predictive probability");
    ll += doc.counts[i] * std::log(p);
  }
  return ll;
}

}  // namespace

PerplexityRecord predictive_perplexity(std::span<const Document> test_docs,
                                       const PhiModel& phi, const Hyperparams& hp,
                                       const EvalConfig& config, int64_t docs_seen) {
  if (test_docs.empty()) throw ArgumentError("test corpus is empty");
  double log_sum = 0.0;
  int64_t tokens = 0;
  std::vector<double> col(static_cast<size_t>(hp.K));
  for (size_t d = 0; d < test_docs.size(); ++d) {
    const Document& doc = test_docs[d];
    if (doc.words.empty()) continue;
    if (config.word_split) {
      Document estimate, holdout;
      split_document(doc, config.estimate_fraction,
                     derive_seed(config.split_seed, d + 1), estimate, holdout);
      if (estimate.words.empty() || holdout.words.empty()) continue;
      auto theta = fold_in(estimate, phi, hp, config.fold_in);
      log_sum += doc_log_likelihood(holdout, theta, phi, col);
      tokens += holdout.tokens();
    } else {
      auto theta = fold_in(doc, phi, hp, config.fold_in);
      log_sum += doc_log_likelihood(doc, theta, phi, col);
      tokens += doc.tokens();
    }
  }
  if (tokens == 0) throw ArgumentError("no evaluable tokens in the test corpus");
  PerplexityRecord record;
  record.docs_seen = docs_seen;
  record.perplexity = std::exp(-log_sum / static_cast<double>(tokens));
  record.tokens_evaluated = tokens;
  return record;
}

double training_perplexity(const SparseBatch& batch,
                           std::span<const double> theta_hat, GlobalStats& stats,
                           const Hyperparams& hp) {
  const auto k = static_cast<size_t>(hp.K);
  const auto docs = static_cast<size_t>(batch.doc_count);
  std::vector<double> theta(docs * k);
  for (size_t d = 0; d < docs; ++d) {
    estimate_theta({theta_hat.data() + d * k, k}, hp.alpha, {theta.data() + d * k, k});
  }
  double log_sum = 0.0;
  int64_t tokens = 0;
  std::vector<double> col(k);
  for (size_t wi = 0; wi < batch.word_count(); ++wi) {
    estimate_phi_column(stats.column(batch.word_ids[wi]), stats.topic_totals(),
                        stats.vocab_size(), hp.beta, col);
    for (int64_t e = batch.word_offsets[wi]; e < batch.word_offsets[wi + 1]; ++e) {
      const auto d = static_cast<size_t>(batch.entry_docs[static_cast<size_t>(e)]);
      const int32_t x = batch.entry_counts[static_cast<size_t>(e)];
      double p = 0.0;
      for (size_t t = 0; t < k; ++t) p += theta[d * k + t] * col[t];
      if (!(p > 0.0)) throw NumericError("zero training probability");
      log_sum += x * std::log(p);
      tokens += x;
    }
  }
  return std::exp(-log_sum / static_cast<double>(tokens));
}

std::vector<RankedWord> top_words(GlobalStats& stats, int32_t topic, int32_t n) {
  if (n < 1) throw ArgumentError("top_words needs n >= 1");
  if (topic < 0 || topic >= stats.topics()) throw ArgumentError("topic out of range");
  auto better = [](const RankedWord& a, const RankedWord& b) {
    return a.weight > b.weight || (a.weight == b.weight && a.word < b.word);
  };
  auto cmp = [&](const RankedWord& a, const RankedWord& b) { return better(a, b); };
  std::vector<RankedWord> heap;
  const auto limit = static_cast<size_t>(n);
  for (int64_t w = 0; w < stats.vocab_size(); ++w) {
    RankedWord cand{static_cast<int32_t>(w),
                    stats.column(w)[static_cast<size_t>(topic)]};
    if (heap.size() < limit) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), cmp);
    } else if (better(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), cmp);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), cmp);
    }
  }
  std::sort(heap.begin(), heap.end(), better);
  return heap;
}

}  // namespace streamlda
