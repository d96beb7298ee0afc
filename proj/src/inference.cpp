#include "streamlda/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace streamlda {

void Hyperparams::validate() const {
  if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
  if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
  if (K < 1) throw ArgumentError("topic count must be >= 1");
}

Schedule schedule_from_string(const std::string& name) {
  if (name == "bp" || name == "synchronous") return Schedule::synchronous;
  if (name == "rbp" || name == "residual") return Schedule::residual;
  if (name == "abp" || name == "active") return Schedule::active;
  if (name == "em") return Schedule::em;
  throw ArgumentError("unknown schedule \"" + name + "\"");
}

const char* schedule_name(Schedule s) {
  switch (s) {
    case Schedule::synchronous: return "synchronous";
    case Schedule::residual: return "residual";
    case Schedule::active: return "active";
    case Schedule::em: return "em";
  }
  return "?";
}

int32_t ScheduleConfig::effective_budget(int32_t topics) const {
  if (topic_budget > 0) return std::min(topic_budget, topics);
  auto n = static_cast<int32_t>(std::ceil(eta_k * topics));
  return std::clamp(n, 1, topics);
}

size_t ScheduleConfig::active_word_count(size_t words) const {
  if (eta_w >= 1.0) return words;
  auto n = static_cast<size_t>(std::ceil(eta_w * static_cast<double>(words)));
  return std::clamp<size_t>(n, 1, words);
}

void ScheduleConfig::validate() const {
  if (topic_budget < 0) throw ArgumentError("topic budget must be >= 0");
  if (topic_budget == 0 && !(eta_k > 0.0 && eta_k <= 1.0)) {
    throw ArgumentError("eta_k must be in (0, 1]");
  }
  if (!(eta_w > 0.0 && eta_w <= 1.0)) throw ArgumentError("eta_w must be in (0, 1]");
  if (!(residual_threshold > 0.0)) throw ArgumentError("residual threshold must be positive");
  if (max_iters < 1) throw ArgumentError("max_iters must be >= 1");
}

double GlobalStats::total_tokens() const {
  return std::accumulate(n_k_.begin(), n_k_.end(), 0.0);
}

MemoryStats::MemoryStats(int32_t topics, int64_t vocab)
    : GlobalStats(topics), vocab_(vocab),
      data_(static_cast<size_t>(vocab) * static_cast<size_t>(topics), 0.0) {}

void MemoryStats::grow_vocab(int64_t new_size) {
  if (new_size < vocab_) throw ArgumentError("vocabulary cannot shrink");
  data_.resize(static_cast<size_t>(new_size) * static_cast<size_t>(topics_), 0.0);
  vocab_ = new_size;
}

std::span<const double> MemoryStats::column(int64_t w) {
  return column_mut(w);
}

std::span<double> MemoryStats::column_mut(int64_t w) {
  if (w < 0 || w >= vocab_) throw ArgumentError("word id out of range");
  return {data_.data() + static_cast<size_t>(w) * static_cast<size_t>(topics_),
          static_cast<size_t>(topics_)};
}

double ResidualIndex::total() const {
  return std::accumulate(word_residual.begin(), word_residual.end(), 0.0);
}

void update_message(double count, std::span<const double> mu,
                    std::span<const int32_t> subset,
                    std::span<const double> theta_d,
                    std::span<const double> phi_col,
                    std::span<const double> topic_totals, double w_beta,
                    const Hyperparams& hp, std::span<double> out) {
  const size_t n = subset.size();
  double sum = 0.0;
  double subset_mass = 0.0;
  for (size_t j = 0; j < n; ++j) {
    const int32_t k = subset[j];
    const double self = count * mu[static_cast<size_t>(k)];
    double theta_ex = theta_d[static_cast<size_t>(k)] - self;
    double phi_ex = phi_col[static_cast<size_t>(k)] - self;
    double total_ex = topic_totals[static_cast<size_t>(k)] - self;
    if (theta_ex < 0.0) theta_ex = 0.0;
    if (phi_ex < 0.0) phi_ex = 0.0;
    if (total_ex < 0.0) total_ex = 0.0;
    const double v = (theta_ex + hp.alpha) * (phi_ex + hp.beta) / (total_ex + w_beta);
    out[j] = v;
    sum += v;
    subset_mass += mu[static_cast<size_t>(k)];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw NumericError("message update produced a non-positive normalizer");
  }
  // A full subset renormalizes to exactly 1 (division keeps v/v == 1 closed
  // under IEEE rounding); a partial subset keeps the complement untouched and
  // redistributes only its own previous mass.
  if (n == static_cast<size_t>(hp.K)) {
    for (size_t j = 0; j < n; ++j) out[j] /= sum;
  } else {
    const double scale = subset_mass / sum;
    for (size_t j = 0; j < n; ++j) out[j] *= scale;
  }
}

double apply_message(double count, std::span<double> mu,
                     std::span<const int32_t> subset,
                     std::span<const double> new_vals, std::span<double> theta_d,
                     std::span<double> phi_col, std::span<double> contrib_row,
                     std::span<double> topic_totals,
                     std::span<double> residual_row) {
  double residual = 0.0;
  for (size_t j = 0; j < subset.size(); ++j) {
    const auto k = static_cast<size_t>(subset[j]);
    const double delta = count * (new_vals[j] - mu[k]);
    theta_d[k] += delta;
    phi_col[k] += delta;
    contrib_row[k] += delta;
    topic_totals[k] += delta;
    const double r = std::fabs(delta);
    residual_row[k] += r;
    residual += r;
    mu[k] = new_vals[j];
  }
  return residual;
}

void select_active_topics(std::span<const double> residuals, int32_t n,
                          std::vector<int32_t>& out) {
  const auto k = static_cast<int32_t>(residuals.size());
  if (n < 1) throw ArgumentError("selection budget must be >= 1");
  if (n >= k) {
    out.resize(static_cast<size_t>(k));
    std::iota(out.begin(), out.end(), 0);
    return;
  }
  // Bounded min-heap scan: one predictable comparison per topic against the
  // weakest kept candidate, so the partial order costs far less than a sort.
  auto better = [&](int32_t a, int32_t b) {
    const double ra = residuals[static_cast<size_t>(a)];
    const double rb = residuals[static_cast<size_t>(b)];
    return ra > rb || (ra == rb && a < b);
  };
  out.clear();
  out.reserve(static_cast<size_t>(n));
  for (int32_t i = 0; i < n; ++i) out.push_back(i);
  std::make_heap(out.begin(), out.end(), better);  // out[0] = weakest kept
  for (int32_t i = n; i < k; ++i) {
    if (better(i, out.front())) {
      std::pop_heap(out.begin(), out.end(), better);
      out.back() = i;
      std::push_heap(out.begin(), out.end(), better);
    }
  }
  std::sort(out.begin(), out.end());
}

std::vector<int32_t> select_active_topics(std::span<const double> residuals, int32_t n) {
  std::vector<int32_t> out;
  select_active_topics(residuals, n, out);
  return out;
}

bool check_convergence(double residual_sum, int64_t nnz, double threshold) {
  if (nnz < 1) throw ArgumentError("nnz must be >= 1");
  return residual_sum / static_cast<double>(nnz) < threshold;
}

void estimate_theta(std::span<const double> theta_hat_d, double alpha,
                    std::span<double> out) {
  const size_t k = theta_hat_d.size();
  double sum = 0.0;
  for (size_t i = 0; i < k; ++i) sum += theta_hat_d[i];
  const double denom = sum + static_cast<double>(k) * alpha;
  if (!(denom > 0.0)) throw NumericError("theta normalizer is non-positive");
  for (size_t i = 0; i < k; ++i) out[i] = (theta_hat_d[i] + alpha) / denom;
}

void estimate_phi_column(std::span<const double> phi_hat_col,
                         std::span<const double> topic_totals, int64_t vocab,
                         double beta, std::span<double> out) {
  const double wb = static_cast<double>(vocab) * beta;
  for (size_t i = 0; i < phi_hat_col.size(); ++i) {
    const double denom = topic_totals[i] + wb;
    if (!(denom > 0.0)) throw NumericError("phi normalizer is non-positive");
    out[i] = (phi_hat_col[i] + beta) / denom;
  }
}

void em_estep(std::span<const double> theta_d, std::span<const double> phi_w,
              std::span<double> out) {
  double sum = 0.0;
  for (size_t i = 0; i < theta_d.size(); ++i) {
    out[i] = theta_d[i] * phi_w[i];
    sum += out[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw NumericError("degenerate theta*phi product in E-step");
  }
  const double inv = 1.0 / sum;
  for (size_t i = 0; i < theta_d.size(); ++i) out[i] *= inv;
}

void em_mstep_theta(std::span<const double> theta_hat_d, double alpha,
                    std::span<double> out) {
  if (alpha < 1.0) {
    estimate_theta(theta_hat_d, alpha, out);
    return;
  }
  const size_t k = theta_hat_d.size();
  double sum = 0.0;
  for (size_t i = 0; i < k; ++i) sum += theta_hat_d[i];
  const double prior = alpha - 1.0;  // added as one term: stat + 1.0 - 1.0
                                     // would erase statistics below one ulp
  const double denom = sum + static_cast<double>(k) * prior;
  if (!(denom > 0.0)) throw NumericError("theta M-step normalizer is non-positive");
  for (size_t i = 0; i < k; ++i) out[i] = (theta_hat_d[i] + prior) / denom;
}

void em_mstep_phi_column(std::span<const double> phi_hat_col,
                         std::span<const double> topic_totals, int64_t vocab,
                         double beta, std::span<double> out) {
  if (beta < 1.0) {
    estimate_phi_column(phi_hat_col, topic_totals, vocab, beta, out);
    return;
  }
  const double prior = beta - 1.0;
  const double wb = static_cast<double>(vocab) * prior;
  for (size_t i = 0; i < phi_hat_col.size(); ++i) {
    const double denom = topic_totals[i] + wb;
    if (!(denom > 0.0)) throw NumericError("phi M-step normalizer is non-positive");
    out[i] = (phi_hat_col[i] + prior) / denom;
  }
}

double em_lower_bound(const SparseBatch& batch, std::span<const double> messages,
                      std::span<const double> theta, std::span<const double> phi,
                      std::span<const double> phi_unseen, int64_t vocab,
                      const Hyperparams& hp) {
  const auto k = static_cast<size_t>(hp.K);
  double bound = 0.0;
  for (size_t wi = 0; wi < batch.word_count(); ++wi) {
    const double* phi_w = phi.data() + wi * k;
    for (int64_t e = batch.word_offsets[wi]; e < batch.word_offsets[wi + 1]; ++e) {
      const double x = batch.entry_counts[static_cast<size_t>(e)];
      const auto d = static_cast<size_t>(batch.entry_docs[static_cast<size_t>(e)]);
      const double* mu = messages.data() + static_cast<size_t>(e) * k;
      const double* theta_d = theta.data() + d * k;
      for (size_t t = 0; t < k; ++t) {
        if (mu[t] <= 0.0) continue;  // 0*log(0) -> 0
        if (!(theta_d[t] > 0.0) || !(phi_w[t] > 0.0)) {
          throw NumericError("zero theta*phi under a positive message");
        }
        // split logs so tiny theta*phi products cannot underflow to zero
        bound += x * mu[t] *
                 (std::log(theta_d[t]) + std::log(phi_w[t]) - std::log(mu[t]));
      }
    }
  }
  if (hp.alpha != 1.0) {
    for (size_t d = 0; d < static_cast<size_t>(batch.doc_count); ++d) {
      for (size_t t = 0; t < k; ++t) {
        const double v = theta[d * k + t];
        if (!(v > 0.0)) throw NumericError("log of non-positive theta in prior term");
        bound += (hp.alpha - 1.0) * std::log(v);
      }
    }
  }
  if (hp.beta != 1.0) {
    const auto unseen = static_cast<double>(vocab - static_cast<int64_t>(batch.word_count()));
    for (size_t t = 0; t < k; ++t) {
      double acc = 0.0;
      for (size_t wi = 0; wi < batch.word_count(); ++wi) {
        const double v = phi[wi * k + t];
        if (!(v > 0.0)) throw NumericError("log of non-positive phi in prior term");
        acc += std::log(v);
      }
      if (unseen > 0.0) {
        const double v = phi_unseen[t];
        if (!(v > 0.0)) throw NumericError("log of non-positive phi in prior term");
        acc += unseen * std::log(v);
      }
      bound += (hp.beta - 1.0) * acc;
    }
  }
  return bound;
}

// ---- BatchEngine -----------------------------------------------------------

namespace {

int64_t vector_bytes(const std::vector<double>& v) {
  return static_cast<int64_t>(v.capacity() * sizeof(double));
}

}  // namespace

BatchEngine::BatchEngine(const SparseBatch& batch, GlobalStats& stats,
                         const Hyperparams& hp, const ScheduleConfig& config,
                         uint64_t seed)
    : batch_(&batch), stats_(stats), hp_(hp), config_(config),
      k_(static_cast<size_t>(hp.K)) {
  hp_.validate();
  config_.validate();
  if (batch.nnz() < 1) throw ArgumentError("batch has no entries");
  if (hp.K != stats.topics()) throw ArgumentError("topic count mismatch with stats");
  if (batch.max_word() >= stats.vocab_size()) {
    throw ArgumentError("batch references words beyond the known vocabulary");
  }
  w_beta_ = static_cast<double>(stats.vocab_size()) * hp_.beta;

  const auto nnz = static_cast<size_t>(batch.nnz());
  const size_t words = batch.word_count();
  messages_.resize(nnz * k_);
  theta_hat_.assign(static_cast<size_t>(batch.doc_count) * k_, 0.0);
  contrib_.assign(words * k_, 0.0);
  residuals_.topics = hp_.K;
  residuals_.word_residual.assign(words, 0.0);
  residuals_.topic_residual.assign(words * k_, 0.0);
  residuals_.word_order.resize(words);
  std::iota(residuals_.word_order.begin(), residuals_.word_order.end(), 0);
  all_topics_.resize(k_);
  std::iota(all_topics_.begin(), all_topics_.end(), 0);
  scratch_.resize(k_);
  select_scratch_.reserve(k_);

  init_messages(seed);

  if (config_.kind == Schedule::em) {
    em_theta_.resize(static_cast<size_t>(batch.doc_count) * k_);
    em_phi_.resize(words * k_);
    em_phi_unseen_.resize(k_);
    // Per-word statistics that predate this batch, and the totals of columns
    // the batch never touches; the EM sweep rebuilds everything else exactly.
    em_prior_.resize(words * k_);
    em_rest_totals_.assign(stats.topic_totals().begin(), stats.topic_totals().end());
    for (size_t wi = 0; wi < words; ++wi) {
      auto col = stats_.column(batch.word_ids[wi]);
      const double* crow = contrib_.data() + wi * k_;
      for (size_t t = 0; t < k_; ++t) {
        em_prior_[wi * k_ + t] = col[t] - crow[t];
        em_rest_totals_[t] -= col[t];
      }
    }
    em_mstep();
  }

  gauge_bytes_ = vector_bytes(messages_) + vector_bytes(theta_hat_) +
                 vector_bytes(contrib_) + vector_bytes(residuals_.topic_residual) +
                 vector_bytes(residuals_.word_residual) +
                 vector_bytes(em_theta_) + vector_bytes(em_phi_);
  memgauge::add(gauge_bytes_);
}

BatchEngine::~BatchEngine() { memgauge::add(-gauge_bytes_); }

std::span<const double> BatchEngine::theta_hat_doc(int32_t d) const {
  return {theta_hat_.data() + static_cast<size_t>(d) * k_, k_};
}

std::span<const double> BatchEngine::contribution_row(size_t wi) const {
  return {contrib_.data() + wi * k_, k_};
}

std::vector<double> BatchEngine::take_contribution() {
  std::vector<double> out;
  out.swap(contrib_);
  return out;
}

void BatchEngine::init_messages(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto nnz = static_cast<size_t>(batch_->nnz());
  for (size_t e = 0; e < nnz; ++e) {
    double* mu = messages_.data() + e * k_;
    double sum = 0.0;
    for (size_t t = 0; t < k_; ++t) {
      mu[t] = 1.0 - unif(rng);  // strictly positive
      sum += mu[t];
    }
    for (size_t t = 0; t < k_; ++t) mu[t] /= sum;
  }
  // Build the initial sufficient statistics and merge the batch contribution
  // into the accumulated columns (warm start over whatever mass they hold).
  auto totals = stats_.topic_totals();
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    double* crow = contrib_.data() + wi * k_;
    for (int64_t e = batch_->word_offsets[wi]; e < batch_->word_offsets[wi + 1]; ++e) {
      const double x = batch_->entry_counts[static_cast<size_t>(e)];
      const auto d = static_cast<size_t>(batch_->entry_docs[static_cast<size_t>(e)]);
      const double* mu = messages_.data() + static_cast<size_t>(e) * k_;
      double* trow = theta_hat_.data() + d * k_;
      for (size_t t = 0; t < k_; ++t) {
        const double m = x * mu[t];
        trow[t] += m;
        crow[t] += m;
      }
    }
    auto col = stats_.column_mut(batch_->word_ids[wi]);
    for (size_t t = 0; t < k_; ++t) {
      col[t] += crow[t];
      totals[t] += crow[t];
    }
  }
}

SweepStats BatchEngine::run_sweep() {
  const auto start = std::chrono::steady_clock::now();
  ++iteration_;
  int64_t updated = 0;
  switch (config_.kind) {
    case Schedule::synchronous:
      updated = sweep_synchronous();
      break;
    case Schedule::residual:
      updated = sweep_asynchronous(false);
      break;
    case Schedule::active:
      // The first sweep visits everything; later sweeps follow the schedule.
      updated = sweep_asynchronous(iteration_ > 1);
      break;
    case Schedule::em:
      updated = sweep_em();
      break;
  }
  refresh_schedule();

  SweepStats out;
  out.iteration = iteration_;
  out.residual_sum = residuals_.total();
  out.avg_residual = out.residual_sum / static_cast<double>(batch_->nnz());
  out.messages_updated = updated;
  out.converged = check_convergence(out.residual_sum, batch_->nnz(),
                                    config_.residual_threshold);
  out.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  last_ = out;
  return out;
}

double BatchEngine::visit_word(size_t wi, std::span<const int32_t> subset) {
  auto col = stats_.column_mut(batch_->word_ids[wi]);
  auto totals = stats_.topic_totals();
  auto rrow = residual_row(wi);
  auto crow = contrib_row(wi);
  // Off-subset residuals stay as accumulated: a topic not visited keeps its
  // stale priority until it is selected again. Only the entries about to be
  // re-accumulated are reset.
  double stale = 0.0;
  for (int32_t k : subset) {
    stale += rrow[static_cast<size_t>(k)];
    rrow[static_cast<size_t>(k)] = 0.0;
  }
  double fresh = 0.0;
  std::span<double> vals(scratch_.data(), subset.size());
  const int64_t end = batch_->word_offsets[wi + 1];
  for (int64_t e = batch_->word_offsets[wi]; e < end; ++e) {
    if (e + 1 < end) {
      // The next entry's message row is a scattered gather from a large
      // block; start pulling its subset lines while this entry computes.
      const double* next = messages_.data() + static_cast<size_t>(e + 1) * k_;
      for (int32_t k : subset) __builtin_prefetch(next + k, 1);
    }
    const double x = batch_->entry_counts[static_cast<size_t>(e)];
    const auto d = batch_->entry_docs[static_cast<size_t>(e)];
    auto mu = message(e);
    auto trow = theta_row(d);
    update_message(x, mu, subset, trow, col, totals, w_beta_, hp_, vals);
    fresh += apply_message(x, mu, subset, vals, trow, col, crow, totals, rrow);
  }
  // A full visit replaces the entire row, so the residual is exactly the
  // fresh mass (and an exact fixed point yields an exact zero).
  if (subset.size() == k_) {
    residuals_.word_residual[wi] = fresh;
  } else {
    residuals_.word_residual[wi] += fresh - stale;
  }
  return fresh;
}

int64_t BatchEngine::sweep_asynchronous(bool restricted) {
  const size_t words = batch_->word_count();
  const size_t limit = restricted ? config_.active_word_count(words) : words;
  int64_t updated = 0;
  for (size_t pos = 0; pos < limit; ++pos) {
    const size_t wi = (iteration_ > 1)
                          ? static_cast<size_t>(residuals_.word_order[pos])
                          : pos;
    std::span<const int32_t> subset =
        (restricted && residuals_.subset_width > 0)
            ? residuals_.subset_row(wi)
            : std::span<const int32_t>(all_topics_);
    visit_word(wi, subset);
    updated += batch_->word_offsets[wi + 1] - batch_->word_offsets[wi];
  }
  return updated;
}

int64_t BatchEngine::sweep_synchronous() {
  const auto nnz = static_cast<size_t>(batch_->nnz());
  if (sync_block_.empty()) {
    sync_block_.resize(nnz * k_);
    memgauge::add(vector_bytes(sync_block_));
    gauge_bytes_ += vector_bytes(sync_block_);
  }
  std::span<const int32_t> subset(all_topics_);
  // Phase 1: every new message is computed from iteration t-1 statistics.
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    auto col = stats_.column(batch_->word_ids[wi]);
    auto totals = stats_.topic_totals();
    for (int64_t e = batch_->word_offsets[wi]; e < batch_->word_offsets[wi + 1]; ++e) {
      const double x = batch_->entry_counts[static_cast<size_t>(e)];
      const auto d = batch_->entry_docs[static_cast<size_t>(e)];
      std::span<double> out(sync_block_.data() + static_cast<size_t>(e) * k_, k_);
      update_message(x, message(e), subset, theta_row(d), col, totals, w_beta_,
                     hp_, out);
    }
  }
  // Phase 2: apply them all.
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    auto col = stats_.column_mut(batch_->word_ids[wi]);
    auto totals = stats_.topic_totals();
    auto rrow = residual_row(wi);
    std::fill(rrow.begin(), rrow.end(), 0.0);
    auto crow = contrib_row(wi);
    double word_residual = 0.0;
    for (int64_t e = batch_->word_offsets[wi]; e < batch_->word_offsets[wi + 1]; ++e) {
      const double x = batch_->entry_counts[static_cast<size_t>(e)];
      const auto d = batch_->entry_docs[static_cast<size_t>(e)];
      std::span<const double> vals(sync_block_.data() + static_cast<size_t>(e) * k_, k_);
      word_residual += apply_message(x, message(e), subset, vals, theta_row(d),
                                     col, crow, totals, rrow);
    }
    residuals_.word_residual[wi] = word_residual;
  }
  return batch_->nnz();
}

int64_t BatchEngine::sweep_em() {
  // E-step: posteriors from the fixed current parameters, messages replaced
  // in place.
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    auto rrow = residual_row(wi);
    std::fill(rrow.begin(), rrow.end(), 0.0);
    const double* phi_w = em_phi_.data() + wi * k_;
    double word_residual = 0.0;
    for (int64_t e = batch_->word_offsets[wi]; e < batch_->word_offsets[wi + 1]; ++e) {
      const double x = batch_->entry_counts[static_cast<size_t>(e)];
      const auto d = batch_->entry_docs[static_cast<size_t>(e)];
      auto mu = message(e);
      em_estep({em_theta_.data() + static_cast<size_t>(d) * k_, k_}, {phi_w, k_},
               scratch_);
      for (size_t t = 0; t < k_; ++t) {
        const double r = x * std::fabs(scratch_[t] - mu[t]);
        rrow[t] += r;
        word_residual += r;
        mu[t] = scratch_[t];
      }
    }
    residuals_.word_residual[wi] = word_residual;
  }
  // Statistics rebuilt from scratch: EM drives components into the denormal
  // range, where incremental accumulation would drown them in rounding noise.
  std::fill(theta_hat_.begin(), theta_hat_.end(), 0.0);
  std::fill(contrib_.begin(), contrib_.end(), 0.0);
  auto totals = stats_.topic_totals();
  std::copy(em_rest_totals_.begin(), em_rest_totals_.end(), totals.begin());
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    double* crow = contrib_.data() + wi * k_;
    for (int64_t e = batch_->word_offsets[wi]; e < batch_->word_offsets[wi + 1]; ++e) {
      const double x = batch_->entry_counts[static_cast<size_t>(e)];
      const auto d = static_cast<size_t>(batch_->entry_docs[static_cast<size_t>(e)]);
      const double* mu = messages_.data() + static_cast<size_t>(e) * k_;
      double* trow = theta_hat_.data() + d * k_;
      for (size_t t = 0; t < k_; ++t) {
        const double m = x * mu[t];
        trow[t] += m;
        crow[t] += m;
      }
    }
    auto col = stats_.column_mut(batch_->word_ids[wi]);
    const double* prior = em_prior_.data() + wi * k_;
    for (size_t t = 0; t < k_; ++t) {
      col[t] = prior[t] + crow[t];
      totals[t] += col[t];
    }
  }
  em_mstep();
  return batch_->nnz();
}

void BatchEngine::em_mstep() {
  for (size_t d = 0; d < static_cast<size_t>(batch_->doc_count); ++d) {
    em_mstep_theta({theta_hat_.data() + d * k_, k_}, hp_.alpha,
                   {em_theta_.data() + d * k_, k_});
  }
  auto totals = stats_.topic_totals();
  const int64_t vocab = stats_.vocab_size();
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    auto col = stats_.column(batch_->word_ids[wi]);
    em_mstep_phi_column(col, totals, vocab, hp_.beta, {em_phi_.data() + wi * k_, k_});
  }
  std::vector<double> zeros(k_, 0.0);
  em_mstep_phi_column(zeros, totals, vocab, hp_.beta, em_phi_unseen_);
}

double BatchEngine::lower_bound() const {
  if (config_.kind != Schedule::em) {
    throw ArgumentError("lower bound is defined for the EM schedule");
  }
  return em_lower_bound(*batch_, messages_, em_theta_, em_phi_, em_phi_unseen_,
                        stats_.vocab_size(), hp_);
}

void BatchEngine::refresh_schedule() {
  auto& order = residuals_.word_order;
  const auto& wr = residuals_.word_residual;
  std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    const double ra = wr[static_cast<size_t>(a)];
    const double rb = wr[static_cast<size_t>(b)];
    return ra > rb || (ra == rb && a < b);
  });
  if (config_.kind != Schedule::active) return;

  const int32_t budget = config_.effective_budget(hp_.K);
  residuals_.subset_width = budget;
  residuals_.subsets.resize(batch_->word_count() * static_cast<size_t>(budget));
  for (size_t wi = 0; wi < batch_->word_count(); ++wi) {
    select_active_topics(residuals_.topic_row(wi), budget, select_scratch_);
    std::copy(select_scratch_.begin(), select_scratch_.end(),
              residuals_.subsets.begin() + wi * static_cast<size_t>(budget));
  }
}

}  // namespace streamlda
