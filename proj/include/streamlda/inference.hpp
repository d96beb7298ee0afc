#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "streamlda/corpus.hpp"
#include "streamlda/util.hpp"

namespace streamlda {

struct Hyperparams {
  double alpha = 0.01;  // symmetric document Dirichlet
  double beta = 0.01;   // symmetric topic Dirichlet
  int32_t K = 0;        // topic count

  void validate() const;
};

enum class Schedule { synchronous, residual, active, em };

Schedule schedule_from_string(const std::string& name);
const char* schedule_name(Schedule s);

struct ScheduleConfig {
  Schedule kind = Schedule::active;
  // Per-word topic budget. An absolute budget (default 30) wins over the
  // eta_k ratio; set topic_budget = 0 to size the budget as ceil(eta_k * K).
  int32_t topic_budget = 30;
  double eta_k = 1.0;
  double eta_w = 1.0;  // fraction of batch words visited per active sweep
  double residual_threshold = 0.1;
  int32_t max_iters = 50;

  int32_t effective_budget(int32_t topics) const;
  size_t active_word_count(size_t words) const;
  void validate() const;
};

// Accumulated topic-word statistics: per-word columns of length K plus the
// per-topic totals that feed the update's denominator. The column storage is
// pluggable (in-memory matrix or a disk-backed column store); topic totals
// and the vocabulary size always live in memory.
//
// A span returned by column()/column_mut() stays valid until the next
// column call, grow_vocab() or batch_end() — callers work one column at a
// time, which is exactly the vocabulary-major access pattern.
class GlobalStats {
 public:
  virtual ~GlobalStats() = default;

  virtual int64_t vocab_size() const = 0;
  virtual void grow_vocab(int64_t new_size) = 0;
  virtual std::span<const double> column(int64_t w) = 0;
  virtual std::span<double> column_mut(int64_t w) = 0;
  // Called once per mini-batch after the merge; persistence point for
  // disk-backed implementations.
  virtual void batch_end() {}
  // Optional hint that these columns are about to be visited repeatedly.
  virtual void prepare(std::span<const int32_t> word_ids) { (void)word_ids; }

  int32_t topics() const { return topics_; }
  std::span<double> topic_totals() { return n_k_; }
  std::span<const double> topic_totals() const { return n_k_; }
  double total_tokens() const;

 protected:
  explicit GlobalStats(int32_t topics) : topics_(topics), n_k_(static_cast<size_t>(topics), 0.0) {}

  int32_t topics_;
  std::vector<double> n_k_;
};

class MemoryStats final : public GlobalStats {
 public:
  MemoryStats(int32_t topics, int64_t vocab = 0);

  int64_t vocab_size() const override { return vocab_; }
  void grow_vocab(int64_t new_size) override;
  std::span<const double> column(int64_t w) override;
  std::span<double> column_mut(int64_t w) override;

  std::span<const double> raw() const { return data_; }

 private:
  int64_t vocab_;
  std::vector<double> data_;  // column-major, column w at w*K
};

// Scheduling state: per-word residual mass, per-word-per-topic residuals,
// the word visit order, and (for the active schedule) per-word topic subsets.
struct ResidualIndex {
  int32_t topics = 0;
  int32_t subset_width = 0;                // min(budget, K) once built
  std::vector<double> word_residual;       // one per batch word
  std::vector<double> topic_residual;      // batch_words x K
  std::vector<int32_t> word_order;         // descending residual, ties by index
  std::vector<int32_t> subsets;            // batch_words x subset_width

  std::span<const double> topic_row(size_t wi) const {
    return {topic_residual.data() + wi * static_cast<size_t>(topics),
            static_cast<size_t>(topics)};
  }
  std::span<const int32_t> subset_row(size_t wi) const {
    return {subsets.data() + wi * static_cast<size_t>(subset_width),
            static_cast<size_t>(subset_width)};
  }
  double total() const;
};

struct SweepStats {
  int32_t iteration = 0;
  double residual_sum = 0.0;
  double avg_residual = 0.0;   // residual_sum / batch nnz
  int64_t messages_updated = 0;
  double wall_ms = 0.0;
  bool converged = false;
};

// ---- message-level operations -------------------------------------------

// Exclusion-corrected message update over a topic subset. `mu` is the full
// current message (length K); new values for the subset topics are written
// to `out` (length subset.size()). Off-subset components keep their mass;
// the subset is renormalized to its own previous mass so the full vector
// still sums to 1 (exactly 1/sum scaling when the subset covers all topics).
void update_message(double count, std::span<const double> mu,
                    std::span<const int32_t> subset,
                    std::span<const double> theta_d,
                    std::span<const double> phi_col,
                    std::span<const double> topic_totals, double w_beta,
                    const Hyperparams& hp, std::span<double> out);

// Applies the subset update in place: message, document stats, word column,
// topic totals and the batch contribution row all move by count*(new-old).
// Accumulates count*|new-old| into residual_row and returns its sum.
double apply_message(double count, std::span<double> mu,
                     std::span<const int32_t> subset,
                     std::span<const double> new_vals, std::span<double> theta_d,
                     std::span<double> phi_col, std::span<double> contrib_row,
                     std::span<double> topic_totals,
                     std::span<double> residual_row);

// Indices of the n largest residuals (ties broken by lower index), returned
// in ascending index order. Only a partial order is computed.
void select_active_topics(std::span<const double> residuals, int32_t n,
                          std::vector<int32_t>& out);
std::vector<int32_t> select_active_topics(std::span<const double> residuals, int32_t n);

// Average-residual stopping rule: (sum of word residuals) / nnz < threshold.
bool check_convergence(double residual_sum, int64_t nnz, double threshold);

// ---- parameter estimation (Dirichlet-smoothed normalization) -------------

void estimate_theta(std::span<const double> theta_hat_d, double alpha,
                    std::span<double> out);
void estimate_phi_column(std::span<const double> phi_hat_col,
                         std::span<const double> topic_totals, int64_t vocab,
                         double beta, std::span<double> out);

// ---- EM path --------------------------------------------------------------

// E-step posterior: mu(k) proportional to theta_d(k)*phi_w(k), no exclusion.
void em_estep(std::span<const double> theta_d, std::span<const double> phi_w,
              std::span<double> out);

// M-step re-estimates. With alpha,beta >= 1 these use the (stat + prior - 1)
// form; smaller hyperparameters fall back to the smoothed normalization
// above, whose numerators cannot go negative.
void em_mstep_theta(std::span<const double> theta_hat_d, double alpha,
                    std::span<double> out);
void em_mstep_phi_column(std::span<const double> phi_hat_col,
                         std::span<const double> topic_totals, int64_t vocab,
                         double beta, std::span<double> out);

// Variational lower bound on the log-likelihood for the current messages and
// parameters. `phi` holds the columns of the batch words; words outside the
// batch share `phi_unseen`. Zero message components contribute zero.
double em_lower_bound(const SparseBatch& batch, std::span<const double> messages,
                      std::span<const double> theta, std::span<const double> phi,
                      std::span<const double> phi_unseen, int64_t vocab,
                      const Hyperparams& hp);

// ---- the per-batch engine --------------------------------------------------

// Message-passing engine for one mini-batch against accumulated global
// statistics. Construction randomizes and normalizes all messages, builds
// the document stats and the batch contribution, and merges the contribution
// into `stats` (warm start: columns already holding mass from earlier
// batches simply keep it under the live batch contribution).
class BatchEngine {
 public:
  BatchEngine(const SparseBatch& batch, GlobalStats& stats,
              const Hyperparams& hp, const ScheduleConfig& config,
              uint64_t seed);
  ~BatchEngine();

  BatchEngine(const BatchEngine&) = delete;
  BatchEngine& operator=(const BatchEngine&) = delete;

  SweepStats run_sweep();
  const SweepStats& last_sweep() const { return last_; }
  int32_t iteration() const { return iteration_; }
  bool converged() const { return last_.converged; }

  std::span<const double> messages() const { return messages_; }
  std::span<const double> theta_hat() const { return theta_hat_; }
  std::span<const double> theta_hat_doc(int32_t d) const;
  std::span<const double> contribution() const { return contrib_; }
  std::span<const double> contribution_row(size_t wi) const;
  const ResidualIndex& residuals() const { return residuals_; }
  const SparseBatch& batch() const { return *batch_; }
  GlobalStats& stats() { return stats_; }

  // Moves the batch contribution out (word ids stay with the batch).
  std::vector<double> take_contribution();

  // EM-only: parameters of the current M-step and the bound they achieve.
  std::span<const double> em_theta() const { return em_theta_; }
  std::span<const double> em_phi() const { return em_phi_; }
  double lower_bound() const;

 private:
  std::span<double> message(int64_t e) {
    return {messages_.data() + static_cast<size_t>(e) * k_, k_};
  }
  std::span<double> theta_row(int32_t d) {
    return {theta_hat_.data() + static_cast<size_t>(d) * k_, k_};
  }
  std::span<double> contrib_row(size_t wi) {
    return {contrib_.data() + wi * k_, k_};
  }
  std::span<double> residual_row(size_t wi) {
    return {residuals_.topic_residual.data() + wi * k_, k_};
  }

  void init_messages(uint64_t seed);
  int64_t sweep_synchronous();
  int64_t sweep_asynchronous(bool restricted);
  int64_t sweep_em();
  double visit_word(size_t wi, std::span<const int32_t> subset);
  void refresh_schedule();
  void em_mstep();

  const SparseBatch* batch_;
  GlobalStats& stats_;
  Hyperparams hp_;
  ScheduleConfig config_;
  size_t k_;
  double w_beta_ = 0.0;  // vocab * beta, fixed for the batch

  std::vector<double> messages_;   // nnz x K
  std::vector<double> theta_hat_;  // D_s x K
  std::vector<double> contrib_;    // batch_words x K
  ResidualIndex residuals_;
  std::vector<int32_t> all_topics_;
  std::vector<double> scratch_;        // one message row
  std::vector<double> sync_block_;     // nnz x K, synchronous/em schedules only
  std::vector<int32_t> select_scratch_;

  // EM parameter block.
  std::vector<double> em_theta_;   // D_s x K
  std::vector<double> em_phi_;     // batch_words x K
  std::vector<double> em_phi_unseen_;
  std::vector<double> em_prior_;        // batch_words x K, pre-batch column mass
  std::vector<double> em_rest_totals_;  // totals of columns outside the batch

  int32_t iteration_ = 0;
  SweepStats last_;
  int64_t gauge_bytes_ = 0;
};

}  // namespace streamlda
