// Test-only reference implementations. Everything here works on dense
// document-word matrices with explicit sums, deliberately sharing no code
// with the sparse incremental engine it checks against.
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "streamlda/corpus.hpp"
#include "streamlda/inference.hpp"

namespace oracle {

// Dense collapsed-LDA state over a W x D count matrix. Statistics are always
// recomputed from scratch; exclusions are evaluated as literal sums over all
// other cells.
struct DenseLda {
  int K = 0;
  int W = 0;  // full vocabulary size (denominator smoothing)
  int D = 0;
  std::vector<std::vector<double>> x;    // W x D counts
  std::vector<std::vector<double>> mu;   // (w*D+d) -> K posterior
  double alpha = 0.0;
  double beta = 0.0;

  static DenseLda from_batch(const streamlda::SparseBatch& batch, int vocab,
                             const streamlda::Hyperparams& hp) {
    DenseLda lda;
    lda.K = hp.K;
    lda.W = vocab;
    lda.D = batch.doc_count;
    lda.alpha = hp.alpha;
    lda.beta = hp.beta;
    lda.x.assign(vocab, std::vector<double>(batch.doc_count, 0.0));
    for (size_t wi = 0; wi < batch.word_count(); ++wi) {
      for (int64_t e = batch.word_offsets[wi]; e < batch.word_offsets[wi + 1]; ++e) {
        lda.x[batch.word_ids[wi]][batch.entry_docs[e]] = batch.entry_counts[e];
      }
    }
    lda.mu.assign(static_cast<size_t>(vocab) * batch.doc_count,
                  std::vector<double>(hp.K, 0.0));
    return lda;
  }

  std::vector<double>& mu_at(int w, int d) { return mu[static_cast<size_t>(w) * D + d]; }
  const std::vector<double>& mu_at(int w, int d) const {
    return mu[static_cast<size_t>(w) * D + d];
  }

  // Copies messages from an engine whose batch this oracle was built from, so
  // both start from the same random initialization.
  void copy_messages(const streamlda::SparseBatch& batch,
                     std::span<const double> messages) {
    for (size_t wi = 0; wi < batch.word_count(); ++wi) {
      for (int64_t e = batch.word_offsets[wi]; e < batch.word_offsets[wi + 1]; ++e) {
        auto& m = mu_at(batch.word_ids[wi], batch.entry_docs[e]);
        for (int k = 0; k < K; ++k) m[k] = messages[static_cast<size_t>(e) * K + k];
      }
    }
  }

  double theta_hat(int d, int k) const {
    double s = 0.0;
    for (int w = 0; w < W; ++w) s += x[w][d] * mu_at(w, d)[k];
    return s;
  }
  double phi_hat(int w, int k) const {
    double s = 0.0;
    for (int d = 0; d < D; ++d) s += x[w][d] * mu_at(w, d)[k];
    return s;
  }
  double gamma_hat(int k) const {
    double s = 0.0;
    for (int w = 0; w < W; ++w) s += phi_hat(w, k);
    return s;
  }

  // Literal exclusion-corrected update: every sum runs over all other cells.
  std::vector<double> message_update(int w, int d) const {
    std::vector<double> out(K);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      double theta_ex = 0.0;
      for (int w2 = 0; w2 < W; ++w2) {
        if (w2 != w) theta_ex += x[w2][d] * mu_at(w2, d)[k];
      }
      double phi_ex = 0.0;
      for (int d2 = 0; d2 < D; ++d2) {
        if (d2 != d) phi_ex += x[w][d2] * mu_at(w, d2)[k];
      }
      double total_ex = 0.0;
      for (int w2 = 0; w2 < W; ++w2) {
        for (int d2 = 0; d2 < D; ++d2) {
          if (w2 == w && d2 == d) continue;
          total_ex += x[w2][d2] * mu_at(w2, d2)[k];
        }
      }
      out[k] = (theta_ex + alpha) * (phi_ex + beta) / (total_ex + W * beta);
      sum += out[k];
    }
    for (int k = 0; k < K; ++k) out[k] /= sum;
    return out;
  }

  // One synchronous sweep: all updates computed from the current messages,
  // then installed together.
  void sync_sweep() {
    std::vector<std::vector<double>> fresh(mu.size());
    for (int w = 0; w < W; ++w) {
      for (int d = 0; d < D; ++d) {
        if (x[w][d] > 0) fresh[static_cast<size_t>(w) * D + d] = message_update(w, d);
      }
    }
    for (int w = 0; w < W; ++w) {
      for (int d = 0; d < D; ++d) {
        if (x[w][d] > 0) mu[static_cast<size_t>(w) * D + d] = fresh[static_cast<size_t>(w) * D + d];
      }
    }
  }

  std::vector<double> theta(int d) const {
    std::vector<double> out(K);
    double total = 0.0;
    for (int k = 0; k < K; ++k) total += theta_hat(d, k);
    for (int k = 0; k < K; ++k) out[k] = (theta_hat(d, k) + alpha) / (total + K * alpha);
    return out;
  }
  std::vector<double> phi(int w) const {
    std::vector<double> out(K);
    for (int k = 0; k < K; ++k) {
      out[k] = (phi_hat(w, k) + beta) / (gamma_hat(k) + W * beta);
    }
    return out;
  }
};

// Dense EM reference: E-step posterior proportional to theta*phi, M-steps in
// the (stat + prior - 1) form, and the literal lower bound.
struct DenseEm {
  int K = 0, W = 0, D = 0;
  double alpha = 1.0, beta = 1.0;
  std::vector<std::vector<double>> x;      // W x D
  std::vector<std::vector<double>> mu;     // (w*D+d) -> K
  std::vector<std::vector<double>> theta;  // D x K
  std::vector<std::vector<double>> phi;    // W x K

  static DenseEm from_dense(const DenseLda& lda) {
    DenseEm em;
    em.K = lda.K;
    em.W = lda.W;
    em.D = lda.D;
    em.alpha = lda.alpha;
    em.beta = lda.beta;
    em.x = lda.x;
    em.mu = lda.mu;
    em.theta.assign(lda.D, std::vector<double>(lda.K, 0.0));
    em.phi.assign(lda.W, std::vector<double>(lda.K, 0.0));
    em.mstep();
    return em;
  }

  double theta_hat(int d, int k) const {
    double s = 0.0;
    for (int w = 0; w < W; ++w) s += x[w][d] * mu[static_cast<size_t>(w) * D + d][k];
    return s;
  }
  double phi_hat(int w, int k) const {
    double s = 0.0;
    for (int d = 0; d < D; ++d) s += x[w][d] * mu[static_cast<size_t>(w) * D + d][k];
    return s;
  }

  void estep() {
    for (int w = 0; w < W; ++w) {
      for (int d = 0; d < D; ++d) {
        if (x[w][d] <= 0) continue;
        auto& m = mu[static_cast<size_t>(w) * D + d];
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
          m[k] = theta[d][k] * phi[w][k];
          sum += m[k];
        }
        for (int k = 0; k < K; ++k) m[k] /= sum;
      }
    }
  }

  void mstep() {
    const double atp = alpha - 1.0;  // keep the prior a single addend so tiny
    const double btp = beta - 1.0;   // statistics survive the addition
    for (int d = 0; d < D; ++d) {
      double total = 0.0;
      for (int k = 0; k < K; ++k) total += theta_hat(d, k);
      for (int k = 0; k < K; ++k) {
        theta[d][k] = (theta_hat(d, k) + atp) / (total + K * atp);
      }
    }
    for (int k = 0; k < K; ++k) {
      double total = 0.0;
      for (int w = 0; w < W; ++w) total += phi_hat(w, k);
      for (int w = 0; w < W; ++w) {
        phi[w][k] = (phi_hat(w, k) + btp) / (total + W * btp);
      }
    }
  }

  void iterate() {
    estep();
    mstep();
  }

  double lower_bound() const {
    double bound = 0.0;
    for (int w = 0; w < W; ++w) {
      for (int d = 0; d < D; ++d) {
        if (x[w][d] <= 0) continue;
        const auto& m = mu[static_cast<size_t>(w) * D + d];
        for (int k = 0; k < K; ++k) {
          if (m[k] <= 0.0) continue;
          bound += x[w][d] * m[k] *
                   (std::log(theta[d][k]) + std::log(phi[w][k]) - std::log(m[k]));
        }
      }
    }
    for (int d = 0; d < D; ++d) {
      for (int k = 0; k < K; ++k) bound += (alpha - 1.0) * std::log(theta[d][k]);
    }
    for (int k = 0; k < K; ++k) {
      for (int w = 0; w < W; ++w) bound += (beta - 1.0) * std::log(phi[w][k]);
    }
    return bound;
  }

  // Plain data log-likelihood of the count matrix under (theta, phi).
  double log_likelihood() const {
    double ll = 0.0;
    for (int w = 0; w < W; ++w) {
      for (int d = 0; d < D; ++d) {
        if (x[w][d] <= 0) continue;
        double p = 0.0;
        for (int k = 0; k < K; ++k) p += theta[d][k] * phi[w][k];
        ll += x[w][d] * std::log(p);
      }
    }
    return ll;
  }
};

// Independent fold-in solver: damp-free fixed-point iteration on the dense
// per-word posterior, run far past the production iteration budget.
inline std::vector<double> fold_in_fixed_point(const streamlda::Document& doc,
                                               const std::vector<std::vector<double>>& phi_cols,
                                               double alpha, int K, int iters) {
  const size_t n = doc.words.size();
  std::vector<std::vector<double>> mu(n, std::vector<double>(K, 1.0 / K));
  std::vector<std::vector<double>> fresh(n, std::vector<double>(K));
  for (int it = 0; it < iters; ++it) {
    for (size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        double theta_ex = 0.0;
        for (size_t j = 0; j < n; ++j) {
          if (j != i) theta_ex += doc.counts[j] * mu[j][k];
        }
        fresh[i][k] = (theta_ex + alpha) * phi_cols[i][k];
        sum += fresh[i][k];
      }
      for (int k = 0; k < K; ++k) fresh[i][k] /= sum;
    }
    mu = fresh;
  }
  std::vector<double> theta_hat(K, 0.0);
  double tokens = 0.0;
  for (size_t i = 0; i < n; ++i) {
    tokens += doc.counts[i];
    for (int k = 0; k < K; ++k) theta_hat[k] += doc.counts[i] * mu[i][k];
  }
  std::vector<double> theta(K);
  for (int k = 0; k < K; ++k) theta[k] = (theta_hat[k] + alpha) / (tokens + K * alpha);
  return theta;
}

// Brute-force predictive log-likelihood accumulation.
inline double perplexity_brute_force(const std::vector<streamlda::Document>& docs,
                                     const std::vector<std::vector<double>>& theta,
                                     const std::vector<std::vector<double>>& phi_wk) {
  double ll = 0.0;
  double tokens = 0.0;
  for (size_t d = 0; d < docs.size(); ++d) {
    for (size_t i = 0; i < docs[d].words.size(); ++i) {
      const int w = docs[d].words[i];
      double p = 0.0;
      for (size_t k = 0; k < theta[d].size(); ++k) p += theta[d][k] * phi_wk[w][k];
      ll += docs[d].counts[i] * std::log(p);
      tokens += docs[d].counts[i];
    }
  }
  return std::exp(-ll / tokens);
}

}  // namespace oracle
