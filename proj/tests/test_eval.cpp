#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "streamlda/eval.hpp"
#include "streamlda/online.hpp"
#include "support/oracle.hpp"
#include "support/synthetic.hpp"

using namespace streamlda;

TEST_CASE("fold_in: a single topic is certain") {
  MemoryStats stats(1, 3);
  PhiModel phi(stats, 0.01);
  Document doc;
  doc.add(0, 2);
  doc.add(2, 1);
  auto theta = fold_in(doc, phi, {0.01, 0.01, 1});
  REQUIRE(theta.size() == 1);
  CHECK(theta[0] == 1.0);
}

TEST_CASE("fold_in concentrates on the supporting topic as alpha vanishes") {
  // words 0 and 1 carry mass only in topic 1
  MemoryStats stats(2, 4);
  stats.column_mut(0)[1] = 5.0;
  stats.column_mut(1)[1] = 3.0;
  stats.column_mut(2)[0] = 4.0;
  stats.column_mut(3)[0] = 6.0;
  auto totals = stats.topic_totals();
  totals[0] = 10.0;
  totals[1] = 8.0;
  PhiModel phi(stats, 1e-9);
  Document doc;
  doc.add(0, 3);
  doc.add(1, 2);
  auto theta = fold_in(doc, phi, {1e-6, 1e-9, 2});
  CHECK(theta[1] > 0.999);
}

TEST_CASE("fold_in matches an independent fixed-point solve") {
  std::mt19937_64 rng(9);
  auto model = synthetic::Model::random(3, 15, 0.3, 0.3, rng);
  MemoryStats stats(3, 15);
  // install arbitrary statistics
  for (int64_t w = 0; w < 15; ++w) {
    auto col = stats.column_mut(w);
    auto totals = stats.topic_totals();
    for (int t = 0; t < 3; ++t) {
      const double v = 20.0 * model.phi[t][static_cast<size_t>(w)];
      col[t] = v;
      totals[t] += v;
    }
  }
  const Hyperparams hp{0.1, 0.05, 3};
  PhiModel phi(stats, hp.beta);
  Document doc;
  doc.add(1, 2);
  doc.add(4, 1);
  doc.add(7, 3);
  doc.add(12, 1);

  FoldInConfig fic;
  fic.max_iters = 200;  // run the production path to its fixed point too
  fic.residual_threshold = 1e-14;
  auto theta = fold_in(doc, phi, hp, fic);

  std::vector<std::vector<double>> cols(doc.words.size(), std::vector<double>(3));
  for (size_t i = 0; i < doc.words.size(); ++i) {
    phi.column(doc.words[i], cols[i]);
  }
  auto expect = oracle::fold_in_fixed_point(doc, cols, hp.alpha, 3, 500);
  for (int t = 0; t < 3; ++t) {
    CHECK(theta[t] == doctest::Approx(expect[t]).epsilon(1e-8));
  }
}

TEST_CASE("perplexity of the uniform model equals the vocabulary size") {
  const int64_t w = 37;
  MemoryStats stats(4, w);  // zero statistics: phi is uniform 1/W
  PhiModel phi(stats, 0.01);
  std::mt19937_64 rng(3);
  auto docs = synthetic::random_corpus(10, static_cast<int>(w), 6, 3, rng);
  auto record = predictive_perplexity(docs, phi, {0.01, 0.01, 4}, {}, 123);
  CHECK(record.docs_seen == 123);
  CHECK(record.perplexity == doctest::Approx(static_cast<double>(w)).epsilon(1e-9));
  CHECK(record.perplexity >= 1.0);
}

TEST_CASE("a single-word vocabulary has perplexity one") {
  MemoryStats stats(3, 1);
  PhiModel phi(stats, 0.5);
  Document doc;
  doc.add(0, 4);
  std::vector<Document> docs{doc};
  auto record = predictive_perplexity(docs, phi, {0.1, 0.5, 3});
  CHECK(record.perplexity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perplexity matches brute-force accumulation") {
  std::mt19937_64 rng(41);
  auto model = synthetic::Model::random(3, 12, 0.4, 0.3, rng);
  MemoryStats stats(3, 12);
  for (int64_t w = 0; w < 12; ++w) {
    auto col = stats.column_mut(w);
    auto totals = stats.topic_totals();
    for (int t = 0; t < 3; ++t) {
      const double v = 50.0 * model.phi[t][static_cast<size_t>(w)];
      col[t] = v;
      totals[t] += v;
    }
  }
  const Hyperparams hp{0.1, 0.1, 3};
  PhiModel phi(stats, hp.beta);
  auto docs = model.draw_corpus(6, 10, rng);

  auto record = predictive_perplexity(docs, phi, hp);

  // independent recomputation from the same folded thetas
  std::vector<std::vector<double>> theta;
  for (const auto& d : docs) theta.push_back(fold_in(d, phi, hp));
  std::vector<std::vector<double>> phi_wk(12, std::vector<double>(3));
  for (int w = 0; w < 12; ++w) {
    std::vector<double> col(3);
    phi.column(w, col);
    for (int t = 0; t < 3; ++t) phi_wk[w][t] = col[t];
  }
  const double expect = oracle::perplexity_brute_force(docs, theta, phi_wk);
  CHECK(record.perplexity == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("perplexity is independent of test document order") {
  std::mt19937_64 rng(60);
  auto model = synthetic::Model::random(2, 10, 0.4, 0.5, rng);
  MemoryStats stats(2, 10);
  for (int64_t w = 0; w < 10; ++w) {
    auto col = stats.column_mut(w);
    auto totals = stats.topic_totals();
    for (int t = 0; t < 2; ++t) {
      col[t] = 10.0 * model.phi[t][static_cast<size_t>(w)];
      totals[t] += col[t];
    }
  }
  PhiModel phi(stats, 0.1);
  auto docs = model.draw_corpus(8, 9, rng);
  auto record = predictive_perplexity(docs, phi, {0.1, 0.1, 2});
  std::reverse(docs.begin(), docs.end());
  auto reversed = predictive_perplexity(docs, phi, {0.1, 0.1, 2});
  CHECK(record.perplexity == doctest::Approx(reversed.perplexity).epsilon(1e-12));
  CHECK(record.tokens_evaluated == reversed.tokens_evaluated);
}

TEST_CASE("unseen words fall back to the prior-only column") {
  MemoryStats stats(2, 3);
  stats.column_mut(0)[0] = 6.0;
  stats.topic_totals()[0] = 6.0;
  PhiModel phi(stats, 0.5);

  std::vector<double> col(2);
  phi.column(9, col);  // beyond the vocabulary
  CHECK(col[0] == doctest::Approx(0.5 / (6.0 + 3 * 0.5)).epsilon(1e-12));
  CHECK(col[1] == doctest::Approx(0.5 / (0.0 + 3 * 0.5)).epsilon(1e-12));

  Document doc;
  doc.add(9, 2);
  auto record = predictive_perplexity(std::vector<Document>{doc}, phi, {0.1, 0.5, 2});
  CHECK(record.perplexity >= 1.0);
}

TEST_CASE("word-split evaluation holds out part of each document") {
  std::mt19937_64 rng(71);
  auto model = synthetic::Model::random(2, 15, 0.4, 0.5, rng);
  MemoryStats stats(2, 15);
  for (int64_t w = 0; w < 15; ++w) {
    auto col = stats.column_mut(w);
    auto totals = stats.topic_totals();
    for (int t = 0; t < 2; ++t) {
      col[t] = 30.0 * model.phi[t][static_cast<size_t>(w)];
      totals[t] += col[t];
    }
  }
  PhiModel phi(stats, 0.1);
  auto docs = model.draw_corpus(12, 20, rng);
  EvalConfig cfg;
  cfg.word_split = true;
  cfg.split_seed = 5;
  auto split = predictive_perplexity(docs, phi, {0.1, 0.1, 2}, cfg);
  int64_t total_tokens = 0;
  for (const auto& d : docs) total_tokens += d.tokens();
  CHECK(split.tokens_evaluated < total_tokens);
  CHECK(split.tokens_evaluated > 0);
  // deterministic under the same seed
  auto again = predictive_perplexity(docs, phi, {0.1, 0.1, 2}, cfg);
  CHECK(split.perplexity == again.perplexity);
}

TEST_CASE("top_words ranking") {
  MemoryStats stats(2, 6);
  SUBCASE("all-zero column falls back to index order") {
    auto ranked = top_words(stats, 0, 4);
    REQUIRE(ranked.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(ranked[static_cast<size_t>(i)].word == i);
  }
  SUBCASE("a one-hot column puts its word first") {
    stats.column_mut(4)[1] = 2.5;
    auto ranked = top_words(stats, 1, 3);
    CHECK(ranked[0].word == 4);
    CHECK(ranked[0].weight == 2.5);
    CHECK(ranked[1].word == 0);
  }
  SUBCASE("random columns agree with a full sort") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    MemoryStats wide(1, 40);
    std::vector<std::pair<double, int32_t>> reference;
    for (int64_t w = 0; w < 40; ++w) {
      const double v = (w % 3 == 0) ? 0.5 : unif(rng);  // include ties
      wide.column_mut(w)[0] = v;
      reference.push_back({v, static_cast<int32_t>(w)});
    }
    std::stable_sort(reference.begin(), reference.end(), [](auto a, auto b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    auto ranked = top_words(wide, 0, 10);
    for (int i = 0; i < 10; ++i) {
      CHECK(ranked[static_cast<size_t>(i)].word == reference[static_cast<size_t>(i)].second);
    }
  }
}

TEST_CASE("empty inputs are rejected") {
  MemoryStats stats(2, 3);
  PhiModel phi(stats, 0.1);
  Document empty;
  CHECK_THROWS_AS(fold_in(empty, phi, {0.1, 0.1, 2}), ArgumentError);
  CHECK_THROWS_AS(predictive_perplexity({}, phi, {0.1, 0.1, 2}), ArgumentError);
}
