// streamlda: streaming LDA training via belief propagation, with batch
// (bp/rbp/abp/em) and online (obp) modes, held-out perplexity evaluation,
// topic listings, topic-shift reports and model store inspection.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamlda/corpus.hpp"
#include "streamlda/eval.hpp"
#include "streamlda/inference.hpp"
#include "streamlda/modelstore.hpp"
#include "streamlda/online.hpp"
#include "streamlda/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace streamlda;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string algorithm = "obp";
  std::string input;
  std::string vocab;
  std::string test_input;
  bool text = false;
  int32_t topics = 100;
  double alpha = 0.01;
  double beta = 0.01;
  int32_t batch_size = 1024;
  int32_t topic_budget = 30;
  double eta_k = 1.0;
  double eta_w = 1.0;
  double threshold = 0.1;
  int32_t max_iters = 50;
  uint64_t seed = 0;
  int64_t test_count = 0;
  int32_t eval_every = 0;
  int32_t eval_iters = 30;
  bool word_split_eval = false;
  std::string model_store;
  int32_t buffer_mb = 64;
  int32_t shift_every = 0;
  int32_t shift_top = 10;
  bool no_timing = false;
  std::string save_model = "model.obps";
};

json config_to_json(const RunConfig& c) {
  return json{{"version", kVersion},
              {"algorithm", c.algorithm},
              {"input", c.input},
              {"vocab", c.vocab},
              {"test_input", c.test_input},
              {"text", c.text},
              {"topics", c.topics},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"batch_size", c.batch_size},
              {"topic_budget", c.topic_budget},
              {"eta_k", c.eta_k},
              {"eta_w", c.eta_w},
              {"threshold", c.threshold},
              {"max_iters", c.max_iters},
              {"seed", c.seed},
              {"test_count", c.test_count},
              {"eval_every", c.eval_every},
              {"eval_iters", c.eval_iters},
              {"word_split_eval", c.word_split_eval},
              {"model_store", c.model_store},
              {"buffer_mb", c.buffer_mb},
              {"shift_every", c.shift_every},
              {"shift_top", c.shift_top},
              {"no_timing", c.no_timing},
              {"save_model", c.save_model}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.algorithm = j.at("algorithm").get<std::string>();
  c.input = j.at("input").get<std::string>();
  c.vocab = j.value("vocab", std::string());
  c.test_input = j.value("test_input", std::string());
  c.text = j.value("text", false);
  c.topics = j.at("topics").get<int32_t>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.batch_size = j.at("batch_size").get<int32_t>();
  c.topic_budget = j.value("topic_budget", 30);
  c.eta_k = j.value("eta_k", 1.0);
  c.eta_w = j.value("eta_w", 1.0);
  c.threshold = j.value("threshold", 0.1);
  c.max_iters = j.value("max_iters", 50);
  c.seed = j.at("seed").get<uint64_t>();
  c.test_count = j.value("test_count", int64_t{0});
  c.eval_every = j.value("eval_every", 0);
  c.eval_iters = j.value("eval_iters", 30);
  c.word_split_eval = j.value("word_split_eval", false);
  c.model_store = j.value("model_store", std::string());
  c.buffer_mb = j.value("buffer_mb", 64);
  c.shift_every = j.value("shift_every", 0);
  c.shift_top = j.value("shift_top", 10);
  c.no_timing = j.value("no_timing", false);
  c.save_model = j.value("save_model", std::string("model.obps"));
  return c;
}

ScheduleConfig schedule_of(const RunConfig& c) {
  ScheduleConfig s;
  s.kind = (c.algorithm == "obp") ? Schedule::active : schedule_from_string(c.algorithm);
  s.topic_budget = c.topic_budget;
  s.eta_k = c.eta_k;
  s.eta_w = c.eta_w;
  s.residual_threshold = c.threshold;
  s.max_iters = c.max_iters;
  return s;
}

Hyperparams hyper_of(const RunConfig& c) {
  return Hyperparams{c.alpha, c.beta, c.topics};
}

// All artifact numbers go through these so replays are byte-identical.
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvFile {
  explicit CsvFile(const fs::path& path, const char* header) {
    out = std::fopen(path.string().c_str(), "w");
    if (out == nullptr) throw IoError("cannot write " + path.string());
    std::fprintf(out, "%s\n", header);
  }
  ~CsvFile() {
    if (out != nullptr) std::fclose(out);
  }
  std::FILE* out = nullptr;
};

std::vector<Document> load_corpus(const std::string& path, bool text,
                                  VocabularyMap& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  if (text) return read_text(in, vocab);
  CorpusHeader header;
  auto docs = read_docword(in, &header);
  log_info("loaded %zu documents, W=%lld, NNZ=%lld", docs.size(),
           static_cast<long long>(header.vocab_size),
           static_cast<long long>(header.nnz));
  return docs;
}

std::string token_name(const VocabularyMap& vocab, int32_t w) {
  if (w < vocab.size()) return vocab.token(w);
  return "w" + std::to_string(w);
}

void write_top_words(const fs::path& path, GlobalStats& stats,
                     const VocabularyMap& vocab, int32_t top_n) {
  CsvFile tsv(path, "topic\trank\ttoken\tweight");
  for (int32_t k = 0; k < stats.topics(); ++k) {
    auto ranked = top_words(stats, k, top_n);
    for (size_t r = 0; r < ranked.size(); ++r) {
      std::fprintf(tsv.out, "%d\t%zu\t%s\t%s\n", k, r + 1,
                   token_name(vocab, ranked[r].word).c_str(),
                   fmt_double(ranked[r].weight).c_str());
    }
  }
}

void append_shift_report(std::FILE* out, const ShiftReport& report,
                         const VocabularyMap& vocab) {
  std::fprintf(out, "batch %lld top %d\n",
               static_cast<long long>(report.batch_index), report.top_n);
  for (const auto& t : report.topics) {
    std::fprintf(out, "topic %d\n", t.topic);
    std::fprintf(out, "  before:");
    for (int32_t w : t.before) std::fprintf(out, " %s", token_name(vocab, w).c_str());
    std::fprintf(out, "\n  after:");
    for (int32_t w : t.after) std::fprintf(out, " %s", token_name(vocab, w).c_str());
    std::fprintf(out, "\n");
    for (const auto& c : t.entered) {
      std::fprintf(out, "  entered: %s (rank %d)\n",
                   token_name(vocab, c.word).c_str(), c.rank_after + 1);
    }
    for (const auto& c : t.exited) {
      std::fprintf(out, "  exited: %s (was rank %d)\n",
                   token_name(vocab, c.word).c_str(), c.rank_before + 1);
    }
    for (const auto& c : t.moved) {
      std::fprintf(out, "  moved: %s %d -> %d\n", token_name(vocab, c.word).c_str(),
                   c.rank_before + 1, c.rank_after + 1);
    }
  }
}

std::unique_ptr<GlobalStats> make_stats(const RunConfig& c) {
  if (!c.model_store.empty()) {
    return std::make_unique<StoreStats>(
        c.model_store, c.topics,
        static_cast<size_t>(c.buffer_mb) * 1024 * 1024);
  }
  return std::make_unique<MemoryStats>(c.topics, 0);
}

int run_train(const RunConfig& c, const std::string& output_dir) {
  if (c.algorithm != "obp" && c.algorithm != "bp" && c.algorithm != "rbp" &&
      c.algorithm != "abp" && c.algorithm != "em") {
    throw ArgumentError("unknown algorithm \"" + c.algorithm + "\"");
  }
  if (c.text && c.test_count > 0) {
    throw ArgumentError("--test-count needs a docword corpus; use --test-input "
                        "with --text");
  }
  if (c.test_count > 0 && !c.test_input.empty()) {
    throw ArgumentError("--test-count and --test-input are mutually exclusive");
  }
  hyper_of(c).validate();
  schedule_of(c).validate();

  fs::create_directories(output_dir);
  const fs::path dir(output_dir);
  {
    std::ofstream manifest(dir / "manifest.json");
    manifest << config_to_json(c).dump(2) << "\n";
  }

  VocabularyMap vocab;
  if (!c.vocab.empty()) {
    std::ifstream vin(c.vocab);
    if (!vin) throw IoError("cannot read " + c.vocab);
    vocab.load(vin);
  }

  auto docs = load_corpus(c.input, c.text, vocab);
  std::vector<Document> train_docs;
  std::vector<Document> test_docs;
  if (c.test_count > 0) {
    std::mt19937_64 split_rng(derive_seed(c.seed, 0x5eed));
    auto mask = split_train_test(static_cast<int64_t>(docs.size()), c.test_count,
                                 split_rng);
    for (size_t d = 0; d < docs.size(); ++d) {
      (mask[d] ? test_docs : train_docs).push_back(std::move(docs[d]));
    }
  } else {
    train_docs = std::move(docs);
  }
  if (!c.test_input.empty()) {
    test_docs = load_corpus(c.test_input, c.text, vocab);
  }
  log_info("training on %zu documents, %zu held out", train_docs.size(),
           test_docs.size());
  if (train_docs.empty()) throw ArgumentError("no training documents");

  auto stats = make_stats(c);
  const Hyperparams hp = hyper_of(c);
  const ScheduleConfig schedule = schedule_of(c);

  CsvFile metrics(dir / "metrics.csv",
                  "s,docs_seen,iterations,wall_ms,avg_residual,heldout_perplexity");
  CsvFile ppl(dir / "perplexity.csv", "docs_seen,perplexity,tokens");
  std::FILE* shifts = nullptr;
  if (c.shift_every > 0) {
    shifts = std::fopen((dir / "shifts.txt").string().c_str(), "w");
    if (shifts == nullptr) throw IoError("cannot write shifts.txt");
  }

  EvalConfig eval_cfg;
  eval_cfg.fold_in.max_iters = c.eval_iters;
  eval_cfg.word_split = c.word_split_eval;
  eval_cfg.split_seed = c.seed;

  // Returns NaN when there is nothing to evaluate against.
  auto eval_now = [&](int64_t docs_seen) {
    if (test_docs.empty()) return std::nan("");
    PhiModel phi(*stats, c.beta);
    auto record = predictive_perplexity(test_docs, phi, hp, eval_cfg, docs_seen);
    std::fprintf(ppl.out, "%lld,%s,%lld\n",
                 static_cast<long long>(record.docs_seen),
                 fmt_double(record.perplexity).c_str(),
                 static_cast<long long>(record.tokens_evaluated));
    log_info("docs %lld: held-out perplexity %.2f",
             static_cast<long long>(docs_seen), record.perplexity);
    return record.perplexity;
  };

  auto metrics_row = [&](int64_t s, int64_t docs_seen, int32_t iterations,
                         double wall_ms, double avg_residual, double heldout) {
    std::fprintf(metrics.out, "%lld,%lld,%d,%s,%s,%s\n",
                 static_cast<long long>(s), static_cast<long long>(docs_seen),
                 iterations, fmt_double(c.no_timing ? 0.0 : wall_ms).c_str(),
                 fmt_double(avg_residual).c_str(),
                 std::isnan(heldout) ? "" : fmt_double(heldout).c_str());
  };

  if (c.algorithm == "obp") {
    OnlineConfig ocfg;
    ocfg.hyper = hp;
    ocfg.schedule = schedule;
    ocfg.seed = c.seed;
    OnlineTrainer trainer(*stats, ocfg);
    BatchStream stream(train_docs, c.batch_size);
    bool evaluated_last = false;
    while (auto batch = stream.next()) {
      auto result = trainer.process_batch(*batch);
      double heldout = std::nan("");
      evaluated_last = c.eval_every > 0 &&
                       result.metrics.batch_index % c.eval_every == 0;
      if (evaluated_last) heldout = eval_now(result.metrics.docs_seen);
      metrics_row(result.metrics.batch_index, result.metrics.docs_seen,
                  result.metrics.iterations, result.metrics.wall_ms,
                  result.metrics.stop_residual, heldout);
      if (!result.skipped && c.shift_every > 0 &&
          result.metrics.batch_index % c.shift_every == 0) {
        auto report = topic_shift_report(*stats, result.gradient, c.shift_top);
        report.batch_index = result.metrics.batch_index;
        append_shift_report(shifts, report, vocab);
      }
    }
    if (!evaluated_last) eval_now(trainer.state().docs_seen);
  } else {
    BatchStream stream(train_docs, std::max<int32_t>(
                                       1, static_cast<int32_t>(train_docs.size())));
    auto batch = stream.next();
    if (!batch) throw ArgumentError("no training documents");
    double total_wall = 0.0;
    int32_t last_eval_iteration = -1;
    double last_eval_value = std::nan("");
    auto sweeps = run_batch_training(
        *batch, *stats, hp, schedule, c.seed,
        [&](const BatchEngine& engine, const SweepStats& s) {
          total_wall += s.wall_ms;
          if (c.eval_every > 0 && s.iteration % c.eval_every == 0) {
            last_eval_value = eval_now(batch->doc_count);
            last_eval_iteration = s.iteration;
          }
          if (schedule.kind == Schedule::em && log_level() >= LogLevel::debug) {
            log_debug("iteration %d lower bound %.6f", s.iteration,
                      engine.lower_bound());
          }
        });
    const auto& final_sweep = sweeps.back();
    const double heldout = (last_eval_iteration == final_sweep.iteration)
                               ? last_eval_value
                               : eval_now(batch->doc_count);
    metrics_row(1, batch->doc_count, final_sweep.iteration, total_wall,
                final_sweep.avg_residual, heldout);
  }

  if (shifts != nullptr) std::fclose(shifts);
  write_top_words(dir / "topwords.tsv", *stats, vocab,
                  std::max<int32_t>(c.shift_top, 10));
  if (c.model_store.empty() && !c.save_model.empty() && c.save_model != "none") {
    const fs::path model_path = dir / c.save_model;
    fs::remove(model_path);
    export_stats(*stats, model_path.string());
    log_info("model written to %s", model_path.string().c_str());
  }
  stats->batch_end();
  return 0;
}

int run_eval(const std::string& model, const std::string& input, bool text,
             const std::string& vocab_path, double alpha, double beta,
             int32_t eval_iters, bool word_split, uint64_t seed) {
  auto info = probe_store(model);
  StoreStats stats(model, info.topics, 64u << 20);
  VocabularyMap vocab;
  if (!vocab_path.empty()) {
    std::ifstream vin(vocab_path);
    if (!vin) throw IoError("cannot read " + vocab_path);
    vocab.load(vin);
  }
  auto docs = load_corpus(input, text, vocab);
  Hyperparams hp{alpha, beta, info.topics};
  EvalConfig cfg;
  cfg.fold_in.max_iters = eval_iters;
  cfg.word_split = word_split;
  cfg.split_seed = seed;
  PhiModel phi(stats, beta);
  auto record = predictive_perplexity(docs, phi, hp, cfg,
                                      static_cast<int64_t>(docs.size()));
  std::printf("docs_seen,perplexity,tokens\n%lld,%s,%lld\n",
              static_cast<long long>(record.docs_seen),
              fmt_double(record.perplexity).c_str(),
              static_cast<long long>(record.tokens_evaluated));
  return 0;
}

int run_topics(const std::string& model, const std::string& vocab_path,
               int32_t top_n) {
  auto info = probe_store(model);
  StoreStats stats(model, info.topics, 64u << 20);
  VocabularyMap vocab;
  if (!vocab_path.empty()) {
    std::ifstream vin(vocab_path);
    if (!vin) throw IoError("cannot read " + vocab_path);
    vocab.load(vin);
  }
  std::printf("topic\trank\ttoken\tweight\n");
  for (int32_t k = 0; k < stats.topics(); ++k) {
    auto ranked = top_words(stats, k, top_n);
    for (size_t r = 0; r < ranked.size(); ++r) {
      std::printf("%d\t%zu\t%s\t%s\n", k, r + 1,
                  token_name(vocab, ranked[r].word).c_str(),
                  fmt_double(ranked[r].weight).c_str());
    }
  }
  return 0;
}

int run_shift_report(const std::string& before_path, const std::string& after_path,
                     const std::string& vocab_path, int32_t top_n) {
  auto before_info = probe_store(before_path);
  auto after_info = probe_store(after_path);
  if (before_info.topics != after_info.topics) {
    throw ArgumentError("stores have different topic counts");
  }
  if (before_info.vocab > after_info.vocab) {
    throw ArgumentError("the \"after\" store has a smaller vocabulary");
  }
  StoreStats before(before_path, before_info.topics, 64u << 20);
  StoreStats after(after_path, after_info.topics, 64u << 20);

  BatchGradient delta;
  delta.topics = after_info.topics;
  const auto k = static_cast<size_t>(after_info.topics);
  std::vector<double> before_col(k, 0.0);
  for (int64_t w = 0; w < after.vocab_size(); ++w) {
    auto acol = after.column(w);
    if (w < before.vocab_size()) {
      auto bcol = before.column(w);
      std::copy(bcol.begin(), bcol.end(), before_col.begin());
    } else {
      std::fill(before_col.begin(), before_col.end(), 0.0);
    }
    bool any = false;
    for (size_t t = 0; t < k; ++t) {
      if (acol[t] != before_col[t]) {
        any = true;
        break;
      }
    }
    if (any) {
      delta.word_ids.push_back(static_cast<int32_t>(w));
      for (size_t t = 0; t < k; ++t) delta.values.push_back(acol[t] - before_col[t]);
    }
  }

  VocabularyMap vocab;
  if (!vocab_path.empty()) {
    std::ifstream vin(vocab_path);
    if (!vin) throw IoError("cannot read " + vocab_path);
    vocab.load(vin);
  }
  auto report = topic_shift_report(after, delta, top_n);
  append_shift_report(stdout, report, vocab);
  return 0;
}

int run_store_inspect(const std::string& model) {
  auto info = probe_store(model);
  StoreStats stats(model, info.topics, 8u << 20);
  double total = 0.0;
  for (double v : stats.topic_totals()) total += v;
  std::printf("path: %s\n", model.c_str());
  std::printf("topics: %d\n", info.topics);
  std::printf("vocab: %lld\n", static_cast<long long>(info.vocab));
  std::printf("file_bytes: %lld\n", static_cast<long long>(info.file_bytes));
  std::printf("total_mass: %s\n", fmt_double(total).c_str());
  std::printf("topic_totals:");
  for (double v : stats.topic_totals()) std::printf(" %s", fmt_double(v).c_str());
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming LDA via belief propagation"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string output_dir;
  std::string replay_path;

  auto* train = app.add_subcommand("train", "train a topic model");
  train->add_option("--algorithm", cfg.algorithm, "bp|rbp|abp|obp|em")
      ->default_val("obp");
  train->add_option("--input", cfg.input, "docword file (or text file with --text)");
  train->add_option("--vocab", cfg.vocab, "vocabulary file, one token per line");
  train->add_option("--test-input", cfg.test_input, "held-out corpus file");
  train->add_flag("--text", cfg.text, "one whitespace-tokenized document per line");
  train->add_option("--topics", cfg.topics, "number of topics")->default_val(100);
  train->add_option("--alpha", cfg.alpha)->default_val(0.01);
  train->add_option("--beta", cfg.beta)->default_val(0.01);
  train->add_option("--batch-size", cfg.batch_size, "documents per mini-batch")
      ->default_val(1024);
  train->add_option("--topic-budget", cfg.topic_budget,
                    "active-schedule topic budget per word (0 = use --eta-k)")
      ->default_val(30);
  train->add_option("--eta-k", cfg.eta_k, "topic ratio when --topic-budget is 0")
      ->default_val(1.0);
  train->add_option("--eta-w", cfg.eta_w, "fraction of words visited per sweep")
      ->default_val(1.0);
  train->add_option("--threshold", cfg.threshold, "average-residual stop threshold")
      ->default_val(0.1);
  train->add_option("--max-iters", cfg.max_iters)->default_val(50);
  auto* seed_opt = train->add_option("--seed", cfg.seed, "PRNG seed (required)");
  train->add_option("--test-count", cfg.test_count, "documents to hold out")
      ->default_val(0);
  train->add_option("--eval-every", cfg.eval_every,
                    "evaluate held-out perplexity every N batches")
      ->default_val(0);
  train->add_option("--eval-iters", cfg.eval_iters, "fold-in sweeps")->default_val(30);
  train->add_flag("--word-split-eval", cfg.word_split_eval,
                  "estimate on 80%% of tokens, evaluate on the rest");
  train->add_option("--model-store", cfg.model_store,
                    "disk-backed model store path (trains out of core)");
  train->add_option("--buffer-mb", cfg.buffer_mb, "store buffer cache size")
      ->default_val(64);
  train->add_option("--shift-every", cfg.shift_every,
                    "write a topic-shift report every N batches")
      ->default_val(0);
  train->add_option("--shift-top", cfg.shift_top)->default_val(10);
  train->add_flag("--no-timing", cfg.no_timing,
                  "write zero wall times for byte-reproducible artifacts");
  train->add_option("--save-model", cfg.save_model,
                    "model file name in the output dir (none to skip)");
  train->add_option("--output-dir", output_dir, "artifact directory")->required();
  train->add_option("--replay", replay_path, "re-run from a manifest.json");

  std::string model, input, vocab_path, before_path, after_path;
  bool text = false, word_split = false;
  double alpha = 0.01, beta = 0.01;
  int32_t top_n = 10, eval_iters = 30;
  uint64_t eval_seed = 0;

  auto* eval_cmd = app.add_subcommand("eval", "held-out perplexity of a stored model");
  eval_cmd->add_option("--model", model)->required();
  eval_cmd->add_option("--input", input)->required();
  eval_cmd->add_flag("--text", text);
  eval_cmd->add_option("--vocab", vocab_path);
  eval_cmd->add_option("--alpha", alpha)->default_val(0.01);
  eval_cmd->add_option("--beta", beta)->default_val(0.01);
  eval_cmd->add_option("--eval-iters", eval_iters)->default_val(30);
  eval_cmd->add_flag("--word-split-eval", word_split);
  eval_cmd->add_option("--seed", eval_seed)->default_val(0);

  auto* topics_cmd = app.add_subcommand("topics", "top words per topic");
  topics_cmd->add_option("--model", model)->required();
  topics_cmd->add_option("--vocab", vocab_path);
  topics_cmd->add_option("--top", top_n)->default_val(10);

  auto* shift_cmd = app.add_subcommand("shift-report",
                                       "rank shifts between two model snapshots");
  shift_cmd->add_option("--before", before_path)->required();
  shift_cmd->add_option("--after", after_path)->required();
  shift_cmd->add_option("--vocab", vocab_path);
  shift_cmd->add_option("--top", top_n)->default_val(10);

  auto* inspect_cmd = app.add_subcommand("store-inspect", "model store header");
  inspect_cmd->add_option("--model", model)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      if (!replay_path.empty()) {
        std::ifstream in(replay_path);
        if (!in) throw IoError("cannot read " + replay_path);
        json j = json::parse(in);
        cfg = config_from_json(j);
      } else {
        if (seed_opt->count() == 0) {
          throw ArgumentError("--seed is required (no silent entropy)");
        }
        if (cfg.input.empty()) throw ArgumentError("--input is required");
      }
      return run_train(cfg, output_dir);
    }
    if (eval_cmd->parsed()) {
      return run_eval(model, input, text, vocab_path, alpha, beta, eval_iters,
                      word_split, eval_seed);
    }
    if (topics_cmd->parsed()) return run_topics(model, vocab_path, top_n);
    if (shift_cmd->parsed()) {
      return run_shift_report(before_path, after_path, vocab_path, top_n);
    }
    if (inspect_cmd->parsed()) return run_store_inspect(model);
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
