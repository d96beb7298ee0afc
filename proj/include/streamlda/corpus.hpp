#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamlda/util.hpp"

namespace streamlda {

struct CorpusHeader {
  int64_t doc_count = 0;
  int64_t vocab_size = 0;
  int64_t nnz = 0;
};

// One (document, word, count) cell, 0-based ids.
struct Triple {
  int64_t doc = 0;
  int32_t word = 0;
  int32_t count = 0;
};

// A document as sorted unique (word, count) pairs.
struct Document {
  std::vector<int32_t> words;
  std::vector<int32_t> counts;

  int64_t tokens() const;
  void add(int32_t word, int32_t count);
  // Sort by word id and merge duplicate entries.
  void normalize();
};

// Token <-> word-id mapping. Ids are assigned on first sight and never
// reassigned, so the mapping is append-only across arbitrarily many batches.
class VocabularyMap {
 public:
  int32_t add_or_get(std::string_view token);
  std::optional<int32_t> find(std::string_view token) const;
  const std::string& token(int32_t id) const;
  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }

  // One token per line; line number - 1 becomes the word id.
  void load(std::istream& in);

 private:
  std::unordered_map<std::string, int32_t> index_;
  std::vector<std::string> tokens_;
};

// Streaming parser for the UCI docword format: three integer header lines
// (D, W, NNZ) followed by NNZ "docID wordID count" lines with 1-based ids.
class DocwordParser {
 public:
  explicit DocwordParser(std::istream& in);

  const CorpusHeader& header() const { return header_; }
  // Yields the next triple converted to 0-based ids; false once NNZ triples
  // have been produced. Throws ParseError/ArgumentError on malformed input.
  bool next(Triple& out);

 private:
  std::istream& in_;
  CorpusHeader header_;
  int64_t produced_ = 0;
  int64_t line_no_ = 0;
};

// Reads a whole docword stream into document-major form. Triples must be
// grouped by document; documents with no entries simply do not appear.
std::vector<Document> read_docword(std::istream& in, CorpusHeader* header = nullptr);

// One whitespace-tokenized document per line; tokens are lowercased and
// unseen tokens extend the vocabulary.
Document parse_text_line(std::string_view line, VocabularyMap& vocab);
std::vector<Document> read_text(std::istream& in, VocabularyMap& vocab);

// One mini-batch in vocabulary-major (CSR by word) layout.
struct SparseBatch {
  int64_t index = 0;      // 1-based position in the batch stream
  int32_t doc_count = 0;  // D_s

  std::vector<int32_t> word_ids;      // ascending global word ids
  std::vector<int64_t> word_offsets;  // size word_ids.size()+1, into entries
  std::vector<int32_t> entry_docs;    // local doc id per nonzero
  std::vector<int32_t> entry_counts;  // count per nonzero, >= 1
  std::vector<int64_t> doc_tokens;    // token total per local doc

  int64_t nnz() const { return static_cast<int64_t>(entry_docs.size()); }
  size_t word_count() const { return word_ids.size(); }
  int64_t token_count() const;
  int32_t max_word() const;  // -1 when empty

  // Back to document-major triples (local doc ids offset by first_doc).
  std::vector<Triple> to_triples(int64_t first_doc = 0) const;
};

// Re-keys a group of documents into one vocabulary-major batch.
SparseBatch make_batch(std::span<const Document> docs, int64_t index);

// Pull-based stream of fixed-size batches over materialized documents.
// Empty documents are dropped with a warning.
class BatchStream {
 public:
  BatchStream(std::span<const Document> docs, int32_t batch_size);
  std::optional<SparseBatch> next();

 private:
  std::span<const Document> docs_;
  int32_t batch_size_;
  size_t pos_ = 0;
  int64_t emitted_ = 0;
};

// Text-mode stream: reads one document per line and grows `vocab` as unseen
// tokens arrive. Unbounded input friendly; nothing is retained across next().
class TextBatchStream {
 public:
  TextBatchStream(std::istream& in, VocabularyMap& vocab, int32_t batch_size);
  std::optional<SparseBatch> next();

 private:
  std::istream& in_;
  VocabularyMap& vocab_;
  int32_t batch_size_;
  int64_t emitted_ = 0;
  int64_t line_no_ = 0;
};

// Deterministic whole-document holdout: mask[d] != 0 marks a test document.
std::vector<uint8_t> split_train_test(int64_t doc_count, int64_t test_count,
                                      std::mt19937_64& rng);

}  // namespace streamlda
