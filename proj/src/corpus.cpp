#include "streamlda/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>

namespace streamlda {

int64_t Document::tokens() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

void Document::add(int32_t word, int32_t count) {
  words.push_back(word);
  counts.push_back(count);
}

void Document::normalize() {
  const size_t n = words.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return words[a] < words[b]; });
  std::vector<int32_t> w, c;
  w.reserve(n);
  c.reserve(n);
  for (size_t i : order) {
    if (!w.empty() && w.back() == words[i]) {
      c.back() += counts[i];
    } else {
      w.push_back(words[i]);
      c.push_back(counts[i]);
    }
  }
  words = std::move(w);
  counts = std::move(c);
}

int32_t VocabularyMap::add_or_get(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  int32_t id = size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::optional<int32_t> VocabularyMap::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& VocabularyMap::token(int32_t id) const {
  static const std::string unknown = "?";
  if (id < 0 || id >= size()) return unknown;
  return tokens_[static_cast<size_t>(id)];
}

void VocabularyMap::load(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    add_or_get(line);
  }
}

namespace {

bool read_line(std::istream& in, std::string& line, int64_t& line_no) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_no;
  return true;
}

int64_t parse_int(std::string_view text, int64_t line_no, const char* what) {
  int64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed " + what +
                     " \"" + std::string(text) + "\"");
  }
  return value;
}

// Splits on runs of spaces/tabs; returns false if the field count differs.
bool split3(std::string_view line, std::string_view out[3]) {
  int n = 0;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (n == 3) return false;
    out[n++] = line.substr(i, j - i);
    i = j;
  }
  return n == 3;
}

}  // namespace

DocwordParser::DocwordParser(std::istream& in) : in_(in) {
  std::string line;
  int64_t values[3];
  const char* names[3] = {"document count", "vocabulary size", "nnz"};
  for (int i = 0; i < 3; ++i) {
    if (!read_line(in_, line, line_no_)) {
      throw ParseError("line " + std::to_string(line_no_ + 1) +
                       ": missing header line (" + names[i] + ")");
    }
    values[i] = parse_int(line, line_no_, names[i]);
  }
  header_.doc_count = values[0];
  header_.vocab_size = values[1];
  header_.nnz = values[2];
  if (header_.doc_count < 1 || header_.vocab_size < 1 || header_.nnz < 0) {
    throw ParseError("invalid header: D=" + std::to_string(header_.doc_count) +
                     " W=" + std::to_string(header_.vocab_size) +
                     " NNZ=" + std::to_string(header_.nnz));
  }
  if (header_.nnz > header_.doc_count * header_.vocab_size) {
    throw ParseError("invalid header: NNZ exceeds D*W");
  }
}

bool DocwordParser::next(Triple& out) {
  if (produced_ >= header_.nnz) return false;
  std::string line;
  if (!read_line(in_, line, line_no_)) {
    throw ParseError("unexpected end of input: got " + std::to_string(produced_) +
                     " of " + std::to_string(header_.nnz) + " triples");
  }
  std::string_view fields[3];
  if (!split3(line, fields)) {
    throw ParseError("line " + std::to_string(line_no_) +
                     ": expected \"docID wordID count\", got \"" + line + "\"");
  }
  int64_t doc = parse_int(fields[0], line_no_, "docID");
  int64_t word = parse_int(fields[1], line_no_, "wordID");
  int64_t count = parse_int(fields[2], line_no_, "count");
  if (doc < 1 || doc > header_.doc_count) {
    throw ArgumentError("line " + std::to_string(line_no_) + ": docID " +
                        std::to_string(doc) + " out of range [1, " +
                        std::to_string(header_.doc_count) + "]");
  }
  if (word < 1 || word > header_.vocab_size) {
    throw ArgumentError("line " + std::to_string(line_no_) + ": wordID " +
                        std::to_string(word) + " out of range [1, " +
                        std::to_string(header_.vocab_size) + "]");
  }
  if (count <= 0) {
    throw ArgumentError("line " + std::to_string(line_no_) + ": count " +
                        std::to_string(count) + " must be positive");
  }
  out.doc = doc - 1;
  out.word = static_cast<int32_t>(word - 1);
  out.count = static_cast<int32_t>(count);
  ++produced_;
  return true;
}

std::vector<Document> read_docword(std::istream& in, CorpusHeader* header) {
  DocwordParser parser(in);
  if (header != nullptr) *header = parser.header();

  std::vector<Document> docs;
  std::vector<uint8_t> closed(static_cast<size_t>(parser.header().doc_count), 0);
  int64_t current = -1;
  Triple t;
  while (parser.next(t)) {
    if (t.doc != current) {
      if (closed[static_cast<size_t>(t.doc)]) {
        throw ParseError("document " + std::to_string(t.doc + 1) +
                         " appears in non-contiguous groups; input must be "
                         "document-major");
      }
      if (current >= 0) closed[static_cast<size_t>(current)] = 1;
      current = t.doc;
      docs.emplace_back();
    }
    docs.back().add(t.word, t.count);
  }
  for (auto& d : docs) d.normalize();
  return docs;
}

Document parse_text_line(std::string_view line, VocabularyMap& vocab) {
  Document doc;
  size_t i = 0;
  std::string token;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) {
      token.assign(line.substr(i, j - i));
      for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      doc.add(vocab.add_or_get(token), 1);
    }
    i = j;
  }
  doc.normalize();
  return doc;
}

std::vector<Document> read_text(std::istream& in, VocabularyMap& vocab) {
  std::vector<Document> docs;
  std::string line;
  int64_t line_no = 0;
  while (read_line(in, line, line_no)) {
    Document doc = parse_text_line(line, vocab);
    if (doc.words.empty()) {
      log_warn("dropping empty document at line %lld", static_cast<long long>(line_no));
      continue;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

int64_t SparseBatch::token_count() const {
  return std::accumulate(entry_counts.begin(), entry_counts.end(), int64_t{0});
}

int32_t SparseBatch::max_word() const {
  return word_ids.empty() ? -1 : word_ids.back();
}

std::vector<Triple> SparseBatch::to_triples(int64_t first_doc) const {
  std::vector<Triple> out;
  out.reserve(static_cast<size_t>(nnz()));
  for (size_t i = 0; i < word_ids.size(); ++i) {
    for (int64_t e = word_offsets[i]; e < word_offsets[i + 1]; ++e) {
      out.push_back({first_doc + entry_docs[static_cast<size_t>(e)], word_ids[i],
                     entry_counts[static_cast<size_t>(e)]});
    }
  }
  return out;
}

SparseBatch make_batch(std::span<const Document> docs, int64_t index) {
  SparseBatch batch;
  batch.index = index;
  batch.doc_count = static_cast<int32_t>(docs.size());
  batch.doc_tokens.resize(docs.size(), 0);

  // Collect the batch vocabulary, then scatter entries word by word. Scanning
  // documents in order keeps each word's entry list sorted by local doc id.
  std::vector<int32_t> ids;
  for (const Document& d : docs) ids.insert(ids.end(), d.words.begin(), d.words.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  batch.word_ids = std::move(ids);

  const size_t n_words = batch.word_ids.size();
  std::vector<int64_t> counts_per_word(n_words, 0);
  auto slot = [&](int32_t word) {
    return static_cast<size_t>(
        std::lower_bound(batch.word_ids.begin(), batch.word_ids.end(), word) -
        batch.word_ids.begin());
  };
  for (const Document& d : docs) {
    for (int32_t w : d.words) ++counts_per_word[slot(w)];
  }

  batch.word_offsets.assign(n_words + 1, 0);
  for (size_t i = 0; i < n_words; ++i) {
    batch.word_offsets[i + 1] = batch.word_offsets[i] + counts_per_word[i];
  }
  const int64_t nnz = batch.word_offsets[n_words];
  batch.entry_docs.resize(static_cast<size_t>(nnz));
  batch.entry_counts.resize(static_cast<size_t>(nnz));

  std::vector<int64_t> cursor(batch.word_offsets.begin(), batch.word_offsets.end() - 1);
  for (size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    for (size_t j = 0; j < doc.words.size(); ++j) {
      if (doc.counts[j] < 1) {
        throw ArgumentError("non-positive count in document entry");
      }
      size_t i = slot(doc.words[j]);
      int64_t e = cursor[i]++;
      batch.entry_docs[static_cast<size_t>(e)] = static_cast<int32_t>(d);
      batch.entry_counts[static_cast<size_t>(e)] = doc.counts[j];
      batch.doc_tokens[d] += doc.counts[j];
    }
  }
  return batch;
}

BatchStream::BatchStream(std::span<const Document> docs, int32_t batch_size)
    : docs_(docs), batch_size_(batch_size) {
  if (batch_size_ < 1) throw ArgumentError("batch size must be >= 1");
}

std::optional<SparseBatch> BatchStream::next() {
  std::vector<Document> group;
  while (pos_ < docs_.size() && static_cast<int32_t>(group.size()) < batch_size_) {
    const Document& d = docs_[pos_++];
    if (d.words.empty()) {
      log_warn("dropping empty document at stream position %zu", pos_ - 1);
      continue;
    }
    group.push_back(d);
  }
  if (group.empty()) return std::nullopt;
  return make_batch(group, ++emitted_);
}

TextBatchStream::TextBatchStream(std::istream& in, VocabularyMap& vocab,
                                 int32_t batch_size)
    : in_(in), vocab_(vocab), batch_size_(batch_size) {
  if (batch_size_ < 1) throw ArgumentError("batch size must be >= 1");
}

std::optional<SparseBatch> TextBatchStream::next() {
  std::vector<Document> group;
  std::string line;
  while (static_cast<int32_t>(group.size()) < batch_size_ &&
         read_line(in_, line, line_no_)) {
    Document doc = parse_text_line(line, vocab_);
    if (doc.words.empty()) {
      log_warn("dropping empty document at line %lld", static_cast<long long>(line_no_));
      continue;
    }
    group.push_back(std::move(doc));
  }
  if (group.empty()) return std::nullopt;
  return make_batch(group, ++emitted_);
}

std::vector<uint8_t> split_train_test(int64_t doc_count, int64_t test_count,
                                      std::mt19937_64& rng) {
  if (test_count < 0 || test_count >= doc_count) {
    throw ArgumentError("test_count must be in [0, doc_count)");
  }
  std::vector<int64_t> ids(static_cast<size_t>(doc_count));
  std::iota(ids.begin(), ids.end(), int64_t{0});
  // Partial Fisher-Yates: the first test_count slots become the test set.
  for (int64_t i = 0; i < test_count; ++i) {
    std::uniform_int_distribution<int64_t> pick(i, doc_count - 1);
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(pick(rng))]);
  }
  std::vector<uint8_t> mask(static_cast<size_t>(doc_count), 0);
  for (int64_t i = 0; i < test_count; ++i) mask[static_cast<size_t>(ids[static_cast<size_t>(i)])] = 1;
  return mask;
}

}  // namespace streamlda
