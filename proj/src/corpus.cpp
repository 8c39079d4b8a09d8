#include "mosaic/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "mosaic/error.hpp"
#include "mosaic/io.hpp"

namespace mosaic {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'S', 'C', 'N'};

}  // namespace

std::size_t Corpus::total_tokens() const {
  std::size_t total = 0;
  for (const auto& doc : docs) total += doc.size();
  return total;
}

void Corpus::validate() const {
  if (!doc_ids.empty() && doc_ids.size() != docs.size()) {
    throw FormatError(fmt::format("corpus has {} documents but {} ids", docs.size(), doc_ids.size()));
  }
  if (!vocab_size || *vocab_size == 0) return;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      if (docs[d][i] >= *vocab_size) {
        throw FormatError(fmt::format("document {} token {} has id {} >= vocab_size {}", d, i,
                                      docs[d][i], *vocab_size));
      }
    }
  }
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return CorpusFormat::jsonl;
  return CorpusFormat::binary;
}

Corpus read_corpus_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) {
    // A zero-byte file is not a corpus in binary form.
    throw FormatError("truncated corpus header");
  }
  if (magic != kMagic) throw FormatError("bad corpus magic (expected MSCN)");

  const auto version = io::read_u16(in, "corpus version");
  if (version != kCorpusBinaryVersion) {
    throw FormatError(fmt::format("unsupported corpus version {}", version));
  }
  Corpus corpus;
  const auto vocab = io::read_u32(in, "vocab_size");
  if (vocab != 0) corpus.vocab_size = vocab;
  const auto doc_count = io::read_u64(in, "doc_count");

  corpus.docs.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(doc_count, 1u << 20)));
  for (std::uint64_t d = 0; d < doc_count; ++d) {
    const auto length = io::read_u64(in, "document length");
    TokenSeq doc;
    doc.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(length, 1u << 24)));
    for (std::uint64_t i = 0; i < length; ++i) {
      doc.push_back(io::read_u32(in, "token"));
    }
    corpus.docs.push_back(std::move(doc));
  }
  corpus.validate();
  return corpus;
}

void write_corpus_binary(const Corpus& corpus, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  io::write_u16(out, kCorpusBinaryVersion);
  io::write_u32(out, corpus.vocab_size.value_or(0));
  io::write_u64(out, corpus.docs.size());
  for (const auto& doc : corpus.docs) {
    io::write_u64(out, doc.size());
    for (const auto token : doc) io::write_u32(out, token);
  }
  if (!out) throw IoError("failed writing binary corpus");
}

Corpus read_corpus_jsonl(std::istream& in, std::optional<std::uint32_t> vocab_size) {
  Corpus corpus;
  corpus.vocab_size = vocab_size;
  bool any_id = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::is_blank(line)) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
    }
    if (!record.is_object() || !record.contains("tokens")) {
      throw FormatError(fmt::format("line {}: expected an object with a \"tokens\" array", line_no));
    }
    corpus.docs.push_back(io::tokens_from_json(record.at("tokens"), fmt::format("line {}", line_no)));
    if (auto it = record.find("id"); it != record.end()) {
      if (!it->is_string()) throw FormatError(fmt::format("line {}: \"id\" must be a string", line_no));
      corpus.doc_ids.resize(corpus.docs.size() - 1);
      corpus.doc_ids.push_back(it->get<std::string>());
      any_id = true;
    }
  }
  if (any_id) corpus.doc_ids.resize(corpus.docs.size());
  corpus.validate();
  return corpus;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    nlohmann::json record;
    if (!corpus.doc_ids.empty()) record["id"] = corpus.doc_ids[d];
    record["tokens"] = corpus.docs[d];
    out << record.dump() << '\n';
  }
  if (!out) throw IoError("failed writing jsonl corpus");
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::optional<std::uint32_t> vocab_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open corpus {}", path.string()));
  if (format == CorpusFormat::jsonl) return read_corpus_jsonl(in, vocab_size);

  Corpus corpus = read_corpus_binary(in);
  if (vocab_size) {
    if (corpus.vocab_size && *corpus.vocab_size != *vocab_size) {
      throw FormatError(fmt::format("corpus declares vocab_size {} but {} was requested",
                                    *corpus.vocab_size, *vocab_size));
    }
    corpus.vocab_size = vocab_size;
    corpus.validate();
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  return load_corpus(path, corpus_format_for(path));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  if (format == CorpusFormat::jsonl) {
    write_corpus_jsonl(corpus, out);
  } else {
    write_corpus_binary(corpus, out);
  }
}

// ---------------------------------------------------------------------------
// Windows

std::size_t windows_in_doc(std::size_t doc_length, std::size_t length, std::size_t step) {
  if (doc_length < length) return 0;
  return (doc_length - length) / step + 1;
}

WindowRange::WindowRange(const Corpus& corpus, std::size_t length, std::size_t step)
    : corpus_(&corpus), length_(length), step_(step) {}

WindowRange::iterator WindowRange::begin() const {
  iterator it(this, 0, 0);
  it.settle();
  return it;
}

WindowRange::iterator WindowRange::end() const { return iterator(this, corpus_->docs.size(), 0); }

std::size_t WindowRange::size() const {
  std::size_t total = 0;
  for (const auto& doc : corpus_->docs) total += windows_in_doc(doc.size(), length_, step_);
  return total;
}

Window WindowRange::iterator::operator*() const {
  const auto& doc = range_->corpus_->docs[doc_];
  return Window{WindowRef{doc_, offset_, range_->length_},
                TokenSpan(doc).subspan(offset_, range_->length_)};
}

WindowRange::iterator& WindowRange::iterator::operator++() {
  offset_ += range_->step_;
  settle();
  return *this;
}

void WindowRange::iterator::settle() {
  const auto& docs = range_->corpus_->docs;
  while (doc_ < docs.size() && offset_ + range_->length_ > docs[doc_].size()) {
    ++doc_;
    offset_ = 0;
  }
  if (doc_ == docs.size()) offset_ = 0;
}

WindowRange iter_windows(const Corpus& corpus, std::size_t length, std::size_t step) {
  if (length == 0) throw InvalidArgument("window length must be >= 1");
  if (step == 0) throw InvalidArgument("window step must be >= 1");
  return WindowRange(corpus, length, step);
}

std::size_t unique_token_count(TokenSpan seq) {
  TokenSeq sorted(seq.begin(), seq.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

std::vector<std::size_t> window_unique_counts(const Corpus& corpus, std::size_t length,
                                              std::size_t step) {
  if (length == 0 || step == 0) throw InvalidArgument("window length and step must be >= 1");
  std::vector<std::size_t> out;
  std::unordered_map<TokenId, std::uint32_t> counts;
  for (const auto& doc : corpus.docs) {
    if (doc.size() < length) continue;
    if (step >= length) {
      for (std::size_t off = 0; off + length <= doc.size(); off += step) {
        out.push_back(unique_token_count(TokenSpan(doc).subspan(off, length)));
      }
      continue;
    }
    counts.clear();
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < length; ++i) {
      if (counts[doc[i]]++ == 0) ++distinct;
    }
    for (std::size_t off = 0;; ++off) {
      if (off % step == 0) out.push_back(distinct);
      if (off + length >= doc.size()) break;
      if (--counts[doc[off]] == 0) --distinct;
      if (counts[doc[off + length]]++ == 0) ++distinct;
    }
  }
  return out;
}

TokenSpan window_tokens(const Corpus& corpus, const WindowRef& ref) {
  return TokenSpan(corpus.docs.at(ref.doc_index)).subspan(ref.offset, ref.length);
}

}  // namespace mosaic
