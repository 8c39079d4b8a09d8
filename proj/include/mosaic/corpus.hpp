#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <filesystem>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mosaic {

/// Model-vocabulary index.
using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

/// Documents of token IDs. Immutable once loaded; document boundaries are
/// kept exactly as ingested.
struct Corpus {
  std::vector<TokenSeq> docs;
  std::optional<std::uint32_t> vocab_size;
  /// Either empty or one entry per document.
  std::vector<std::string> doc_ids;

  std::size_t total_tokens() const;

  /// Throws FormatError if a token is outside the declared vocabulary or the
  /// id list does not line up with the documents.
  void validate() const;

  bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { binary, jsonl };

/// `.jsonl`/`.json` map to jsonl, anything else to binary.
CorpusFormat corpus_format_for(const std::filesystem::path& path);

/// Binary layout (little-endian): magic "MSCN", u16 version, u32 vocab_size
/// (0 = undeclared), u64 doc_count, then per doc a u64 length followed by that
/// many u32 tokens.
inline constexpr std::uint16_t kCorpusBinaryVersion = 1;

Corpus read_corpus_binary(std::istream& in);
void write_corpus_binary(const Corpus& corpus, std::ostream& out);

/// One JSON object per line: {"id": <string, optional>, "tokens": [<u32>...]}.
/// Blank lines are skipped. `vocab_size`, when given, is attached to the
/// corpus and enforced.
Corpus read_corpus_jsonl(std::istream& in, std::optional<std::uint32_t> vocab_size = {});
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::optional<std::uint32_t> vocab_size = {});
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);

/// A fixed-length window inside one document.
struct WindowRef {
  std::size_t doc_index = 0;
  std::size_t offset = 0;
  std::size_t length = 0;

  std::size_t end() const { return offset + length; }
  auto operator<=>(const WindowRef&) const = default;
};

struct Window {
  WindowRef ref;
  TokenSpan tokens;
};

/// Lazily yields every within-document window of `length` tokens at offsets
/// 0, step, 2*step, ...; documents shorter than `length` yield nothing.
class WindowRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Window;
    using difference_type = std::ptrdiff_t;

    iterator() = default;

    Window operator*() const;
    iterator& operator++();
    iterator operator++(int) {
      auto copy = *this;
      ++*this;
      return copy;
    }
    bool operator==(const iterator& other) const {
      return doc_ == other.doc_ && offset_ == other.offset_;
    }

   private:
    friend class WindowRange;
    iterator(const WindowRange* range, std::size_t doc, std::size_t offset)
        : range_(range), doc_(doc), offset_(offset) {}
    void settle();

    const WindowRange* range_ = nullptr;
    std::size_t doc_ = 0;
    std::size_t offset_ = 0;
  };

  WindowRange(const Corpus& corpus, std::size_t length, std::size_t step);

  iterator begin() const;
  iterator end() const;

  /// Number of windows the range yields.
  std::size_t size() const;

 private:
  const Corpus* corpus_;
  std::size_t length_;
  std::size_t step_;
};

/// Throws InvalidArgument unless length >= 1 and step >= 1.
WindowRange iter_windows(const Corpus& corpus, std::size_t length = 100, std::size_t step = 1);

/// Windows in one document of the given length (step-aware).
std::size_t windows_in_doc(std::size_t doc_length, std::size_t length, std::size_t step);

std::size_t unique_token_count(TokenSpan seq);

/// Distinct-token count of every window, in WindowRange order. Uses a sliding
/// counter, so step=1 over long documents is linear in the token count.
std::vector<std::size_t> window_unique_counts(const Corpus& corpus, std::size_t length,
                                              std::size_t step);

TokenSpan window_tokens(const Corpus& corpus, const WindowRef& ref);

}  // namespace mosaic
