// Copyright 2026 The sdembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdembed/config.hpp"

namespace sdembed {

struct TokenizeOptions {
  bool lowercase = false;
};

/// Splits on any ASCII whitespace. Bytes >= 0x80 are never treated as
/// separators, so multi-byte UTF-8 sequences stay intact.
std::vector<std::string> tokenize(std::string_view text, const TokenizeOptions& opts = {});

/// Calls `sink(std::string_view)` for every whitespace-separated token in `in`.
template <typename Sink>
void for_each_token(std::istream& in, const TokenizeOptions& opts, Sink&& sink);

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Ids are assigned by descending count, ties broken by first occurrence.
  /// Throws std::invalid_argument("empty vocabulary") if nothing survives
  /// `min_count`.
  static Vocabulary build(std::span<const std::string> tokens, std::uint64_t min_count);

  /// Takes tokens and counts already in id order.
  static Vocabulary from_counts(std::vector<std::string> tokens, std::vector<std::uint64_t> counts);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(WordId id) const { return tokens_.at(id); }
  std::span<const std::string> tokens() const noexcept { return tokens_; }
  std::uint64_t count(WordId id) const { return counts_.at(id); }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t total_tokens() const noexcept { return total_; }
  std::optional<WordId> find(std::string_view token) const;

  /// Maps tokens to ids, dropping out-of-vocabulary tokens.
  std::vector<WordId> encode(std::span<const std::string> tokens) const;

  /// `token<TAB>count`, one row per id in id order.
  void write_tsv(std::ostream& out) const;
  static Vocabulary read_tsv(std::istream& in);

  friend bool operator==(const Vocabulary& x, const Vocabulary& y) {
    return x.tokens_ == y.tokens_ && x.counts_ == y.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> id_of_;
  std::uint64_t total_ = 0;
};

/// Incremental counting used for streaming a corpus from disk.
class VocabularyBuilder {
 public:
  void add(std::string_view token);
  std::uint64_t tokens_seen() const noexcept { return seen_; }
  Vocabulary finish(std::uint64_t min_count) const;

 private:
  struct Entry {
    std::uint64_t count = 0;
    std::uint64_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> entries_;
  std::uint64_t seen_ = 0;
};

/// Unigram table used to draw negatives proportionally to count^power.
/// Slot s holds the smallest id whose cumulative share exceeds (s + 0.5)/size,
/// so each id's slot frequency is within 1/size of its share.
class NegativeTable {
 public:
  NegativeTable() = default;
  /// Throws std::invalid_argument if size < vocab.size().
  NegativeTable(const Vocabulary& vocab, double power, std::size_t size);

  std::size_t size() const noexcept { return table_.size(); }
  double power() const noexcept { return power_; }
  std::span<const WordId> table() const noexcept { return table_; }
  WordId sample(Rng& rng) const { return table_[rng() % table_.size()]; }

 private:
  std::vector<WordId> table_;
  double power_ = 0.75;
};

struct WindowExample {
  WordId center = 0;
  std::vector<WordId> contexts;
};

/// Single-reader stream of (center, context window) examples. Each position of
/// the corpus yields exactly one example; edge windows are truncated.
class WindowIterator {
 public:
  /// Throws std::invalid_argument if the corpus has fewer than two ids.
  WindowIterator(std::span<const WordId> corpus, int window, std::uint64_t seed,
                 bool dynamic_window = false);
  /// Restrict centers to [begin, end) while keeping the full corpus for contexts.
  WindowIterator(std::span<const WordId> corpus, int window, std::uint64_t seed,
                 bool dynamic_window, std::size_t begin, std::size_t end);

  /// Fills `out` with the next example; returns false when exhausted.
  bool next(WindowExample& out);
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const WordId> corpus_;
  int window_;
  bool dynamic_;
  Rng rng_;
  std::size_t pos_;
  std::size_t end_;
};

/// Keep-probability of word2vec-style frequent-word subsampling; 1 when
/// `threshold` is 0.
double keep_probability(std::uint64_t count, std::uint64_t total, double threshold);

/// Streams `paths` twice: once to count, once to encode.
struct EncodedCorpus {
  Vocabulary vocab;
  std::vector<WordId> ids;
  std::uint64_t bytes = 0;
};
EncodedCorpus load_corpus(std::span<const std::filesystem::path> paths, std::uint64_t min_count,
                          const TokenizeOptions& opts);
/// Encodes files against an existing vocabulary; OOV tokens are dropped.
std::vector<WordId> encode_files(std::span<const std::filesystem::path> paths,
                                 const Vocabulary& vocab, const TokenizeOptions& opts);

// ---------------------------------------------------------------------------

namespace detail {
inline bool is_space(unsigned char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
}
void lower_ascii(std::string& s);
}  // namespace detail

template <typename Sink>
void for_each_token(std::istream& in, const TokenizeOptions& opts, Sink&& sink) {
  std::string token;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      const auto ch = static_cast<unsigned char>(buf[i]);
      if (detail::is_space(ch)) {
        if (!token.empty()) {
          if (opts.lowercase) detail::lower_ascii(token);
          sink(std::string_view(token));
          token.clear();
        }
      } else {
        token.push_back(static_cast<char>(ch));
      }
    }
  }
  if (!token.empty()) {
    if (opts.lowercase) detail::lower_ascii(token);
    sink(std::string_view(token));
  }
}

}  // namespace sdembed
