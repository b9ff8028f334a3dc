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

#include "sdembed/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sdembed {

namespace detail {
void lower_ascii(std::string& s) {
  for (auto& ch : s) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
}
}  // namespace detail

std::vector<std::string> tokenize(std::string_view text, const TokenizeOptions& opts) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      out.emplace_back(text.substr(i, j - i));
      if (opts.lowercase) detail::lower_ascii(out.back());
    }
    i = j;
  }
  return out;
}

// --- Vocabulary ------------------------------------------------------------

void VocabularyBuilder::add(std::string_view token) {
  auto [it, inserted] = entries_.try_emplace(std::string(token));
  if (inserted) it->second.first_seen = seen_;
  ++it->second.count;
  ++seen_;
}

Vocabulary VocabularyBuilder::finish(std::uint64_t min_count) const {
  struct Kept {
    const std::string* token;
    Entry entry;
  };
  std::vector<Kept> kept;
  for (const auto& [token, entry] : entries_) {
    if (entry.count >= min_count) kept.push_back({&token, entry});
  }
  if (kept.empty()) throw std::invalid_argument("empty vocabulary");
  std::sort(kept.begin(), kept.end(), [](const Kept& x, const Kept& y) {
    if (x.entry.count != y.entry.count) return x.entry.count > y.entry.count;
    return x.entry.first_seen < y.entry.first_seen;
  });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  tokens.reserve(kept.size());
  counts.reserve(kept.size());
  for (const auto& k : kept) {
    tokens.push_back(*k.token);
    counts.push_back(k.entry.count);
  }
  return Vocabulary::from_counts(std::move(tokens), std::move(counts));
}

Vocabulary Vocabulary::build(std::span<const std::string> tokens, std::uint64_t min_count) {
  VocabularyBuilder builder;
  for (const auto& t : tokens) builder.add(t);
  return builder.finish(min_count);
}

Vocabulary Vocabulary::from_counts(std::vector<std::string> tokens,
                                   std::vector<std::uint64_t> counts) {
  if (tokens.size() != counts.size()) {
    throw std::invalid_argument("tokens and counts differ in length");
  }
  if (tokens.empty()) throw std::invalid_argument("empty vocabulary");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.counts_ = std::move(counts);
  v.id_of_.reserve(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.id_of_.emplace(v.tokens_[i], static_cast<WordId>(i)).second) {
      throw std::invalid_argument("duplicate token '" + v.tokens_[i] + "'");
    }
  }
  v.total_ = std::accumulate(v.counts_.begin(), v.counts_.end(), std::uint64_t{0});
  return v;
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = id_of_.find(std::string(token));
  if (it == id_of_.end()) return std::nullopt;
  return it->second;
}

std::vector<WordId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = find(t)) ids.push_back(*id);
  }
  return ids;
}

void Vocabulary::write_tsv(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << counts_[i] << '\n';
  }
}

Vocabulary Vocabulary::read_tsv(std::istream& in) {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw IoError("vocabulary line " + std::to_string(lineno) + ": expected token<TAB>count");
    }
    std::uint64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw IoError("vocabulary line " + std::to_string(lineno) + ": bad count");
    }
    tokens.push_back(line.substr(0, tab));
    counts.push_back(count);
  }
  return from_counts(std::move(tokens), std::move(counts));
}

// --- NegativeTable -----------------------------------------------------------

NegativeTable::NegativeTable(const Vocabulary& vocab, double power, std::size_t size)
    : power_(power) {
  const auto counts = vocab.counts();
  if (size < counts.size()) {
    throw std::invalid_argument("negative table size " + std::to_string(size) +
                                " is smaller than the vocabulary (" +
                                std::to_string(counts.size()) + ")");
  }
  std::vector<double> weights(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    weights[i] = std::pow(static_cast<double>(counts[i]), power);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  table_.resize(size);
  std::size_t id = 0;
  double cumulative = weights[0] / total;
  const auto last = counts.size() - 1;
  for (std::size_t s = 0; s < size; ++s) {
    const double point = (static_cast<double>(s) + 0.5) / static_cast<double>(size);
    while (id < last && point >= cumulative) {
      ++id;
      cumulative += weights[id] / total;
    }
    table_[s] = static_cast<WordId>(id);
  }
}

// --- Windows -------------------------------------------------------------------

WindowIterator::WindowIterator(std::span<const WordId> corpus, int window, std::uint64_t seed,
                               bool dynamic_window)
    : WindowIterator(corpus, window, seed, dynamic_window, 0, corpus.size()) {}

WindowIterator::WindowIterator(std::span<const WordId> corpus, int window, std::uint64_t seed,
                               bool dynamic_window, std::size_t begin, std::size_t end)
    : corpus_(corpus), window_(window), dynamic_(dynamic_window), rng_(seed), pos_(begin),
      end_(std::min(end, corpus.size())) {
  if (corpus.size() < 2) throw std::invalid_argument("corpus needs at least two tokens");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
}

bool WindowIterator::next(WindowExample& out) {
  if (pos_ >= end_) return false;
  int k = window_;
  if (dynamic_) k -= static_cast<int>(rng_() % static_cast<std::uint64_t>(window_));
  const std::size_t i = pos_++;
  const std::size_t lo = i >= static_cast<std::size_t>(k) ? i - k : 0;
  const std::size_t hi = std::min(corpus_.size() - 1, i + static_cast<std::size_t>(k));
  out.center = corpus_[i];
  out.contexts.clear();
  for (std::size_t j = lo; j <= hi; ++j) {
    if (j != i) out.contexts.push_back(corpus_[j]);
  }
  return true;
}

double keep_probability(std::uint64_t count, std::uint64_t total, double threshold) {
  if (threshold <= 0.0 || count == 0) return 1.0;
  const double scaled = threshold * static_cast<double>(total);
  const double c = static_cast<double>(count);
  return std::min(1.0, (std::sqrt(c / scaled) + 1.0) * scaled / c);
}

// --- File loading --------------------------------------------------------------

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file '" + path.string() + "'");
  return in;
}

}  // namespace

EncodedCorpus load_corpus(std::span<const std::filesystem::path> paths, std::uint64_t min_count,
                          const TokenizeOptions& opts) {
  if (paths.empty()) throw IoError("no corpus files given");
  EncodedCorpus result;
  VocabularyBuilder builder;
  for (const auto& p : paths) {
    auto in = open_input(p);
    for_each_token(in, opts, [&](std::string_view t) { builder.add(t); });
    std::error_code ec;
    const auto sz = std::filesystem::file_size(p, ec);
    if (!ec) result.bytes += sz;
  }
  result.vocab = builder.finish(min_count);
  result.ids = encode_files(paths, result.vocab, opts);
  return result;
}

std::vector<WordId> encode_files(std::span<const std::filesystem::path> paths,
                                 const Vocabulary& vocab, const TokenizeOptions& opts) {
  std::vector<WordId> ids;
  for (const auto& p : paths) {
    auto in = open_input(p);
    for_each_token(in, opts, [&](std::string_view t) {
      if (auto id = vocab.find(t)) ids.push_back(*id);
    });
  }
  return ids;
}

}  // namespace sdembed
