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
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdembed/config.hpp"
#include "sdembed/corpus.hpp"
#include "sdembed/embedding_store.hpp"
#include "sdembed/sd_core.hpp"

namespace sdembed {

struct SimilarityPair {
  std::string word1;
  std::string word2;
  double human_score = 0.0;
};

struct SimilarityDataset {
  std::vector<SimilarityPair> pairs;

  /// Lines are `word1 SEP word2 SEP score` with SEP one of tab, comma or
  /// whitespace (detected per line). `#` lines and a single leading header
  /// line (non-numeric score) are skipped. Throws IoError on malformed rows
  /// or fewer than two pairs.
  static SimilarityDataset parse(std::istream& in);
  static SimilarityDataset load(const std::string& path);
};

struct EvalReport {
  double spearman_rho = 0.0;
  std::size_t n_used = 0;
  std::size_t n_skipped_oov = 0;
};

/// Thrown when fewer than two dataset pairs are in vocabulary.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, EvalReport partial)
      : std::runtime_error(what), report(partial) {}
  EvalReport report;
};

/// Pearson correlation of average (fractional) ranks. Throws
/// std::invalid_argument on length mismatch or fewer than two values and
/// std::domain_error when either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Cosine of two word rows zero-padded to the longer one; 0 if either norm is 0.
double pair_similarity(const GrowableMatrix& words, WordId a, WordId b);

/// Cosine restricted to the first `cutoff` dimensions.
double truncated_cosine(std::span<const double> x, std::span<const double> y, std::size_t cutoff);

EvalReport eval_similarity(const GrowableMatrix& words, const Vocabulary& vocab,
                           const SimilarityDataset& dataset, bool lowercase = false);

struct Neighbor {
  WordId id = 0;
  double similarity = 0.0;
};

/// Top-k by cosine over dims 1..cutoff (all dims when absent), query excluded,
/// descending similarity with ties broken by id. OpenMP-parallel scan.
/// Throws std::invalid_argument for an OOV query or k == 0.
std::vector<Neighbor> nearest_neighbors(const GrowableMatrix& words, const Vocabulary& vocab,
                                        const std::string& word, std::size_t k,
                                        std::optional<std::uint32_t> cutoff = std::nullopt);
/// Single-threaded reference of nearest_neighbors.
std::vector<Neighbor> nearest_neighbors_serial(const GrowableMatrix& words,
                                               const Vocabulary& vocab, const std::string& word,
                                               std::size_t k,
                                               std::optional<std::uint32_t> cutoff = std::nullopt);

/// Mean of pairwise z-posteriors over up to `max_windows` occurrences of
/// `word` and every context in their windows (window size cfg.window). All
/// posteriors are evaluated at the largest l met, so they share support.
/// Throws std::invalid_argument if the word never occurs.
ZPosterior word_z_distribution(const EmbeddingStores& stores, std::span<const WordId> corpus,
                               WordId word, const SdConfig& cfg, std::size_t max_windows = 10000);

struct ExpectedDimRow {
  WordId id = 0;
  std::uint64_t count = 0;
  std::uint32_t active_len = 0;
  double expected_dim = 0.0;
};

/// E[z] of word_z_distribution for every vocabulary word (OpenMP over words).
/// Words absent from `corpus` get expected_dim = NaN.
std::vector<ExpectedDimRow> expected_dim_report(const EmbeddingStores& stores,
                                                const Vocabulary& vocab,
                                                std::span<const WordId> corpus,
                                                const SdConfig& cfg,
                                                std::size_t max_windows = 10000);

struct HistogramBin {
  double left = 0.0;
  std::size_t count = 0;
};
/// Fixed-width bins starting at floor(min / width) * width; NaNs ignored.
std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width);

}  // namespace sdembed
