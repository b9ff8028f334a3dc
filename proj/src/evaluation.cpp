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

#include "sdembed/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdembed {

// --- Datasets --------------------------------------------------------------------

namespace {

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && detail::is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && detail::is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  char sep = 0;
  if (line.find('\t') != std::string::npos) {
    sep = '\t';
  } else if (line.find(',') != std::string::npos) {
    sep = ',';
  }
  if (sep == 0) return tokenize(line);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    std::string field = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    auto trimmed = tokenize(field);
    fields.push_back(trimmed.empty() ? std::string() : trimmed.front());
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

}  // namespace

SimilarityDataset SimilarityDataset::parse(std::istream& in) {
  SimilarityDataset ds;
  std::string line;
  std::size_t lineno = 0;
  bool seen_row = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize(line).empty() || line.front() == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty()) {
      throw IoError("dataset line " + std::to_string(lineno) + ": expected word1 word2 score");
    }
    const auto score = parse_double(fields[2]);
    if (!score) {
      if (!seen_row) {  // header
        seen_row = true;
        continue;
      }
      throw IoError("dataset line " + std::to_string(lineno) + ": bad score '" + fields[2] + "'");
    }
    seen_row = true;
    ds.pairs.push_back({fields[0], fields[1], *score});
  }
  if (ds.pairs.size() < 2) throw IoError("dataset needs at least two pairs");
  return ds;
}

SimilarityDataset SimilarityDataset::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse(in);
}

// --- Spearman ------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) -> ranks i+1..j, mean (i + 1 + j) / 2
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman: need at least two values");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = (n + 1.0) / 2.0;  // mean of average ranks is always (n+1)/2
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("spearman: constant input, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// --- Similarity -------------------------------------------------------------------------

double truncated_cosine(std::span<const double> x, std::span<const double> y, std::size_t cutoff) {
  const std::size_t nx = std::min(x.size(), cutoff);
  const std::size_t ny = std::min(y.size(), cutoff);
  const std::size_t both = std::min(nx, ny);
  double xy = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  for (std::size_t j = 0; j < both; ++j) xy += x[j] * y[j];
  for (std::size_t j = 0; j < nx; ++j) xx += x[j] * x[j];
  for (std::size_t j = 0; j < ny; ++j) yy += y[j] * y[j];
  if (xx == 0.0 || yy == 0.0) return 0.0;
  return xy / std::sqrt(xx * yy);
}

double pair_similarity(const GrowableMatrix& words, WordId a, WordId b) {
  return truncated_cosine(words.row(a), words.row(b), std::numeric_limits<std::size_t>::max());
}

EvalReport eval_similarity(const GrowableMatrix& words, const Vocabulary& vocab,
                           const SimilarityDataset& dataset, bool lowercase) {
  EvalReport report;
  std::vector<double> model;
  std::vector<double> human;
  const TokenizeOptions opts{lowercase};
  for (const auto& p : dataset.pairs) {
    std::string a = p.word1;
    std::string b = p.word2;
    if (opts.lowercase) {
      detail::lower_ascii(a);
      detail::lower_ascii(b);
    }
    const auto ia = vocab.find(a);
    const auto ib = vocab.find(b);
    if (!ia || !ib) {
      ++report.n_skipped_oov;
      continue;
    }
    model.push_back(pair_similarity(words, *ia, *ib));
    human.push_back(p.human_score);
  }
  report.n_used = model.size();
  if (report.n_used < 2) {
    throw EvaluationError("fewer than two in-vocabulary pairs (" +
                              std::to_string(report.n_skipped_oov) + " skipped as OOV)",
                          report);
  }
  report.spearman_rho = spearman(model, human);
  return report;
}

// --- Nearest neighbours ------------------------------------------------------------------------

namespace {

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

WordId require_word(const Vocabulary& vocab, const std::string& word) {
  const auto id = vocab.find(word);
  if (!id) throw std::invalid_argument("word '" + word + "' is not in the vocabulary");
  return *id;
}

std::vector<Neighbor> top_k(std::vector<Neighbor> all, std::size_t k) {
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    neighbor_before);
  all.resize(k);
  return all;
}

}  // namespace

std::vector<Neighbor> nearest_neighbors_serial(const GrowableMatrix& words,
                                               const Vocabulary& vocab, const std::string& word,
                                               std::size_t k,
                                               std::optional<std::uint32_t> cutoff) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const WordId q = require_word(vocab, word);
  const std::size_t cut = cutoff ? *cutoff : std::numeric_limits<std::size_t>::max();
  std::vector<Neighbor> all;
  all.reserve(words.rows());
  for (WordId v = 0; v < words.rows(); ++v) {
    if (v == q) continue;
    all.push_back({v, truncated_cosine(words.row(q), words.row(v), cut)});
  }
  return top_k(std::move(all), k);
}

std::vector<Neighbor> nearest_neighbors(const GrowableMatrix& words, const Vocabulary& vocab,
                                        const std::string& word, std::size_t k,
                                        std::optional<std::uint32_t> cutoff) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const WordId q = require_word(vocab, word);
  const std::size_t cut = cutoff ? *cutoff : std::numeric_limits<std::size_t>::max();
  const auto n = static_cast<std::ptrdiff_t>(words.rows());
  std::vector<double> sims(words.rows());
  const auto query = words.row(q);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    sims[static_cast<std::size_t>(v)] = truncated_cosine(query, words.row(static_cast<std::size_t>(v)), cut);
  }
  std::vector<Neighbor> all;
  all.reserve(words.rows());
  for (WordId v = 0; v < words.rows(); ++v) {
    if (v != q) all.push_back({v, sims[v]});
  }
  return top_k(std::move(all), k);
}

// --- Dimensionality inspection -----------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_context(std::span<const WordId> corpus, std::size_t pos, int window, Fn&& fn) {
  const std::size_t k = static_cast<std::size_t>(window);
  const std::size_t lo = pos >= k ? pos - k : 0;
  const std::size_t hi = std::min(corpus.size() - 1, pos + k);
  for (std::size_t j = lo; j <= hi; ++j) {
    if (j != pos) fn(corpus[j]);
  }
}

ZPosterior averaged_posterior(const EmbeddingStores& stores, std::span<const WordId> corpus,
                              std::span<const std::size_t> positions, WordId word,
                              const SdConfig& cfg) {
  std::uint32_t l_max = 1;
  for (auto pos : positions) {
    for_each_context(corpus, pos, cfg.window, [&](WordId c) {
      l_max = std::max(l_max, pair_l(stores.words, stores.contexts, word, c));
    });
  }
  ZPosterior mean;
  mean.probs.assign(l_max, 0.0);
  std::vector<double> gains(l_max);
  ZPosterior post;
  const double log_a = std::log(cfg.a);
  std::size_t pairs = 0;
  const auto wr = stores.words.row(word);
  for (auto pos : positions) {
    for_each_context(corpus, pos, cfg.window, [&](WordId c) {
      pair_gains(wr, stores.contexts.row(c), cfg.lambda, gains);
      posterior_from_gains(gains, log_a, cfg.tail, post);
      for (std::size_t z = 0; z < l_max; ++z) mean.probs[z] += post.probs[z];
      mean.tail_mass += post.tail_mass;
      ++pairs;
    });
  }
  const double inv = 1.0 / static_cast<double>(pairs);
  for (auto& p : mean.probs) p *= inv;
  mean.tail_mass *= inv;
  mean.tail_mean = post.tail_mean;
  mean.log_partition = std::numeric_limits<double>::quiet_NaN();
  return mean;
}

}  // namespace

ZPosterior word_z_distribution(const EmbeddingStores& stores, std::span<const WordId> corpus,
                               WordId word, const SdConfig& cfg, std::size_t max_windows) {
  if (corpus.size() < 2) throw std::invalid_argument("corpus needs at least two tokens");
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < corpus.size() && positions.size() < max_windows; ++i) {
    if (corpus[i] == word) positions.push_back(i);
  }
  if (positions.empty()) throw std::invalid_argument("word does not occur in the corpus");
  return averaged_posterior(stores, corpus, positions, word, cfg);
}

std::vector<ExpectedDimRow> expected_dim_report(const EmbeddingStores& stores,
                                                const Vocabulary& vocab,
                                                std::span<const WordId> corpus,
                                                const SdConfig& cfg, std::size_t max_windows) {
  if (corpus.size() < 2) throw std::invalid_argument("corpus needs at least two tokens");
  std::vector<std::vector<std::size_t>> positions(vocab.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& p = positions[corpus[i]];
    if (p.size() < max_windows) p.push_back(i);
  }
  std::vector<ExpectedDimRow> rows(vocab.size());
  const auto n = static_cast<std::ptrdiff_t>(vocab.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const auto id = static_cast<WordId>(v);
    auto& row = rows[id];
    row.id = id;
    row.count = vocab.count(id);
    row.active_len = stores.words.active_len(id);
    row.expected_dim =
        positions[id].empty()
            ? std::numeric_limits<double>::quiet_NaN()
            : expected_dimensionality(averaged_posterior(stores, corpus, positions[id], id, cfg));
  }
  return rows;
}

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) return {};
  const double start = std::floor(lo / bin_width) * bin_width;
  const auto nbins = static_cast<std::size_t>(std::floor((hi - start) / bin_width)) + 1;
  std::vector<HistogramBin> bins(nbins);
  for (std::size_t b = 0; b < nbins; ++b) bins[b].left = start + static_cast<double>(b) * bin_width;
  for (double v : values) {
    if (std::isnan(v)) continue;
    auto b = static_cast<std::size_t>(std::floor((v - start) / bin_width));
    ++bins[std::min(b, nbins - 1)].count;
  }
  return bins;
}

}  // namespace sdembed
