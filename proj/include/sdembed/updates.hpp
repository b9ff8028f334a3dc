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
#include <span>
#include <vector>

#include "sdembed/config.hpp"
#include "sdembed/embedding_store.hpp"
#include "sdembed/sd_core.hpp"

namespace sdembed {

enum class Side { Word, Context };

/// Per-row ascent directions touched by one update. Rows are addressed by
/// (side, id); repeated ids accumulate into the same entry. Buffers are kept
/// between clear() calls so the training loop does not allocate.
class SparseGradient {
 public:
  struct Entry {
    Side side = Side::Word;
    WordId id = 0;
    std::vector<double> values;
  };

  void clear() noexcept { used_ = 0; }

  /// Accumulator for (side, id) of at least `len` entries, zeroed on first
  /// use since the last clear().
  std::span<double> accumulator(Side side, WordId id, std::size_t len);

  std::span<const Entry> entries() const noexcept { return {entries_.data(), used_}; }
  const Entry* find(Side side, WordId id) const noexcept;
  void scale(double factor) noexcept;

 private:
  std::vector<Entry> entries_;
  std::size_t used_ = 0;
};

/// row += step * direction for every entry, limited to materialised dims.
void apply(EmbeddingStores& stores, const SparseGradient& direction, double step);

/// How log p(c | w) is normalised in the stochastic-dimensionality updates.
///   Sampled: negative sampling; the bracket uses a sampled softmax over
///            {positive} + negatives.
///   Full:    exact normaliser over every row of the vocabulary (V <= 1000).
enum class Normalizer { Sampled, Full };

inline constexpr std::size_t kMaxFullSoftmaxVocab = 1000;

/// Reusable buffers for one thread of updates.
struct UpdateScratch {
  SparseGradient direction;
  ZPosterior posterior;
  ZPosterior other;
  std::vector<double> gains;
  std::vector<double> tail_cdf;  // tail_cdf[j] = P(z >= j + 1)
  std::vector<double> hidden;
  std::vector<double> hidden_grad;
  std::vector<double> log_z;
  std::vector<std::uint32_t> zs;
};

double cbow_divisor_value(CbowDivisor divisor, int window, std::size_t n_contexts);

// --- Fixed-dimension baselines ------------------------------------------------
//
// Skip-gram: word row w predicts context row c against context-row negatives.
// CBOW: the averaged context rows predict word row `center` against word-row
// negatives. Losses are the negative-sampling losses
//   -log s(pos) - sum_neg log s(-neg)
// over the first `dims` dimensions; directions are their negative gradients,
// added into `out`.

double sg_ns_loss(const EmbeddingStores& s, WordId w, WordId c, std::span<const WordId> negatives,
                  std::uint32_t dims);
double sg_ns_direction(const EmbeddingStores& s, WordId w, WordId c,
                       std::span<const WordId> negatives, std::uint32_t dims, SparseGradient& out);
double sg_update(EmbeddingStores& s, WordId w, WordId c, std::span<const WordId> negatives,
                 std::uint32_t dims, double alpha, UpdateScratch& scratch);

double cbow_ns_loss(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                    std::span<const WordId> negatives, std::uint32_t dims, double divisor);
double cbow_ns_direction(const EmbeddingStores& s, WordId center,
                         std::span<const WordId> contexts, std::span<const WordId> negatives,
                         std::uint32_t dims, double divisor, SparseGradient& out);
double cbow_update(EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                   std::span<const WordId> negatives, std::uint32_t dims, double alpha,
                   double divisor, UpdateScratch& scratch);

// --- Stochastic dimensionality --------------------------------------------------

struct SdUpdateResult {
  double loss = 0.0;
  bool grew = false;
  bool capped = false;  // a growth draw was suppressed by z_cap
};

/// Negative-sampling surrogate of -log p(c, z | w) at a fixed z:
/// the NS loss over dims 1..z plus lambda * sum_{j<=z} (w_j^2 + c_j^2).
double sd_sg_ns_objective(const EmbeddingStores& s, WordId w, WordId c,
                          std::span<const WordId> negatives, double lambda, std::uint32_t z);
double sd_cbow_ns_objective(const EmbeddingStores& s, WordId center,
                            std::span<const WordId> contexts, std::span<const WordId> negatives,
                            double lambda, double divisor, std::uint32_t z);

/// log p(c | w) as used in the score term's bracket (unclipped).
double sd_sg_log_likelihood(const EmbeddingStores& s, WordId w, WordId c,
                            std::span<const WordId> negatives, const SdConfig& cfg,
                            Normalizer mode);
double sd_cbow_log_likelihood(const EmbeddingStores& s, WordId center,
                              std::span<const WordId> contexts,
                              std::span<const WordId> negatives, const SdConfig& cfg,
                              Normalizer mode);

/// Posterior over z for a CBOW window (energy averaged over the contexts).
ZPosterior sd_cbow_posterior(const EmbeddingStores& s, WordId center,
                             std::span<const WordId> contexts, const SdConfig& cfg);

/// Score-function ascent direction for the given z samples, averaged over
/// them: recon(z) + [log p(c|w) - 1] * grad log p(z | c, w). Overwrites
/// `out`. Returns the reconstruction loss at zs[0].
double sd_sg_direction(const EmbeddingStores& s, WordId w, WordId c,
                       std::span<const WordId> negatives, const SdConfig& cfg,
                       std::span<const std::uint32_t> zs, Normalizer mode,
                       UpdateScratch& scratch, SparseGradient& out);
double sd_cbow_direction(const EmbeddingStores& s, WordId center,
                         std::span<const WordId> contexts, std::span<const WordId> negatives,
                         const SdConfig& cfg, std::span<const std::uint32_t> zs, Normalizer mode,
                         UpdateScratch& scratch, SparseGradient& out);

/// Exact gradient of the z-marginalised log-likelihood under the full
/// softmax, written to `out`. Returns log p(c | w) (resp. log p(center | contexts)).
double sd_sg_exact_gradient(const EmbeddingStores& s, WordId w, WordId c, const SdConfig& cfg,
                            UpdateScratch& scratch, SparseGradient& out);
double sd_cbow_exact_gradient(const EmbeddingStores& s, WordId center,
                              std::span<const WordId> contexts, const SdConfig& cfg,
                              UpdateScratch& scratch, SparseGradient& out);

/// One SD-SG step: sample S values of z, apply alpha * direction, then grow
/// the word and context rows by one dimension if any sample hit l + 1 (once
/// per update, skipped at z_cap). The new word-row coordinate is seeded with
/// U(-init_scale, init_scale) noise; the new context coordinate stays 0.
/// Sampled zs are left in scratch.zs.
SdUpdateResult sd_sg_update(EmbeddingStores& s, WordId w, WordId c,
                            std::span<const WordId> negatives, const SdConfig& cfg, double alpha,
                            Rng& rng, UpdateScratch& scratch,
                            Normalizer mode = Normalizer::Sampled);

/// SD-CBOW step: z is shared by the whole window; growth extends the center
/// row and every distinct context row.
SdUpdateResult sd_cbow_update(EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                              std::span<const WordId> negatives, const SdConfig& cfg,
                              double alpha, Rng& rng, UpdateScratch& scratch,
                              Normalizer mode = Normalizer::Sampled);

}  // namespace sdembed
