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

namespace sdembed {

/// Posterior over the inner-product length z for one (word, context) pair
/// (or one CBOW window): explicit probabilities for z = 1..l plus the mass
/// of the geometric remainder z > l.
struct ZPosterior {
  std::vector<double> probs;  // probs[z - 1] = p(z | .)
  double tail_mass = 0.0;     // P(z > l | .)
  double tail_mean = 0.0;     // E[z | z > l]
  double log_partition = 0.0;

  std::uint32_t l() const noexcept { return static_cast<std::uint32_t>(probs.size()); }
};

/// E(w, c, z) = z ln a - sum_{j<=z} (w_j c_j - lambda w_j^2 - lambda c_j^2).
/// Entries past a span's end read as zero. Throws std::invalid_argument on
/// non-finite entries or z == 0.
double energy(std::span<const double> w, std::span<const double> c, std::uint32_t z, double a,
              double lambda);

/// Tail constant C for a per-dimension log-penalty `log_a` (a = e^{log_a}).
double tail_constant(double log_a, TailConvention tail);

/// E[z | z > l] - l: a/(a-1) under the geometric tail, 1 under the Paper
/// constant (its tail is treated as an atom at l + 1).
double tail_offset(double log_a, TailConvention tail);

// The *_from_gains routines work on the per-dimension gains
// g_j = w_j c_j - lambda (w_j^2 + c_j^2), so that E(z) = z log_a - sum_{j<=z} g_j.
// gains.size() is l. CBOW windows pass averaged gains and a scaled log_a.

/// Writes g_j for j < out.size(), zero-padding either input.
void pair_gains(std::span<const double> w, std::span<const double> c, double lambda,
                std::span<double> out) noexcept;

double log_partition_from_gains(std::span<const double> gains, double log_a,
                                TailConvention tail) noexcept;

/// Fills `out` and returns its log partition.
double posterior_from_gains(std::span<const double> gains, double log_a, TailConvention tail,
                            ZPosterior& out);

/// log [ sum_{z=1}^{l} e^{-E(z)} + C(a) e^{-E(l)} ]. Throws std::domain_error
/// when a <= 1 and std::invalid_argument when l == 0.
double log_partition_z(std::span<const double> w, std::span<const double> c, std::uint32_t l,
                       const SdConfig& cfg);

ZPosterior z_posterior(std::span<const double> w, std::span<const double> c, std::uint32_t l,
                       const SdConfig& cfg);

/// The z-marginalised unnormalised score of a pair. Same value as
/// log_partition_z; the vocabulary normaliser is applied by callers.
double marginal_log_prob_unnormalized(std::span<const double> w, std::span<const double> c,
                                      std::uint32_t l, const SdConfig& cfg);

/// Draws z in 1..l+1; l + 1 stands for the whole tail.
std::uint32_t sample_z(const ZPosterior& posterior, Rng& rng);

/// Same as sample_z but with an externally supplied uniform in [0, 1).
std::uint32_t sample_z_with(const ZPosterior& posterior, double u) noexcept;

double expected_dimensionality(const ZPosterior& posterior) noexcept;

}  // namespace sdembed
