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

#include "sdembed/sd_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdembed {

namespace {

void check_a(double a) {
  if (!(a > 1.0) || !std::isfinite(a)) throw std::domain_error("a must satisfy 1 < a < inf");
}

void check_finite(std::span<const double> v, const char* name) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite entry in ") + name);
  }
}

}  // namespace

double energy(std::span<const double> w, std::span<const double> c, std::uint32_t z, double a,
              double lambda) {
  if (z == 0) throw std::invalid_argument("z must be >= 1");
  check_finite(w, "w");
  check_finite(c, "c");
  double sum = 0.0;
  for (std::size_t j = 0; j < z; ++j) {
    const double wj = j < w.size() ? w[j] : 0.0;
    const double cj = j < c.size() ? c[j] : 0.0;
    sum += wj * cj - lambda * wj * wj - lambda * cj * cj;
  }
  return static_cast<double>(z) * std::log(a) - sum;
}

double tail_constant(double log_a, TailConvention tail) {
  // 1/(a-1) = 1/expm1(log a); a/(a-1) = 1/(1 - 1/a) = -1/expm1(-log a).
  return tail == TailConvention::Geometric ? 1.0 / std::expm1(log_a) : -1.0 / std::expm1(-log_a);
}

double tail_offset(double log_a, TailConvention tail) {
  return tail == TailConvention::Geometric ? -1.0 / std::expm1(-log_a) : 1.0;
}

void pair_gains(std::span<const double> w, std::span<const double> c, double lambda,
                std::span<double> out) noexcept {
  const std::size_t l = out.size();
  const std::size_t nw = std::min(w.size(), l);
  const std::size_t nc = std::min(c.size(), l);
  const std::size_t both = std::min(nw, nc);
  for (std::size_t j = 0; j < both; ++j) {
    out[j] = w[j] * c[j] - lambda * (w[j] * w[j] + c[j] * c[j]);
  }
  for (std::size_t j = both; j < l; ++j) {
    const double wj = j < nw ? w[j] : 0.0;
    const double cj = j < nc ? c[j] : 0.0;
    out[j] = -lambda * (wj * wj + cj * cj);
  }
}

double log_partition_from_gains(std::span<const double> gains, double log_a,
                                TailConvention tail) noexcept {
  // x_z = -E(z); the tail term is x_l + log C.
  double running = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < gains.size(); ++z) {
    running += gains[z] - log_a;
    best = std::max(best, running);
  }
  const double log_c = std::log(tail_constant(log_a, tail));
  const double x_tail = running + log_c;
  best = std::max(best, x_tail);
  running = 0.0;
  double sum = 0.0;
  for (std::size_t z = 0; z < gains.size(); ++z) {
    running += gains[z] - log_a;
    sum += std::exp(running - best);
  }
  sum += std::exp(x_tail - best);
  return best + std::log(sum);
}

double posterior_from_gains(std::span<const double> gains, double log_a, TailConvention tail,
                            ZPosterior& out) {
  const std::size_t l = gains.size();
  out.probs.resize(l);
  double running = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < l; ++z) {
    running += gains[z] - log_a;
    out.probs[z] = running;
    best = std::max(best, running);
  }
  const double c = tail_constant(log_a, tail);
  const double x_tail = running + std::log(c);
  best = std::max(best, x_tail);
  double sum = 0.0;
  for (std::size_t z = 0; z < l; ++z) {
    out.probs[z] = std::exp(out.probs[z] - best);
    sum += out.probs[z];
  }
  const double last = l > 0 ? out.probs[l - 1] : 0.0;
  sum += c * last;
  const double inv = 1.0 / sum;
  for (auto& p : out.probs) p *= inv;
  out.tail_mass = l > 0 ? c * out.probs[l - 1] : 1.0;
  out.tail_mean = static_cast<double>(l) + tail_offset(log_a, tail);
  out.log_partition = best + std::log(sum);
  return out.log_partition;
}

double log_partition_z(std::span<const double> w, std::span<const double> c, std::uint32_t l,
                       const SdConfig& cfg) {
  check_a(cfg.a);
  if (l == 0) throw std::invalid_argument("l must be >= 1");
  std::vector<double> gains(l);
  pair_gains(w, c, cfg.lambda, gains);
  return log_partition_from_gains(gains, std::log(cfg.a), cfg.tail);
}

ZPosterior z_posterior(std::span<const double> w, std::span<const double> c, std::uint32_t l,
                       const SdConfig& cfg) {
  check_a(cfg.a);
  if (l == 0) throw std::invalid_argument("l must be >= 1");
  std::vector<double> gains(l);
  pair_gains(w, c, cfg.lambda, gains);
  ZPosterior post;
  posterior_from_gains(gains, std::log(cfg.a), cfg.tail, post);
  return post;
}

double marginal_log_prob_unnormalized(std::span<const double> w, std::span<const double> c,
                                      std::uint32_t l, const SdConfig& cfg) {
  return log_partition_z(w, c, l, cfg);
}

std::uint32_t sample_z_with(const ZPosterior& posterior, double u) noexcept {
  double cumulative = 0.0;
  std::uint32_t last_positive = 1;
  for (std::uint32_t z = 0; z < posterior.probs.size(); ++z) {
    const double p = posterior.probs[z];
    cumulative += p;
    if (p > 0.0) last_positive = z + 1;
    if (u < cumulative) return z + 1;
  }
  if (posterior.tail_mass > 0.0) return posterior.l() + 1;
  // u landed in the rounding gap above sum(probs); give it to the last
  // outcome that has mass.
  return last_positive;
}

std::uint32_t sample_z(const ZPosterior& posterior, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return sample_z_with(posterior, uniform(rng));
}

double expected_dimensionality(const ZPosterior& posterior) noexcept {
  double mean = 0.0;
  for (std::size_t z = 0; z < posterior.probs.size(); ++z) {
    mean += static_cast<double>(z + 1) * posterior.probs[z];
  }
  return mean + posterior.tail_mass * posterior.tail_mean;
}

}  // namespace sdembed
