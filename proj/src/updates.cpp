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

#include "sdembed/updates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdembed {

// --- SparseGradient -------------------------------------------------------------

std::span<double> SparseGradient::accumulator(Side side, WordId id, std::size_t len) {
  for (std::size_t i = 0; i < used_; ++i) {
    auto& e = entries_[i];
    if (e.side == side && e.id == id) {
      if (e.values.size() < len) e.values.resize(len, 0.0);
      return e.values;
    }
  }
  if (used_ == entries_.size()) entries_.emplace_back();
  auto& e = entries_[used_++];
  e.side = side;
  e.id = id;
  e.values.assign(len, 0.0);
  return e.values;
}

const SparseGradient::Entry* SparseGradient::find(Side side, WordId id) const noexcept {
  for (std::size_t i = 0; i < used_; ++i) {
    if (entries_[i].side == side && entries_[i].id == id) return &entries_[i];
  }
  return nullptr;
}

void SparseGradient::scale(double factor) noexcept {
  for (std::size_t i = 0; i < used_; ++i) {
    for (auto& v : entries_[i].values) v *= factor;
  }
}

void apply(EmbeddingStores& stores, const SparseGradient& direction, double step) {
  for (const auto& e : direction.entries()) {
    auto row = e.side == Side::Word ? stores.words.row(e.id) : stores.contexts.row(e.id);
    const std::size_t n = std::min(row.size(), e.values.size());
    for (std::size_t j = 0; j < n; ++j) row[j] += step * e.values[j];
  }
}

double cbow_divisor_value(CbowDivisor divisor, int window, std::size_t n_contexts) {
  if (divisor == CbowDivisor::TwoKMinusOne) return static_cast<double>(2 * window - 1);
  return static_cast<double>(n_contexts);
}

namespace {

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x)
inline double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double dot(const double* x, const double* y, std::size_t n) noexcept {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += x[j] * y[j];
  return sum;
}

inline double at(std::span<const double> v, std::size_t j) noexcept {
  return j < v.size() ? v[j] : 0.0;
}

double log_sum_exp(std::span<const double> xs) {
  double best = -std::numeric_limits<double>::infinity();
  for (double x : xs) best = std::max(best, x);
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - best);
  return best + std::log(sum);
}

double clip_bracket(double value, double clip) {
  if (clip <= 0.0) return value;
  return std::clamp(value, -clip, clip);
}

// out[j] = P(z >= j + 1) for j < l.
void fill_tail_cdf(const ZPosterior& post, std::vector<double>& out) {
  const std::size_t l = post.probs.size();
  out.resize(l);
  double acc = post.tail_mass;
  for (std::size_t j = l; j-- > 0;) {
    acc += post.probs[j];
    out[j] = acc;
  }
}

void check_full_vocab(std::size_t v) {
  if (v > kMaxFullSoftmaxVocab) {
    throw std::invalid_argument("full-softmax mode is limited to vocabularies of at most " +
                                std::to_string(kMaxFullSoftmaxVocab) + " words");
  }
}

// Energy at z from gains of length l; dims past l add log_a each.
double energy_at(std::span<const double> gains, double log_a, std::uint32_t z) {
  double sum = 0.0;
  const std::size_t n = std::min<std::size_t>(z, gains.size());
  for (std::size_t j = 0; j < n; ++j) sum += gains[j];
  return static_cast<double>(z) * log_a - sum;
}

// --- skip-gram pieces -------------------------------------------------------------

double sg_log_partition(const EmbeddingStores& s, WordId w, WordId c, const SdConfig& cfg,
                        std::vector<double>& gains) {
  const auto l = pair_l(s.words, s.contexts, w, c);
  gains.resize(l);
  pair_gains(s.words.row(w), s.contexts.row(c), cfg.lambda, gains);
  return log_partition_from_gains(gains, std::log(cfg.a), cfg.tail);
}

// Computes the positive pair posterior into scratch.posterior / tail_cdf.
void sg_prepare(const EmbeddingStores& s, WordId w, WordId c, const SdConfig& cfg,
                UpdateScratch& scratch) {
  const auto l = pair_l(s.words, s.contexts, w, c);
  scratch.gains.resize(l);
  pair_gains(s.words.row(w), s.contexts.row(c), cfg.lambda, scratch.gains);
  posterior_from_gains(scratch.gains, std::log(cfg.a), cfg.tail, scratch.posterior);
  fill_tail_cdf(scratch.posterior, scratch.tail_cdf);
}

// Needs scratch.posterior for (w, c).
double sg_bracket(const EmbeddingStores& s, WordId w, WordId /*c*/,
                  std::span<const WordId> negatives, const SdConfig& cfg, Normalizer mode,
                  UpdateScratch& scratch) {
  const double log_z_pos = scratch.posterior.log_partition;
  auto& log_z = scratch.log_z;
  log_z.clear();
  std::vector<double> gains;
  if (mode == Normalizer::Sampled) {
    log_z.push_back(log_z_pos);
    for (WordId n : negatives) log_z.push_back(sg_log_partition(s, w, n, cfg, gains));
  } else {
    check_full_vocab(s.contexts.rows());
    for (WordId v = 0; v < s.contexts.rows(); ++v) {
      log_z.push_back(sg_log_partition(s, w, v, cfg, gains));
    }
  }
  return log_z_pos - log_sum_exp(log_z);
}

// d log q(z_hat) added with weight `coef`, using scratch.posterior/tail_cdf.
void sg_score_term(std::span<const double> wr, std::span<const double> cr, double lambda,
                   std::uint32_t z_hat, double coef, std::span<const double> tail_cdf,
                   std::span<double> dw, std::span<double> dc) {
  for (std::size_t j = 0; j < wr.size(); ++j) {
    const double ind = j < z_hat ? 1.0 : 0.0;
    dw[j] += coef * (at(cr, j) - 2.0 * lambda * wr[j]) * (ind - tail_cdf[j]);
  }
  for (std::size_t j = 0; j < cr.size(); ++j) {
    const double ind = j < z_hat ? 1.0 : 0.0;
    dc[j] += coef * (at(wr, j) - 2.0 * lambda * cr[j]) * (ind - tail_cdf[j]);
  }
}

// Accumulates -sum_v p(v|w) grad log Z(w, c_v) into out.
void sg_full_normalizer(const EmbeddingStores& s, WordId w, const SdConfig& cfg,
                        std::span<const double> log_z, double log_norm, double weight,
                        SparseGradient& out) {
  const auto wr = s.words.row(w);
  std::vector<double> gains;
  std::vector<double> cdf;
  ZPosterior post;
  for (WordId v = 0; v < s.contexts.rows(); ++v) {
    const double p = std::exp(log_z[v] - log_norm) * weight;
    const auto cr = s.contexts.row(v);
    const auto l = pair_l(s.words, s.contexts, w, v);
    gains.resize(l);
    pair_gains(wr, cr, cfg.lambda, gains);
    posterior_from_gains(gains, std::log(cfg.a), cfg.tail, post);
    fill_tail_cdf(post, cdf);
    auto dw = out.accumulator(Side::Word, w, wr.size());
    for (std::size_t j = 0; j < wr.size(); ++j) {
      dw[j] -= p * (at(cr, j) - 2.0 * cfg.lambda * wr[j]) * cdf[j];
    }
    auto dc = out.accumulator(Side::Context, v, cr.size());
    for (std::size_t j = 0; j < cr.size(); ++j) {
      dc[j] -= p * (at(wr, j) - 2.0 * cfg.lambda * cr[j]) * cdf[j];
    }
  }
}

double sg_direction_prepared(const EmbeddingStores& s, WordId w, WordId c,
                             std::span<const WordId> negatives, const SdConfig& cfg,
                             std::span<const std::uint32_t> zs, Normalizer mode,
                             UpdateScratch& scratch, SparseGradient& out) {
  const double lambda = cfg.lambda;
  const double log_lik = sg_bracket(s, w, c, negatives, cfg, mode, scratch);
  const double coef = clip_bracket(log_lik, cfg.bracket_clip) - 1.0;
  const auto wr = s.words.row(w);
  const auto cr = s.contexts.row(c);
  const double log_a = std::log(cfg.a);
  double first_loss = 0.0;

  for (std::size_t si = 0; si < zs.size(); ++si) {
    const auto z_hat = zs[si];
    double loss = 0.0;
    if (mode == Normalizer::Sampled) {
      loss = sg_ns_direction(s, w, c, negatives, z_hat, out);
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, wr.size()); ++j) {
        loss += lambda * wr[j] * wr[j];
      }
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, cr.size()); ++j) {
        loss += lambda * cr[j] * cr[j];
      }
    } else {
      loss = energy_at(scratch.gains, log_a, z_hat) + (scratch.posterior.log_partition - log_lik);
    }
    auto dw = out.accumulator(Side::Word, w, wr.size());
    auto dc = out.accumulator(Side::Context, c, cr.size());
    if (mode == Normalizer::Sampled) {
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, wr.size()); ++j) {
        dw[j] -= 2.0 * lambda * wr[j];
      }
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, cr.size()); ++j) {
        dc[j] -= 2.0 * lambda * cr[j];
      }
    } else {
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, wr.size()); ++j) {
        dw[j] += at(cr, j) - 2.0 * lambda * wr[j];
      }
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, cr.size()); ++j) {
        dc[j] += at(wr, j) - 2.0 * lambda * cr[j];
      }
    }
    sg_score_term(wr, cr, lambda, z_hat, coef, scratch.tail_cdf, dw, dc);
    if (si == 0) first_loss = loss;
  }
  out.scale(1.0 / static_cast<double>(zs.size()));
  if (mode == Normalizer::Full) {
    const double log_norm = scratch.posterior.log_partition - log_lik;
    sg_full_normalizer(s, w, cfg, scratch.log_z, log_norm, 1.0, out);
  }
  return first_loss;
}

// --- CBOW pieces -------------------------------------------------------------------

std::uint32_t window_l(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts) {
  std::uint32_t l = s.words.active_len(center);
  for (WordId k : contexts) l = std::max(l, s.contexts.active_len(k));
  return l;
}

// Averaged gains (1/D) sum_k g(w, c_k) over l dims.
void cbow_gains(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                double lambda, double divisor, std::uint32_t l, std::vector<double>& out) {
  out.assign(l, 0.0);
  const auto wr = s.words.row(center);
  const double m = static_cast<double>(contexts.size());
  for (std::size_t j = 0; j < std::min<std::size_t>(l, wr.size()); ++j) {
    out[j] = -lambda * m * wr[j] * wr[j];
  }
  for (WordId k : contexts) {
    const auto cr = s.contexts.row(k);
    const std::size_t n = std::min<std::size_t>(l, cr.size());
    for (std::size_t j = 0; j < n; ++j) {
      out[j] += at(wr, j) * cr[j] - lambda * cr[j] * cr[j];
    }
  }
  const double inv = 1.0 / divisor;
  for (auto& g : out) g *= inv;
}

double cbow_log_a(const SdConfig& cfg, std::size_t n_contexts, double divisor) {
  return static_cast<double>(n_contexts) / divisor * std::log(cfg.a);
}

double cbow_log_partition(const EmbeddingStores& s, WordId center,
                          std::span<const WordId> contexts, const SdConfig& cfg, double divisor,
                          std::vector<double>& gains) {
  const auto l = window_l(s, center, contexts);
  cbow_gains(s, center, contexts, cfg.lambda, divisor, l, gains);
  return log_partition_from_gains(gains, cbow_log_a(cfg, contexts.size(), divisor), cfg.tail);
}

void cbow_prepare(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                  const SdConfig& cfg, double divisor, UpdateScratch& scratch) {
  const auto l = window_l(s, center, contexts);
  cbow_gains(s, center, contexts, cfg.lambda, divisor, l, scratch.gains);
  posterior_from_gains(scratch.gains, cbow_log_a(cfg, contexts.size(), divisor), cfg.tail,
                       scratch.posterior);
  fill_tail_cdf(scratch.posterior, scratch.tail_cdf);
}

double cbow_bracket(const EmbeddingStores& s, WordId /*center*/, std::span<const WordId> contexts,
                    std::span<const WordId> negatives, const SdConfig& cfg, double divisor,
                    Normalizer mode, UpdateScratch& scratch) {
  const double log_z_pos = scratch.posterior.log_partition;
  auto& log_z = scratch.log_z;
  log_z.clear();
  std::vector<double> gains;
  if (mode == Normalizer::Sampled) {
    log_z.push_back(log_z_pos);
    for (WordId n : negatives) {
      log_z.push_back(cbow_log_partition(s, n, contexts, cfg, divisor, gains));
    }
  } else {
    check_full_vocab(s.words.rows());
    for (WordId v = 0; v < s.words.rows(); ++v) {
      log_z.push_back(cbow_log_partition(s, v, contexts, cfg, divisor, gains));
    }
  }
  return log_z_pos - log_sum_exp(log_z);
}

// Adds `weight` * d(-E_bar(z))/d params for dims selected by factor(j):
// center gets (1/D)(S_j - 2 lambda m w_j), context k gets (1/D)(w_j - 2 lambda c_kj).
template <typename Factor>
void cbow_energy_term(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                      double lambda, double divisor, double weight, Factor&& factor,
                      std::vector<double>& sums, SparseGradient& out) {
  const auto wr = s.words.row(center);
  const double m = static_cast<double>(contexts.size());
  const double inv = weight / divisor;
  sums.assign(wr.size(), 0.0);
  for (WordId k : contexts) {
    const auto cr = s.contexts.row(k);
    const std::size_t n = std::min(cr.size(), wr.size());
    for (std::size_t j = 0; j < n; ++j) sums[j] += cr[j];
  }
  auto dw = out.accumulator(Side::Word, center, wr.size());
  for (std::size_t j = 0; j < wr.size(); ++j) {
    dw[j] += inv * (sums[j] - 2.0 * lambda * m * wr[j]) * factor(j);
  }
  for (WordId k : contexts) {
    const auto cr = s.contexts.row(k);
    auto dc = out.accumulator(Side::Context, k, cr.size());
    for (std::size_t j = 0; j < cr.size(); ++j) {
      dc[j] += inv * (at(wr, j) - 2.0 * lambda * cr[j]) * factor(j);
    }
  }
}

void cbow_full_normalizer(const EmbeddingStores& s, std::span<const WordId> contexts,
                          const SdConfig& cfg, double divisor, std::span<const double> log_z,
                          double log_norm, SparseGradient& out) {
  std::vector<double> gains;
  std::vector<double> cdf;
  std::vector<double> sums;
  ZPosterior post;
  const double log_a = cbow_log_a(cfg, contexts.size(), divisor);
  for (WordId v = 0; v < s.words.rows(); ++v) {
    const double p = std::exp(log_z[v] - log_norm);
    const auto l = window_l(s, v, contexts);
    cbow_gains(s, v, contexts, cfg.lambda, divisor, l, gains);
    posterior_from_gains(gains, log_a, cfg.tail, post);
    fill_tail_cdf(post, cdf);
    cbow_energy_term(s, v, contexts, cfg.lambda, divisor, -p,
                     [&](std::size_t j) { return cdf[j]; }, sums, out);
  }
}

// Negative-sampling CBOW core; hidden is the averaged context vector over
// the first min(dims, longest context) dimensions.
double cbow_ns_accumulate(const EmbeddingStores& s, WordId center,
                          std::span<const WordId> contexts, std::span<const WordId> negatives,
                          std::uint32_t dims, double divisor, std::vector<double>& hidden,
                          std::vector<double>& hidden_grad, SparseGradient* out) {
  std::size_t h_len = 0;
  for (WordId k : contexts) h_len = std::max<std::size_t>(h_len, s.contexts.active_len(k));
  h_len = std::min<std::size_t>(h_len, dims);
  hidden.assign(h_len, 0.0);
  hidden_grad.assign(h_len, 0.0);
  const double inv = 1.0 / divisor;
  for (WordId k : contexts) {
    const auto cr = s.contexts.row(k);
    const std::size_t n = std::min(cr.size(), h_len);
    for (std::size_t j = 0; j < n; ++j) hidden[j] += cr[j];
  }
  for (auto& h : hidden) h *= inv;

  double loss = 0.0;
  auto target = [&](WordId id, bool positive) {
    const auto wr = s.words.row(id);
    const std::size_t n = std::min(wr.size(), h_len);
    const double f = dot(wr.data(), hidden.data(), n);
    loss += positive ? softplus(-f) : softplus(f);
    if (out == nullptr) return;
    const double g = (positive ? 1.0 : 0.0) - sigmoid(f);
    auto dwv = out->accumulator(Side::Word, id, wr.size());
    for (std::size_t j = 0; j < n; ++j) {
      dwv[j] += g * hidden[j];
      hidden_grad[j] += g * wr[j];
    }
  };
  target(center, true);
  for (WordId n : negatives) target(n, false);
  if (out != nullptr) {
    for (WordId k : contexts) {
      const auto cr = s.contexts.row(k);
      auto dc = out->accumulator(Side::Context, k, cr.size());
      const std::size_t n = std::min(cr.size(), h_len);
      for (std::size_t j = 0; j < n; ++j) dc[j] += hidden_grad[j] * inv;
    }
  }
  return loss;
}

double cbow_penalty(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                    double lambda, double divisor, std::uint32_t z) {
  const auto wr = s.words.row(center);
  const double m = static_cast<double>(contexts.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < std::min<std::size_t>(z, wr.size()); ++j) sum += m * wr[j] * wr[j];
  for (WordId k : contexts) {
    const auto cr = s.contexts.row(k);
    for (std::size_t j = 0; j < std::min<std::size_t>(z, cr.size()); ++j) sum += cr[j] * cr[j];
  }
  return lambda / divisor * sum;
}

double cbow_direction_prepared(const EmbeddingStores& s, WordId center,
                               std::span<const WordId> contexts,
                               std::span<const WordId> negatives, const SdConfig& cfg,
                               double divisor, std::span<const std::uint32_t> zs,
                               Normalizer mode, UpdateScratch& scratch, SparseGradient& out) {
  const double lambda = cfg.lambda;
  const double log_lik =
      cbow_bracket(s, center, contexts, negatives, cfg, divisor, mode, scratch);
  const double coef = clip_bracket(log_lik, cfg.bracket_clip) - 1.0;
  const double log_a = cbow_log_a(cfg, contexts.size(), divisor);
  std::vector<double> sums;
  double first_loss = 0.0;

  for (std::size_t si = 0; si < zs.size(); ++si) {
    const auto z_hat = zs[si];
    double loss = 0.0;
    if (mode == Normalizer::Sampled) {
      loss = cbow_ns_accumulate(s, center, contexts, negatives, z_hat, divisor, scratch.hidden,
                                scratch.hidden_grad, &out);
      loss += cbow_penalty(s, center, contexts, lambda, divisor, z_hat);
      // L2 part of the energy: -(2 lambda / D) (m w_j, c_kj) for j < z_hat.
      const auto wr = s.words.row(center);
      const double m = static_cast<double>(contexts.size());
      auto dw = out.accumulator(Side::Word, center, wr.size());
      for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, wr.size()); ++j) {
        dw[j] -= 2.0 * lambda * m / divisor * wr[j];
      }
      for (WordId k : contexts) {
        const auto cr = s.contexts.row(k);
        auto dc = out.accumulator(Side::Context, k, cr.size());
        for (std::size_t j = 0; j < std::min<std::size_t>(z_hat, cr.size()); ++j) {
          dc[j] -= 2.0 * lambda / divisor * cr[j];
        }
      }
    } else {
      loss = energy_at(scratch.gains, log_a, z_hat) + (scratch.posterior.log_partition - log_lik);
      cbow_energy_term(s, center, contexts, lambda, divisor, 1.0,
                       [&](std::size_t j) { return j < z_hat ? 1.0 : 0.0; }, sums, out);
    }
    const auto& cdf = scratch.tail_cdf;
    cbow_energy_term(s, center, contexts, lambda, divisor, coef,
                     [&](std::size_t j) { return (j < z_hat ? 1.0 : 0.0) - cdf[j]; }, sums, out);
    if (si == 0) first_loss = loss;
  }
  out.scale(1.0 / static_cast<double>(zs.size()));
  if (mode == Normalizer::Full) {
    const double log_norm = scratch.posterior.log_partition - log_lik;
    cbow_full_normalizer(s, contexts, cfg, divisor, scratch.log_z, log_norm, out);
  }
  return first_loss;
}

void sample_zs(const ZPosterior& post, int count, Rng& rng, std::vector<std::uint32_t>& zs) {
  zs.resize(static_cast<std::size_t>(count));
  for (auto& z : zs) z = sample_z(post, rng);
}

void seed_new_dimension(GrowableMatrix& words, WordId w, double scale, Rng& rng) {
  std::uniform_real_distribution<double> uniform(-scale, scale);
  const auto len = words.grow_row(w);
  words.row(w)[len - 1] = uniform(rng);
}

}  // namespace

// --- Baselines ----------------------------------------------------------------------

double sg_ns_loss(const EmbeddingStores& s, WordId w, WordId c, std::span<const WordId> negatives,
                  std::uint32_t dims) {
  const auto wr = s.words.row(w);
  auto one = [&](WordId id, bool positive) {
    const auto cr = s.contexts.row(id);
    const std::size_t n = std::min<std::size_t>({dims, wr.size(), cr.size()});
    const double f = dot(wr.data(), cr.data(), n);
    return positive ? softplus(-f) : softplus(f);
  };
  double loss = one(c, true);
  for (WordId n : negatives) loss += one(n, false);
  return loss;
}

double sg_ns_direction(const EmbeddingStores& s, WordId w, WordId c,
                       std::span<const WordId> negatives, std::uint32_t dims,
                       SparseGradient& out) {
  const auto wr = s.words.row(w);
  auto dw = out.accumulator(Side::Word, w, wr.size());
  double loss = 0.0;
  auto target = [&](WordId id, bool positive) {
    const auto cr = s.contexts.row(id);
    const std::size_t n = std::min<std::size_t>({dims, wr.size(), cr.size()});
    const double f = dot(wr.data(), cr.data(), n);
    loss += positive ? softplus(-f) : softplus(f);
    const double g = (positive ? 1.0 : 0.0) - sigmoid(f);
    auto dc = out.accumulator(Side::Context, id, cr.size());
    for (std::size_t j = 0; j < n; ++j) {
      dw[j] += g * cr[j];
      dc[j] += g * wr[j];
    }
  };
  target(c, true);
  for (WordId n : negatives) target(n, false);
  return loss;
}

double sg_update(EmbeddingStores& s, WordId w, WordId c, std::span<const WordId> negatives,
                 std::uint32_t dims, double alpha, UpdateScratch& scratch) {
  scratch.direction.clear();
  const double loss = sg_ns_direction(s, w, c, negatives, dims, scratch.direction);
  apply(s, scratch.direction, alpha);
  return loss;
}

double cbow_ns_loss(const EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                    std::span<const WordId> negatives, std::uint32_t dims, double divisor) {
  std::vector<double> hidden;
  std::vector<double> hidden_grad;
  return cbow_ns_accumulate(s, center, contexts, negatives, dims, divisor, hidden, hidden_grad,
                            nullptr);
}

double cbow_ns_direction(const EmbeddingStores& s, WordId center,
                         std::span<const WordId> contexts, std::span<const WordId> negatives,
                         std::uint32_t dims, double divisor, SparseGradient& out) {
  std::vector<double> hidden;
  std::vector<double> hidden_grad;
  return cbow_ns_accumulate(s, center, contexts, negatives, dims, divisor, hidden, hidden_grad,
                            &out);
}

double cbow_update(EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                   std::span<const WordId> negatives, std::uint32_t dims, double alpha,
                   double divisor, UpdateScratch& scratch) {
  if (contexts.empty()) throw std::invalid_argument("cbow_update needs at least one context");
  scratch.direction.clear();
  const double loss = cbow_ns_accumulate(s, center, contexts, negatives, dims, divisor,
                                         scratch.hidden, scratch.hidden_grad, &scratch.direction);
  apply(s, scratch.direction, alpha);
  return loss;
}

// --- Stochastic dimensionality: public pieces -------------------------------------------

double sd_sg_ns_objective(const EmbeddingStores& s, WordId w, WordId c,
                          std::span<const WordId> negatives, double lambda, std::uint32_t z) {
  double loss = sg_ns_loss(s, w, c, negatives, z);
  const auto wr = s.words.row(w);
  const auto cr = s.contexts.row(c);
  for (std::size_t j = 0; j < std::min<std::size_t>(z, wr.size()); ++j) {
    loss += lambda * wr[j] * wr[j];
  }
  for (std::size_t j = 0; j < std::min<std::size_t>(z, cr.size()); ++j) {
    loss += lambda * cr[j] * cr[j];
  }
  return loss;
}

double sd_cbow_ns_objective(const EmbeddingStores& s, WordId center,
                            std::span<const WordId> contexts, std::span<const WordId> negatives,
                            double lambda, double divisor, std::uint32_t z) {
  return cbow_ns_loss(s, center, contexts, negatives, z, divisor) +
         cbow_penalty(s, center, contexts, lambda, divisor, z);
}

double sd_sg_log_likelihood(const EmbeddingStores& s, WordId w, WordId c,
                            std::span<const WordId> negatives, const SdConfig& cfg,
                            Normalizer mode) {
  UpdateScratch scratch;
  sg_prepare(s, w, c, cfg, scratch);
  return sg_bracket(s, w, c, negatives, cfg, mode, scratch);
}

double sd_cbow_log_likelihood(const EmbeddingStores& s, WordId center,
                              std::span<const WordId> contexts,
                              std::span<const WordId> negatives, const SdConfig& cfg,
                              Normalizer mode) {
  UpdateScratch scratch;
  const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, contexts.size());
  cbow_prepare(s, center, contexts, cfg, divisor, scratch);
  return cbow_bracket(s, center, contexts, negatives, cfg, divisor, mode, scratch);
}

ZPosterior sd_cbow_posterior(const EmbeddingStores& s, WordId center,
                             std::span<const WordId> contexts, const SdConfig& cfg) {
  if (contexts.empty()) throw std::invalid_argument("window has no contexts");
  UpdateScratch scratch;
  const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, contexts.size());
  cbow_prepare(s, center, contexts, cfg, divisor, scratch);
  return scratch.posterior;
}

double sd_sg_direction(const EmbeddingStores& s, WordId w, WordId c,
                       std::span<const WordId> negatives, const SdConfig& cfg,
                       std::span<const std::uint32_t> zs, Normalizer mode,
                       UpdateScratch& scratch, SparseGradient& out) {
  if (zs.empty()) throw std::invalid_argument("need at least one z sample");
  out.clear();
  sg_prepare(s, w, c, cfg, scratch);
  return sg_direction_prepared(s, w, c, negatives, cfg, zs, mode, scratch, out);
}

double sd_cbow_direction(const EmbeddingStores& s, WordId center,
                         std::span<const WordId> contexts, std::span<const WordId> negatives,
                         const SdConfig& cfg, std::span<const std::uint32_t> zs, Normalizer mode,
                         UpdateScratch& scratch, SparseGradient& out) {
  if (zs.empty()) throw std::invalid_argument("need at least one z sample");
  if (contexts.empty()) throw std::invalid_argument("window has no contexts");
  out.clear();
  const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, contexts.size());
  cbow_prepare(s, center, contexts, cfg, divisor, scratch);
  return cbow_direction_prepared(s, center, contexts, negatives, cfg, divisor, zs, mode, scratch,
                                 out);
}

double sd_sg_exact_gradient(const EmbeddingStores& s, WordId w, WordId c, const SdConfig& cfg,
                            UpdateScratch& scratch, SparseGradient& out) {
  out.clear();
  sg_prepare(s, w, c, cfg, scratch);
  const double log_lik = sg_bracket(s, w, c, {}, cfg, Normalizer::Full, scratch);
  const auto wr = s.words.row(w);
  const auto cr = s.contexts.row(c);
  const auto& cdf = scratch.tail_cdf;
  auto dw = out.accumulator(Side::Word, w, wr.size());
  auto dc = out.accumulator(Side::Context, c, cr.size());
  for (std::size_t j = 0; j < wr.size(); ++j) {
    dw[j] += (at(cr, j) - 2.0 * cfg.lambda * wr[j]) * cdf[j];
  }
  for (std::size_t j = 0; j < cr.size(); ++j) {
    dc[j] += (at(wr, j) - 2.0 * cfg.lambda * cr[j]) * cdf[j];
  }
  const double log_norm = scratch.posterior.log_partition - log_lik;
  sg_full_normalizer(s, w, cfg, scratch.log_z, log_norm, 1.0, out);
  return log_lik;
}

double sd_cbow_exact_gradient(const EmbeddingStores& s, WordId center,
                              std::span<const WordId> contexts, const SdConfig& cfg,
                              UpdateScratch& scratch, SparseGradient& out) {
  out.clear();
  if (contexts.empty()) throw std::invalid_argument("window has no contexts");
  const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, contexts.size());
  cbow_prepare(s, center, contexts, cfg, divisor, scratch);
  const double log_lik =
      cbow_bracket(s, center, contexts, {}, cfg, divisor, Normalizer::Full, scratch);
  std::vector<double> sums;
  const auto cdf = scratch.tail_cdf;
  cbow_energy_term(s, center, contexts, cfg.lambda, divisor, 1.0,
                   [&](std::size_t j) { return cdf[j]; }, sums, out);
  const double log_norm = scratch.posterior.log_partition - log_lik;
  cbow_full_normalizer(s, contexts, cfg, divisor, scratch.log_z, log_norm, out);
  return log_lik;
}

// --- Stochastic dimensionality: update steps -----------------------------------------------

SdUpdateResult sd_sg_update(EmbeddingStores& s, WordId w, WordId c,
                            std::span<const WordId> negatives, const SdConfig& cfg, double alpha,
                            Rng& rng, UpdateScratch& scratch, Normalizer mode) {
  sg_prepare(s, w, c, cfg, scratch);
  const auto l = scratch.posterior.l();
  sample_zs(scratch.posterior, cfg.mc_samples, rng, scratch.zs);
  const bool hit_tail =
      std::any_of(scratch.zs.begin(), scratch.zs.end(), [&](auto z) { return z > l; });

  scratch.direction.clear();
  SdUpdateResult result;
  result.loss = sg_direction_prepared(s, w, c, negatives, cfg, scratch.zs, mode, scratch,
                                      scratch.direction);
  apply(s, scratch.direction, alpha);

  if (hit_tail) {
    if (l >= cfg.z_cap) {
      result.capped = true;
    } else {
      seed_new_dimension(s.words, w, cfg.effective_init_scale(), rng);
      s.contexts.grow_row(c);
      result.grew = true;
    }
  }
  return result;
}

SdUpdateResult sd_cbow_update(EmbeddingStores& s, WordId center, std::span<const WordId> contexts,
                              std::span<const WordId> negatives, const SdConfig& cfg,
                              double alpha, Rng& rng, UpdateScratch& scratch, Normalizer mode) {
  if (contexts.empty()) throw std::invalid_argument("window has no contexts");
  const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, contexts.size());
  cbow_prepare(s, center, contexts, cfg, divisor, scratch);
  const auto l = scratch.posterior.l();
  sample_zs(scratch.posterior, cfg.mc_samples, rng, scratch.zs);
  const bool hit_tail =
      std::any_of(scratch.zs.begin(), scratch.zs.end(), [&](auto z) { return z > l; });

  scratch.direction.clear();
  SdUpdateResult result;
  result.loss = cbow_direction_prepared(s, center, contexts, negatives, cfg, divisor, scratch.zs,
                                        mode, scratch, scratch.direction);
  apply(s, scratch.direction, alpha);

  if (hit_tail) {
    if (l >= cfg.z_cap) {
      result.capped = true;
    } else {
      seed_new_dimension(s.words, center, cfg.effective_init_scale(), rng);
      for (std::size_t i = 0; i < contexts.size(); ++i) {
        const auto k = contexts[i];
        if (std::find(contexts.begin(), contexts.begin() + static_cast<std::ptrdiff_t>(i), k) ==
            contexts.begin() + static_cast<std::ptrdiff_t>(i)) {
          s.contexts.grow_row(k);
        }
      }
      result.grew = true;
    }
  }
  return result;
}

}  // namespace sdembed
