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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reference_oracle.hpp"
#include "sdembed/corpus.hpp"
#include "sdembed/evaluation.hpp"
#include "sdembed/sd_core.hpp"
#include "sdembed/trainer.hpp"
#include "sdembed/updates.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace sdembed;
using testing_support::close;
using testing_support::random_model;
using testing_support::random_vec;
using testing_support::to_model_gradient;
using testing_support::to_stores;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SdConfig sd_cfg(double a, double lambda) {
  SdConfig cfg;
  cfg.a = a;
  cfg.lambda = lambda;
  return cfg;
}

// Visits every coordinate of two gradients laid out like `shape`.
void for_each_coord(const oracle::ModelGradient& x, const oracle::ModelGradient& y,
                    const std::function<void(double, double)>& f) {
  for (std::size_t r = 0; r < x.words.size(); ++r) {
    for (std::size_t j = 0; j < x.words[r].size(); ++j) f(x.words[r][j], y.words[r][j]);
  }
  for (std::size_t r = 0; r < x.contexts.size(); ++r) {
    for (std::size_t j = 0; j < x.contexts[r].size(); ++j) f(x.contexts[r][j], y.contexts[r][j]);
  }
}

oracle::ModelGradient combine(const oracle::ModelGradient& x, double fx,
                              const oracle::ModelGradient& y, double fy) {
  auto out = x;
  for (std::size_t r = 0; r < out.words.size(); ++r) {
    for (std::size_t j = 0; j < out.words[r].size(); ++j) out.words[r][j] = fx * x.words[r][j] + fy * y.words[r][j];
  }
  for (std::size_t r = 0; r < out.contexts.size(); ++r) {
    for (std::size_t j = 0; j < out.contexts[r].size(); ++j) {
      out.contexts[r][j] = fx * x.contexts[r][j] + fy * y.contexts[r][j];
    }
  }
  return out;
}

// Counts coordinates outside |got - want| <= rel * max(|got|, |want|) + 1e-9;
// `worst` is the largest share of that allowance used.
std::size_t mismatches(const oracle::ModelGradient& got, const oracle::ModelGradient& want, double rel,
                       double& worst) {
  std::size_t bad = 0;
  for_each_coord(got, want, [&](double g, double w) {
    const double scale = std::max(std::abs(g), std::abs(w));
    worst = std::max(worst, std::abs(g - w) / (rel * scale + 1e-9));
    if (!close(g, w, rel, 1e-9)) ++bad;
  });
  return bad;
}

struct RandomPair {
  oracle::Vec w;
  oracle::Vec c;
  double a;
  double lambda;
};

// The partition sweep shared by criteria 1 and 2.
std::vector<RandomPair> partition_sweep() {
  const double as[] = {1.05, 1.1, 2.0, 10.0};
  const double lambdas[] = {0.0, 1e-4, 0.1};
  std::mt19937_64 rng(20261017);
  std::uniform_int_distribution<std::size_t> dims(1, 20);
  std::vector<RandomPair> out;
  for (int i = 0; i < 1000; ++i) {
    RandomPair p;
    p.w = random_vec(rng, dims(rng), 1.0);
    p.c = random_vec(rng, dims(rng), 1.0);
    p.a = as[i % 4];
    p.lambda = lambdas[(i / 4) % 3];
    out.push_back(std::move(p));
  }
  return out;
}

std::uint32_t len_of(const RandomPair& p) { return static_cast<std::uint32_t>(std::max(p.w.size(), p.c.size())); }

// --- 1 -------------------------------------------------------------------------------------------

Outcome partition_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& p : partition_sweep()) {
    const auto l = len_of(p);
    const auto h = l + static_cast<std::uint32_t>(std::ceil(50.0 / std::log(p.a)));
    const double got = log_partition_z(p.w, p.c, l, sd_cfg(p.a, p.lambda));
    const double want = oracle::brute_partition_z(p.w, p.c, {p.a, p.lambda}, h);
    worst = std::max(worst, std::abs(got - want));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0,
          "max |log Z - brute| = " + fmt("%.3g", worst) + " over 1000 pairs (limit 1e-9), " + fmt("%.2f", secs) + " s"};
}

// --- 2 -------------------------------------------------------------------------------------------

Outcome tail_identity() {
  double worst_log = 0.0;
  double worst_direct = 0.0;
  int direct = 0;
  for (const auto& p : partition_sweep()) {
    const auto l = len_of(p);
    auto cfg = sd_cfg(p.a, p.lambda);
    const double log_g = log_partition_z(p.w, p.c, l, cfg);
    cfg.tail = TailConvention::Paper;
    const double log_p = log_partition_z(p.w, p.c, l, cfg);
    const double neg_e = -energy(p.w, p.c, l, p.a, p.lambda);
    // log(Zg + e^{-E(l)}) is the identity in relative form on Z.
    const double hi = std::max(log_g, neg_e);
    const double want = hi + std::log(std::exp(log_g - hi) + std::exp(neg_e - hi));
    worst_log = std::max(worst_log, std::abs(log_p - want));
    if (std::exp(neg_e - log_g) > 1e-3) {
      ++direct;
      const double diff = std::exp(log_p - neg_e) - std::exp(log_g - neg_e);
      worst_direct = std::max(worst_direct, std::abs(diff - 1.0));
    }
  }
  return {worst_log <= 1e-9 && worst_direct <= 1e-9,
          "max |log Zp - log(Zg + e^-E(l))| = " + fmt("%.3g", worst_log) + "; direct (Zp - Zg)/e^-E(l) - 1 = " +
              fmt("%.3g", worst_direct) + " on " + std::to_string(direct) + " pairs with e^-E(l)/Z > 1e-3 (limit 1e-9)"};
}

// --- 3 -------------------------------------------------------------------------------------------

Outcome geometric_law() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = sd_cfg(2.0, 1e-4);
  double worst = 0.0;
  for (std::uint32_t l = 1; l <= 30; ++l) {
    const std::vector<double> zero(l, 0.0);
    const auto post = z_posterior(zero, zero, l, cfg);
    for (std::uint32_t z = 1; z <= l; ++z) worst = std::max(worst, std::abs(post.probs[z - 1] - std::ldexp(1.0, -static_cast<int>(z))));
    worst = std::max(worst, std::abs(post.tail_mass - std::ldexp(1.0, -static_cast<int>(l))));
  }
  const std::uint32_t l = 5;
  const std::vector<double> zero(l, 0.0);
  const auto post = z_posterior(zero, zero, l, cfg);
  const int n = 1'000'000;
  std::vector<int> counts(l + 2, 0);
  Rng rng(3);
  for (int i = 0; i < n; ++i) ++counts[sample_z(post, rng)];
  double worst_sigma = 0.0;
  for (std::uint32_t z = 1; z <= l + 1; ++z) {
    const double p = z <= l ? std::ldexp(1.0, -static_cast<int>(z)) : std::ldexp(1.0, -static_cast<int>(l));
    const double sigma = std::sqrt(n * p * (1 - p));
    worst_sigma = std::max(worst_sigma, std::abs(counts[z] - n * p) / sigma);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && worst_sigma <= 3.0 && secs < 5.0,
          "max |p - 2^-z| = " + fmt("%.3g", worst) + " for l = 1..30 (limit 1e-12); 10^6 draws at l = 5 within " +
              fmt("%.2f", worst_sigma) + " sigma (limit 3), " + fmt("%.2f", secs) + " s"};
}

// --- 4 -------------------------------------------------------------------------------------------

Outcome gradient_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  std::size_t bad_full = 0;
  std::size_t bad_ns = 0;
  double worst_full = 0.0;
  double worst_ns = 0.0;
  using Ids = std::vector<std::size_t>;
  auto ids = [](const Ids& xs) { return std::vector<WordId>(xs.begin(), xs.end()); };
  for (int t = 0; t < 5; ++t) {
    const auto m = random_model(rng, 5, 2, 6, 1.0);
    const oracle::Params p{1.1 + 0.5 * t, t % 2 ? 0.1 : 1e-4};
    auto cfg = sd_cfg(p.a, p.lambda);
    cfg.window = 2;
    const auto s = to_stores(m);
    const Ids ctx{0, 2, 4};
    const Ids negs{0, 3, 4};
    const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, ctx.size());

    // Marginal log-likelihood under the full softmax.
    {
      UpdateScratch scratch;
      SparseGradient g;
      sd_sg_exact_gradient(s, 1, 3, cfg, scratch, g);
      const auto fd = oracle::fd_gradient(m, [&](const oracle::Model& x) { return oracle::exact_sg_log_prob(x, 1, 3, p); });
      bad_full += mismatches(to_model_gradient(g, m), fd, 1e-4, worst_full);
    }
    {
      UpdateScratch scratch;
      SparseGradient g;
      sd_cbow_exact_gradient(s, 1, ids(ctx), cfg, scratch, g);
      const auto fd = oracle::fd_gradient(
          m, [&](const oracle::Model& x) { return oracle::exact_cbow_log_prob(x, 1, ctx, p, divisor); });
      bad_full += mismatches(to_model_gradient(g, m), fd, 1e-4, worst_full);
    }

    // Negative-sampling directions of the four update types.
    const std::uint32_t dims = 4;
    {
      SparseGradient g;
      sg_ns_direction(s, 1, 2, ids(negs), dims, g);
      const auto fd = oracle::fd_gradient(m, [&](const oracle::Model& x) { return -oracle::sg_ns_loss(x, 1, 2, negs, dims); });
      bad_ns += mismatches(to_model_gradient(g, m), fd, 1e-6, worst_ns);
    }
    {
      SparseGradient g;
      cbow_ns_direction(s, 1, ids(ctx), ids(negs), dims, divisor, g);
      const auto fd = oracle::fd_gradient(
          m, [&](const oracle::Model& x) { return -oracle::cbow_ns_loss(x, 1, ctx, negs, dims, divisor); });
      bad_ns += mismatches(to_model_gradient(g, m), fd, 1e-6, worst_ns);
    }
    const auto l_sg = static_cast<std::uint32_t>(std::max(m.words[1].size(), m.contexts[2].size()));
    const double b_sg = std::clamp(oracle::sampled_sg_log_prob(m, 1, 2, negs, p), -10.0, 10.0);
    for (std::uint32_t z = 1; z <= l_sg + 1; ++z) {
      UpdateScratch scratch;
      SparseGradient g;
      const std::vector<std::uint32_t> zs{z};
      sd_sg_direction(s, 1, 2, ids(negs), cfg, zs, Normalizer::Sampled, scratch, g);
      const auto recon = oracle::fd_gradient(
          m, [&](const oracle::Model& x) { return -oracle::sd_sg_objective(x, 1, 2, negs, p.lambda, z); });
      const auto score = oracle::fd_gradient(m, [&](const oracle::Model& x) { return oracle::log_q_sg(x, 1, 2, z, l_sg, p); });
      bad_ns += mismatches(to_model_gradient(g, m), combine(recon, 1.0, score, b_sg - 1.0), 1e-6, worst_ns);
    }
    std::size_t l_cb = m.words[1].size();
    for (auto k : ctx) l_cb = std::max(l_cb, m.contexts[k].size());
    const double b_cb = std::clamp(oracle::sampled_cbow_log_prob(m, 1, ctx, negs, p, divisor), -10.0, 10.0);
    for (std::uint32_t z = 1; z <= l_cb + 1; ++z) {
      UpdateScratch scratch;
      SparseGradient g;
      const std::vector<std::uint32_t> zs{z};
      sd_cbow_direction(s, 1, ids(ctx), ids(negs), cfg, zs, Normalizer::Sampled, scratch, g);
      const auto recon = oracle::fd_gradient(
          m, [&](const oracle::Model& x) { return -oracle::sd_cbow_objective(x, 1, ctx, negs, p.lambda, divisor, z); });
      const auto score = oracle::fd_gradient(m, [&](const oracle::Model& x) {
        return oracle::log_q_cbow(x, 1, ctx, z, static_cast<std::uint32_t>(l_cb), p, divisor);
      });
      bad_ns += mismatches(to_model_gradient(g, m), combine(recon, 1.0, score, b_cb - 1.0), 1e-6, worst_ns);
    }
  }
  const double secs = seconds_since(t0);
  return {bad_full == 0 && bad_ns == 0 && secs < 30.0,
          "full softmax: " + std::to_string(bad_full) + " coords off at rel 1e-4 (worst " + fmt("%.2f", worst_full) +
              " of tolerance); NS sg/cbow/sd-sg/sd-cbow: " + std::to_string(bad_ns) + " coords off at rel 1e-6 (worst " +
              fmt("%.2f", worst_ns) + " of tolerance), " + fmt("%.2f", secs) + " s"};
}

// --- 5 -------------------------------------------------------------------------------------------

// Draws z from the posterior, evaluates the estimator and compares the
// per-coordinate mean against the exact gradient.
template <typename Draw>
void unbiasedness_check(const oracle::Model& m, const oracle::ModelGradient& exact, int n, Draw&& draw,
                        std::size_t& coords, std::size_t& bad, double& worst_se) {
  auto sum = combine(exact, 0.0, exact, 0.0);
  auto sum_sq = sum;
  for (int i = 0; i < n; ++i) {
    const auto g = to_model_gradient(draw(), m);
    sum = combine(sum, 1.0, g, 1.0);
    for (std::size_t r = 0; r < g.words.size(); ++r) {
      for (std::size_t j = 0; j < g.words[r].size(); ++j) sum_sq.words[r][j] += g.words[r][j] * g.words[r][j];
    }
    for (std::size_t r = 0; r < g.contexts.size(); ++r) {
      for (std::size_t j = 0; j < g.contexts[r].size(); ++j) sum_sq.contexts[r][j] += g.contexts[r][j] * g.contexts[r][j];
    }
  }
  std::vector<double> sums;
  std::vector<double> squares;
  std::vector<double> wants;
  for_each_coord(sum, exact, [&](double s, double w) {
    sums.push_back(s);
    wants.push_back(w);
  });
  for_each_coord(sum_sq, exact, [&](double q, double) { squares.push_back(q); });
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double mean = sums[i] / n;
    const double var = std::max(0.0, (squares[i] / n - mean * mean) * n / (n - 1));
    const double se = std::sqrt(var / n);
    const double dev = std::abs(mean - wants[i]);
    ++coords;
    // Coordinates with no sampling variance must match up to summation rounding.
    if (se > 0.0) worst_se = std::max(worst_se, dev / se);
    if (dev > 4.0 * se + 1e-9 * std::max(1.0, std::abs(wants[i]))) ++bad;
  }
}

Outcome estimator_unbiasedness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 init(5);
  const auto m = random_model(init, 5, 2, 4, 1.0);
  const auto s = to_stores(m);
  auto cfg = sd_cfg(1.5, 0.01);
  cfg.window = 2;
  const int n = 100'000;
  std::size_t coords = 0;
  std::size_t bad = 0;
  double worst_se = 0.0;
  UpdateScratch scratch;
  SparseGradient g;
  Rng rng(55);
  {
    SparseGradient exact;
    sd_sg_exact_gradient(s, 2, 0, cfg, scratch, exact);
    const auto post = z_posterior(s.words.row(2), s.contexts.row(0), pair_l(s.words, s.contexts, 2, 0), cfg);
    unbiasedness_check(m, to_model_gradient(exact, m), n, [&]() -> const SparseGradient& {
      const std::vector<std::uint32_t> zs{sample_z(post, rng)};
      sd_sg_direction(s, 2, 0, {}, cfg, zs, Normalizer::Full, scratch, g);
      return g;
    }, coords, bad, worst_se);
  }
  {
    const std::vector<WordId> ctx{1, 3};
    SparseGradient exact;
    sd_cbow_exact_gradient(s, 4, ctx, cfg, scratch, exact);
    const auto post = sd_cbow_posterior(s, 4, ctx, cfg);
    unbiasedness_check(m, to_model_gradient(exact, m), n, [&]() -> const SparseGradient& {
      const std::vector<std::uint32_t> zs{sample_z(post, rng)};
      sd_cbow_direction(s, 4, ctx, {}, cfg, zs, Normalizer::Full, scratch, g);
      return g;
    }, coords, bad, worst_se);
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0,
          "sd-sg and sd-cbow, 10^5 draws each: " + std::to_string(bad) + "/" + std::to_string(coords) +
              " coords beyond 4 SE (worst " + fmt("%.2f", worst_se) + " SE), " + fmt("%.2f", secs) + " s"};
}

// --- 6 -------------------------------------------------------------------------------------------

struct Lengths {
  std::vector<std::uint32_t> words;
  std::vector<std::uint32_t> contexts;
};

Lengths lengths(const EmbeddingStores& s) {
  Lengths out;
  for (std::size_t r = 0; r < s.words.rows(); ++r) out.words.push_back(s.words.active_len(r));
  for (std::size_t r = 0; r < s.contexts.rows(); ++r) out.contexts.push_back(s.contexts.active_len(r));
  return out;
}

// Counts rows that shrank or grew by more than one.
std::size_t growth_violations(const Lengths& before, const Lengths& after) {
  std::size_t bad = 0;
  for (std::size_t r = 0; r < before.words.size(); ++r) {
    if (after.words[r] < before.words[r] || after.words[r] > before.words[r] + 1) ++bad;
  }
  for (std::size_t r = 0; r < before.contexts.size(); ++r) {
    if (after.contexts[r] < before.contexts[r] || after.contexts[r] > before.contexts[r] + 1) ++bad;
  }
  return bad;
}

Outcome growth_discipline() {
  // A training run driven update by update through the update kernels.
  const std::size_t v = 40;
  std::mt19937_64 gen(6);
  std::vector<WordId> corpus;
  std::vector<std::uint64_t> counts(v, 1);
  for (int i = 0; i < 3000; ++i) {
    const auto id = static_cast<WordId>(gen() % v);
    corpus.push_back(id);
    ++counts[id];
  }
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < v; ++i) toks.push_back("w" + std::to_string(i));
  const auto vocab = Vocabulary::from_counts(toks, counts);
  const NegativeTable table(vocab, 0.75, 10000);
  auto cfg = sd_cfg(1.05, 1e-4);
  cfg.window = 3;
  cfg.init_dims = 4;
  cfg.mc_samples = 3;
  std::size_t bad = 0;
  std::uint64_t updates = 0;
  std::uint32_t max_len = 0;
  for (auto kind : {ModelKind::SDSG, ModelKind::SDCBOW}) {
    auto stores = initial_stores(vocab.size(), cfg);
    WindowIterator windows(corpus, cfg.window, 1);
    WindowExample ex;
    Rng rng(7);
    UpdateScratch scratch;
    std::vector<WordId> negs(cfg.negatives);
    auto step = [&](auto&& update) {
      for (auto& n : negs) n = table.sample(rng);
      const auto before = lengths(stores);
      update();
      bad += growth_violations(before, lengths(stores));
      ++updates;
    };
    while (windows.next(ex)) {
      if (kind == ModelKind::SDSG) {
        for (auto c : ex.contexts) step([&] { sd_sg_update(stores, ex.center, c, negs, cfg, 0.025, rng, scratch); });
      } else {
        step([&] { sd_cbow_update(stores, ex.center, ex.contexts, negs, cfg, 0.05, rng, scratch); });
      }
    }
    max_len = std::max({max_len, stores.words.max_active_len(), stores.contexts.max_active_len()});
  }

  // Fresh zero-vector pairs at a = 2 grow exactly when z lands in the tail.
  const std::uint32_t l = 4;
  const EmbeddingStores fresh{GrowableMatrix(2, l), GrowableMatrix(2, l)};
  const auto cfg2 = sd_cfg(2.0, 1e-4);
  Rng rng(8);
  UpdateScratch scratch;
  const int n = 100'000;
  int grown = 0;
  const std::vector<WordId> negs{1};
  for (int i = 0; i < n; ++i) {
    auto s = fresh;
    grown += sd_sg_update(s, 0, 1, negs, cfg2, 0.025, rng, scratch).grew ? 1 : 0;
  }
  const double p = std::ldexp(1.0, -static_cast<int>(l));
  const double z = std::abs(grown - n * p) / std::sqrt(n * p * (1 - p));
  return {bad == 0 && z <= 3.0 && max_len > cfg.init_dims,
          std::to_string(updates) + " updates, " + std::to_string(bad) + " rows shrank or grew > 1, max len " +
              std::to_string(max_len) + "; zero-vector growth " + std::to_string(grown) + "/10^5 vs " +
              fmt("%.0f", n * p) + " expected (" + fmt("%.2f", z) + " sigma, limit 3)"};
}

// --- 7 -------------------------------------------------------------------------------------------

Outcome zero_extension() {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, 7);
  std::size_t exact_bad = 0;
  std::size_t checks = 0;
  double worst_append = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto m = random_model(rng, 8, 1, 12, 1.0);
    auto s = to_stores(m);
    const auto cfg = sd_cfg(t % 2 ? 1.1 : 3.0, t % 3 ? 1e-4 : 0.1);
    const WordId w = static_cast<WordId>(pick(rng));
    const WordId c = static_cast<WordId>(pick(rng));
    const auto l = pair_l(s.words, s.contexts, w, c);
    std::vector<double> energies;
    for (std::uint32_t z = 1; z <= l + 3; ++z) energies.push_back(energy(s.words.row(w), s.contexts.row(c), z, cfg.a, cfg.lambda));
    const double log_z = log_partition_z(s.words.row(w), s.contexts.row(c), l, cfg);
    const auto post = z_posterior(s.words.row(w), s.contexts.row(c), l, cfg);
    const double cbow_log_z = sd_cbow_posterior(s, w, std::vector<WordId>{c, (c + 1) % 8}, cfg).log_partition;

    // Grow either row, or both, by one or two dimensions.
    const int which = t % 3;
    for (int k = 0; k <= t % 2; ++k) {
      if (which != 1) s.words.grow_row(w);
      if (which != 0) s.contexts.grow_row(c);
    }

    for (std::uint32_t z = 1; z <= l + 3; ++z) {
      ++checks;
      if (energy(s.words.row(w), s.contexts.row(c), z, cfg.a, cfg.lambda) != energies[z - 1]) ++exact_bad;
    }
    ++checks;
    if (log_partition_z(s.words.row(w), s.contexts.row(c), l, cfg) != log_z) ++exact_bad;
    const auto again = z_posterior(s.words.row(w), s.contexts.row(c), l, cfg);
    ++checks;
    if (again.probs != post.probs || again.tail_mass != post.tail_mass) ++exact_bad;

    // At the grown length the tail splits into explicit entries.
    const auto l2 = pair_l(s.words, s.contexts, w, c);
    const auto grown = z_posterior(s.words.row(w), s.contexts.row(c), l2, cfg);
    for (std::uint32_t z = 1; z <= l; ++z) worst_append = std::max(worst_append, std::abs(grown.probs[z - 1] - post.probs[z - 1]));
    double split = grown.tail_mass;
    for (std::uint32_t z = l + 1; z <= l2; ++z) split += grown.probs[z - 1];
    worst_append = std::max(worst_append, std::abs(split - post.tail_mass));
    worst_append = std::max(worst_append, std::abs(grown.log_partition - log_z));
    worst_append = std::max(worst_append, std::abs(sd_cbow_posterior(s, w, std::vector<WordId>{c, (c + 1) % 8}, cfg).log_partition - cbow_log_z));
  }
  return {exact_bad == 0 && worst_append <= 1e-12,
          std::to_string(exact_bad) + "/" + std::to_string(checks) +
              " energies/partitions/posteriors changed (exact comparison); re-evaluated at the grown length, max drift " +
              fmt("%.2g", worst_append)};
}

// --- 8 -------------------------------------------------------------------------------------------

Outcome spearman_harness() {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> size(2, 80);
  double worst = 0.0;
  std::size_t variant = 0;
  int trials = 0;
  while (trials < 1000) {
    const auto n = size(rng);
    const bool ties = trials % 2 == 0;
    std::uniform_int_distribution<int> small(0, 5);
    std::normal_distribution<double> gauss;
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? small(rng) : gauss(rng);
      y[i] = ties ? small(rng) : 0.5 * x[i] + gauss(rng);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
      continue;
    }
    ++trials;
    const double rho = spearman(x, y);
    worst = std::max(worst, std::abs(rho - oracle::spearman(x, y)));
    std::vector<double> fx(n);
    std::vector<double> gy(n);
    std::transform(x.begin(), x.end(), fx.begin(), [](double v) { return std::exp(v / 4.0) * 3.0 - 7.0; });
    std::transform(y.begin(), y.end(), gy.begin(), [](double v) { return v * v * v + v; });
    if (spearman(fx, gy) != rho) ++variant;
  }
  return {worst <= 1e-12 && variant == 0,
          "max |rho - oracle| = " + fmt("%.2g", worst) + " over 1000 inputs (limit 1e-12); " + std::to_string(variant) +
              " changed under monotone transforms"};
}

// --- 9 -------------------------------------------------------------------------------------------

struct Built {
  Vocabulary vocab;
  std::vector<WordId> ids;
};

Built build(const std::vector<std::string>& tokens) {
  Built b;
  b.vocab = Vocabulary::build(tokens, 1);
  b.ids = b.vocab.encode(tokens);
  return b;
}

// Documents of 50 tokens, each drawn from one of two disjoint 50-word topics.
std::vector<std::string> two_topic_corpus(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::string> out;
  std::uniform_int_distribution<int> word(0, 49);
  while (out.size() < n) {
    const char topic = rng() % 2 ? 'a' : 'b';
    for (int i = 0; i < 50 && out.size() < n; ++i) out.push_back(std::string(1, topic) + std::to_string(word(rng)));
  }
  return out;
}

// Sentences of 13 tokens: a target word in the middle surrounded by words of
// one context cluster. Ambiguous targets alternate between two clusters.
std::vector<std::string> polysemy_corpus(std::size_t n, std::mt19937_64& rng) {
  constexpr int kTargets = 10;
  constexpr int kClusterSize = 10;
  std::vector<std::string> out;
  std::uniform_int_distribution<int> member(0, kClusterSize - 1);
  while (out.size() < n) {
    const int t = static_cast<int>(rng() % (2 * kTargets));
    const bool ambiguous = t < kTargets;
    const int idx = t % kTargets;
    const int cluster = ambiguous ? 2 * idx + static_cast<int>(rng() % 2) : 2 * kTargets + idx;
    auto context = [&] { return "k" + std::to_string(cluster) + "_" + std::to_string(member(rng)); };
    for (int i = 0; i < 6; ++i) out.push_back(context());
    out.push_back((ambiguous ? "amb" : "single") + std::to_string(idx));
    for (int i = 0; i < 6; ++i) out.push_back(context());
  }
  out.resize(n);
  return out;
}

Outcome semantic_sanity() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = sd_cfg(1.1, 1e-4);
  cfg.epochs = 1;
  cfg.min_count = 1;
  cfg.alpha = default_alpha(ModelKind::SDSG);
  cfg.neg_table_size = 1'000'000;
  std::mt19937_64 rng(11);

  const auto topics = build(two_topic_corpus(100'000, rng));
  const NegativeTable topic_table(topics.vocab, cfg.neg_power, cfg.neg_table_size);
  const auto trained = train_serial(ModelKind::SDSG, topics.ids, topics.vocab, topic_table, cfg);
  double intra = 0.0;
  double inter = 0.0;
  std::size_t n_intra = 0;
  std::size_t n_inter = 0;
  for (WordId x = 0; x < topics.vocab.size(); ++x) {
    for (WordId y = x + 1; y < topics.vocab.size(); ++y) {
      const double cos = pair_similarity(trained.stores.words, x, y);
      if (topics.vocab.token(x)[0] == topics.vocab.token(y)[0]) {
        intra += cos;
        ++n_intra;
      } else {
        inter += cos;
        ++n_inter;
      }
    }
  }
  const double gap = intra / n_intra - inter / n_inter;

  const auto poly = build(polysemy_corpus(100'000, rng));
  const NegativeTable poly_table(poly.vocab, cfg.neg_power, cfg.neg_table_size);
  const auto poly_trained = train_serial(ModelKind::SDSG, poly.ids, poly.vocab, poly_table, cfg);
  const auto report = expected_dim_report(poly_trained.stores, poly.vocab, poly.ids, cfg);
  double amb = 0.0;
  double single = 0.0;
  int n_amb = 0;
  int n_single = 0;
  for (const auto& row : report) {
    const auto& tok = poly.vocab.token(row.id);
    if (tok.rfind("amb", 0) == 0) {
      amb += row.expected_dim;
      ++n_amb;
    } else if (tok.rfind("single", 0) == 0) {
      single += row.expected_dim;
      ++n_single;
    }
  }
  amb /= n_amb;
  single /= n_single;
  const double secs = seconds_since(t0);
  return {gap >= 0.1 && amb > single && n_amb == 10 && n_single == 10 && secs < 300.0,
          "intra - inter cosine = " + fmt("%.3f", gap) + " (limit 0.1); mean E[z] ambiguous " + fmt("%.3f", amb) +
              " vs specific " + fmt("%.3f", single) + ", " + fmt("%.1f", secs) + " s"};
}

// --- 10 ------------------------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto work = fs::temp_directory_path() / "sdembed_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  {
    std::ofstream out(work / "corpus.txt");
    std::mt19937_64 rng(12);
    for (const auto& tok : two_topic_corpus(20'000, rng)) out << tok << (rng() % 15 ? ' ' : '\n');
  }
  auto train_into = [&](const std::string& name) {
    const auto cmd = std::string(SDEMBED_CLI_PATH) + " train --model sdsg --corpus " + (work / "corpus.txt").string() +
                     " --out " + (work / name).string() + " --threads 1 --seed 77 --min-count 1 > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  if (!train_into("run1") || !train_into("run2")) return {false, "cmd_train failed"};
  bool same = true;
  std::size_t bytes = 0;
  for (const char* f : {"words.txt", "contexts.txt"}) {
    const auto x = slurp(work / "run1" / f);
    const auto y = slurp(work / "run2" / f);
    same = same && !x.empty() && x == y;
    bytes += x.size();
  }
  fs::remove_all(work);
  return {same, same ? "words.txt and contexts.txt byte-identical (" + std::to_string(bytes) + " bytes)"
                     : "embedding files differ between runs"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "partition correctness", partition_correctness},
      {2, "tail-convention identity", tail_identity},
      {3, "posterior geometric law", geometric_law},
      {4, "gradient exactness", gradient_exactness},
      {5, "estimator unbiasedness", estimator_unbiasedness},
      {6, "growth discipline", growth_discipline},
      {7, "zero-extension invariance", zero_extension},
      {8, "spearman harness", spearman_harness},
      {9, "small-corpus semantic sanity", semantic_sanity},
      {10, "end-to-end determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
