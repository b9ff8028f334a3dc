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

#include "sdembed/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdembed {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream identifiers for derived seeds.
enum : std::uint64_t { kInitStream = 0, kUpdateStream = 1, kWindowStream = 2, kSubsampleStream = 3 };

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t shard) {
  return splitmix64(splitmix64(seed ^ (stream << 56)) + shard);
}

struct Accumulators {
  std::uint64_t examples = 0;
  std::uint64_t updates = 0;
  double loss_sum = 0.0;
  std::uint64_t z_cap_hits = 0;
};

// Per-thread training state.
struct Worker {
  Rng rng;
  UpdateScratch scratch;
  std::vector<WordId> negatives;
  WindowExample example;
  Accumulators acc;
};

void draw_negatives(const NegativeTable& table, int count, WordId avoid, Rng& rng,
                    std::vector<WordId>& out) {
  out.clear();
  for (int i = 0; i < count; ++i) {
    const WordId id = table.sample(rng);
    if (id != avoid) out.push_back(id);
  }
}

void train_example(ModelKind kind, const WindowExample& ex, const NegativeTable& table,
                   const SdConfig& cfg, double alpha, EmbeddingStores& stores, Normalizer mode,
                   Worker& wk) {
  ++wk.acc.examples;
  switch (kind) {
    case ModelKind::SG:
      for (WordId c : ex.contexts) {
        draw_negatives(table, cfg.negatives, c, wk.rng, wk.negatives);
        wk.acc.loss_sum += sg_update(stores, ex.center, c, wk.negatives, cfg.init_dims, alpha,
                                     wk.scratch);
        ++wk.acc.updates;
      }
      break;
    case ModelKind::SDSG:
      for (WordId c : ex.contexts) {
        draw_negatives(table, cfg.negatives, c, wk.rng, wk.negatives);
        const auto r = sd_sg_update(stores, ex.center, c, wk.negatives, cfg, alpha, wk.rng,
                                    wk.scratch, mode);
        wk.acc.loss_sum += r.loss;
        wk.acc.z_cap_hits += r.capped ? 1 : 0;
        ++wk.acc.updates;
      }
      break;
    case ModelKind::CBOW: {
      draw_negatives(table, cfg.negatives, ex.center, wk.rng, wk.negatives);
      const double divisor = cbow_divisor_value(cfg.cbow_divisor, cfg.window, ex.contexts.size());
      wk.acc.loss_sum += cbow_update(stores, ex.center, ex.contexts, wk.negatives, cfg.init_dims,
                                     alpha, divisor, wk.scratch);
      ++wk.acc.updates;
      break;
    }
    case ModelKind::SDCBOW: {
      draw_negatives(table, cfg.negatives, ex.center, wk.rng, wk.negatives);
      const auto r = sd_cbow_update(stores, ex.center, ex.contexts, wk.negatives, cfg, alpha,
                                    wk.rng, wk.scratch, mode);
      wk.acc.loss_sum += r.loss;
      wk.acc.z_cap_hits += r.capped ? 1 : 0;
      ++wk.acc.updates;
      break;
    }
  }
}

double learning_rate(const SdConfig& cfg, double progress) {
  return cfg.alpha * (1.0 - 0.9 * std::clamp(progress, 0.0, 1.0));
}

std::vector<WordId> subsampled(std::span<const WordId> corpus, const Vocabulary& vocab,
                               double threshold, Rng& rng) {
  std::vector<double> keep(vocab.size());
  for (WordId i = 0; i < vocab.size(); ++i) {
    keep[i] = keep_probability(vocab.count(i), vocab.total_tokens(), threshold);
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<WordId> out;
  out.reserve(corpus.size());
  for (WordId id : corpus) {
    if (keep[id] >= 1.0 || uniform(rng) < keep[id]) out.push_back(id);
  }
  return out;
}

void check_inputs(std::span<const WordId> corpus, const Vocabulary& vocab, const SdConfig& cfg) {
  cfg.validate();
  if (vocab.size() == 0) throw std::invalid_argument("empty vocabulary");
  if (corpus.size() < 2) throw std::invalid_argument("corpus needs at least two tokens");
  for (WordId id : corpus) {
    if (id >= vocab.size()) throw std::invalid_argument("corpus id outside the vocabulary");
  }
}

void finish_stats(const EmbeddingStores& stores, const SdConfig& cfg, const Accumulators& acc,
                  TrainStats& stats) {
  stats.examples_seen = acc.examples;
  stats.updates = acc.updates;
  stats.mean_ns_loss = acc.updates > 0 ? acc.loss_sum / static_cast<double>(acc.updates) : 0.0;
  stats.z_cap_hits = acc.z_cap_hits;
  const std::uint64_t base = static_cast<std::uint64_t>(cfg.init_dims) * stores.words.rows();
  stats.growth_events = (stores.words.total_active_len() - base) +
                        (stores.contexts.total_active_len() - base);
  stats.max_active_len = std::max(stores.words.max_active_len(), stores.contexts.max_active_len());
}

}  // namespace

EmbeddingStores initial_stores(std::size_t vocab_size, const SdConfig& cfg) {
  return init_stores(vocab_size, cfg.init_dims, cfg.effective_init_scale(),
                     derive_seed(cfg.seed, kInitStream, 0));
}

TrainStats train_serial_into(EmbeddingStores& stores, ModelKind kind,
                             std::span<const WordId> corpus, const Vocabulary& vocab,
                             const NegativeTable& negatives, const SdConfig& cfg,
                             const TrainOptions& options) {
  check_inputs(corpus, vocab, cfg);
  const auto started = std::chrono::steady_clock::now();
  Worker wk{Rng(derive_seed(cfg.seed, kUpdateStream, 0)), {}, {}, {}, {}};
  Rng sub_rng(derive_seed(cfg.seed, kSubsampleStream, 0));
  const double total = static_cast<double>(cfg.epochs) * static_cast<double>(corpus.size());
  std::uint64_t done = 0;
  TrainStats stats;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<WordId> filtered;
    std::span<const WordId> text = corpus;
    if (cfg.subsample > 0.0) {
      filtered = subsampled(corpus, vocab, cfg.subsample, sub_rng);
      if (filtered.size() < 2) continue;
      text = filtered;
    }
    WindowIterator windows(text, cfg.window,
                           derive_seed(cfg.seed, kWindowStream, static_cast<std::uint64_t>(epoch)),
                           cfg.dynamic_window);
    const double scale = static_cast<double>(corpus.size()) / static_cast<double>(text.size());
    while (windows.next(wk.example)) {
      const double progress = static_cast<double>(done) / total;
      train_example(kind, wk.example, negatives, cfg, learning_rate(cfg, progress), stores,
                    options.normalizer, wk);
      ++done;
      if (options.progress && done % 100000 == 0) {
        finish_stats(stores, cfg, wk.acc, stats);
        options.progress(static_cast<double>(done) * scale / total, stats);
      }
    }
  }
  finish_stats(stores, cfg, wk.acc, stats);
  stats.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return stats;
}

TrainResult train_serial(ModelKind kind, std::span<const WordId> corpus, const Vocabulary& vocab,
                         const NegativeTable& negatives, const SdConfig& cfg,
                         const TrainOptions& options) {
  cfg.validate();
  TrainResult result{initial_stores(vocab.size(), cfg), {}};
  result.stats = train_serial_into(result.stores, kind, corpus, vocab, negatives, cfg, options);
  return result;
}

TrainResult train_parallel(ModelKind kind, std::span<const WordId> corpus,
                           const Vocabulary& vocab, const NegativeTable& negatives,
                           const SdConfig& cfg, const TrainOptions& options) {
  check_inputs(corpus, vocab, cfg);
  const int threads = std::max(1, options.threads);
  const auto started = std::chrono::steady_clock::now();
  TrainResult result{initial_stores(vocab.size(), cfg), {}};
  auto& stores = result.stores;
  Rng sub_rng(derive_seed(cfg.seed, kSubsampleStream, 0));
  const double total = static_cast<double>(cfg.epochs) * static_cast<double>(corpus.size());
  std::atomic<std::uint64_t> done{0};
  std::vector<Accumulators> per_thread(static_cast<std::size_t>(threads));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<WordId> filtered;
    std::span<const WordId> text = corpus;
    if (cfg.subsample > 0.0) {
      filtered = subsampled(corpus, vocab, cfg.subsample, sub_rng);
      if (filtered.size() < 2) continue;
      text = filtered;
    }
    const std::size_t n = text.size();

#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
      const int t = omp_get_thread_num();
      const int nt = omp_get_num_threads();
#else
      const int t = 0;
      const int nt = 1;
#endif
      const std::size_t begin = n * static_cast<std::size_t>(t) / static_cast<std::size_t>(nt);
      const std::size_t end = n * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(nt);
      const auto shard = static_cast<std::uint64_t>(epoch) * 1024 + static_cast<std::uint64_t>(t);
      Worker wk{Rng(derive_seed(cfg.seed, kUpdateStream, shard + 1)), {}, {}, {}, {}};
      WindowIterator windows(text, cfg.window, derive_seed(cfg.seed, kWindowStream, shard),
                             cfg.dynamic_window, begin, end);
      std::uint64_t local = 0;
      double alpha = learning_rate(cfg, static_cast<double>(done.load()) / total);
      while (windows.next(wk.example)) {
        train_example(kind, wk.example, negatives, cfg, alpha, stores, options.normalizer, wk);
        if (++local == 1000) {
          const auto now = done.fetch_add(local) + local;
          local = 0;
          alpha = learning_rate(cfg, static_cast<double>(now) / total);
          if (t == 0 && options.progress && now % 100000 < 1000 * static_cast<std::uint64_t>(nt)) {
            options.progress(static_cast<double>(now) / total, TrainStats{});
          }
        }
      }
      done.fetch_add(local);
      auto& acc = per_thread[static_cast<std::size_t>(t)];
      acc.examples += wk.acc.examples;
      acc.updates += wk.acc.updates;
      acc.loss_sum += wk.acc.loss_sum;
      acc.z_cap_hits += wk.acc.z_cap_hits;
    }
    stores.words.release_retired();
    stores.contexts.release_retired();
  }

  Accumulators acc;
  for (const auto& a : per_thread) {
    acc.examples += a.examples;
    acc.updates += a.updates;
    acc.loss_sum += a.loss_sum;
    acc.z_cap_hits += a.z_cap_hits;
  }
  finish_stats(stores, cfg, acc, result.stats);
  result.stats.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

TrainResult train(ModelKind kind, std::span<const WordId> corpus, const Vocabulary& vocab,
                  const NegativeTable& negatives, const SdConfig& cfg,
                  const TrainOptions& options) {
  if (options.threads <= 1) return train_serial(kind, corpus, vocab, negatives, cfg, options);
  return train_parallel(kind, corpus, vocab, negatives, cfg, options);
}

}  // namespace sdembed
