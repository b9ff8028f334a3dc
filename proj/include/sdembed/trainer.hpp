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
#include <functional>
#include <span>

#include "sdembed/config.hpp"
#include "sdembed/corpus.hpp"
#include "sdembed/embedding_store.hpp"
#include "sdembed/updates.hpp"

namespace sdembed {

struct TrainStats {
  std::uint64_t examples_seen = 0;  // window examples processed
  std::uint64_t updates = 0;        // calls into an update kernel
  double mean_ns_loss = 0.0;
  // Sum over both stores of (active_len - init_dims).
  std::uint64_t growth_events = 0;
  std::uint32_t max_active_len = 0;
  std::uint64_t z_cap_hits = 0;
  double wallclock_seconds = 0.0;
};

struct TrainOptions {
  int threads = 1;
  Normalizer normalizer = Normalizer::Sampled;
  /// Called from the driving thread with the fraction of work done.
  std::function<void(double progress, const TrainStats& so_far)> progress;
};

struct TrainResult {
  EmbeddingStores stores;
  TrainStats stats;
};

/// Fresh stores for `kind`: init_dims from cfg (the fixed dimensionality for
/// the SG/CBOW baselines), word rows uniform, context rows zero.
EmbeddingStores initial_stores(std::size_t vocab_size, const SdConfig& cfg);

/// Runs cfg.epochs passes with the learning rate decaying linearly from alpha
/// to alpha/10. Dispatches to train_serial when options.threads <= 1.
TrainResult train(ModelKind kind, std::span<const WordId> corpus, const Vocabulary& vocab,
                  const NegativeTable& negatives, const SdConfig& cfg,
                  const TrainOptions& options = {});

/// Reference implementation: deterministic for a given seed.
TrainResult train_serial(ModelKind kind, std::span<const WordId> corpus, const Vocabulary& vocab,
                         const NegativeTable& negatives, const SdConfig& cfg,
                         const TrainOptions& options = {});

/// Hogwild: the corpus is split into contiguous shards, one per OpenMP
/// thread, all updating the shared stores without locks (growth excepted).
/// Results are statistically but not bitwise reproducible.
TrainResult train_parallel(ModelKind kind, std::span<const WordId> corpus,
                           const Vocabulary& vocab, const NegativeTable& negatives,
                           const SdConfig& cfg, const TrainOptions& options);

/// Continues training existing stores in place (same schedule as train_serial).
TrainStats train_serial_into(EmbeddingStores& stores, ModelKind kind,
                             std::span<const WordId> corpus, const Vocabulary& vocab,
                             const NegativeTable& negatives, const SdConfig& cfg,
                             const TrainOptions& options = {});

}  // namespace sdembed
