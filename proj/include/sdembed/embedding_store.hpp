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

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "sdembed/config.hpp"

namespace sdembed {

/// Ragged row store for conceptually infinite vectors. Row r materialises its
/// first active_len(r) dimensions; every later dimension reads as 0.0.
///
/// Concurrency: readers and in-place writers may race (Hogwild). Entries are
/// aligned doubles; the platform must not tear aligned 8-byte loads/stores.
/// grow_row takes a per-row spin lock. When growth reallocates a row, the
/// previous buffer is retired rather than freed, so spans held by concurrent
/// readers stay valid until release_retired() is called.
class GrowableMatrix {
 public:
  GrowableMatrix() = default;
  /// All rows start with `init_dims` zero entries.
  GrowableMatrix(std::size_t rows, std::uint32_t init_dims);
  /// Rows copied from `rows`, each with its own active length.
  static GrowableMatrix from_rows(const std::vector<std::vector<double>>& rows);

  GrowableMatrix(const GrowableMatrix& other);
  GrowableMatrix& operator=(const GrowableMatrix& other);
  GrowableMatrix(GrowableMatrix&&) noexcept = default;
  GrowableMatrix& operator=(GrowableMatrix&&) noexcept = default;
  ~GrowableMatrix() = default;

  std::size_t rows() const noexcept { return n_rows_; }

  std::uint32_t active_len(std::size_t r) const noexcept {
    return rows_[r].len.load(std::memory_order_acquire);
  }

  /// Zero-based dimension index; returns 0.0 beyond the active length.
  double value(std::size_t r, std::size_t index) const noexcept {
    const auto span = row(r);
    return index < span.size() ? span[index] : 0.0;
  }

  std::span<double> row(std::size_t r) noexcept {
    const auto& rw = rows_[r];
    const auto n = rw.len.load(std::memory_order_acquire);
    return {rw.data.load(std::memory_order_acquire), n};
  }

  std::span<const double> row(std::size_t r) const noexcept {
    const auto& rw = rows_[r];
    const auto n = rw.len.load(std::memory_order_acquire);
    return {rw.data.load(std::memory_order_acquire), n};
  }

  /// Appends one dimension holding exactly 0.0; returns the new active length.
  std::uint32_t grow_row(std::size_t r);

  std::uint32_t max_active_len() const noexcept;
  std::uint64_t total_active_len() const noexcept;

  /// Frees buffers retired by reallocating growth. Only call when no other
  /// thread holds a row span.
  void release_retired();

  friend bool operator==(const GrowableMatrix& x, const GrowableMatrix& y);

 private:
  struct Row {
    std::atomic<double*> data{nullptr};
    std::atomic<std::uint32_t> len{0};
    std::uint32_t capacity = 0;
    std::unique_ptr<double[]> owned;
    std::atomic_flag lock;
  };
  struct Retired {
    std::mutex mutex;
    std::vector<std::unique_ptr<double[]>> buffers;
  };

  void assign_row(std::size_t r, std::span<const double> values, std::uint32_t capacity);

  std::unique_ptr<Row[]> rows_;
  std::size_t n_rows_ = 0;
  std::unique_ptr<Retired> retired_ = std::make_unique<Retired>();
};

/// Word vectors (rows of `words`) and context vectors (rows of `contexts`).
struct EmbeddingStores {
  GrowableMatrix words;
  GrowableMatrix contexts;

  friend bool operator==(const EmbeddingStores&, const EmbeddingStores&) = default;
};

/// Word rows ~ U(-init_scale, init_scale); context rows all zero.
EmbeddingStores init_stores(std::size_t vocab_size, std::uint32_t init_dims, double init_scale,
                            std::uint64_t seed);
GrowableMatrix init_word_store(std::size_t vocab_size, std::uint32_t init_dims, double init_scale,
                               std::uint64_t seed);

/// max(active_len of word row, active_len of context row): an upper bound on
/// the last index at which either vector is non-zero.
inline std::uint32_t pair_l(const GrowableMatrix& words, const GrowableMatrix& contexts,
                            WordId w, WordId c) {
  const auto lw = words.active_len(w);
  const auto lc = contexts.active_len(c);
  return lw > lc ? lw : lc;
}

}  // namespace sdembed
