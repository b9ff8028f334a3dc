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

#include "sdembed/embedding_store.hpp"

#include <algorithm>
#include <cstring>

namespace sdembed {

namespace {

constexpr std::uint32_t kMinCapacity = 16;

std::uint32_t initial_capacity(std::uint32_t len) {
  std::uint32_t cap = kMinCapacity;
  while (cap < len) cap *= 2;
  return cap;
}

struct SpinGuard {
  explicit SpinGuard(std::atomic_flag& f) : flag(f) {
    while (flag.test_and_set(std::memory_order_acquire)) {
      while (flag.test(std::memory_order_relaxed)) {
      }
    }
  }
  ~SpinGuard() { flag.clear(std::memory_order_release); }
  std::atomic_flag& flag;
};

}  // namespace

GrowableMatrix::GrowableMatrix(std::size_t rows, std::uint32_t init_dims)
    : rows_(std::make_unique<Row[]>(rows)), n_rows_(rows) {
  const std::vector<double> zeros(init_dims, 0.0);
  for (std::size_t r = 0; r < rows; ++r) assign_row(r, zeros, initial_capacity(init_dims));
}

GrowableMatrix GrowableMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  GrowableMatrix m;
  m.rows_ = std::make_unique<Row[]>(rows.size());
  m.n_rows_ = rows.size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.assign_row(r, rows[r], initial_capacity(static_cast<std::uint32_t>(rows[r].size())));
  }
  return m;
}

GrowableMatrix::GrowableMatrix(const GrowableMatrix& other)
    : rows_(std::make_unique<Row[]>(other.n_rows_)), n_rows_(other.n_rows_) {
  for (std::size_t r = 0; r < n_rows_; ++r) {
    assign_row(r, other.row(r), other.rows_[r].capacity);
  }
}

GrowableMatrix& GrowableMatrix::operator=(const GrowableMatrix& other) {
  if (this != &other) {
    GrowableMatrix copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void GrowableMatrix::assign_row(std::size_t r, std::span<const double> values,
                                std::uint32_t capacity) {
  auto& rw = rows_[r];
  capacity = std::max<std::uint32_t>(capacity, static_cast<std::uint32_t>(values.size()));
  rw.owned = std::make_unique<double[]>(capacity);  // value-initialised to 0.0
  std::copy(values.begin(), values.end(), rw.owned.get());
  rw.capacity = capacity;
  rw.data.store(rw.owned.get(), std::memory_order_release);
  rw.len.store(static_cast<std::uint32_t>(values.size()), std::memory_order_release);
}

std::uint32_t GrowableMatrix::grow_row(std::size_t r) {
  auto& rw = rows_[r];
  SpinGuard guard(rw.lock);
  const auto len = rw.len.load(std::memory_order_relaxed);
  if (len == rw.capacity) {
    const auto cap = std::max(kMinCapacity, rw.capacity * 2);
    auto fresh = std::make_unique<double[]>(cap);
    std::memcpy(fresh.get(), rw.owned.get(), sizeof(double) * len);
    rw.data.store(fresh.get(), std::memory_order_release);
    {
      std::lock_guard lock(retired_->mutex);
      retired_->buffers.push_back(std::move(rw.owned));
    }
    rw.owned = std::move(fresh);
    rw.capacity = cap;
  }
  rw.owned[len] = 0.0;
  rw.len.store(len + 1, std::memory_order_release);
  return len + 1;
}

std::uint32_t GrowableMatrix::max_active_len() const noexcept {
  std::uint32_t best = 0;
  for (std::size_t r = 0; r < n_rows_; ++r) best = std::max(best, active_len(r));
  return best;
}

std::uint64_t GrowableMatrix::total_active_len() const noexcept {
  std::uint64_t total = 0;
  for (std::size_t r = 0; r < n_rows_; ++r) total += active_len(r);
  return total;
}

void GrowableMatrix::release_retired() {
  std::lock_guard lock(retired_->mutex);
  retired_->buffers.clear();
}

bool operator==(const GrowableMatrix& x, const GrowableMatrix& y) {
  if (x.n_rows_ != y.n_rows_) return false;
  for (std::size_t r = 0; r < x.n_rows_; ++r) {
    const auto a = x.row(r);
    const auto b = y.row(r);
    if (a.size() != b.size()) return false;
    if (!std::equal(a.begin(), a.end(), b.begin())) return false;
  }
  return true;
}

GrowableMatrix init_word_store(std::size_t vocab_size, std::uint32_t init_dims, double init_scale,
                               std::uint64_t seed) {
  GrowableMatrix m(vocab_size, init_dims);
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(-init_scale, init_scale);
  for (std::size_t r = 0; r < vocab_size; ++r) {
    for (auto& v : m.row(r)) v = uniform(rng);
  }
  return m;
}

EmbeddingStores init_stores(std::size_t vocab_size, std::uint32_t init_dims, double init_scale,
                            std::uint64_t seed) {
  return {init_word_store(vocab_size, init_dims, init_scale, seed),
          GrowableMatrix(vocab_size, init_dims)};
}

}  // namespace sdembed
