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

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdembed {

using WordId = std::uint32_t;
using Rng = std::mt19937_64;

/// Raised for unreadable or unwritable files and malformed inputs on disk.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { SG, CBOW, SDSG, SDCBOW };

/// Constant multiplying e^{-E(l)} in the finite partition sum.
///   Geometric: sum_{m>=1} a^{-m} = 1/(a-1), exact for z > l.
///   Paper:     a/(a-1), which also re-counts the z = l term.
enum class TailConvention { Geometric, Paper };

/// Divisor applied to summed context vectors (and summed energies) in CBOW.
enum class CbowDivisor { ActualCount, TwoKMinusOne };

struct SdConfig {
  double a = 1.1;
  double lambda = 1e-4;
  int window = 6;
  int negatives = 5;
  int mc_samples = 1;
  double alpha = 0.025;
  std::uint32_t init_dims = 10;
  int epochs = 1;
  std::uint64_t seed = 1;
  TailConvention tail = TailConvention::Geometric;
  std::uint32_t z_cap = 1000;
  CbowDivisor cbow_divisor = CbowDivisor::ActualCount;
  // Bracket term of the score-function estimator is clipped to
  // [-bracket_clip, bracket_clip]; a non-positive value disables clipping.
  double bracket_clip = 10.0;
  // Half-width of the uniform word-vector initialisation; 0 selects
  // 0.5 / init_dims.
  double init_scale = 0.0;
  bool dynamic_window = false;
  double subsample = 0.0;
  std::uint64_t min_count = 5;
  bool lowercase = false;
  double neg_power = 0.75;
  std::size_t neg_table_size = 10'000'000;

  double effective_init_scale() const {
    return init_scale > 0.0 ? init_scale : 0.5 / static_cast<double>(init_dims);
  }

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

bool is_stochastic_dim(ModelKind kind);
bool is_cbow_family(ModelKind kind);
/// 0.05 for the CBOW family, 0.025 for the SG family.
double default_alpha(ModelKind kind);

std::string_view to_string(ModelKind kind);
std::string_view to_string(TailConvention tail);
std::string_view to_string(CbowDivisor divisor);
ModelKind parse_model_kind(std::string_view name);
TailConvention parse_tail_convention(std::string_view name);
CbowDivisor parse_cbow_divisor(std::string_view name);

}  // namespace sdembed
