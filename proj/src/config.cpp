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

#include "sdembed/config.hpp"

#include <cmath>

namespace sdembed {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
}

}  // namespace

void SdConfig::validate() const {
  require(std::isfinite(a) && a > 1.0, "a must be > 1");
  require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  require(window >= 1, "window must be >= 1");
  require(negatives >= 0, "negatives must be >= 0");
  require(mc_samples >= 1, "mc_samples must be >= 1");
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  require(init_dims >= 1, "init_dims must be >= 1");
  require(epochs >= 0, "epochs must be >= 0");
  require(z_cap >= init_dims, "z_cap must be >= init_dims");
  require(std::isfinite(bracket_clip), "bracket_clip must be finite");
  require(std::isfinite(init_scale) && init_scale >= 0.0, "init_scale must be >= 0");
  require(subsample >= 0.0, "subsample must be >= 0");
  require(min_count >= 1, "min_count must be >= 1");
  require(neg_power >= 0.0, "neg_power must be >= 0");
  require(neg_table_size >= 1, "neg_table_size must be >= 1");
}

bool is_stochastic_dim(ModelKind kind) {
  return kind == ModelKind::SDSG || kind == ModelKind::SDCBOW;
}

bool is_cbow_family(ModelKind kind) {
  return kind == ModelKind::CBOW || kind == ModelKind::SDCBOW;
}

double default_alpha(ModelKind kind) { return is_cbow_family(kind) ? 0.05 : 0.025; }

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SG: return "sg";
    case ModelKind::CBOW: return "cbow";
    case ModelKind::SDSG: return "sdsg";
    case ModelKind::SDCBOW: return "sdcbow";
  }
  return "?";
}

std::string_view to_string(TailConvention tail) {
  return tail == TailConvention::Geometric ? "geometric" : "paper";
}

std::string_view to_string(CbowDivisor divisor) {
  return divisor == CbowDivisor::ActualCount ? "actual" : "2k-1";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "sg") return ModelKind::SG;
  if (name == "cbow") return ModelKind::CBOW;
  if (name == "sdsg") return ModelKind::SDSG;
  if (name == "sdcbow") return ModelKind::SDCBOW;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

TailConvention parse_tail_convention(std::string_view name) {
  if (name == "geometric") return TailConvention::Geometric;
  if (name == "paper") return TailConvention::Paper;
  throw std::invalid_argument("unknown tail convention '" + std::string(name) + "'");
}

CbowDivisor parse_cbow_divisor(std::string_view name) {
  if (name == "actual") return CbowDivisor::ActualCount;
  if (name == "2k-1") return CbowDivisor::TwoKMinusOne;
  throw std::invalid_argument("unknown cbow divisor '" + std::string(name) + "'");
}

}  // namespace sdembed
