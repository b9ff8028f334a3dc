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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdembed/config.hpp"
#include "sdembed/corpus.hpp"
#include "sdembed/embedding_store.hpp"
#include "sdembed/evaluation.hpp"
#include "sdembed/trainer.hpp"

namespace sdembed {

inline constexpr const char* kToolVersion = "0.1.0";

/// Text export: `V max_active_len`, then `token active_len v_1 ... v_len` per
/// row, values at 17 significant digits (round-trips exactly).
void write_embeddings(std::ostream& out, const GrowableMatrix& m,
                      std::span<const std::string> tokens);
void write_embeddings(const std::filesystem::path& path, const GrowableMatrix& m,
                      std::span<const std::string> tokens);

struct LoadedEmbeddings {
  std::vector<std::string> tokens;
  GrowableMatrix matrix;
};
/// Throws IoError on malformed input.
LoadedEmbeddings read_embeddings(std::istream& in);
LoadedEmbeddings read_embeddings(const std::filesystem::path& path);

/// Sidecar recorded next to every export.
struct EmbeddingMeta {
  double a = 1.1;
  double lambda = 1e-4;
  std::uint32_t init_dims = 10;
  TailConvention tail = TailConvention::Geometric;
  ModelKind model = ModelKind::SDSG;
};

void to_json(nlohmann::json& j, const EmbeddingMeta& m);
void from_json(const nlohmann::json& j, EmbeddingMeta& m);
void to_json(nlohmann::json& j, const TrainStats& s);
void from_json(const nlohmann::json& j, TrainStats& s);
void to_json(nlohmann::json& j, const EvalReport& r);

/// Every SdConfig field by name. from_json only overrides keys present and
/// rejects unknown keys with std::invalid_argument.
nlohmann::json config_to_json(const SdConfig& cfg);
void apply_config_json(const nlohmann::json& j, SdConfig& cfg);

struct RunManifest {
  std::string command;
  SdConfig config;
  ModelKind model = ModelKind::SDSG;
  std::vector<std::string> corpus_paths;
  std::uint64_t corpus_bytes = 0;
  std::uint64_t corpus_tokens = 0;
  std::size_t vocab_size = 0;
  int threads = 1;
  std::string tool_version = kToolVersion;
  double wallclock_seconds = 0.0;
  std::vector<std::string> outputs;
};
nlohmann::json manifest_to_json(const RunManifest& m);

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sdembed
