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

#include "sdembed/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sdembed {

using nlohmann::json;

namespace {

void append_double(std::string& line, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw IoError("cannot format value");
  line.append(buf, ptr);
}

template <typename T>
T parse_number(std::string_view s, std::size_t lineno) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("embeddings line " + std::to_string(lineno) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_embeddings(std::ostream& out, const GrowableMatrix& m,
                      std::span<const std::string> tokens) {
  if (tokens.size() != m.rows()) throw std::invalid_argument("token count does not match rows");
  out << m.rows() << ' ' << m.max_active_len() << '\n';
  std::string line;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    line = tokens[r];
    line += ' ';
    line += std::to_string(row.size());
    for (double v : row) {
      line += ' ';
      append_double(line, v);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed");
}

void write_embeddings(const std::filesystem::path& path, const GrowableMatrix& m,
                      std::span<const std::string> tokens) {
  auto out = open_out(path);
  write_embeddings(out, m, tokens);
}

LoadedEmbeddings read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("embeddings: missing header");
  auto header = tokenize(line);
  if (header.size() != 2) throw IoError("embeddings: header must be 'V max_active_len'");
  const auto v = parse_number<std::size_t>(header[0], 1);
  const auto max_len = parse_number<std::uint32_t>(header[1], 1);
  LoadedEmbeddings loaded;
  std::vector<std::vector<double>> rows;
  rows.reserve(v);
  loaded.tokens.reserve(v);
  std::uint32_t seen_max = 0;
  for (std::size_t r = 0; r < v; ++r) {
    const std::size_t lineno = r + 2;
    if (!std::getline(in, line)) throw IoError("embeddings: expected " + std::to_string(v) + " rows");
    const auto fields = tokenize(line);
    if (fields.size() < 2) throw IoError("embeddings line " + std::to_string(lineno) + ": too short");
    const auto len = parse_number<std::uint32_t>(fields[1], lineno);
    if (fields.size() != 2 + static_cast<std::size_t>(len)) {
      throw IoError("embeddings line " + std::to_string(lineno) + ": length mismatch");
    }
    std::vector<double> values(len);
    for (std::uint32_t j = 0; j < len; ++j) values[j] = parse_number<double>(fields[2 + j], lineno);
    seen_max = std::max(seen_max, len);
    loaded.tokens.push_back(fields[0]);
    rows.push_back(std::move(values));
  }
  if (seen_max != max_len) throw IoError("embeddings: header max_active_len does not match rows");
  loaded.matrix = GrowableMatrix::from_rows(rows);
  return loaded;
}

LoadedEmbeddings read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_embeddings(in);
}

// --- JSON ----------------------------------------------------------------------------

void to_json(json& j, const EmbeddingMeta& m) {
  j = json{{"a", m.a},
           {"lambda", m.lambda},
           {"init_dims", m.init_dims},
           {"tail_convention", std::string(to_string(m.tail))},
           {"model", std::string(to_string(m.model))}};
}

void from_json(const json& j, EmbeddingMeta& m) {
  m.a = j.at("a").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.init_dims = j.at("init_dims").get<std::uint32_t>();
  m.tail = parse_tail_convention(j.at("tail_convention").get<std::string>());
  if (j.contains("model")) m.model = parse_model_kind(j.at("model").get<std::string>());
}

void to_json(json& j, const TrainStats& s) {
  j = json{{"examples_seen", s.examples_seen}, {"updates", s.updates},
           {"mean_ns_loss", s.mean_ns_loss},   {"growth_events", s.growth_events},
           {"max_active_len", s.max_active_len}, {"z_cap_hits", s.z_cap_hits},
           {"wallclock_seconds", s.wallclock_seconds}};
}

void from_json(const json& j, TrainStats& s) {
  s.examples_seen = j.at("examples_seen").get<std::uint64_t>();
  s.updates = j.at("updates").get<std::uint64_t>();
  s.mean_ns_loss = j.at("mean_ns_loss").get<double>();
  s.growth_events = j.at("growth_events").get<std::uint64_t>();
  s.max_active_len = j.at("max_active_len").get<std::uint32_t>();
  s.z_cap_hits = j.at("z_cap_hits").get<std::uint64_t>();
  s.wallclock_seconds = j.at("wallclock_seconds").get<double>();
}

void to_json(json& j, const EvalReport& r) {
  j = json{{"spearman_rho", r.spearman_rho},
           {"n_used", r.n_used},
           {"n_skipped_oov", r.n_skipped_oov}};
}

json config_to_json(const SdConfig& c) {
  return json{{"a", c.a},
              {"lambda", c.lambda},
              {"window", c.window},
              {"negatives", c.negatives},
              {"mc_samples", c.mc_samples},
              {"alpha", c.alpha},
              {"init_dims", c.init_dims},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"tail", std::string(to_string(c.tail))},
              {"z_cap", c.z_cap},
              {"cbow_divisor", std::string(to_string(c.cbow_divisor))},
              {"bracket_clip", c.bracket_clip},
              {"init_scale", c.init_scale},
              {"dynamic_window", c.dynamic_window},
              {"subsample", c.subsample},
              {"min_count", c.min_count},
              {"lowercase", c.lowercase},
              {"neg_power", c.neg_power},
              {"neg_table_size", c.neg_table_size}};
}

void apply_config_json(const json& j, SdConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "a") c.a = value.get<double>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "window") c.window = value.get<int>();
    else if (key == "negatives") c.negatives = value.get<int>();
    else if (key == "mc_samples") c.mc_samples = value.get<int>();
    else if (key == "alpha") c.alpha = value.get<double>();
    else if (key == "init_dims") c.init_dims = value.get<std::uint32_t>();
    else if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "tail") c.tail = parse_tail_convention(value.get<std::string>());
    else if (key == "z_cap") c.z_cap = value.get<std::uint32_t>();
    else if (key == "cbow_divisor") c.cbow_divisor = parse_cbow_divisor(value.get<std::string>());
    else if (key == "bracket_clip") c.bracket_clip = value.get<double>();
    else if (key == "init_scale") c.init_scale = value.get<double>();
    else if (key == "dynamic_window") c.dynamic_window = value.get<bool>();
    else if (key == "subsample") c.subsample = value.get<double>();
    else if (key == "min_count") c.min_count = value.get<std::uint64_t>();
    else if (key == "lowercase") c.lowercase = value.get<bool>();
    else if (key == "neg_power") c.neg_power = value.get<double>();
    else if (key == "neg_table_size") c.neg_table_size = value.get<std::size_t>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

json manifest_to_json(const RunManifest& m) {
  return json{{"command", m.command},
              {"model", std::string(to_string(m.model))},
              {"config", config_to_json(m.config)},
              {"seed", m.config.seed},
              {"corpus_paths", m.corpus_paths},
              {"corpus_bytes", m.corpus_bytes},
              {"corpus_tokens", m.corpus_tokens},
              {"vocab_size", m.vocab_size},
              {"threads", m.threads},
              {"tool_version", m.tool_version},
              {"wallclock_seconds", m.wallclock_seconds},
              {"outputs", m.outputs}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace sdembed
