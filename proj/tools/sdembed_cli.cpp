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

// sdembed: train, evaluate and inspect stochastic-dimensionality embeddings.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdembed/config.hpp"
#include "sdembed/corpus.hpp"
#include "sdembed/evaluation.hpp"
#include "sdembed/io.hpp"
#include "sdembed/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdembed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values are kept separately from the config so that only flags the user
// actually passed override the --config file.
struct TrainArgs {
  std::string model = "sdsg";
  std::vector<std::string> corpus;
  std::string out;
  std::string config_file;
  std::string normalizer = "sampled";
  int threads = 1;
  SdConfig flags;
  std::string tail = "geometric";
  std::string cbow_divisor = "actual";
};

void add_config_flags(CLI::App& cmd, TrainArgs& args, std::vector<CLI::Option*>& opts) {
  auto& f = args.flags;
  opts = {
      cmd.add_option("--a", f.a, "Per-dimension penalty base (> 1)"),
      cmd.add_option("--lambda", f.lambda, "L2 weight inside the energy"),
      cmd.add_option("--window", f.window, "Context window K on each side"),
      cmd.add_option("--neg", f.negatives, "Negative samples per positive"),
      cmd.add_option("--mc-samples", f.mc_samples, "Samples of z per update"),
      cmd.add_option("--alpha", f.alpha, "Initial learning rate (default 0.05 CBOW, 0.025 SG)"),
      cmd.add_option("--dims", f.init_dims, "Initial (baselines: fixed) dimensionality"),
      cmd.add_option("--epochs", f.epochs, "Passes over the corpus"),
      cmd.add_option("--seed", f.seed, "Random seed"),
      cmd.add_option("--tail", args.tail, "Tail constant: geometric | paper"),
      cmd.add_option("--z-cap", f.z_cap, "Hard cap on active length"),
      cmd.add_option("--cbow-divisor", args.cbow_divisor, "CBOW divisor: actual | 2k-1"),
      cmd.add_option("--bracket-clip", f.bracket_clip, "Clip of the score-term bracket (<= 0: off)"),
      cmd.add_option("--init-scale", f.init_scale, "Word init half-width (0: 0.5/dims)"),
      cmd.add_flag("--dynamic-window", f.dynamic_window, "Shrink windows uniformly at random"),
      cmd.add_option("--subsample", f.subsample, "Frequent-word subsampling threshold (0: off)"),
      cmd.add_option("--min-count", f.min_count, "Minimum token count"),
      cmd.add_flag("--lowercase", f.lowercase, "Lowercase ASCII letters"),
      cmd.add_option("--neg-power", f.neg_power, "Unigram table exponent"),
      cmd.add_option("--neg-table-size", f.neg_table_size, "Unigram table slots"),
  };
}

// Resolves defaults < config file < explicit flags.
SdConfig resolve_config(const TrainArgs& args, const std::vector<CLI::Option*>& opts,
                        ModelKind model) {
  SdConfig cfg;
  bool alpha_set = false;
  if (!args.config_file.empty()) {
    const json j = read_json(args.config_file);
    apply_config_json(j, cfg);
    alpha_set = j.contains("alpha");
  }
  const auto& f = args.flags;
  const auto given = [&](std::size_t i) { return opts[i]->count() > 0; };
  if (given(0)) cfg.a = f.a;
  if (given(1)) cfg.lambda = f.lambda;
  if (given(2)) cfg.window = f.window;
  if (given(3)) cfg.negatives = f.negatives;
  if (given(4)) cfg.mc_samples = f.mc_samples;
  if (given(5)) {
    cfg.alpha = f.alpha;
    alpha_set = true;
  }
  if (given(6)) cfg.init_dims = f.init_dims;
  if (given(7)) cfg.epochs = f.epochs;
  if (given(8)) cfg.seed = f.seed;
  if (given(9)) cfg.tail = parse_tail_convention(args.tail);
  if (given(10)) cfg.z_cap = f.z_cap;
  if (given(11)) cfg.cbow_divisor = parse_cbow_divisor(args.cbow_divisor);
  if (given(12)) cfg.bracket_clip = f.bracket_clip;
  if (given(13)) cfg.init_scale = f.init_scale;
  if (given(14)) cfg.dynamic_window = f.dynamic_window;
  if (given(15)) cfg.subsample = f.subsample;
  if (given(16)) cfg.min_count = f.min_count;
  if (given(17)) cfg.lowercase = f.lowercase;
  if (given(18)) cfg.neg_power = f.neg_power;
  if (given(19)) cfg.neg_table_size = f.neg_table_size;
  if (!alpha_set) cfg.alpha = default_alpha(model);
  cfg.validate();
  return cfg;
}

Normalizer parse_normalizer(const std::string& name) {
  if (name == "sampled") return Normalizer::Sampled;
  if (name == "full") return Normalizer::Full;
  throw std::invalid_argument("unknown normalizer '" + name + "' (sampled | full)");
}

std::vector<fs::path> existing_files(const std::vector<std::string>& names) {
  std::vector<fs::path> paths;
  for (const auto& n : names) {
    std::ifstream probe(n, std::ios::binary);
    if (!probe || fs::is_directory(n)) throw IoError("cannot read corpus '" + n + "'");
    paths.emplace_back(n);
  }
  return paths;
}

int cmd_train(const TrainArgs& args, const std::vector<CLI::Option*>& opts) {
  const auto started = std::chrono::steady_clock::now();
  const ModelKind model = parse_model_kind(args.model);
  const SdConfig cfg = resolve_config(args, opts, model);
  const Normalizer normalizer = parse_normalizer(args.normalizer);
  if (args.threads < 1) throw std::invalid_argument("--threads must be >= 1");
  const auto paths = existing_files(args.corpus);
  const fs::path out = args.out;
  if (fs::exists(out) && !fs::is_directory(out)) throw IoError("'" + args.out + "' is not a directory");

  std::cerr << "reading corpus...\n";
  const auto corpus = load_corpus(paths, cfg.min_count, TokenizeOptions{cfg.lowercase});
  std::cerr << "tokens " << corpus.ids.size() << ", vocabulary " << corpus.vocab.size() << "\n";
  const NegativeTable table(corpus.vocab, cfg.neg_power,
                            std::max(cfg.neg_table_size, corpus.vocab.size()));

  TrainOptions options;
  options.threads = args.threads;
  options.normalizer = normalizer;
  options.progress = [](double progress, const TrainStats&) {
    std::fprintf(stderr, "\rprogress %5.1f%%", 100.0 * progress);
  };
  auto result = train(model, corpus.ids, corpus.vocab, table, cfg, options);
  std::cerr << "\rtrained in " << result.stats.wallclock_seconds << " s, max active length "
            << result.stats.max_active_len << "\n";
  if (result.stats.z_cap_hits > 0) {
    std::cerr << "warning: z_cap reached " << result.stats.z_cap_hits << " times\n";
  }

  fs::create_directories(out);
  const auto tokens = corpus.vocab.tokens();
  {
    std::ofstream v(out / "vocab.tsv", std::ios::binary);
    if (!v) throw IoError("cannot write '" + (out / "vocab.tsv").string() + "'");
    corpus.vocab.write_tsv(v);
  }
  write_embeddings(out / "words.txt", result.stores.words, tokens);
  write_embeddings(out / "contexts.txt", result.stores.contexts, tokens);
  write_json(out / "embeddings.json",
             json(EmbeddingMeta{cfg.a, cfg.lambda, cfg.init_dims, cfg.tail, model}));
  write_json(out / "train_stats.json", json(result.stats));

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = cfg;
  manifest.model = model;
  manifest.corpus_paths = args.corpus;
  manifest.corpus_bytes = corpus.bytes;
  manifest.corpus_tokens = corpus.ids.size();
  manifest.vocab_size = corpus.vocab.size();
  manifest.threads = args.threads;
  manifest.outputs = {"vocab.tsv", "words.txt", "contexts.txt", "embeddings.json",
                      "train_stats.json"};
  manifest.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  auto mj = manifest_to_json(manifest);
  mj["normalizer"] = args.normalizer;
  write_json(out / "manifest.json", mj);
  return kExitOk;
}

struct ModelDir {
  Vocabulary vocab;
  EmbeddingStores stores;
  SdConfig cfg;
  ModelKind model = ModelKind::SDSG;
};

ModelDir load_model_dir(const fs::path& dir, bool need_contexts) {
  ModelDir m;
  {
    std::ifstream v(dir / "vocab.tsv", std::ios::binary);
    if (!v) throw IoError("cannot open '" + (dir / "vocab.tsv").string() + "'");
    m.vocab = Vocabulary::read_tsv(v);
  }
  auto words = read_embeddings(dir / "words.txt");
  if (words.tokens.size() != m.vocab.size()) throw IoError("words.txt does not match vocab.tsv");
  for (std::size_t i = 0; i < words.tokens.size(); ++i) {
    if (words.tokens[i] != m.vocab.token(static_cast<WordId>(i))) {
      throw IoError("words.txt does not match vocab.tsv");
    }
  }
  m.stores.words = std::move(words.matrix);
  if (need_contexts) {
    auto ctx = read_embeddings(dir / "contexts.txt");
    if (ctx.tokens.size() != m.vocab.size()) throw IoError("contexts.txt does not match vocab.tsv");
    m.stores.contexts = std::move(ctx.matrix);
  }
  if (fs::exists(dir / "manifest.json")) {
    const auto mj = read_json(dir / "manifest.json");
    apply_config_json(mj.at("config"), m.cfg);
    m.model = parse_model_kind(mj.at("model").get<std::string>());
  }
  const auto meta = read_json(dir / "embeddings.json").get<EmbeddingMeta>();
  m.cfg.a = meta.a;
  m.cfg.lambda = meta.lambda;
  m.cfg.init_dims = meta.init_dims;
  m.cfg.tail = meta.tail;
  return m;
}

struct EvalArgs {
  std::string model_dir;
  std::string dataset;
  bool lowercase = false;
};

int cmd_eval(const EvalArgs& args) {
  const auto m = load_model_dir(args.model_dir, false);
  const auto dataset = SimilarityDataset::load(args.dataset);
  try {
    const auto report = eval_similarity(m.stores.words, m.vocab, dataset, args.lowercase);
    std::cout << json(report).dump(2) << "\n";
    return kExitOk;
  } catch (const EvaluationError& e) {
    std::cerr << "error: " << e.what() << "\n" << json(e.report).dump() << "\n";
    return kExitInternal;
  }
}

struct InspectArgs {
  std::string model_dir;
  std::vector<std::string> corpus;
  std::string out;
  bool expected_dims = false;
  std::string zdist;
  std::string neighbors;
  std::size_t k = 10;
  std::optional<std::uint32_t> cutoff;
  std::size_t max_windows = 10000;
  double bin_width = 1.0;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_inspect(const InspectArgs& args) {
  const int modes = (args.expected_dims ? 1 : 0) + (args.zdist.empty() ? 0 : 1) +
                    (args.neighbors.empty() ? 0 : 1);
  if (modes != 1) throw UsageError("choose exactly one of --expected-dims, --zdist, --neighbors");
  const auto started = std::chrono::steady_clock::now();
  const bool needs_corpus = args.expected_dims || !args.zdist.empty();
  if (needs_corpus && args.corpus.empty()) throw UsageError("--corpus is required for this mode");
  if (args.expected_dims && args.out.empty()) throw UsageError("--expected-dims needs --out");
  const auto m = load_model_dir(args.model_dir, needs_corpus);

  std::string table;
  std::string hist;
  if (!args.neighbors.empty()) {
    const auto ns = nearest_neighbors(m.stores.words, m.vocab, args.neighbors, args.k, args.cutoff);
    table = "rank,token,similarity\n";
    for (std::size_t i = 0; i < ns.size(); ++i) {
      table += std::to_string(i + 1) + "," + m.vocab.token(ns[i].id) + "," +
               format_double(ns[i].similarity) + "\n";
    }
  } else {
    const auto paths = existing_files(args.corpus);
    const auto ids = encode_files(paths, m.vocab, TokenizeOptions{m.cfg.lowercase});
    if (!args.zdist.empty()) {
      const auto id = m.vocab.find(args.zdist);
      if (!id) throw std::invalid_argument("word '" + args.zdist + "' is not in the vocabulary");
      const auto post = word_z_distribution(m.stores, ids, *id, m.cfg, args.max_windows);
      table = "z,probability\n";
      for (std::size_t z = 0; z < post.probs.size(); ++z) {
        table += std::to_string(z + 1) + "," + format_double(post.probs[z]) + "\n";
      }
      table += ">" + std::to_string(post.l()) + "," + format_double(post.tail_mass) + "\n";
    } else {
      const auto rows = expected_dim_report(m.stores, m.vocab, ids, m.cfg, args.max_windows);
      table = "token,count,active_len,expected_dim\n";
      std::vector<double> values;
      for (const auto& r : rows) {
        table += m.vocab.token(r.id) + "," + std::to_string(r.count) + "," +
                 std::to_string(r.active_len) + "," + format_double(r.expected_dim) + "\n";
        values.push_back(r.expected_dim);
      }
      hist = "bin_left,count\n";
      for (const auto& b : histogram(values, args.bin_width)) {
        hist += format_double(b.left) + "," + std::to_string(b.count) + "\n";
      }
    }
  }

  if (args.out.empty()) {
    std::cout << table;
    return kExitOk;
  }
  const fs::path out = args.out;
  fs::create_directories(out);
  RunManifest manifest;
  manifest.config = m.cfg;
  manifest.model = m.model;
  manifest.corpus_paths = args.corpus;
  manifest.vocab_size = m.vocab.size();
  if (args.expected_dims) {
    manifest.command = "inspect --expected-dims";
    write_text(out / "expected_dims.csv", table);
    write_text(out / "expected_dims_hist.csv", hist);
    manifest.outputs = {"expected_dims.csv", "expected_dims_hist.csv"};
  } else if (!args.zdist.empty()) {
    manifest.command = "inspect --zdist " + args.zdist;
    write_text(out / "zdist.csv", table);
    manifest.outputs = {"zdist.csv"};
  } else {
    manifest.command = "inspect --neighbors " + args.neighbors;
    write_text(out / "neighbors.csv", table);
    manifest.outputs = {"neighbors.csv"};
  }
  manifest.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  auto mj = manifest_to_json(manifest);
  mj["model_dir"] = args.model_dir;
  write_json(out / "manifest.json", mj);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-dimensionality word embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  TrainArgs train_args;
  std::vector<CLI::Option*> config_opts;
  auto* train_cmd = app.add_subcommand("train", "Train embeddings on a corpus");
  train_cmd->add_option("--model", train_args.model, "sg | cbow | sdsg | sdcbow")->required();
  train_cmd->add_option("--corpus", train_args.corpus, "Corpus text file(s)")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--config", train_args.config_file, "JSON config (flags override it)");
  train_cmd->add_option("--threads", train_args.threads, "Hogwild threads (>= 2: not bit-reproducible)");
  train_cmd->add_option("--normalizer", train_args.normalizer, "sampled | full (V <= 1000)");
  add_config_flags(*train_cmd, train_args, config_opts);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Spearman correlation on a similarity dataset");
  eval_cmd->add_option("--model-dir", eval_args.model_dir, "Directory written by train")->required();
  eval_cmd->add_option("--dataset", eval_args.dataset, "word1 word2 score file")->required();
  eval_cmd->add_flag("--lowercase", eval_args.lowercase, "Lowercase dataset words");

  InspectArgs inspect_args;
  auto* inspect_cmd = app.add_subcommand("inspect", "Dimensionality and neighbour reports");
  inspect_cmd->add_option("--model-dir", inspect_args.model_dir, "Directory written by train")->required();
  inspect_cmd->add_option("--corpus", inspect_args.corpus, "Corpus for z-distributions");
  inspect_cmd->add_option("--out", inspect_args.out, "Output directory (default: stdout)");
  inspect_cmd->add_flag("--expected-dims", inspect_args.expected_dims, "Per-word E[z] table and histogram");
  inspect_cmd->add_option("--zdist", inspect_args.zdist, "p(z|w) for WORD");
  inspect_cmd->add_option("--neighbors", inspect_args.neighbors, "Nearest neighbours of WORD");
  inspect_cmd->add_option("--k", inspect_args.k, "Number of neighbours");
  inspect_cmd->add_option("--cutoff", inspect_args.cutoff, "Use only the first D dimensions");
  inspect_cmd->add_option("--max-windows", inspect_args.max_windows, "Occurrences averaged per word");
  inspect_cmd->add_option("--bin-width", inspect_args.bin_width, "Histogram bin width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, config_opts);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    return cmd_inspect(inspect_args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
