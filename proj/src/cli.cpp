// Copyright 2026 The medcode Authors.
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
#include "medcode/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "medcode/errors.hpp"
#include "medcode/ingest.hpp"
#include "medcode/random.hpp"

#ifndef MEDCODE_VERSION
#define MEDCODE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace medcode {
namespace {

// Typed reads from one config object; remembers which keys it consumed so
// leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) const { return j_.at(key); }

  void read(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() != static_cast<int>(v.get<long long>())) {
      mismatch(key, "an integer");
    }
    out = v.get<int>();
  }

  void read(const std::string& key, long& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) mismatch(key, "an integer");
    out = v.get<long>();
  }

  void read(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      mismatch(key, "a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) mismatch(key, "a number");
    out = v.get<double>();
  }

  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) mismatch(key, "true or false");
    out = v.get<bool>();
  }

  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) mismatch(key, "a string");
    out = v.get<std::string>();
  }

  void read(const std::string& key, fs::path& out) {
    std::string s;
    if (!has(key)) return;
    read(key, s);
    out = s;
  }

  void read(const std::string& key, std::vector<int>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) mismatch(key, "a list of integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer()) mismatch(key, "a list of integers");
      out.push_back(e.get<int>());
    }
  }

  void read(const std::string& key, std::vector<fs::path>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) mismatch(key, "a list of paths");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_string()) mismatch(key, "a list of paths");
      out.emplace_back(e.get<std::string>());
    }
  }

  void require(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key: " + key_path(key));
  }

  void reject(const std::string& key, const std::string& reason) {
    if (j_.contains(key)) throw ConfigError(key_path(key) + " " + reason);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key: " + key_path(item.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  [[noreturn]] void mismatch(const std::string& key, const char* expected) const {
    throw ConfigError(key_path(key) + ": expected " + expected + ", got " + j_.at(key).dump());
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* source_name(DataSource s) {
  switch (s) {
    case DataSource::Synthetic: return "synthetic";
    case DataSource::Jsonl: return "jsonl";
    case DataSource::MimicCsv: return "mimic_csv";
  }
  return "?";
}

DataSource parse_source(const std::string& s) {
  for (auto v : {DataSource::Synthetic, DataSource::Jsonl, DataSource::MimicCsv}) {
    if (s == source_name(v)) return v;
  }
  throw ConfigError("data.source '" + s + "' (expected synthetic, jsonl or mimic_csv)");
}

const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "adamw"; }
const char* schedule_name(Schedule s) {
  return s == Schedule::Constant ? "constant" : "warmup_linear";
}

void read_corpus(Section& s, CorpusSpec& c) {
  s.read("n_train", c.n_train);
  s.read("n_dev", c.n_dev);
  s.read("n_test", c.n_test);
  s.read("n_labels", c.n_labels);
  s.read("min_length", c.min_length);
  s.read("max_length", c.max_length);
  s.read("keywords_per_label", c.keywords_per_label);
  s.read("planted_per_label", c.planted_per_label);
  s.read("zipf_exponent", c.zipf_exponent);
  s.read("mean_labels_per_doc", c.mean_labels_per_doc);
  s.read("max_labels_per_doc", c.max_labels_per_doc);
  s.read("noise_vocab", c.noise_vocab);
  s.read("distractor_rate", c.distractor_rate);
  s.read("seed", c.seed);
  s.finish();
}

void read_data(Section& s, DataConfig& d, std::uint64_t seed) {
  s.require("source");
  std::string source;
  s.read("source", source);
  d.source = parse_source(source);
  s.read("top_k", d.top_k);
  s.read("min_count", d.min_count);

  const std::string why = std::string("does not apply to source ") + source;
  if (d.source != DataSource::Synthetic) s.reject("synthetic", why);
  if (d.source != DataSource::Jsonl) {
    for (const char* k : {"train", "dev", "test"}) s.reject(k, why);
  }
  if (d.source != DataSource::MimicCsv) {
    for (const char* k : {"notes", "codes", "dev_fraction", "test_fraction"}) s.reject(k, why);
  }

  switch (d.source) {
    case DataSource::Synthetic:
      d.synthetic.seed = derive_seed(seed, "corpus");
      if (s.has("synthetic")) {
        Section c(s.at("synthetic"), s.key_path("synthetic"));
        read_corpus(c, d.synthetic);
      }
      break;
    case DataSource::Jsonl:
      for (const char* k : {"train", "dev", "test"}) s.require(k);
      s.read("train", d.train);
      s.read("dev", d.dev);
      s.read("test", d.test);
      break;
    case DataSource::MimicCsv:
      s.require("notes");
      s.require("codes");
      s.read("notes", d.notes);
      s.read("codes", d.codes);
      s.read("dev_fraction", d.dev_fraction);
      s.read("test_fraction", d.test_fraction);
      break;
  }
  s.finish();
}

void validate_data(const DataConfig& d) {
  if (d.top_k < 0) throw ConfigError("data.top_k must be >= 0");
  if (d.min_count < 1) throw ConfigError("data.min_count must be >= 1");
  if (d.source == DataSource::Synthetic) d.synthetic.validate();
  if (d.source == DataSource::MimicCsv) {
    if (d.codes.empty()) throw ConfigError("data.codes must list at least one file");
    if (d.dev_fraction < 0 || d.test_fraction < 0 || d.dev_fraction + d.test_fraction >= 1) {
      throw ConfigError("data.dev_fraction and data.test_fraction must be >= 0 and sum below 1");
    }
  }
}

void validate_eval(const EvalConfig& e) {
  if (e.ks.empty()) throw ConfigError("eval.ks must not be empty");
  for (int k : e.ks) {
    if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
  }
  if (e.bin_edges.empty()) throw ConfigError("eval.bin_edges must not be empty");
  for (std::size_t i = 0; i < e.bin_edges.size(); ++i) {
    if (e.bin_edges[i] < 1 || (i && e.bin_edges[i] <= e.bin_edges[i - 1])) {
      throw ConfigError("eval.bin_edges must be positive and strictly increasing");
    }
  }
  if (!(e.threshold > 0 && e.threshold < 1)) throw ConfigError("eval.threshold must lie in (0, 1)");
  if (e.split != "train" && e.split != "dev" && e.split != "test") {
    throw ConfigError("eval.split '" + e.split + "' (expected train, dev or test)");
  }
}

void validate_cbow(const CbowConfig& c) {
  if (c.window < 1) throw ConfigError("embeddings.window must be >= 1");
  if (c.negatives < 1) throw ConfigError("embeddings.negatives must be >= 1");
  if (c.epochs < 0) throw ConfigError("embeddings.epochs must be >= 0");
  if (!(c.lr > 0)) throw ConfigError("embeddings.lr must be positive");
}

json corpus_json(const CorpusSpec& c) {
  return {{"n_train", c.n_train},
          {"n_dev", c.n_dev},
          {"n_test", c.n_test},
          {"n_labels", c.n_labels},
          {"min_length", c.min_length},
          {"max_length", c.max_length},
          {"keywords_per_label", c.keywords_per_label},
          {"planted_per_label", c.planted_per_label},
          {"zipf_exponent", c.zipf_exponent},
          {"mean_labels_per_doc", c.mean_labels_per_doc},
          {"max_labels_per_doc", c.max_labels_per_doc},
          {"noise_vocab", c.noise_vocab},
          {"distractor_rate", c.distractor_rate},
          {"seed", c.seed}};
}

std::vector<std::string> split_dotted(const std::string& key) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : key) {
    if (ch == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  for (const auto& p : parts) {
    if (p.empty()) throw ConfigError("bad override key '" + key + "'");
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Artifact helpers.

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

fs::path require_artifact(const RunConfig& c, const std::string& name, Command producer) {
  const auto path = c.output_dir / name;
  if (!fs::exists(path)) {
    throw DataError("missing " + path.string() + "; run 'medcode " + to_string(producer) +
                    "' with this config first");
  }
  return path;
}

std::string dataset_hash(const RunConfig& c) {
  std::uint64_t h = fnv1a("");
  for (const std::string& name : {artifacts::dataset("train"), artifacts::dataset("dev"),
                                 artifacts::dataset("test"), std::string(artifacts::kVocab),
                                 std::string(artifacts::kLabels)}) {
    const auto path = c.output_dir / name;
    if (fs::exists(path)) h = fnv1a(slurp(path), fnv1a(name, h));
  }
  return hex64(h);
}

void write_manifest(Command command, const RunConfig& c, const std::vector<std::string>& outputs,
                    json extra = json::object()) {
  const json config = to_json(c);
  json m = {{"command", to_string(command)},
            {"version", tool_version()},
            {"seed", c.seed},
            {"config_hash", hex64(fnv1a(config.dump()))},
            {"dataset_hash", dataset_hash(c)},
            {"artifacts", outputs},
            {"config", config}};
  m.update(extra);
  write_text(c.output_dir / artifacts::manifest(command), m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Data.

void split_ingested(std::vector<Document> docs, const DataConfig& d, std::uint64_t seed,
                    Dataset& out) {
  Rng rng(derive_seed(seed, "split"));
  std::shuffle(docs.begin(), docs.end(), rng);
  const auto n = docs.size();
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * d.test_fraction));
  const auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * d.dev_fraction));
  if (n_test + n_dev >= n) throw DataError("too few admissions to carve out dev and test splits");
  out.test.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.dev.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_test),
                 docs.begin() + static_cast<std::ptrdiff_t>(n_test + n_dev));
  out.train.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_test + n_dev), docs.end());
}

Dataset load_raw_dataset(const RunConfig& c, std::ostream& log) {
  const auto& d = c.data;
  Dataset data;
  switch (d.source) {
    case DataSource::Synthetic:
      data = generate_synthetic_corpus(d.synthetic).data;
      break;
    case DataSource::Jsonl:
      data.train = read_documents(d.train);
      data.dev = read_documents(d.dev);
      data.test = read_documents(d.test);
      break;
    case DataSource::MimicCsv: {
      auto ingested = ingest_csv_notes(d.notes, d.codes);
      log << "ingest: " << ingested.documents.size() << " admissions, " << ingested.skipped_rows
          << " skipped rows, " << ingested.dropped_admissions << " admissions without codes\n";
      split_ingested(std::move(ingested.documents), d, c.seed, data);
      break;
    }
  }
  if (data.train.empty()) throw DataError("training split is empty");
  if (d.top_k > 0) {
    data = filter_top_k_labels(data, d.top_k);
  } else {
    data.labels = LabelSpace::from_training(data.train);
  }
  restrict_to_label_space(data.dev, data.labels);
  restrict_to_label_space(data.test, data.labels);
  return data;
}

struct Prepared {
  Vocabulary vocab;
  LabelSpace labels;
};

Prepared load_prepared(const RunConfig& c) {
  Prepared p;
  p.vocab = Vocabulary::load(require_artifact(c, artifacts::kVocab, Command::Preprocess));
  p.labels = LabelSpace::load(require_artifact(c, artifacts::kLabels, Command::Preprocess));
  return p;
}

std::vector<Document> load_split(const RunConfig& c, const std::string& split) {
  return read_documents(require_artifact(c, artifacts::dataset(split), Command::Preprocess));
}

std::unique_ptr<Model<float>> load_model(const RunConfig& c, const Prepared& p) {
  auto model = load_checkpoint<float>(require_artifact(c, artifacts::kCheckpoint, Command::Train));
  const auto& spec = model->spec();
  if (spec.vocab_size != p.vocab.size() || spec.num_labels != p.labels.size()) {
    throw DataError("checkpoint expects " + std::to_string(spec.vocab_size) + " words and " +
                    std::to_string(spec.num_labels) + " labels but the prepared data has " +
                    std::to_string(p.vocab.size()) + " and " + std::to_string(p.labels.size()));
  }
  return model;
}

std::vector<Prediction> score_split(const RunConfig& c, const Prepared& p,
                                    const Model<float>& model) {
  const auto docs = load_split(c, c.eval.split);
  if (docs.empty()) throw DataError("split '" + c.eval.split + "' has no documents");
  const auto examples = encode_examples(docs, p.vocab, p.labels, model.max_input_length());
  return predict_all(model, std::span<const Example>(examples));
}

// ---------------------------------------------------------------------------
// Commands.

int run_preprocess(const RunConfig& c, std::ostream& log) {
  const Dataset data = load_raw_dataset(c, log);
  const auto vocab = Vocabulary::build(data.train, c.data.min_count);
  write_documents(c.output_dir / artifacts::dataset("train"), data.train);
  write_documents(c.output_dir / artifacts::dataset("dev"), data.dev);
  write_documents(c.output_dir / artifacts::dataset("test"), data.test);
  vocab.save(c.output_dir / artifacts::kVocab);
  data.labels.save(c.output_dir / artifacts::kLabels);
  log << "preprocess: train " << data.train.size() << ", dev " << data.dev.size() << ", test "
      << data.test.size() << " documents; " << vocab.size() << " words; " << data.labels.size()
      << " labels\n";
  write_manifest(Command::Preprocess, c,
                 {artifacts::dataset("train"), artifacts::dataset("dev"), artifacts::dataset("test"),
                  artifacts::kVocab, artifacts::kLabels},
                 {{"documents", {{"train", data.train.size()}, {"dev", data.dev.size()},
                                 {"test", data.test.size()}}},
                  {"vocab_size", vocab.size()},
                  {"labels", data.labels.size()}});
  return 0;
}

int run_pretrain(const RunConfig& c, std::ostream& log) {
  const auto p = load_prepared(c);
  const auto docs = load_split(c, "train");
  std::vector<std::vector<int>> sequences;
  for (const auto& d : docs) {
    if (d.tokens.empty()) continue;
    sequences.push_back(encode_and_truncate(d, p.vocab, static_cast<int>(d.tokens.size())));
  }
  CbowConfig cbow = c.embeddings;
  cbow.dim = c.model.cnn.embedding_dim;
  cbow.seed = derive_seed(c.seed, "cbow");
  const auto table = train_cbow(sequences, p.vocab, cbow);
  write_embeddings(c.output_dir / artifacts::kEmbeddings, p.vocab, table);
  log << "pretrain-embeddings: " << table.rows() << " x " << table.cols() << " table\n";
  write_manifest(Command::PretrainEmbeddings, c, {artifacts::kEmbeddings},
                 {{"embedding_dim", cbow.dim}});
  return 0;
}

int run_train(const RunConfig& c, std::ostream& log) {
  const auto p = load_prepared(c);
  ModelSpec spec = c.model;
  spec.vocab_size = p.vocab.size();
  spec.num_labels = p.labels.size();
  auto model = make_model<float>(spec, derive_seed(c.seed, "init"));

  if (!is_encoder(spec.kind)) {
    const auto path = c.output_dir / artifacts::kEmbeddings;
    if (spec.cnn.static_embeddings) {
      require_artifact(c, artifacts::kEmbeddings, Command::PretrainEmbeddings);
    }
    if (fs::exists(path)) set_word_embeddings(*model, read_embeddings(path, p.vocab));
  }

  const auto train_docs = load_split(c, "train");
  const auto dev_docs = load_split(c, "dev");
  const int max_len = model->max_input_length();
  const auto train_set = encode_examples(train_docs, p.vocab, p.labels, max_len);
  const auto dev_set = encode_examples(dev_docs, p.vocab, p.labels, max_len);

  log << "train: " << to_string(spec.kind) << ", " << model->trainable_parameter_count()
      << " trainable parameters, " << train_set.size() << " train / " << dev_set.size()
      << " dev documents\n";
  std::ofstream history(c.output_dir / artifacts::kHistory, std::ios::trunc);
  if (!history) throw DataError("cannot write " + (c.output_dir / artifacts::kHistory).string());
  const auto result = train<float>(*model, train_set, dev_set, c.train, [&](const EpochRecord& r) {
    history << to_json(r).dump() << '\n';
    history.flush();
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %d  loss %.4f  dev micro-F1 %.4f  macro-F1 %.4f%s\n",
                  r.epoch, r.train_loss, r.dev_micro_f1, r.dev_macro_f1, r.improved ? "  *" : "");
    log << line;
  });
  save_checkpoint(*model, c.output_dir / artifacts::kCheckpoint);
  if (result.aborted) log << "train: stopped on a non-finite value: " << *result.aborted << '\n';
  log << "train: best epoch " << result.best_epoch << '\n';

  write_manifest(Command::Train, c, {artifacts::kCheckpoint, artifacts::kHistory},
                 {{"best_epoch", result.best_epoch},
                  {"epochs_run", result.history.size()},
                  {"stopped_early", result.stopped_early},
                  {"aborted", result.aborted ? json(*result.aborted) : json(nullptr)},
                  {"parameters", model->parameter_count()},
                  {"trainable_parameters", model->trainable_parameter_count()}});
  return result.aborted ? 3 : 0;
}

int run_evaluate(const RunConfig& c, std::ostream& log) {
  const auto p = load_prepared(c);
  const auto model = load_model(c, p);
  const auto preds = score_split(c, p, *model);
  std::vector<int> ks;
  for (int k : c.eval.ks) {
    if (k <= p.labels.size()) {
      ks.push_back(k);
    } else {
      log << "evaluate: skipping P@" << k << " (only " << p.labels.size() << " labels)\n";
    }
  }
  const auto report = evaluate_predictions(preds, p.labels, ks, c.eval.bin_edges, c.eval.threshold);
  json j = to_json(report);
  j["split"] = c.eval.split;
  write_text(c.output_dir / artifacts::kMetrics, j.dump(2) + "\n");
  char line[160];
  std::snprintf(line, sizeof(line), "evaluate %s: micro-F1 %.4f  macro-F1 %.4f\n",
                c.eval.split.c_str(), report.prf.micro_f1, report.prf.macro_f1);
  log << line;
  write_manifest(Command::Evaluate, c, {artifacts::kMetrics});
  return 0;
}

int run_predict(const RunConfig& c, std::ostream& log) {
  const auto p = load_prepared(c);
  const auto model = load_model(c, p);
  const auto preds = score_split(c, p, *model);
  write_predictions(c.output_dir / artifacts::kPredictions, preds, p.labels);
  log << "predict: " << preds.size() << " documents from " << c.eval.split << '\n';
  write_manifest(Command::Predict, c, {artifacts::kPredictions});
  return 0;
}

int run_bins(const RunConfig& c, std::ostream& log) {
  const auto p = load_prepared(c);
  const auto model = load_model(c, p);
  const auto preds = score_split(c, p, *model);
  const auto bins = frequency_binned_f1(preds, p.labels, c.eval.bin_edges, c.eval.threshold);
  const json j = {{"split", c.eval.split},
                  {"threshold", c.eval.threshold},
                  {"edges", c.eval.bin_edges},
                  {"bins", bins_to_json(bins)}};
  write_text(c.output_dir / artifacts::kBins, j.dump(2) + "\n");
  for (const auto& b : bins) {
    char line[160];
    std::snprintf(line, sizeof(line), "bin %-12s labels %3d  macro-F1 %.4f\n", b.range().c_str(),
                  b.labels, b.macro_f1);
    log << line;
  }
  write_manifest(Command::BinAnalysis, c, {artifacts::kBins});
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config_json(const json& j) {
  Section root(j, "");
  RunConfig c;
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);

  root.require("model");
  Section m(root.at("model"), "model");
  m.require("kind");
  std::string kind;
  m.read("kind", kind);
  c.model.kind = parse_model_kind(kind);
  const bool encoder = is_encoder(c.model.kind);
  m.reject(encoder ? "cnn" : "encoder", "does not apply to kind " + kind);
  if (encoder && m.has("encoder")) {
    Section e(m.at("encoder"), "model.encoder");
    auto& ec = c.model.encoder;
    e.read("hidden", ec.hidden);
    e.read("layers", ec.layers);
    e.read("heads", ec.heads);
    e.read("ff", ec.ff);
    e.read("max_positions", ec.max_positions);
    e.read("dropout", ec.dropout);
    e.read("seg_len", ec.seg_len);
    e.read("max_total", ec.max_total);
    e.read("top_layers", ec.top_layers);
    e.finish();
  }
  if (!encoder && m.has("cnn")) {
    Section n(m.at("cnn"), "model.cnn");
    auto& cc = c.model.cnn;
    n.read("embedding_dim", cc.embedding_dim);
    n.read("kernel", cc.kernel);
    n.read("filters", cc.filters);
    n.read("dropout", cc.dropout);
    n.read("static", cc.static_embeddings);
    n.read("max_length", cc.max_length);
    n.finish();
  }
  m.finish();

  root.require("data");
  Section d(root.at("data"), "data");
  read_data(d, c.data, c.seed);

  c.train = default_train_config(c.model.kind);
  if (root.has("train")) {
    Section t(root.at("train"), "train");
    auto& tc = c.train;
    t.read("batch_size", tc.batch_size);
    t.read("accumulation", tc.accumulation);
    t.read("lr", tc.lr);
    std::string name = optimizer_name(tc.optimizer);
    t.read("optimizer", name);
    if (name == "adam") {
      tc.optimizer = OptimizerKind::Adam;
    } else if (name == "adamw") {
      tc.optimizer = OptimizerKind::AdamW;
    } else {
      throw ConfigError("train.optimizer '" + name + "' (expected adam or adamw)");
    }
    name = schedule_name(tc.schedule);
    t.read("schedule", name);
    if (name == "constant") {
      tc.schedule = Schedule::Constant;
    } else if (name == "warmup_linear") {
      tc.schedule = Schedule::WarmupLinear;
    } else {
      throw ConfigError("train.schedule '" + name + "' (expected constant or warmup_linear)");
    }
    t.read("weight_decay", tc.weight_decay);
    t.read("warmup_steps", tc.warmup_steps);
    t.read("warmup_ratio", tc.warmup_ratio);
    t.read("total_steps", tc.total_steps);
    t.read("layerwise_decay", tc.layerwise_decay);
    t.read("clip_norm", tc.clip_norm);
    t.read("epochs", tc.epochs);
    t.read("patience", tc.patience);
    t.read("selection_metric", tc.selection_metric);
    t.read("threshold", tc.threshold);
    t.finish();
  }
  c.train.seed = c.seed;

  if (root.has("embeddings")) {
    Section e(root.at("embeddings"), "embeddings");
    e.read("window", c.embeddings.window);
    e.read("negatives", c.embeddings.negatives);
    e.read("epochs", c.embeddings.epochs);
    e.read("lr", c.embeddings.lr);
    e.finish();
  }
  c.embeddings.dim = c.model.cnn.embedding_dim;
  c.embeddings.seed = derive_seed(c.seed, "cbow");

  if (root.has("eval")) {
    Section e(root.at("eval"), "eval");
    e.read("ks", c.eval.ks);
    e.read("bin_edges", c.eval.bin_edges);
    e.read("threshold", c.eval.threshold);
    e.read("split", c.eval.split);
    e.finish();
  }
  root.finish();

  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  ModelSpec probe = c.model;
  probe.vocab_size = Vocabulary::kNumSpecial + 1;
  probe.num_labels = 1;
  probe.validate();
  c.train.validate();
  validate_cbow(c.embeddings);
  validate_data(c.data);
  validate_eval(c.eval);
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  const auto parts = split_dotted(key);
  json* node = &j;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() && !node->is_null()) break;
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() && !node->is_null()) {
    throw ConfigError("override '" + key + "' goes through a non-object value");
  }
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  (*node)[parts.back()] = std::move(value);
}

RunConfig parse_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j = json::parse(slurp(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config_json(j);
}

json to_json(const RunConfig& c) {
  json model = {{"kind", to_string(c.model.kind)}};
  const json spec = to_json(c.model);
  if (is_encoder(c.model.kind)) {
    model["encoder"] = spec.at("encoder");
  } else {
    model["cnn"] = spec.at("cnn");
  }

  json data = {{"source", source_name(c.data.source)},
               {"top_k", c.data.top_k},
               {"min_count", c.data.min_count}};
  switch (c.data.source) {
    case DataSource::Synthetic:
      data["synthetic"] = corpus_json(c.data.synthetic);
      break;
    case DataSource::Jsonl:
      data["train"] = c.data.train.string();
      data["dev"] = c.data.dev.string();
      data["test"] = c.data.test.string();
      break;
    case DataSource::MimicCsv: {
      json codes = json::array();
      for (const auto& p : c.data.codes) codes.push_back(p.string());
      data["notes"] = c.data.notes.string();
      data["codes"] = codes;
      data["dev_fraction"] = c.data.dev_fraction;
      data["test_fraction"] = c.data.test_fraction;
      break;
    }
  }

  const auto& t = c.train;
  return {{"seed", c.seed},
          {"output_dir", c.output_dir.string()},
          {"model", model},
          {"data", data},
          {"train",
           {{"batch_size", t.batch_size},
            {"accumulation", t.accumulation},
            {"lr", t.lr},
            {"optimizer", optimizer_name(t.optimizer)},
            {"schedule", schedule_name(t.schedule)},
            {"weight_decay", t.weight_decay},
            {"warmup_steps", t.warmup_steps},
            {"warmup_ratio", t.warmup_ratio},
            {"total_steps", t.total_steps},
            {"layerwise_decay", t.layerwise_decay},
            {"clip_norm", t.clip_norm},
            {"epochs", t.epochs},
            {"patience", t.patience},
            {"selection_metric", t.selection_metric},
            {"threshold", t.threshold}}},
          {"embeddings",
           {{"window", c.embeddings.window},
            {"negatives", c.embeddings.negatives},
            {"epochs", c.embeddings.epochs},
            {"lr", c.embeddings.lr}}},
          {"eval",
           {{"ks", c.eval.ks},
            {"bin_edges", c.eval.bin_edges},
            {"threshold", c.eval.threshold},
            {"split", c.eval.split}}}};
}

namespace {
constexpr std::pair<Command, const char*> kCommandNames[] = {
    {Command::Preprocess, "preprocess"},   {Command::PretrainEmbeddings, "pretrain-embeddings"},
    {Command::Train, "train"},             {Command::Evaluate, "evaluate"},
    {Command::Predict, "predict"},         {Command::BinAnalysis, "bin-analysis"}};
}  // namespace

Command parse_command(const std::string& name) {
  for (const auto& [c, n] : kCommandNames) {
    if (name == n) return c;
  }
  throw ConfigError("unknown command '" + name + "'");
}

std::string to_string(Command c) {
  for (const auto& [k, n] : kCommandNames) {
    if (k == c) return n;
  }
  return "?";
}

std::string artifacts::dataset(const std::string& split) { return "dataset." + split + ".jsonl"; }

std::string artifacts::manifest(Command c) { return "manifest." + to_string(c) + ".json"; }

int run_command(Command command, const RunConfig& config, std::ostream& log) {
  fs::create_directories(config.output_dir);
  switch (command) {
    case Command::Preprocess: return run_preprocess(config, log);
    case Command::PretrainEmbeddings: return run_pretrain(config, log);
    case Command::Train: return run_train(config, log);
    case Command::Evaluate: return run_evaluate(config, log);
    case Command::Predict: return run_predict(config, log);
    case Command::BinAnalysis: return run_bins(config, log);
  }
  return 1;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return 2;
  }
  return 1;
}

std::string tool_version() { return MEDCODE_VERSION; }

}  // namespace medcode
