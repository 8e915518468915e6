#include "ccr/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include "ccr/embedding.hpp"
#include "ccr/error.hpp"
#include "ccr/rng.hpp"
#include "ccr/scoring.hpp"
#include "ccr/synthetic.hpp"
#include "ccr/text.hpp"

namespace fs = std::filesystem;

namespace ccr {

std::string_view to_string(SamplingMode mode) { return mode == SamplingMode::hard ? "hard" : "random"; }

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "random") return SamplingMode::random;
  if (name == "hard") return SamplingMode::hard;
  throw ConfigError("unknown sampling mode \"" + std::string(name) + "\" (expected random or hard)");
}

std::string tool_version() { return CCR_VERSION; }

// ---------------------------------------------------------------------------
// Config

namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown config key \"" + where + "." + k + "\"");
  }
}

template <typename T>
void read_key(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return;
  try {
    out = obj[key].get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config key \"" + where + "." + key + "\" has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Json section(const Json& doc, const char* key) { return doc.contains(key) ? doc[key] : Json::object(); }

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& doc, const fs::path& base_dir) {
  check_keys(doc, {"paths", "backend", "seed", "normalize", "splits", "wordvec", "thresholds", "sampling", "train", "eval"},
             "config");
  PipelineConfig c;

  const Json paths = section(doc, "paths");
  check_keys(paths, {"corpus", "vectors", "questionnaires", "dictionaries", "officials", "output_dir"}, "paths");
  std::string s;
  read_key(paths, "corpus", s, "paths");
  if (s.empty()) throw ConfigError("config needs paths.corpus");
  c.corpus = resolve(base_dir, s);
  if (paths.contains("vectors") && !paths["vectors"].is_null()) {
    read_key(paths, "vectors", s, "paths");
    c.vectors = resolve(base_dir, s);
  }
  if (paths.contains("officials") && !paths["officials"].is_null()) {
    read_key(paths, "officials", s, "paths");
    c.officials = resolve(base_dir, s);
  }
  std::vector<std::string> list;
  read_key(paths, "questionnaires", list, "paths");
  for (const auto& p : list) c.questionnaires.push_back(resolve(base_dir, p));
  list.clear();
  read_key(paths, "dictionaries", list, "paths");
  for (const auto& p : list) c.dictionaries.push_back(resolve(base_dir, p));
  if (paths.contains("output_dir")) {
    read_key(paths, "output_dir", s, "paths");
    c.output_dir = resolve(base_dir, s);
  } else {
    c.output_dir = resolve(base_dir, c.output_dir.string());
  }

  read_key(doc, "backend", c.backend, "config");
  read_key(doc, "seed", c.seed, "config");

  const Json norm = section(doc, "normalize");
  check_keys(norm, {"enabled", "min_len", "max_len"}, "normalize");
  read_key(norm, "enabled", c.normalize, "normalize");
  read_key(norm, "min_len", c.min_len, "normalize");
  read_key(norm, "max_len", c.max_len, "normalize");

  const Json splits = section(doc, "splits");
  check_keys(splits, {"train", "valid", "test", "stratify_by_title"}, "splits");
  read_key(splits, "train", c.splits.train, "splits");
  read_key(splits, "valid", c.splits.valid, "splits");
  read_key(splits, "test", c.splits.test, "splits");
  read_key(splits, "stratify_by_title", c.stratify_by_title, "splits");

  const Json wv = section(doc, "wordvec");
  check_keys(wv, {"architecture", "dim", "epochs", "window", "negative", "min_count", "subword", "learning_rate", "workers"},
             "wordvec");
  if (wv.contains("architecture")) {
    read_key(wv, "architecture", s, "wordvec");
    c.wordvec.architecture = parse_architecture(s);
  }
  read_key(wv, "dim", c.wordvec.dim, "wordvec");
  read_key(wv, "epochs", c.wordvec.epochs, "wordvec");
  read_key(wv, "window", c.wordvec.window, "wordvec");
  read_key(wv, "negative", c.wordvec.negative, "wordvec");
  read_key(wv, "min_count", c.wordvec.min_count, "wordvec");
  read_key(wv, "learning_rate", c.wordvec.learning_rate, "wordvec");
  read_key(wv, "workers", c.wordvec.workers, "wordvec");
  if (wv.contains("subword") && !wv["subword"].is_null()) {
    const Json sw = wv["subword"];
    check_keys(sw, {"min_n", "max_n", "bucket_count"}, "wordvec.subword");
    SubwordConfig sc;
    read_key(sw, "min_n", sc.min_n, "wordvec.subword");
    read_key(sw, "max_n", sc.max_n, "wordvec.subword");
    read_key(sw, "bucket_count", sc.bucket_count, "wordvec.subword");
    c.wordvec.subword = sc;
  }

  const Json th = section(doc, "thresholds");
  check_keys(th, {"lower_pct", "upper_pct"}, "thresholds");
  read_key(th, "lower_pct", c.thresholds.lower_pct, "thresholds");
  read_key(th, "upper_pct", c.thresholds.upper_pct, "thresholds");

  if (doc.contains("sampling")) {
    read_key(doc, "sampling", s, "config");
    c.sampling = parse_sampling_mode(s);
  }

  const Json tr = section(doc, "train");
  check_keys(tr, {"batch_size", "epochs", "warmup_epochs", "learning_rate", "beta1", "beta2", "epsilon", "margin_alpha"},
             "train");
  read_key(tr, "batch_size", c.train.batch_size, "train");
  read_key(tr, "epochs", c.train.epochs, "train");
  read_key(tr, "warmup_epochs", c.train.warmup_epochs, "train");
  read_key(tr, "learning_rate", c.train.learning_rate, "train");
  read_key(tr, "beta1", c.train.beta1, "train");
  read_key(tr, "beta2", c.train.beta2, "train");
  read_key(tr, "epsilon", c.train.epsilon, "train");
  read_key(tr, "margin_alpha", c.loss.margin_alpha, "train");

  const Json ev = section(doc, "eval");
  check_keys(ev, {"sts_rounds", "sts_pairs_per_round", "qic_folds"}, "eval");
  read_key(ev, "sts_rounds", c.sts_rounds, "eval");
  read_key(ev, "sts_pairs_per_round", c.sts_pairs_per_round, "eval");
  read_key(ev, "qic_folds", c.qic_folds, "eval");

  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  Json doc;
  try {
    doc = read_json(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return from_json(doc, path.parent_path());
}

Json PipelineConfig::to_json() const {
  Json paths{{"corpus", corpus.string()}, {"output_dir", output_dir.string()}};
  paths["vectors"] = vectors ? Json(vectors->string()) : Json(nullptr);
  paths["officials"] = officials ? Json(officials->string()) : Json(nullptr);
  paths["questionnaires"] = Json::array();
  for (const auto& p : questionnaires) paths["questionnaires"].push_back(p.string());
  paths["dictionaries"] = Json::array();
  for (const auto& p : dictionaries) paths["dictionaries"].push_back(p.string());

  Json wv{{"architecture", std::string(to_string(wordvec.architecture))},
          {"dim", wordvec.dim},
          {"epochs", wordvec.epochs},
          {"window", wordvec.window},
          {"negative", wordvec.negative},
          {"min_count", wordvec.min_count},
          {"learning_rate", wordvec.learning_rate},
          {"workers", wordvec.workers}};
  wv["subword"] = wordvec.subword ? Json{{"min_n", wordvec.subword->min_n},
                                         {"max_n", wordvec.subword->max_n},
                                         {"bucket_count", wordvec.subword->bucket_count}}
                                  : Json(nullptr);
  return Json{
      {"paths", paths},
      {"backend", backend},
      {"seed", seed},
      {"normalize", {{"enabled", normalize}, {"min_len", min_len}, {"max_len", max_len}}},
      {"splits",
       {{"train", splits.train}, {"valid", splits.valid}, {"test", splits.test}, {"stratify_by_title", stratify_by_title}}},
      {"wordvec", wv},
      {"thresholds", {{"lower_pct", thresholds.lower_pct}, {"upper_pct", thresholds.upper_pct}}},
      {"sampling", std::string(to_string(sampling))},
      {"train",
       {{"batch_size", train.batch_size},
        {"epochs", train.epochs},
        {"warmup_epochs", train.warmup_epochs},
        {"learning_rate", train.learning_rate},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"epsilon", train.epsilon},
        {"margin_alpha", loss.margin_alpha}}},
      {"eval", {{"sts_rounds", sts_rounds}, {"sts_pairs_per_round", sts_pairs_per_round}, {"qic_folds", qic_folds}}},
  };
}

void PipelineConfig::validate() const {
  if (corpus.empty()) throw ConfigError("config needs a corpus path");
  if (questionnaires.size() != dictionaries.size() && !dictionaries.empty()) {
    throw ConfigError("give one dictionary per questionnaire or none");
  }
  if (min_len >= max_len) throw ConfigError("normalize.min_len must be below normalize.max_len");
  if (!vectors) wordvec.validate();
  thresholds.validate();
  train.validate();
  loss.validate();
  if (sts_rounds < 1 || sts_pairs_per_round < 2) throw ConfigError("eval needs sts_rounds >= 1 and sts_pairs_per_round >= 2");
  if (qic_folds < 2) throw ConfigError("eval.qic_folds must be at least 2");
}

std::string file_hash(const fs::path& path) { return to_hex(fnv1a64(read_file(path))); }

namespace {

std::string hash_json(const Json& j) { return to_hex(fnv1a64(j.dump())); }

Json input_hashes(const std::vector<fs::path>& paths) {
  Json out = Json::array();
  for (const auto& p : paths) out.push_back(file_hash(p));
  return out;
}

// Canonical config: output paths dropped, input paths replaced by content hashes.
Json canonical(const PipelineConfig& c) {
  Json j = c.to_json();
  Json& paths = j["paths"];
  paths.erase("output_dir");
  paths["corpus"] = file_hash(c.corpus);
  paths["vectors"] = c.vectors ? Json(file_hash(*c.vectors)) : Json(nullptr);
  paths["officials"] = c.officials ? Json(file_hash(*c.officials)) : Json(nullptr);
  paths["questionnaires"] = input_hashes(c.questionnaires);
  paths["dictionaries"] = input_hashes(c.dictionaries);
  return j;
}

}  // namespace

std::string config_hash(const PipelineConfig& config) { return hash_json(canonical(config)); }

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path meta_path(const fs::path& artifact) { return artifact.string() + ".meta.json"; }

class Runner {
 public:
  Runner(const PipelineConfig& config, std::ostream& log) : cfg_(config), log_(log), dir_(config.output_dir) {}

  std::vector<StageOutcome> run();

 private:
  using StageFn = void (Runner::*)();

  void stage(const std::string& name, const Json& params, const std::vector<std::string>& outputs, StageFn fn);
  bool fresh(const std::vector<std::string>& outputs, const std::string& hash) const;
  void write_meta(const std::string& output, const std::string& stage, const std::string& hash);

  void ingest();
  void train_wordvec();
  void build_pairs();
  void sample_triplets();
  void train_stage();
  void score();
  void evaluate();

  fs::path at(const std::string& name) const { return dir_ / name; }
  std::vector<ParagraphRecord> corpus() const { return ingest_corpus(at("corpus.jsonl")); }
  const EmbeddingBackend& backend();
  std::vector<Questionnaire> questionnaires() const;
  std::vector<Dictionary> dictionaries() const;

  const PipelineConfig& cfg_;
  std::ostream& log_;
  fs::path dir_;
  std::unique_ptr<EmbeddingBackend> backend_;
  std::string upstream_;
  bool forced_ = false;
  std::vector<StageOutcome> outcomes_;
  Json manifest_stages_ = Json::array();
  Json run_meta_ = Json::object();
  Json info_ = Json::object();  // per-output extra metadata set by the running stage
};

const EmbeddingBackend& Runner::backend() {
  if (!backend_) backend_ = make_backend(cfg_.backend);
  return *backend_;
}

std::vector<Questionnaire> Runner::questionnaires() const {
  std::vector<Questionnaire> out;
  for (const auto& p : cfg_.questionnaires) out.push_back(load_questionnaire(p));
  return out;
}

std::vector<Dictionary> Runner::dictionaries() const {
  std::vector<Dictionary> out;
  for (const auto& p : cfg_.dictionaries) out.push_back(load_dictionary(p));
  return out;
}

bool Runner::fresh(const std::vector<std::string>& outputs, const std::string& hash) const {
  for (const auto& name : outputs) {
    const auto path = at(name);
    if (!fs::exists(path) || !fs::exists(meta_path(path))) return false;
    try {
      const Json meta = read_json(meta_path(path));
      if (meta.value("stage_hash", "") != hash) return false;
      if (meta.value("content_hash", "") != file_hash(path)) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

void Runner::write_meta(const std::string& output, const std::string& stage, const std::string& hash) {
  const auto path = at(output);
  Json meta{{"artifact", output},
            {"stage", stage},
            {"tool_version", tool_version()},
            {"config_hash", config_hash(cfg_)},
            {"stage_hash", hash},
            {"seed", cfg_.seed},
            {"content_hash", file_hash(path)}};
  if (info_.contains(output)) meta["info"] = info_[output];
  write_json(meta_path(path), meta);
}

void Runner::stage(const std::string& name, const Json& params, const std::vector<std::string>& outputs, StageFn fn) {
  const Json key{{"stage", name}, {"tool_version", tool_version()}, {"upstream", upstream_}, {"params", params}};
  const std::string hash = hash_json(key);
  StageOutcome outcome{name, false, hash};
  if (!forced_ && fresh(outputs, hash)) {
    log_ << "[" << name << "] up to date, skipped\n";
  } else {
    if (!forced_ && fs::exists(at(outputs.front()))) log_ << "[" << name << "] stale or missing artifact, re-running\n";
    log_ << "[" << name << "] running\n";
    info_ = Json::object();
    try {
      (this->*fn)();
    } catch (const Error& e) {
      rethrow_with_context(e, "stage " + name + ": ");
    } catch (const Json::exception& e) {
      throw DataError("stage " + name + ": " + e.what());
    }
    for (const auto& o : outputs) write_meta(o, name, hash);
    outcome.ran = true;
    forced_ = true;
  }
  Json files = Json::object();
  for (const auto& o : outputs) files[o] = file_hash(at(o));
  manifest_stages_.push_back(Json{{"name", name}, {"stage_hash", hash}, {"outputs", files}});
  run_meta_["stages"][name] = Json{{"status", outcome.ran ? "ran" : "skipped"}, {"finished_at", utc_now()}};
  upstream_ = hash;
  outcomes_.push_back(outcome);
}

void Runner::ingest() {
  auto records = ingest_corpus(cfg_.corpus);
  std::size_t oversized = 0;
  if (cfg_.normalize) {
    auto norm = normalize_paragraphs(records, cfg_.min_len, cfg_.max_len);
    records = std::move(norm.records);
    oversized = norm.oversized.size();
  }
  records = assign_splits(std::move(records), cfg_.splits, derive_seed(cfg_.seed, 1), cfg_.stratify_by_title);
  write_corpus(at("corpus.jsonl"), records);
  const auto stats = compute_stats(records);
  info_["corpus.jsonl"] = Json{{"paragraphs", records.size()},
                               {"oversized", oversized},
                               {"works", stats.n_works},
                               {"split_fractions", stats.split_fractions}};
}

void Runner::train_wordvec() {
  if (cfg_.vectors) {
    save_vectors(load_vectors(*cfg_.vectors), at("vectors.txt"));
    info_["vectors.txt"] = Json{{"source", "loaded"}};
    return;
  }
  auto wv = cfg_.wordvec;
  wv.seed = derive_seed(cfg_.seed, 2);
  const auto model = train_word_vectors(tokenize_records(corpus()), wv);
  save_vectors(model, at("vectors.txt"));
  info_["vectors.txt"] = Json{{"source", "trained"}, {"vocab", model.size()}};
}

void Runner::build_pairs() {
  const auto records = corpus();
  const auto model = load_vectors(at("vectors.txt"));
  const auto sims = title_similarity_matrix(records, model);
  const auto values = sims.values();
  const auto thresholds = compute_thresholds(values, cfg_.thresholds);
  const auto labeled = label_pairs(filter_split(records, Split::train), sims, thresholds);
  if (labeled.pairs.empty()) throw DataError("no labeled pairs in the training split");
  write_pairs(at("pairs.jsonl"), labeled);
  const auto valid = sample_validation_pairs(filter_split(records, Split::valid), sims, derive_seed(cfg_.seed, 3));
  write_scored_pairs(at("valid_pairs.jsonl"), valid);

  std::size_t positives = 0;
  for (const auto& p : labeled.pairs) positives += p.label == PairLabel::positive ? 1 : 0;
  info_["pairs.jsonl"] = Json{{"lower", thresholds.lower},
                              {"upper", thresholds.upper},
                              {"positives", positives},
                              {"negatives", labeled.pairs.size() - positives},
                              {"excluded_titles", sims.excluded()}};
}

void Runner::sample_triplets() {
  const auto train = filter_split(corpus(), Split::train);
  const auto pairs = read_pairs(at("pairs.jsonl"));
  TripletSample sample;
  if (cfg_.sampling == SamplingMode::hard) {
    sample = sample_triplets_hard(pairs, train, embed_records(backend(), nullptr, train));
  } else {
    sample = sample_triplets_random(pairs, train, derive_seed(cfg_.seed, 4));
  }
  write_triplets(at("triplets.jsonl"), sample.triplets);
  info_["triplets.jsonl"] = Json{{"triplets", sample.triplets.size()}, {"skipped_anchors", sample.skipped_anchors}};
}

void Runner::train_stage() {
  const auto records = corpus();
  auto tc = cfg_.train;
  tc.seed = derive_seed(cfg_.seed, 5);
  const auto result = train_adapter(read_triplets(at("triplets.jsonl")), backend(), records, tc, cfg_.loss,
                                    read_scored_pairs(at("valid_pairs.jsonl")));
  save_adapter(result.adapter, AdapterMeta{cfg_.seed, upstream_, result.best_epoch}, at("adapter.json"));
  write_train_log(at("train_log.jsonl"), result.log);
  info_["adapter.json"] = Json{{"best_epoch", result.best_epoch},
                               {"baseline_pearson", result.reports.front().pearson},
                               {"best_pearson", result.reports[static_cast<std::size_t>(result.best_epoch)].pearson}};
}

void Runner::score() {
  const auto test = filter_split(corpus(), Split::test);
  const auto adapter = load_adapter(at("adapter.json"));
  std::vector<ScoreRecord> all;
  for (const auto& q : questionnaires()) {
    auto s = score_corpus(test, q, backend(), &adapter);
    all.insert(all.end(), s.begin(), s.end());
  }
  write_scores(at("scores.jsonl"), all);
}

void Runner::evaluate() {
  const auto records = corpus();
  const auto test = filter_split(records, Split::test);
  const auto model = load_vectors(at("vectors.txt"));
  const auto adapter = load_adapter(at("adapter.json"));
  const auto sims = title_similarity_matrix(records, model);
  const auto values = sims.values();
  const auto thresholds = compute_thresholds(values, cfg_.thresholds);

  const auto raw = embed_records(backend(), nullptr, test);
  std::map<std::string, Vector> adapted;
  for (const auto& [id, v] : raw) adapted.emplace(id, apply_adapter(adapter, v));

  Json out = Json::object();
  StsConfig sts{PairSource::random, cfg_.sts_rounds, cfg_.sts_pairs_per_round, derive_seed(cfg_.seed, 6)};
  out["sts_hard"] = Json{{"identity", eval_sts(test, sts, sims, raw).to_json()},
                         {"adapter", eval_sts(test, sts, sims, adapted).to_json()}};
  sts.source = PairSource::threshold;
  try {
    out["sts_easy"] = Json{{"identity", eval_sts(test, sts, sims, raw, &thresholds).to_json()},
                           {"adapter", eval_sts(test, sts, sims, adapted, &thresholds).to_json()}};
  } catch (const DataError& e) {
    out["sts_easy"] = Json{{"skipped", e.what()}};
  }

  const auto qs = questionnaires();
  const auto ds = dictionaries();
  if (!qs.empty() && !ds.empty()) {
    out["pm"] = eval_pm(test, qs, ds, backend(), &adapter, model).to_json();
  }
  if (qs.size() >= 2) {
    std::vector<Vector> items;
    std::vector<int> labels;
    for (std::size_t k = 0; k < qs.size(); ++k) {
      for (auto& v : embed_items(qs[k], backend(), &adapter)) {
        items.push_back(std::move(v));
        labels.push_back(static_cast<int>(k));
      }
    }
    if (items.size() >= cfg_.qic_folds) {
      out["qic"] = eval_qic(items, labels, cfg_.qic_folds, derive_seed(cfg_.seed, 7)).to_json();
    } else {
      out["qic"] = Json{{"skipped", "fewer items than folds"}};
    }
  }
  if (cfg_.officials && !qs.empty()) {
    const auto officials = read_officials(*cfg_.officials);
    std::set<std::string> wanted;
    for (const auto& o : officials) wanted.insert(o.writings.begin(), o.writings.end());
    std::vector<ParagraphRecord> writings;
    for (const auto& r : records) {
      if (wanted.count(r.id)) writings.push_back(r);
    }
    Json bench = Json::object();
    for (const auto& q : qs) {
      std::map<std::string, double> scores;
      for (const auto& s : score_corpus(writings, q, backend(), &adapter)) scores[s.paragraph_id] = s.score;
      bench[q.construct] = benchmark_officials(officials, scores).to_json();
    }
    out["benchmark"] = bench;
  }
  write_json(at("eval.json"), out);
}

std::vector<StageOutcome> Runner::run() {
  fs::create_directories(dir_);
  run_meta_["started_at"] = utc_now();

  auto hashes = [](const std::vector<fs::path>& ps) { return input_hashes(ps); };
  const Json canon = canonical(cfg_);
  stage("ingest",
        Json{{"corpus", canon["paths"]["corpus"]},
             {"normalize", canon["normalize"]},
             {"splits", canon["splits"]},
             {"seed", cfg_.seed}},
        {"corpus.jsonl"}, &Runner::ingest);
  stage("train-wordvec",
        cfg_.vectors ? Json{{"vectors", canon["paths"]["vectors"]}} : Json{{"wordvec", canon["wordvec"]}},
        {"vectors.txt"}, &Runner::train_wordvec);
  stage("build-pairs", Json{{"thresholds", canon["thresholds"]}}, {"pairs.jsonl", "valid_pairs.jsonl"},
        &Runner::build_pairs);
  stage("sample-triplets",
        Json{{"sampling", canon["sampling"]},
             {"backend", cfg_.sampling == SamplingMode::hard ? Json(cfg_.backend) : Json(nullptr)}},
        {"triplets.jsonl"}, &Runner::sample_triplets);
  stage("train-adapter", Json{{"train", canon["train"]}, {"backend", cfg_.backend}}, {"adapter.json", "train_log.jsonl"},
        &Runner::train_stage);
  stage("score", Json{{"questionnaires", hashes(cfg_.questionnaires)}}, {"scores.jsonl"}, &Runner::score);
  stage("eval",
        Json{{"eval", canon["eval"]},
             {"dictionaries", hashes(cfg_.dictionaries)},
             {"officials", canon["paths"]["officials"]}},
        {"eval.json"}, &Runner::evaluate);

  run_meta_["finished_at"] = utc_now();
  Json config_json = cfg_.to_json();
  config_json["paths"].erase("output_dir");
  write_json(at("manifest.json"), Json{{"tool_version", tool_version()},
                                       {"config_hash", config_hash(cfg_)},
                                       {"seed", cfg_.seed},
                                       {"config", config_json},
                                       {"stages", manifest_stages_},
                                       {"run_metadata", run_meta_}});
  return outcomes_;
}

}  // namespace

std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  Runner runner(config, log);
  return runner.run();
}

// ---------------------------------------------------------------------------
// Synthetic workspace

void write_synthetic_workspace(const fs::path& dir, int n_titles, int paragraphs_per_title, int dim, double noise,
                               std::uint64_t seed) {
  const auto syn = generate_synthetic_corpus(n_titles, paragraphs_per_title, dim, noise, seed);
  fs::create_directories(dir);
  write_corpus(dir / "corpus.jsonl", syn.records);
  save_vectors(syn.model, dir / "vectors.txt");

  Json qpaths = Json::array(), dpaths = Json::array();
  for (std::size_t k = 0; k < syn.questionnaires.size(); ++k) {
    const auto q = "questionnaire_" + syn.questionnaires[k].construct + ".json";
    const auto d = "dictionary_" + syn.dictionaries[k].construct + ".json";
    save_questionnaire(syn.questionnaires[k], dir / q);
    save_dictionary(syn.dictionaries[k], dir / d);
    qpaths.push_back(q);
    dpaths.push_back(d);
  }

  // One official per title; support falls as the title's affinity to the
  // first construct rises.
  std::map<std::string, std::vector<std::string>> by_title;
  for (const auto& r : syn.records) by_title[r.title].push_back(r.id);
  std::vector<std::pair<double, std::string>> affinity;
  for (const auto& [title, ids] : by_title) {
    affinity.emplace_back(pm_pseudo_ground_truth(title, syn.dictionaries.front(), syn.model), title);
  }
  double lo = affinity.front().first, hi = lo;
  for (const auto& [a, t] : affinity) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  std::vector<OfficialRecord> officials;
  for (const auto& [a, title] : affinity) {
    OfficialRecord o;
    o.author_id = "official-" + title;
    o.writings = by_title[title];
    const double support = hi > lo ? 1.0 - (a - lo) / (hi - lo) : 0.5;
    o.support_continuous = support;
    o.attitude_ordinal = support < 1.0 / 3.0 ? -1 : (support < 2.0 / 3.0 ? 0 : 1);
    officials.push_back(std::move(o));
  }
  write_officials(dir / "officials.jsonl", officials);

  const Json config{
      {"paths",
       {{"corpus", "corpus.jsonl"},
        {"vectors", "vectors.txt"},
        {"questionnaires", qpaths},
        {"dictionaries", dpaths},
        {"officials", "officials.jsonl"},
        {"output_dir", "out"}}},
      {"backend", "mock:dim=" + std::to_string(dim) + ",seed=0"},
      {"seed", seed},
      {"normalize", {{"enabled", false}}},
      {"thresholds", {{"lower_pct", 10}, {"upper_pct", 90}}},
      {"sampling", "random"},
      {"train", {{"batch_size", 16}, {"epochs", 3}, {"warmup_epochs", 1}, {"learning_rate", 1e-2}}},
      {"eval", {{"sts_rounds", 5}, {"sts_pairs_per_round", 200}, {"qic_folds", 10}}},
  };
  write_json(dir / "config.json", config);
}

}  // namespace ccr
