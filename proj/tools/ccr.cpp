#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ccr/corpus.hpp"
#include "ccr/embedding.hpp"
#include "ccr/error.hpp"
#include "ccr/evaluation.hpp"
#include "ccr/pairing.hpp"
#include "ccr/pipeline.hpp"
#include "ccr/rng.hpp"
#include "ccr/scoring.hpp"
#include "ccr/text.hpp"
#include "ccr/trainer.hpp"
#include "ccr/wordvec.hpp"

namespace fs = std::filesystem;
using namespace ccr;

namespace {

bool g_json = false;

// flag, then CCR_BACKEND, then fallback
std::string backend_spec(const std::string& flag, const std::string& fallback = "mock:dim=64,seed=0") {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CCR_BACKEND"); env && *env) return env;
  return fallback;
}

std::optional<AdapterParams> maybe_adapter(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_adapter(path);
}

const AdapterParams* ptr(const std::optional<AdapterParams>& a) { return a ? &*a : nullptr; }

void print_report(const EvalReport& report) {
  if (g_json) {
    std::cout << report.to_json().dump(2) << "\n";
  } else {
    std::cout << report.to_table();
  }
}

void print_json_or(const Json& j, const std::string& text) {
  if (g_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

SplitFractions parse_fractions(const std::string& s) {
  std::vector<double> v;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      v.push_back(std::stod(part));
    } catch (const std::logic_error&) {
      throw ConfigError("bad split fraction \"" + part + "\"");
    }
  }
  if (v.size() != 3) throw ConfigError("--splits expects train,valid,test");
  return {v[0], v[1], v[2]};
}

std::vector<ParagraphRecord> maybe_filter(const std::vector<ParagraphRecord>& records, const std::string& split) {
  if (split.empty() || split == "all") return records;
  return filter_split(records, parse_split(split));
}

ThresholdConfig threshold_config(const std::string& preset, double lower, double upper) {
  if (preset.empty()) return {lower, upper};
  for (const auto& p : ThresholdConfig::presets()) {
    std::ostringstream name;
    name << p.lower_pct << "/" << p.upper_pct;
    if (name.str() == preset) return p;
  }
  throw ConfigError("unknown threshold preset \"" + preset + "\" (0.5/99.5, 1/99, 10/90, 25/75)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextualized construct representation toolkit"};
  app.set_version_flag("--version", std::string(CCR_VERSION));
  app.add_flag("--json", g_json, "Machine-readable JSON reports");
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate, normalize and split a paragraph corpus");
  std::string in_path, out_path, splits_arg = "0.6,0.2,0.2";
  bool do_normalize = false, stratify = false;
  std::size_t min_len = 50, max_len = 500;
  std::uint64_t seed = 42;
  ingest->add_option("--input", in_path, "Raw JSONL corpus")->required();
  ingest->add_option("--out", out_path, "Output corpus JSONL")->required();
  ingest->add_flag("--normalize", do_normalize, "Merge short and split long paragraphs");
  ingest->add_option("--min-len", min_len);
  ingest->add_option("--max-len", max_len);
  ingest->add_option("--splits", splits_arg, "train,valid,test fractions");
  ingest->add_flag("--stratify", stratify, "Apportion splits per title");
  ingest->add_option("--seed", seed);

  // train-wordvec
  auto* twv = app.add_subcommand("train-wordvec", "Train word vectors on a corpus");
  std::string corpus_path, arch = "skipgram";
  WordVecTrainConfig wv;
  bool subword = false;
  twv->add_option("--corpus", corpus_path)->required();
  twv->add_option("--out", out_path)->required();
  twv->add_option("--arch", arch, "skipgram or cbow");
  twv->add_option("--dim", wv.dim);
  twv->add_option("--epochs", wv.epochs);
  twv->add_option("--window", wv.window);
  twv->add_option("--negative", wv.negative);
  twv->add_option("--min-count", wv.min_count);
  twv->add_option("--lr", wv.learning_rate, "0 selects the architecture default");
  twv->add_option("--workers", wv.workers);
  twv->add_flag("--subword", subword, "fastText-style character n-grams");
  twv->add_option("--seed", wv.seed);

  // build-pairs
  auto* bp = app.add_subcommand("build-pairs", "Label paragraph pairs by title similarity");
  std::string vectors_path, preset, split = "train", valid_out;
  double lower = 10, upper = 90;
  bp->add_option("--corpus", corpus_path)->required();
  bp->add_option("--vectors", vectors_path)->required();
  bp->add_option("--out", out_path)->required();
  bp->add_option("--lower", lower, "Lower percentile");
  bp->add_option("--upper", upper, "Upper percentile");
  bp->add_option("--preset", preset, "0.5/99.5, 1/99, 10/90 or 25/75");
  bp->add_option("--split", split, "Split to pair (train, valid, test or all)");
  bp->add_option("--valid-out", valid_out, "Also write validation pairs from the valid split");
  bp->add_option("--seed", seed);

  // sample-triplets
  auto* st = app.add_subcommand("sample-triplets", "Sample one triplet per anchor");
  std::string pairs_path, mode = "random", backend_flag;
  st->add_option("--corpus", corpus_path)->required();
  st->add_option("--pairs", pairs_path)->required();
  st->add_option("--out", out_path)->required();
  st->add_option("--mode", mode, "random or hard");
  st->add_option("--backend", backend_flag);
  st->add_option("--split", split);
  st->add_option("--seed", seed);

  // train-adapter
  auto* ta = app.add_subcommand("train-adapter", "Fine-tune the adapter with triplet loss");
  std::string triplets_path, valid_path, log_path;
  TrainConfig tc;
  TripletLossConfig lc;
  bool do_sweep = false;
  ta->add_option("--corpus", corpus_path)->required();
  ta->add_option("--triplets", triplets_path)->required();
  ta->add_option("--valid-pairs", valid_path)->required();
  ta->add_option("--out", out_path)->required();
  ta->add_option("--log", log_path, "Per-epoch JSONL log");
  ta->add_option("--backend", backend_flag);
  ta->add_option("--batch,--batch-size", tc.batch_size);
  ta->add_option("--epochs", tc.epochs);
  ta->add_option("--warmup,--warmup-epochs", tc.warmup_epochs);
  ta->add_option("--lr", tc.learning_rate);
  ta->add_option("--alpha,--margin", lc.margin_alpha);
  ta->add_option("--seed", tc.seed);
  ta->add_flag("--sweep", do_sweep, "Grid search; saves the best configuration's adapter");

  // embed
  auto* em = app.add_subcommand("embed", "Build an embedding cache");
  em->add_option("--corpus", corpus_path)->required();
  em->add_option("--out", out_path)->required();
  em->add_option("--backend", backend_flag);

  // score
  auto* sc = app.add_subcommand("score", "CCR loading scores");
  std::string questionnaire_path, adapter_path;
  sc->add_option("--corpus", corpus_path)->required();
  sc->add_option("--questionnaire", questionnaire_path)->required();
  sc->add_option("--out", out_path)->required();
  sc->add_option("--backend", backend_flag);
  sc->add_option("--adapter", adapter_path);

  // ddr-score
  auto* ds = app.add_subcommand("ddr-score", "Distributed dictionary representation scores");
  std::string dictionary_path;
  ds->add_option("--corpus", corpus_path)->required();
  ds->add_option("--dictionary", dictionary_path)->required();
  ds->add_option("--vectors", vectors_path)->required();
  ds->add_option("--out", out_path)->required();

  // quotes
  auto* qu = app.add_subcommand("quotes", "Recommend quotations for a questionnaire item");
  std::string item, quotes_path;
  std::size_t k = 20;
  qu->add_option("--item", item)->required();
  qu->add_option("--quotes", quotes_path, "JSONL {id, text}")->required();
  qu->add_option("--k", k);
  qu->add_option("--backend", backend_flag);
  qu->add_option("--adapter", adapter_path);

  // eval-sts
  auto* es = app.add_subcommand("eval-sts", "Semantic textual similarity evaluation");
  std::string source = "random";
  StsConfig sts;
  std::string eval_split = "test";
  es->add_option("--corpus", corpus_path)->required();
  es->add_option("--vectors", vectors_path)->required();
  es->add_option("--backend", backend_flag);
  es->add_option("--adapter", adapter_path);
  es->add_option("--source", source, "random (hard task) or threshold (easy task)");
  es->add_option("--rounds", sts.rounds);
  es->add_option("--pairs", sts.pairs_per_round);
  es->add_option("--lower", lower);
  es->add_option("--upper", upper);
  es->add_option("--split", eval_split);
  es->add_option("--seed", sts.seed);

  // eval-qic
  auto* eq = app.add_subcommand("eval-qic", "Questionnaire item classification");
  std::vector<std::string> questionnaire_paths, dictionary_paths;
  std::size_t folds = 10;
  eq->add_option("--questionnaire", questionnaire_paths, "One per class")->required();
  eq->add_option("--backend", backend_flag);
  eq->add_option("--adapter", adapter_path);
  eq->add_option("--k", folds);
  eq->add_option("--seed", seed);

  // eval-pm
  auto* ep = app.add_subcommand("eval-pm", "Psychological measurement evaluation");
  ep->add_option("--corpus", corpus_path)->required();
  ep->add_option("--questionnaire", questionnaire_paths)->required();
  ep->add_option("--dictionary", dictionary_paths)->required();
  ep->add_option("--vectors", vectors_path)->required();
  ep->add_option("--backend", backend_flag);
  ep->add_option("--adapter", adapter_path);
  ep->add_option("--split", eval_split);

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "Correlate official-level scores with attitudes");
  std::string officials_path, scores_path, construct;
  bm->add_option("--officials", officials_path)->required();
  bm->add_option("--scores", scores_path)->required();
  bm->add_option("--construct", construct, "Construct to use when the scores file holds several");

  // run
  auto* run = app.add_subcommand("run", "Full pipeline");
  std::string config_path, out_dir;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", config_path)->required();
  run->add_option("--backend", backend_flag);
  run->add_option("--seed", run_seed);
  run->add_option("--out-dir", out_dir);

  // gen-synthetic
  auto* gs = app.add_subcommand("gen-synthetic", "Write a synthetic workspace with a ready config");
  int titles = 20, per_title = 10, dim = 64;
  double noise = 0.1;
  gs->add_option("--out-dir", out_dir)->required();
  gs->add_option("--titles", titles);
  gs->add_option("--paragraphs", per_title, "Paragraphs per title");
  gs->add_option("--dim", dim);
  gs->add_option("--noise", noise);
  gs->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    if (ingest->parsed()) {
      auto records = ingest_corpus(in_path);
      std::size_t oversized = 0;
      if (do_normalize) {
        auto norm = normalize_paragraphs(records, min_len, max_len);
        records = std::move(norm.records);
        oversized = norm.oversized.size();
        for (const auto& id : norm.oversized) std::cerr << "warning: paragraph " << id << " is a single oversized sentence\n";
      }
      records = assign_splits(std::move(records), parse_fractions(splits_arg), seed, stratify);
      write_corpus(out_path, records);
      const auto stats = compute_stats(records);
      std::ostringstream text;
      text << stats.n_paragraphs << " paragraphs from " << stats.n_works << " works, mean length "
           << stats.mean_char_len << " characters\n";
      print_json_or(Json{{"paragraphs", stats.n_paragraphs},
                         {"works", stats.n_works},
                         {"mean_char_len", stats.mean_char_len},
                         {"split_fractions", stats.split_fractions},
                         {"oversized", oversized}},
                    text.str());
    } else if (twv->parsed()) {
      wv.architecture = parse_architecture(arch);
      if (subword) wv.subword = SubwordConfig{};
      const auto model = train_word_vectors(tokenize_records(ingest_corpus(corpus_path)), wv);
      save_vectors(model, out_path);
      print_json_or(Json{{"vocab", model.size()}, {"dim", model.dim()}},
                    std::to_string(model.size()) + " tokens x " + std::to_string(model.dim()) + "\n");
    } else if (bp->parsed()) {
      const auto records = ingest_corpus(corpus_path);
      const auto model = load_vectors(vectors_path);
      const auto sims = title_similarity_matrix(records, model);
      const auto values = sims.values();
      const auto thresholds = compute_thresholds(values, threshold_config(preset, lower, upper));
      const auto labeled = label_pairs(maybe_filter(records, split), sims, thresholds);
      write_pairs(out_path, labeled);
      if (!valid_out.empty()) {
        write_scored_pairs(valid_out, sample_validation_pairs(filter_split(records, Split::valid), sims, seed));
      }
      std::size_t pos = 0;
      for (const auto& p : labeled.pairs) pos += p.label == PairLabel::positive ? 1 : 0;
      for (const auto& t : sims.excluded()) std::cerr << "warning: title \"" << t << "\" is unrepresentable, excluded\n";
      std::ostringstream text;
      text << "thresholds " << thresholds.lower << " / " << thresholds.upper << ": " << pos << " positive, "
           << labeled.pairs.size() - pos << " negative pairs\n";
      print_json_or(Json{{"lower", thresholds.lower},
                         {"upper", thresholds.upper},
                         {"positives", pos},
                         {"negatives", labeled.pairs.size() - pos}},
                    text.str());
    } else if (st->parsed()) {
      const auto records = maybe_filter(ingest_corpus(corpus_path), split);
      const auto pairs = read_pairs(pairs_path);
      TripletSample sample;
      if (parse_sampling_mode(mode) == SamplingMode::hard) {
        const auto backend = make_backend(backend_spec(backend_flag));
        sample = sample_triplets_hard(pairs, records, embed_records(*backend, nullptr, records));
      } else {
        sample = sample_triplets_random(pairs, records, seed);
      }
      write_triplets(out_path, sample.triplets);
      print_json_or(Json{{"triplets", sample.triplets.size()}, {"skipped_anchors", sample.skipped_anchors}},
                    std::to_string(sample.triplets.size()) + " triplets, " + std::to_string(sample.skipped_anchors) +
                        " anchors skipped\n");
    } else if (ta->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      const auto records = ingest_corpus(corpus_path);
      const auto triplets = read_triplets(triplets_path);
      const auto valid = read_scored_pairs(valid_path);
      if (do_sweep) {
        std::set<std::string> needed;
        for (const auto& t : triplets) needed.insert({t.anchor, t.positive, t.negative});
        for (const auto& p : valid) needed.insert({p.i, p.j});
        std::vector<ParagraphRecord> subset;
        for (const auto& r : records) {
          if (needed.count(r.id)) subset.push_back(r);
        }
        const auto raw = embed_records(*backend, nullptr, subset);
        const auto rows = sweep(
            [&](const TrainConfig& cfg) {
              const auto res = train_adapter(triplets, raw, cfg, lc, valid);
              return res.reports[static_cast<std::size_t>(res.best_epoch)];
            },
            SweepGrid{}, tc);
        Json out = Json::array();
        for (const auto& r : rows) {
          out.push_back(Json{{"batch_size", r.config.batch_size},
                             {"epochs", r.config.epochs},
                             {"warmup_epochs", r.config.warmup_epochs},
                             {"learning_rate", r.config.learning_rate},
                             {"pearson", r.report.pearson},
                             {"spearman", r.report.spearman}});
        }
        tc = rows.front().config;
        std::cerr << "best: batch " << tc.batch_size << ", warmup " << tc.warmup_epochs << ", lr " << tc.learning_rate
                  << "\n";
        if (g_json) std::cout << out.dump(2) << "\n";
      }
      const auto result = train_adapter(triplets, *backend, records, tc, lc, valid);
      save_adapter(result.adapter, AdapterMeta{tc.seed, "", result.best_epoch}, out_path);
      if (!log_path.empty()) write_train_log(log_path, result.log);
      std::ostringstream text;
      for (const auto& r : result.reports) {
        text << "epoch " << r.epoch << ": pearson " << r.pearson << ", spearman " << r.spearman << "\n";
      }
      text << "best epoch " << result.best_epoch << "\n";
      if (!do_sweep || !g_json) {
        Json reports = Json::array();
        for (const auto& r : result.reports) {
          reports.push_back(Json{{"epoch", r.epoch}, {"pearson", r.pearson}, {"spearman", r.spearman}});
        }
        print_json_or(Json{{"best_epoch", result.best_epoch}, {"reports", reports}}, text.str());
      }
    } else if (em->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      cache_embeddings(*backend, ingest_corpus(corpus_path), out_path);
    } else if (sc->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      const auto adapter = maybe_adapter(adapter_path);
      write_scores(out_path,
                   score_corpus(ingest_corpus(corpus_path), load_questionnaire(questionnaire_path), *backend, ptr(adapter)));
    } else if (ds->parsed()) {
      write_scores(out_path, ddr_score_corpus(ingest_corpus(corpus_path), load_dictionary(dictionary_path),
                                              load_vectors(vectors_path)));
    } else if (qu->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      const auto adapter = maybe_adapter(adapter_path);
      const auto matches = recommend_quotes(item, read_quotes(quotes_path), *backend, ptr(adapter), k);
      Json out = Json::array();
      std::ostringstream text;
      for (const auto& m : matches) {
        out.push_back(Json{{"id", m.id}, {"similarity", m.similarity}});
        text << m.similarity << "\t" << m.id << "\n";
      }
      print_json_or(out, text.str());
    } else if (es->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      const auto adapter = maybe_adapter(adapter_path);
      const auto all = ingest_corpus(corpus_path);
      const auto sims = title_similarity_matrix(all, load_vectors(vectors_path));
      const auto values = sims.values();
      const auto thresholds = compute_thresholds(values, {lower, upper});
      if (source == "threshold") {
        sts.source = PairSource::threshold;
      } else if (source != "random") {
        throw ConfigError("--source must be random or threshold");
      }
      print_report(eval_sts(maybe_filter(all, eval_split), sts, sims, *backend, ptr(adapter), &thresholds));
    } else if (eq->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      const auto adapter = maybe_adapter(adapter_path);
      std::vector<Vector> items;
      std::vector<int> labels;
      for (std::size_t c = 0; c < questionnaire_paths.size(); ++c) {
        for (auto& v : embed_items(load_questionnaire(questionnaire_paths[c]), *backend, ptr(adapter))) {
          items.push_back(std::move(v));
          labels.push_back(static_cast<int>(c));
        }
      }
      print_report(eval_qic(items, labels, folds, seed));
    } else if (ep->parsed()) {
      const auto backend = make_backend(backend_spec(backend_flag));
      const auto adapter = maybe_adapter(adapter_path);
      std::vector<Questionnaire> qs;
      std::vector<Dictionary> dicts;
      for (const auto& p : questionnaire_paths) qs.push_back(load_questionnaire(p));
      for (const auto& p : dictionary_paths) dicts.push_back(load_dictionary(p));
      print_report(eval_pm(maybe_filter(ingest_corpus(corpus_path), eval_split), qs, dicts, *backend, ptr(adapter),
                           load_vectors(vectors_path)));
    } else if (bm->parsed()) {
      std::map<std::string, double> scores;
      std::set<std::string> constructs;
      for (const auto& s : read_scores(scores_path)) {
        constructs.insert(s.construct);
        if (construct.empty() || s.construct == construct) scores[s.paragraph_id] = s.score;
      }
      if (construct.empty() && constructs.size() > 1) {
        throw ConfigError("scores file holds several constructs; pick one with --construct");
      }
      print_report(benchmark_officials(read_officials(officials_path), scores));
    } else if (run->parsed()) {
      auto cfg = PipelineConfig::load(config_path);
      if (!backend_flag.empty()) {
        cfg.backend = backend_flag;
      } else if (const char* env = std::getenv("CCR_BACKEND"); env && *env) {
        cfg.backend = env;
      }
      if (run_seed) cfg.seed = *run_seed;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto outcomes = run_pipeline(cfg, std::cerr);
      Json out = Json::array();
      std::ostringstream text;
      for (const auto& o : outcomes) {
        out.push_back(Json{{"stage", o.name}, {"ran", o.ran}, {"stage_hash", o.stage_hash}});
        text << o.name << ": " << (o.ran ? "ran" : "skipped") << "\n";
      }
      print_json_or(out, text.str());
    } else if (gs->parsed()) {
      write_synthetic_workspace(out_dir, titles, per_title, dim, noise, seed);
      std::cout << "wrote " << (fs::path(out_dir) / "config.json").string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
