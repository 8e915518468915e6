#include "ccr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ccr/error.hpp"
#include "ccr/io.hpp"
#include "ccr/text.hpp"

namespace ccr {

void Questionnaire::validate() const {
  if (items.empty()) throw DataError("questionnaire \"" + construct + "\" has no items");
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.text.empty()) throw DataError("questionnaire item \"" + item.id + "\" has empty text");
    if (!seen.insert(item.id).second) throw DataError("duplicate questionnaire item id \"" + item.id + "\"");
  }
}

Dictionary Dictionary::make(std::string construct, const std::vector<std::string>& words) {
  Dictionary d{std::move(construct), {}};
  std::set<std::string> seen;
  for (const auto& w : words) {
    if (seen.insert(w).second) d.words.push_back(w);
  }
  return d;
}

void Dictionary::validate() const {
  if (words.empty()) throw DataError("dictionary \"" + construct + "\" has no words");
  std::set<std::string> seen;
  for (const auto& w : words) {
    if (w.empty()) throw DataError("dictionary \"" + construct + "\" has an empty word");
    if (!seen.insert(w).second) throw DataError("dictionary \"" + construct + "\" repeats \"" + w + "\"");
  }
}

namespace {

std::string field(const Json& obj, const char* key, const std::filesystem::path& path) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string()) {
    throw DataError(path.string() + ": missing string field \"" + key + "\"");
  }
  return obj[key].get<std::string>();
}

}  // namespace

Questionnaire load_questionnaire(const std::filesystem::path& path) {
  const Json doc = read_json(path);
  Questionnaire q{field(doc, "construct", path), field(doc, "language", path), {}};
  if (!doc.contains("items") || !doc["items"].is_array()) throw DataError(path.string() + ": missing \"items\" array");
  for (const auto& item : doc["items"]) {
    QuestionnaireItem it{field(item, "id", path), field(item, "text", path), std::nullopt};
    if (item.contains("source_item") && !item["source_item"].is_null()) it.source_item = field(item, "source_item", path);
    q.items.push_back(std::move(it));
  }
  q.validate();
  return q;
}

void save_questionnaire(const Questionnaire& q, const std::filesystem::path& path) {
  Json items = Json::array();
  for (const auto& it : q.items) {
    Json j{{"id", it.id}, {"text", it.text}};
    if (it.source_item) j["source_item"] = *it.source_item;
    items.push_back(std::move(j));
  }
  write_json(path, Json{{"construct", q.construct}, {"language", q.language}, {"items", items}});
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  const Json doc = read_json(path);
  Dictionary d{field(doc, "construct", path), {}};
  if (!doc.contains("words") || !doc["words"].is_array()) throw DataError(path.string() + ": missing \"words\" array");
  for (const auto& w : doc["words"]) {
    if (!w.is_string()) throw DataError(path.string() + ": dictionary words must be strings");
    d.words.push_back(w.get<std::string>());
  }
  d.validate();
  return d;
}

void save_dictionary(const Dictionary& d, const std::filesystem::path& path) {
  write_json(path, Json{{"construct", d.construct}, {"words", d.words}});
}

std::string_view to_string(ScoreMethod method) { return method == ScoreMethod::ccr ? "ccr" : "ddr"; }

void write_scores(const std::filesystem::path& path, const std::vector<ScoreRecord>& scores) {
  std::vector<Json> rows;
  rows.reserve(scores.size());
  for (const auto& s : scores) {
    rows.push_back(Json{{"paragraph_id", s.paragraph_id},
                        {"construct", s.construct},
                        {"method", std::string(to_string(s.method))},
                        {"score", s.score}});
  }
  write_jsonl(path, rows);
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  std::vector<ScoreRecord> out;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    const auto method = require_string(obj, "method", line);
    if (method != "ccr" && method != "ddr") {
      throw DataError("line " + std::to_string(line) + ": unknown method \"" + method + "\"");
    }
    const double score = require_number(obj, "score", line);
    // cosine bounds, with slack for rounding
    if (!(std::abs(score) <= 1.0 + 1e-9)) {
      throw DataError("line " + std::to_string(line) + ": score " + std::to_string(score) + " outside [-1, 1]");
    }
    out.push_back({require_string(obj, "paragraph_id", line), require_string(obj, "construct", line),
                   method == "ccr" ? ScoreMethod::ccr : ScoreMethod::ddr, score});
  });
  return out;
}

double ccr_score(std::span<const double> paragraph_emb, const std::vector<Vector>& item_embs) {
  if (item_embs.empty()) throw DataError("ccr_score: empty item list");
  double sum = 0.0;
  for (const auto& item : item_embs) sum += cosine(paragraph_emb, item);
  return sum / static_cast<double>(item_embs.size());
}

double ddr_score(const std::vector<std::string>& paragraph_tokens, const Dictionary& dictionary,
                 const WordVectorModel& model, DdrCounts* counts) {
  DdrCounts local;
  std::vector<Vector> para, dict;
  for (const auto& t : paragraph_tokens) {
    if (model.contains(t)) {
      auto row = model.row(*model.index_of(t));
      para.emplace_back(row.begin(), row.end());
    } else {
      ++local.paragraph_oov;
    }
  }
  for (const auto& w : dictionary.words) {
    if (model.contains(w)) {
      auto row = model.row(*model.index_of(w));
      dict.emplace_back(row.begin(), row.end());
    } else {
      ++local.dictionary_oov;
    }
  }
  if (counts) *counts = local;
  if (para.empty()) throw DataError("ddr_score: no known tokens in paragraph");
  if (dict.empty()) throw DataError("ddr_score: no dictionary word of \"" + dictionary.construct + "\" is in vocabulary");
  return cosine(centroid(para), centroid(dict));
}

double pm_pseudo_ground_truth(std::string_view title, const Dictionary& dictionary, const WordVectorModel& model) {
  const Vector t = embed_title(title, model);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : dictionary.words) {
    if (!model.contains(w)) continue;
    sum += cosine(t, model.row(*model.index_of(w)));
    ++n;
  }
  if (n == 0) throw DataError("pm_pseudo_ground_truth: no dictionary word of \"" + dictionary.construct + "\" is in vocabulary");
  return sum / static_cast<double>(n);
}

std::vector<Quote> read_quotes(const std::filesystem::path& path) {
  std::vector<Quote> out;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    out.push_back({require_string(obj, "id", line), require_string(obj, "text", line)});
  });
  return out;
}

namespace {

std::vector<Vector> adapted(std::vector<Vector> rows, const AdapterParams* adapter) {
  if (!adapter) return rows;
  for (auto& r : rows) r = apply_adapter(*adapter, r);
  return rows;
}

}  // namespace

std::vector<QuoteMatch> recommend_quotes(const std::string& item_text, const std::vector<Quote>& quote_corpus,
                                         const EmbeddingBackend& backend, const AdapterParams* adapter,
                                         std::size_t k) {
  if (quote_corpus.empty()) throw DataError("recommend_quotes: empty quote corpus");
  if (k == 0) throw ConfigError("recommend_quotes: k must be at least 1");
  if (backend.keyed_by_id()) throw ConfigError("recommend_quotes needs a backend that embeds free text");
  std::vector<std::string> texts{item_text};
  for (const auto& q : quote_corpus) texts.push_back(q.text);
  const auto rows = adapted(embed_batch(backend, texts), adapter);

  std::vector<QuoteMatch> out;
  out.reserve(quote_corpus.size());
  for (std::size_t i = 0; i < quote_corpus.size(); ++i) out.push_back({quote_corpus[i].id, cosine(rows[0], rows[i + 1])});
  std::sort(out.begin(), out.end(), [](const QuoteMatch& a, const QuoteMatch& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  out.resize(std::min(k, out.size()));
  return out;
}

std::vector<Vector> embed_items(const Questionnaire& q, const EmbeddingBackend& backend, const AdapterParams* adapter) {
  q.validate();
  std::vector<std::string> inputs;
  for (const auto& it : q.items) inputs.push_back(backend.keyed_by_id() ? it.id : it.text);
  return adapted(embed_batch(backend, inputs), adapter);
}

std::vector<ScoreRecord> score_corpus(const std::vector<ParagraphRecord>& records, const Questionnaire& questionnaire,
                                      const EmbeddingBackend& backend, const AdapterParams* adapter) {
  if (records.empty()) throw DataError("score_corpus: no records");
  const auto items = embed_items(questionnaire, backend, adapter);
  const auto inputs = backend_inputs(backend, records);
  constexpr std::size_t batch = 64;
  std::vector<ScoreRecord> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size(); start += batch) {
    const std::size_t stop = std::min(records.size(), start + batch);
    std::vector<Vector> rows;
    try {
      rows = adapted(embed_batch(backend, {inputs.begin() + start, inputs.begin() + stop}), adapter);
    } catch (const Error& e) {
      rethrow_with_context(e, "embedding paragraphs " + records[start].id + ".." + records[stop - 1].id + ": ");
    }
    for (std::size_t i = start; i < stop; ++i) {
      double s;
      try {
        s = ccr_score(rows[i - start], items);
      } catch (const DataError& e) {
        throw DataError("paragraph \"" + records[i].id + "\": " + e.what());
      }
      out.push_back({records[i].id, questionnaire.construct, ScoreMethod::ccr, s});
    }
  }
  return out;
}

std::vector<ScoreRecord> ddr_score_corpus(const std::vector<ParagraphRecord>& records, const Dictionary& dictionary,
                                          const WordVectorModel& model) {
  dictionary.validate();
  std::vector<ScoreRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    try {
      out.push_back({r.id, dictionary.construct, ScoreMethod::ddr, ddr_score(segment(r.text), dictionary, model)});
    } catch (const DataError& e) {
      throw DataError("paragraph \"" + r.id + "\": " + e.what());
    }
  }
  return out;
}

}  // namespace ccr
