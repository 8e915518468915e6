#include "ccr/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "ccr/error.hpp"
#include "ccr/rng.hpp"

namespace ccr {

namespace {

Vector random_unit(Rng& rng, int dim) {
  Vector v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = rng.normal();
  return normalized(v);
}

Vector jittered(std::span<const double> base, double amount, Rng& rng) {
  const Vector u = random_unit(rng, static_cast<int>(base.size()));
  Vector v(base.begin(), base.end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += amount * u[k];
  return normalized(v);
}

std::string numbered(const char* fmt, int a, int b = 0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(int n_titles, int paragraphs_per_title, int dim, double noise,
                                          std::uint64_t seed, int n_clusters) {
  if (n_titles < 2) throw ConfigError("synthetic corpus needs at least 2 titles");
  if (paragraphs_per_title < 1 || dim < 2 || n_clusters < 1) throw ConfigError("synthetic corpus: bad shape");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("synthetic corpus: noise must lie in [0, 1]");
  constexpr int title_keywords = 4;
  constexpr int cluster_keywords = 2;
  constexpr int extra_slots = 12;
  constexpr int fillers = 100;
  constexpr int items_per_questionnaire = 15;

  Rng rng(seed);
  SyntheticCorpus out;
  out.model = WordVectorModel(dim, Framework::loaded);

  std::vector<Vector> centers;
  for (int c = 0; c < n_clusters; ++c) {
    centers.push_back(random_unit(rng, dim));
    for (int j = 0; j < cluster_keywords; ++j) out.model.add(numbered("c%dk%d", c, j), jittered(centers.back(), 0.3, rng));
  }
  for (int f = 0; f < fillers; ++f) out.model.add(numbered("f%03d", f), random_unit(rng, dim));

  std::vector<std::vector<std::string>> keywords(static_cast<std::size_t>(n_titles));
  for (int t = 0; t < n_titles; ++t) {
    const std::string title = numbered("t%03d", t);
    const int cluster = t % n_clusters;
    const Vector tv = jittered(centers[static_cast<std::size_t>(cluster)], 0.5, rng);
    out.model.add(title, tv);
    out.title_vectors[title] = tv;
    out.title_cluster[title] = cluster;
    for (int j = 0; j < title_keywords; ++j) {
      keywords[static_cast<std::size_t>(t)].push_back(title + numbered("k%d", j));
      out.model.add(keywords[static_cast<std::size_t>(t)].back(), jittered(tv, 0.3, rng));
    }
  }

  for (int t = 0; t < n_titles; ++t) {
    const std::string title = numbered("t%03d", t);
    const int cluster = t % n_clusters;
    const auto& kw = keywords[static_cast<std::size_t>(t)];
    for (int p = 0; p < paragraphs_per_title; ++p) {
      std::vector<std::string> tokens(kw.begin(), kw.end());
      for (int j = 0; j < cluster_keywords; ++j) tokens.push_back(numbered("c%dk%d", cluster, j));
      for (int s = 0; s < extra_slots; ++s) {
        if (rng.uniform() < noise) {
          tokens.push_back(numbered("f%03d", static_cast<int>(rng.below(fillers))));
        } else {
          tokens.push_back(kw[rng.below(kw.size())]);
        }
      }
      rng.shuffle(std::span(tokens));
      std::string text;
      for (const auto& tok : tokens) text += (text.empty() ? "" : " ") + tok;
      out.records.push_back(make_record(title + numbered("-p%03d", p), numbered("w%03d", t), title, std::move(text)));
    }
  }

  for (int c = 0; c < n_clusters; ++c) {
    std::vector<int> members;
    for (int t = c; t < n_titles; t += n_clusters) members.push_back(t);
    if (members.empty()) continue;
    Questionnaire q{numbered("construct%d", c), "lzh", {}};
    for (int i = 0; i < items_per_questionnaire; ++i) {
      std::string text = numbered("c%dk0 c%dk1", c, c);
      for (int j = 0; j < 2; ++j) {
        const auto& kw = keywords[static_cast<std::size_t>(members[rng.below(members.size())])];
        text += " " + kw[rng.below(kw.size())];
      }
      q.items.push_back({numbered("c%d-q%02d", c, i), text, numbered("placeholder item %d", i)});
    }
    out.questionnaires.push_back(std::move(q));

    std::vector<std::string> words;
    for (int j = 0; j < cluster_keywords; ++j) words.push_back(numbered("c%dk%d", c, j));
    for (int t : members) words.push_back(keywords[static_cast<std::size_t>(t)][0]);
    out.dictionaries.push_back(Dictionary::make(numbered("construct%d", c), words));
  }
  return out;
}

GrammarCorpus generate_grammar_corpus(int n_classes, int tokens_per_class, int n_sentences, int sentence_length,
                                      std::uint64_t seed) {
  if (n_classes < 2 || tokens_per_class < 2 || n_sentences < 1 || sentence_length < 2) {
    throw ConfigError("grammar corpus: bad shape");
  }
  Rng rng(seed);
  GrammarCorpus out;
  for (int c = 0; c < n_classes; ++c) {
    for (int j = 0; j < tokens_per_class; ++j) out.token_class[numbered("g%dw%d", c, j)] = c;
  }
  for (int s = 0; s < n_sentences; ++s) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_classes)));
    std::vector<std::string> sentence;
    for (int k = 0; k < sentence_length; ++k) {
      sentence.push_back(numbered("g%dw%d", c, static_cast<int>(rng.below(static_cast<std::uint64_t>(tokens_per_class)))));
    }
    out.sentences.push_back(std::move(sentence));
  }
  // rare tokens occur 1..9 times
  for (int r = 1; r <= 9; ++r) {
    const std::string tok = numbered("rare%d", r);
    out.rare_tokens.push_back(tok);
    for (int k = 0; k < r; ++k) {
      auto& sentence = out.sentences[rng.below(out.sentences.size())];
      sentence.insert(sentence.begin() + static_cast<std::ptrdiff_t>(rng.below(sentence.size() + 1)), tok);
    }
  }
  return out;
}

LabeledPoints generate_separable_points(int n_classes, int per_class, int dim, double margin, std::uint64_t seed) {
  if (n_classes < 2 || per_class < 1 || dim < n_classes || !(margin >= 0.0)) {
    throw ConfigError("separable points: need 2 <= classes <= dim, per_class >= 1, margin >= 0");
  }
  Rng rng(seed);
  // axis-aligned centres are R * sqrt(2) apart
  const double r = (2.0 * margin + 2.0) / std::sqrt(2.0) + 1e-9;
  LabeledPoints out;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Vector u = random_unit(rng, dim);
      const double radius = rng.uniform();
      for (auto& x : u) x *= radius;
      u[static_cast<std::size_t>(c)] += r;
      out.points.push_back(std::move(u));
      out.labels.push_back(c);
    }
  }
  return out;
}

SyntheticOfficials generate_synthetic_officials(int n_officials, int writings_per_official, std::uint64_t seed) {
  if (n_officials < 1 || writings_per_official < 1) throw ConfigError("synthetic officials: bad shape");
  Rng rng(seed);
  SyntheticOfficials out;
  const double n = n_officials;
  for (int o = 0; o < n_officials; ++o) {
    const double support = (o + 0.5) / n;
    OfficialRecord rec;
    rec.author_id = numbered("official%03d", o);
    rec.support_continuous = support;
    rec.attitude_ordinal = support < 1.0 / 3.0 ? -1 : (support < 2.0 / 3.0 ? 0 : 1);
    // mean score falls by 1/n per official; per-writing noise stays below 0.25/n
    const double base = 1.0 - support;
    for (int w = 0; w < writings_per_official; ++w) {
      const std::string id = rec.author_id + numbered("-w%02d", w);
      out.scores[id] = base + rng.uniform(-0.25, 0.25) / n;
      rec.writings.push_back(id);
    }
    out.officials.push_back(std::move(rec));
  }
  rng.shuffle(std::span(out.officials));
  return out;
}

}  // namespace ccr
