#include "ccr/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "ccr/error.hpp"
#include "ccr/io.hpp"
#include "ccr/rng.hpp"

namespace ccr {

void ThresholdConfig::validate() const {
  if (!(lower_pct > 0.0 && lower_pct < 100.0 && upper_pct > 0.0 && upper_pct < 100.0)) {
    throw ConfigError("threshold percentiles must lie in (0, 100)");
  }
  if (!(lower_pct < upper_pct)) throw ConfigError("lower percentile must be below upper percentile");
}

std::array<ThresholdConfig, 4> ThresholdConfig::presets() {
  return {ThresholdConfig{0.5, 99.5}, ThresholdConfig{1, 99}, ThresholdConfig{10, 90}, ThresholdConfig{25, 75}};
}

std::string_view to_string(PairLabel label) { return label == PairLabel::positive ? "positive" : "negative"; }

namespace {

PairLabel parse_label(const std::string& s, std::size_t line) {
  if (s == "positive") return PairLabel::positive;
  if (s == "negative") return PairLabel::negative;
  throw DataError("line " + std::to_string(line) + ": unknown label \"" + s + "\"");
}

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace

bool TitleSimilarities::representable(const std::string& title) const { return titles_.count(title) > 0; }

std::optional<double> TitleSimilarities::get(const std::string& a, const std::string& b) const {
  if (!representable(a) || !representable(b)) return std::nullopt;
  if (a == b) return 1.0;
  auto it = sims_.find(ordered(a, b));
  if (it == sims_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> TitleSimilarities::values() const {
  std::vector<double> out;
  out.reserve(sims_.size());
  for (const auto& [k, v] : sims_) out.push_back(v);
  return out;
}

void TitleSimilarities::set(const std::string& a, const std::string& b, double sim) {
  titles_.insert(a);
  titles_.insert(b);
  sims_[ordered(a, b)] = sim;
}

TitleSimilarities title_similarity_matrix(const std::vector<ParagraphRecord>& records, const WordVectorModel& model) {
  std::set<std::string> unique;
  for (const auto& r : records) unique.insert(r.title);

  TitleSimilarities out;
  std::vector<std::pair<std::string, Vector>> embedded;
  for (const auto& t : unique) {
    try {
      embedded.emplace_back(t, embed_title(t, model));
    } catch (const DataError&) {
      out.exclude(t);
    }
  }
  if (embedded.size() < 2) throw DataError("title_similarity_matrix: fewer than 2 representable unique titles");
  for (const auto& [t, v] : embedded) out.add_title(t);
  for (std::size_t a = 0; a < embedded.size(); ++a) {
    for (std::size_t b = a + 1; b < embedded.size(); ++b) {
      out.set(embedded[a].first, embedded[b].first, cosine(embedded[a].second, embedded[b].second));
    }
  }
  return out;
}

Thresholds compute_thresholds(std::span<const double> sims, const ThresholdConfig& config) {
  config.validate();
  if (sims.empty()) throw DataError("compute_thresholds: empty similarity list");
  std::vector<double> sorted(sims.begin(), sims.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto at = [&](double pct) {
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
  };
  return {at(config.lower_pct), at(config.upper_pct)};
}

void for_each_labeled_pair(const std::vector<ParagraphRecord>& records, const TitleSimilarities& sims,
                           const Thresholds& thresholds, const std::function<void(const LabeledPair&)>& fn) {
  for (std::size_t a = 0; a < records.size(); ++a) {
    if (!sims.representable(records[a].title)) continue;
    for (std::size_t b = a + 1; b < records.size(); ++b) {
      const auto& ra = records[a];
      const auto& rb = records[b];
      if (ra.id == rb.id) continue;
      if (ra.title == rb.title) {
        fn(LabeledPair{ra.id, rb.id, 1.0, PairLabel::positive});
        continue;
      }
      auto sim = sims.get(ra.title, rb.title);
      if (!sim) continue;
      if (*sim > thresholds.upper) {
        fn(LabeledPair{ra.id, rb.id, *sim, PairLabel::positive});
      } else if (*sim < thresholds.lower) {
        fn(LabeledPair{ra.id, rb.id, *sim, PairLabel::negative});
      }
    }
  }
}

LabeledPairSet label_pairs(const std::vector<ParagraphRecord>& records, const TitleSimilarities& sims,
                           const Thresholds& thresholds) {
  LabeledPairSet out;
  out.thresholds = thresholds;
  for_each_labeled_pair(records, sims, thresholds, [&](const LabeledPair& p) { out.pairs.push_back(p); });
  return out;
}

namespace {

struct Pools {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
};

std::unordered_map<std::string, Pools> build_pools(const LabeledPairSet& pairs,
                                                   const std::vector<ParagraphRecord>& records) {
  std::unordered_set<std::string> eligible;
  for (const auto& r : records) eligible.insert(r.id);
  std::unordered_map<std::string, Pools> pools;
  for (const auto& p : pairs.pairs) {
    if (!eligible.count(p.i) || !eligible.count(p.j) || p.i == p.j) continue;
    auto& a = pools[p.i];
    auto& b = pools[p.j];
    if (p.label == PairLabel::positive) {
      a.positives.push_back(p.j);
      b.positives.push_back(p.i);
    } else {
      a.negatives.push_back(p.j);
      b.negatives.push_back(p.i);
    }
  }
  return pools;
}

}  // namespace

TripletSample sample_triplets_random(const LabeledPairSet& pairs, const std::vector<ParagraphRecord>& records,
                                     std::uint64_t seed) {
  const auto pools = build_pools(pairs, records);
  Rng rng(seed);
  TripletSample out;
  for (const auto& r : records) {
    auto it = pools.find(r.id);
    if (it == pools.end() || it->second.positives.empty() || it->second.negatives.empty()) {
      ++out.skipped_anchors;
      continue;
    }
    const auto& pos = it->second.positives;
    const auto& neg = it->second.negatives;
    const auto& p = pos[rng.below(pos.size())];
    const auto& n = neg[rng.below(neg.size())];
    out.triplets.push_back({r.id, p, n});
  }
  if (out.triplets.empty()) throw DataError("sample_triplets_random: no anchor has both a positive and a negative");
  return out;
}

TripletSample sample_triplets_hard(const LabeledPairSet& pairs, const std::vector<ParagraphRecord>& records,
                                   const std::map<std::string, Vector>& embeddings) {
  const auto pools = build_pools(pairs, records);
  auto emb = [&](const std::string& id) -> const Vector& {
    auto it = embeddings.find(id);
    if (it == embeddings.end()) throw DataError("sample_triplets_hard: missing embedding for \"" + id + "\"");
    return it->second;
  };

  TripletSample out;
  for (const auto& r : records) {
    auto it = pools.find(r.id);
    if (it == pools.end() || it->second.positives.empty() || it->second.negatives.empty()) {
      ++out.skipped_anchors;
      continue;
    }
    const Vector& a = emb(r.id);
    const std::string* best_pos = nullptr;
    double best_pos_sim = 0.0;
    for (const auto& id : it->second.positives) {
      const double s = cosine(a, emb(id));
      if (!best_pos || s < best_pos_sim || (s == best_pos_sim && id < *best_pos)) {
        best_pos = &id;
        best_pos_sim = s;
      }
    }
    const std::string* best_neg = nullptr;
    double best_neg_sim = 0.0;
    for (const auto& id : it->second.negatives) {
      const double s = cosine(a, emb(id));
      if (!best_neg || s > best_neg_sim || (s == best_neg_sim && id < *best_neg)) {
        best_neg = &id;
        best_neg_sim = s;
      }
    }
    out.triplets.push_back({r.id, *best_pos, *best_neg});
  }
  if (out.triplets.empty()) throw DataError("sample_triplets_hard: no anchor has both a positive and a negative");
  return out;
}

std::vector<ScoredPair> sample_validation_pairs(const std::vector<ParagraphRecord>& records,
                                                const TitleSimilarities& sims, std::uint64_t seed) {
  std::vector<const ParagraphRecord*> usable;
  for (const auto& r : records) {
    if (sims.representable(r.title)) usable.push_back(&r);
  }
  if (usable.size() < 2) throw DataError("sample_validation_pairs: fewer than 2 usable paragraphs");
  Rng rng(seed);
  std::vector<ScoredPair> out;
  out.reserve(usable.size());
  for (std::size_t k = 0; k < usable.size(); ++k) {
    auto other = static_cast<std::size_t>(rng.below(usable.size() - 1));
    if (other >= k) ++other;
    const auto& a = *usable[k];
    const auto& b = *usable[other];
    out.push_back({a.id, b.id, *sims.get(a.title, b.title)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void write_pairs(const std::filesystem::path& path, const LabeledPairSet& pairs) {
  std::vector<Json> rows;
  rows.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    rows.push_back(Json{{"i", p.i}, {"j", p.j}, {"sim", p.title_sim}, {"label", std::string(to_string(p.label))}});
  }
  write_jsonl(path, rows);
}

LabeledPairSet read_pairs(const std::filesystem::path& path) {
  LabeledPairSet out;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    LabeledPair p{require_string(obj, "i", line), require_string(obj, "j", line), require_number(obj, "sim", line),
                  parse_label(require_string(obj, "label", line), line)};
    if (p.i == p.j) throw DataError("line " + std::to_string(line) + ": self-pair");
    out.pairs.push_back(std::move(p));
  });
  return out;
}

void write_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets) {
  std::vector<Json> rows;
  rows.reserve(triplets.size());
  for (const auto& t : triplets) rows.push_back(Json{{"anchor", t.anchor}, {"pos", t.positive}, {"neg", t.negative}});
  write_jsonl(path, rows);
}

std::vector<Triplet> read_triplets(const std::filesystem::path& path) {
  std::vector<Triplet> out;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    out.push_back({require_string(obj, "anchor", line), require_string(obj, "pos", line),
                   require_string(obj, "neg", line)});
  });
  return out;
}

void write_scored_pairs(const std::filesystem::path& path, const std::vector<ScoredPair>& pairs) {
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(Json{{"i", p.i}, {"j", p.j}, {"sim", p.title_sim}});
  write_jsonl(path, rows);
}

std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path) {
  std::vector<ScoredPair> out;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    out.push_back({require_string(obj, "i", line), require_string(obj, "j", line), require_number(obj, "sim", line)});
  });
  return out;
}

}  // namespace ccr
