#include "ccr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ccr/error.hpp"
#include "ccr/io.hpp"
#include "ccr/rng.hpp"
#include "ccr/text.hpp"

namespace ccr {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw DataError("unknown split \"" + std::string(name) + "\"");
}

ParagraphRecord make_record(std::string id, std::string work_id, std::string title, std::string text,
                            std::optional<Split> split) {
  ParagraphRecord r{std::move(id), std::move(work_id), std::move(title), std::move(text), split, 0};
  r.char_len = char_count(r.text);
  return r;
}

CorpusStats compute_stats(const std::vector<ParagraphRecord>& records) {
  CorpusStats stats;
  stats.n_paragraphs = records.size();
  std::set<std::string> works;
  std::array<std::size_t, 3> counts{};
  double total_len = 0.0;
  for (const auto& r : records) {
    works.insert(r.work_id);
    total_len += static_cast<double>(r.char_len);
    if (!r.split) throw DataError("compute_stats: record " + r.id + " has no split");
    ++counts[static_cast<std::size_t>(*r.split)];
  }
  stats.n_works = works.size();
  if (!records.empty()) {
    const auto n = static_cast<double>(records.size());
    stats.mean_char_len = total_len / n;
    for (std::size_t k = 0; k < 3; ++k) stats.split_fractions[k] = static_cast<double>(counts[k]) / n;
  }
  return stats;
}

std::vector<ParagraphRecord> ingest_corpus(const std::filesystem::path& path) {
  std::vector<ParagraphRecord> records;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    auto id = require_string(obj, "id", line);
    auto work_id = require_string(obj, "work_id", line);
    auto title = require_string(obj, "title", line);
    auto text = require_string(obj, "text", line);
    if (text.empty()) throw DataError("line " + std::to_string(line) + ": empty \"text\"");
    if (title.empty()) throw DataError("line " + std::to_string(line) + ": empty \"title\"");
    std::optional<Split> split;
    if (auto it = obj.find("split"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError("line " + std::to_string(line) + ": non-string \"split\"");
      split = parse_split(it->get<std::string>());
    }
    if (!seen.insert(id).second) {
      throw DataError("line " + std::to_string(line) + ": duplicate id \"" + id + "\"");
    }
    records.push_back(make_record(std::move(id), std::move(work_id), std::move(title), std::move(text), split));
  });
  return records;
}

void write_corpus(const std::filesystem::path& path, const std::vector<ParagraphRecord>& records) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    Json row = {{"id", r.id}, {"work_id", r.work_id}, {"title", r.title}, {"text", r.text}};
    if (r.split) row["split"] = std::string(to_string(*r.split));
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

struct Piece {
  std::string id;
  std::string text;
  std::size_t len = 0;
};

struct Segment {
  std::vector<std::string> sentences;
  std::vector<std::size_t> lens;
  std::size_t len = 0;

  void push_back(std::string s, std::size_t n) {
    sentences.push_back(std::move(s));
    lens.push_back(n);
    len += n;
  }
  void push_front(std::string s, std::size_t n) {
    sentences.insert(sentences.begin(), std::move(s));
    lens.insert(lens.begin(), n);
    len += n;
  }
  std::pair<std::string, std::size_t> pop_back() {
    auto s = std::move(sentences.back());
    auto n = lens.back();
    sentences.pop_back();
    lens.pop_back();
    len -= n;
    return {std::move(s), n};
  }
  std::string text() const {
    std::string out;
    for (const auto& s : sentences) out += s;
    return out;
  }
};

std::vector<Piece> merge_short(const std::vector<Piece>& in, std::size_t min_len) {
  std::vector<Piece> out;
  std::optional<Piece> pending;  // leading short paragraph(s) waiting to merge forward
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto& p = in[i];
    if (out.empty()) {
      Piece cur = p;
      if (pending) {
        cur.id = pending->id;
        cur.text = pending->text + p.text;
        cur.len = pending->len + p.len;
        pending.reset();
      }
      if (cur.len < min_len && i + 1 < in.size()) {
        pending = std::move(cur);
        continue;
      }
      out.push_back(std::move(cur));
    } else if (p.len < min_len) {
      out.back().text += p.text;
      out.back().len += p.len;
    } else {
      out.push_back(p);
    }
  }
  if (pending) out.push_back(std::move(*pending));
  return out;
}

std::vector<Piece> split_long(const std::vector<Piece>& in, std::size_t min_len, std::size_t max_len,
                              std::set<std::string>& oversized) {
  std::vector<Piece> out;
  for (const auto& p : in) {
    if (p.len < max_len) {
      out.push_back(p);
      continue;
    }
    auto sentences = split_sentences(p.text);
    if (sentences.size() <= 1) {
      oversized.insert(p.id);
      out.push_back(p);
      continue;
    }
    // Greedy packing keeps every segment below max_len; a sentence that is
    // itself too long becomes its own segment.
    std::vector<Segment> segs;
    for (auto& s : sentences) {
      const std::size_t n = char_count(s);
      if (segs.empty() || segs.back().len + n >= max_len) segs.emplace_back();
      segs.back().push_back(std::move(s), n);
    }
    // Rebalance a short tail by pulling sentences back from its predecessor.
    if (segs.size() >= 2) {
      auto& prev = segs[segs.size() - 2];
      auto& last = segs.back();
      while (last.len < min_len && prev.sentences.size() >= 2 && last.len + prev.lens.back() < max_len &&
             prev.len - prev.lens.back() >= min_len) {
        auto [s, n] = prev.pop_back();
        last.push_front(std::move(s), n);
      }
    }
    for (std::size_t k = 0; k < segs.size(); ++k) {
      Piece seg{k == 0 ? p.id : p.id + "#" + std::to_string(k + 1), segs[k].text(), segs[k].len};
      if (seg.len >= max_len) oversized.insert(seg.id);
      out.push_back(std::move(seg));
    }
  }
  return out;
}

bool same_texts(const std::vector<Piece>& a, const std::vector<Piece>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].text != b[i].text || a[i].id != b[i].id) return false;
  }
  return true;
}

}  // namespace

NormalizeResult normalize_paragraphs(const std::vector<ParagraphRecord>& records, std::size_t min_len,
                                     std::size_t max_len) {
  if (max_len <= min_len) throw ConfigError("normalize: max_len must exceed min_len");

  // Group by work in order of first appearance, keeping document order within a work.
  std::vector<std::string> work_order;
  std::unordered_map<std::string, std::vector<const ParagraphRecord*>> by_work;
  for (const auto& r : records) {
    auto [it, inserted] = by_work.try_emplace(r.work_id);
    if (inserted) work_order.push_back(r.work_id);
    it->second.push_back(&r);
  }

  NormalizeResult result;
  for (const auto& work : work_order) {
    const auto& paras = by_work[work];
    std::unordered_map<std::string, const ParagraphRecord*> origin;
    std::vector<Piece> pieces;
    for (const auto* r : paras) {
      pieces.push_back({r->id, r->text, char_count(r->text)});
      origin[r->id] = r;
    }

    // Merging can create over-long paragraphs and splitting can leave short
    // ones, so alternate until nothing changes. The cap guards against
    // pathological oscillation; in practice two passes suffice.
    std::set<std::string> oversized;
    for (int pass = 0; pass < 16; ++pass) {
      std::set<std::string> flagged;
      auto next = split_long(merge_short(pieces, min_len), min_len, max_len, flagged);
      const bool done = same_texts(next, pieces);
      pieces = std::move(next);
      oversized = std::move(flagged);
      if (done) break;
    }

    const ParagraphRecord& first = *paras.front();
    for (auto& p : pieces) {
      // Derived ids ("x#2") inherit metadata from their source paragraph.
      auto base = p.id.substr(0, p.id.find('#'));
      const ParagraphRecord* src = origin.count(base) ? origin[base] : &first;
      auto rec = make_record(p.id, src->work_id, src->title, std::move(p.text), src->split);
      if (oversized.count(rec.id)) result.oversized.push_back(rec.id);
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Splits

namespace {

// Largest-remainder apportionment of n items into the three fractions.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> frac = {f.train, f.valid, f.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = frac[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
  return counts;
}

void assign_group(std::vector<ParagraphRecord>& records, std::vector<std::size_t> idx, const SplitFractions& f,
                  Rng& rng) {
  rng.shuffle(std::span(idx));
  const auto counts = apportion(idx.size(), f);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t c = 0; c < counts[k]; ++c) records[idx[pos++]].split = static_cast<Split>(k);
  }
}

}  // namespace

std::vector<ParagraphRecord> assign_splits(std::vector<ParagraphRecord> records, SplitFractions fractions,
                                           std::uint64_t seed, bool stratify_by_title) {
  if (fractions.train <= 0 || fractions.valid <= 0 || fractions.test <= 0) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.valid + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  Rng rng(seed);
  if (!stratify_by_title) {
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    assign_group(records, std::move(idx), fractions, rng);
    return records;
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].title].push_back(i);
  for (auto& [title, idx] : groups) assign_group(records, std::move(idx), fractions, rng);
  return records;
}

std::vector<ParagraphRecord> filter_split(const std::vector<ParagraphRecord>& records, Split split) {
  std::vector<ParagraphRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

}  // namespace ccr
