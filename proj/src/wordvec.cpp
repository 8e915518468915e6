#include "ccr/wordvec.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "ccr/error.hpp"
#include "ccr/io.hpp"
#include "ccr/rng.hpp"
#include "ccr/text.hpp"

namespace ccr {

std::string_view to_string(Architecture arch) { return arch == Architecture::cbow ? "cbow" : "skipgram"; }

Architecture parse_architecture(std::string_view name) {
  if (name == "cbow") return Architecture::cbow;
  if (name == "skipgram" || name == "skip-gram" || name == "sg") return Architecture::skipgram;
  throw ConfigError("unknown architecture \"" + std::string(name) + "\"");
}

std::string_view to_string(Framework framework) {
  switch (framework) {
    case Framework::cbow:
      return "cbow";
    case Framework::skipgram:
      return "skipgram";
    case Framework::loaded:
      return "loaded";
  }
  return "loaded";
}

void WordVecTrainConfig::validate() const {
  if (dim <= 0) throw ConfigError("wordvec: dim must be positive");
  if (epochs <= 0) throw ConfigError("wordvec: epochs must be positive");
  if (window <= 0) throw ConfigError("wordvec: window must be positive");
  if (negative < 0) throw ConfigError("wordvec: negative must be nonnegative");
  if (min_count < 1) throw ConfigError("wordvec: min_count must be at least 1");
  if (learning_rate < 0) throw ConfigError("wordvec: learning rate must be nonnegative");
  if (workers < 1) throw ConfigError("wordvec: workers must be at least 1");
  if (subword) {
    if (subword->min_n < 1 || subword->min_n > subword->max_n) {
      throw ConfigError("wordvec: subword n-gram range must satisfy 1 <= min_n <= max_n");
    }
    if (subword->bucket_count == 0) throw ConfigError("wordvec: bucket_count must be positive");
  }
}

double WordVecTrainConfig::initial_learning_rate() const {
  if (learning_rate > 0) return learning_rate;
  return architecture == Architecture::cbow ? 0.05 : 0.025;
}

// ---------------------------------------------------------------------------
// WordVectorModel

WordVectorModel::WordVectorModel(int dim, Framework framework) : dim_(dim), framework_(framework) {
  if (dim < 1) throw DataError("word vector dim must be positive");
  vectors_ = Matrix(0, static_cast<std::size_t>(dim));
}

bool WordVectorModel::contains(std::string_view token) const { return index_of(token).has_value(); }

std::optional<std::size_t> WordVectorModel::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WordVectorModel::add(std::string token, std::span<const double> vector) {
  if (vector.size() != static_cast<std::size_t>(dim_)) {
    throw DataError("token \"" + token + "\" has " + std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dim_));
  }
  if (index_.count(token)) throw DataError("duplicate token \"" + token + "\"");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  vectors_.data.insert(vectors_.data.end(), vector.begin(), vector.end());
  ++vectors_.rows;
}

namespace {

// Initial value of an input row, shared by the trainer and OOV composition
// so that untrained buckets are reproducible without being stored.
Vector initial_row(std::uint64_t seed, std::uint64_t stream, int dim) {
  Rng rng(derive_seed(seed, stream));
  Vector v(static_cast<std::size_t>(dim));
  const double scale = 0.5 / dim;
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

constexpr std::uint64_t kNgramStream = 0x6e6772616d000000ULL;

}  // namespace

Vector WordVectorModel::ngram_row(std::uint64_t bucket) const {
  if (auto it = ngram_rows_.find(bucket); it != ngram_rows_.end()) return it->second;
  return initial_row(ngram_seed_, kNgramStream + bucket, dim_);
}

std::optional<Vector> WordVectorModel::lookup(std::string_view token) const {
  if (auto idx = index_of(token)) {
    auto r = row(*idx);
    return Vector(r.begin(), r.end());
  }
  if (!subword_) return std::nullopt;
  const auto buckets = subword_buckets(token, *subword_);
  if (buckets.empty()) return std::nullopt;
  Vector out(static_cast<std::size_t>(dim_), 0.0);
  for (auto b : buckets) {
    const auto r = ngram_row(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
  }
  for (auto& x : out) x /= static_cast<double>(buckets.size());
  return out;
}

std::vector<std::uint64_t> subword_buckets(std::string_view token, const SubwordConfig& cfg) {
  std::string wrapped = "<";
  wrapped += token;
  wrapped += ">";
  const auto cps = split_code_points(wrapped);
  std::vector<std::uint64_t> out;
  const auto n_cp = cps.size();
  for (std::size_t start = 0; start < n_cp; ++start) {
    std::string gram;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(cfg.max_n) && start + n <= n_cp; ++n) {
      gram += cps[start + n - 1];
      if (n < static_cast<std::size_t>(cfg.min_n)) continue;
      // A lone boundary marker carries no information.
      if (n == 1 && (start == 0 || start + 1 == n_cp)) continue;
      out.push_back(fnv1a64(gram) % cfg.bucket_count);
    }
  }
  return out;
}

std::vector<std::vector<std::string>> tokenize_records(const std::vector<ParagraphRecord>& records) {
  std::vector<std::vector<std::string>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(segment(r.text));
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Relaxed atomic access: plain loads/stores on x86, but well-defined when
// several workers update shared rows without locks.
inline double ld(const double& x) {
  return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
}
inline void st(double& x, double v) { std::atomic_ref<double>(x).store(v, std::memory_order_relaxed); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

class Word2VecTrainer {
 public:
  Word2VecTrainer(const std::vector<std::vector<std::string>>& sentences, const WordVecTrainConfig& cfg)
      : cfg_(cfg), dim_(static_cast<std::size_t>(cfg.dim)) {
    build_vocab(sentences);
    build_inputs();
    build_noise();
  }

  WordVectorModel run() {
    const double lr0 = cfg_.initial_learning_rate();
    const auto total = static_cast<double>(train_words_) * cfg_.epochs;
    const auto workers = static_cast<std::size_t>(cfg_.workers);
    if (workers == 1) {
      work(0, 1, lr0, total);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back([&, w] { work(w, workers, lr0, total); });
      for (auto& t : pool) t.join();
    }
    return export_model();
  }

 private:
  void build_vocab(const std::vector<std::vector<std::string>>& sentences) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& s : sentences) {
      for (const auto& tok : s) ++counts[tok];
    }
    if (counts.empty()) throw DataError("train_word_vectors: empty corpus");
    for (auto& [tok, c] : counts) {
      if (c >= static_cast<std::uint64_t>(cfg_.min_count)) words_.emplace_back(tok, c);
    }
    if (words_.empty()) throw DataError("train_word_vectors: vocabulary empty after min_count truncation");
    std::sort(words_.begin(), words_.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < words_.size(); ++i) index.emplace(words_[i].first, static_cast<int>(i));
    for (const auto& s : sentences) {
      std::vector<int> ids;
      for (const auto& tok : s) {
        if (auto it = index.find(tok); it != index.end()) ids.push_back(it->second);
      }
      train_words_ += ids.size();
      if (ids.size() >= 2) corpus_.push_back(std::move(ids));
    }
  }

  void build_inputs() {
    const std::size_t n_words = words_.size();
    std::map<std::uint64_t, std::size_t> bucket_row;  // ordered for reproducible row layout
    rows_of_.resize(n_words);
    for (std::size_t w = 0; w < n_words; ++w) {
      rows_of_[w].push_back(w);
      if (!cfg_.subword) continue;
      for (auto b : subword_buckets(words_[w].first, *cfg_.subword)) {
        auto [it, inserted] = bucket_row.try_emplace(b, 0);
        if (inserted) {
          it->second = n_words + buckets_.size();
          buckets_.push_back(b);
        }
        rows_of_[w].push_back(it->second);
      }
    }
    input_ = Matrix(n_words + buckets_.size(), dim_);
    Rng rng(cfg_.seed);
    const double scale = 0.5 / cfg_.dim;
    for (std::size_t w = 0; w < n_words; ++w) {
      for (auto& x : input_.row(w)) x = rng.uniform(-scale, scale);
    }
    for (std::size_t k = 0; k < buckets_.size(); ++k) {
      const auto init = initial_row(cfg_.seed, kNgramStream + buckets_[k], cfg_.dim);
      std::copy(init.begin(), init.end(), input_.row(n_words + k).begin());
    }
    output_ = Matrix(n_words, dim_);
  }

  void build_noise() {
    noise_cdf_.resize(words_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      acc += std::pow(static_cast<double>(words_[i].second), 0.75);
      noise_cdf_[i] = acc;
    }
    for (auto& c : noise_cdf_) c /= acc;
  }

  std::size_t draw_noise(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
    if (it == noise_cdf_.end()) --it;
    return static_cast<std::size_t>(it - noise_cdf_.begin());
  }

  // One positive/negative update of output rows; accumulates the input gradient.
  void update_outputs(const Vector& h, std::size_t target, double lr, Rng& rng, Vector& grad_h) {
    for (int k = 0; k <= cfg_.negative; ++k) {
      std::size_t t = target;
      double label = 1.0;
      if (k > 0) {
        t = draw_noise(rng);
        if (t == target) continue;
        label = 0.0;
      }
      auto out = output_.row(t);
      double f = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) f += h[i] * ld(out[i]);
      const double g = (label - sigmoid(f)) * lr;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double o = ld(out[i]);
        grad_h[i] += g * o;
        st(out[i], o + g * h[i]);
      }
    }
  }

  void mean_of_rows(const std::vector<std::size_t>& rows, Vector& h) const {
    std::fill(h.begin(), h.end(), 0.0);
    for (auto r : rows) {
      auto in = input_.row(r);
      for (std::size_t i = 0; i < dim_; ++i) h[i] += ld(in[i]);
    }
    for (auto& x : h) x /= static_cast<double>(rows.size());
  }

  void apply_grad(const std::vector<std::size_t>& rows, const Vector& grad) {
    for (auto r : rows) {
      auto in = input_.row(r);
      for (std::size_t i = 0; i < dim_; ++i) st(in[i], ld(in[i]) + grad[i]);
    }
  }

  void work(std::size_t worker, std::size_t n_workers, double lr0, double total) {
    Rng rng(n_workers == 1 ? derive_seed(cfg_.seed, 1) : derive_seed(cfg_.seed, 100 + worker));
    Vector h(dim_), grad(dim_);
    std::vector<std::size_t> ctx_rows;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      for (std::size_t si = worker; si < corpus_.size(); si += n_workers) {
        const auto& sent = corpus_[si];
        const double progress = static_cast<double>(processed_.load(std::memory_order_relaxed)) / total;
        const double lr = std::max(lr0 - (lr0 - cfg_.min_learning_rate) * progress, cfg_.min_learning_rate);
        const auto n = static_cast<std::ptrdiff_t>(sent.size());
        for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
          const auto reduced = static_cast<std::ptrdiff_t>(rng.below(static_cast<std::uint64_t>(cfg_.window)));
          const std::ptrdiff_t span = cfg_.window - reduced;
          const auto center = static_cast<std::size_t>(sent[pos]);
          if (cfg_.architecture == Architecture::skipgram) {
            mean_of_rows(rows_of_[center], h);
            for (auto c = pos - span; c <= pos + span; ++c) {
              if (c == pos || c < 0 || c >= n) continue;
              std::fill(grad.begin(), grad.end(), 0.0);
              update_outputs(h, static_cast<std::size_t>(sent[c]), lr, rng, grad);
              apply_grad(rows_of_[center], grad);
              mean_of_rows(rows_of_[center], h);
            }
          } else {
            ctx_rows.clear();
            for (auto c = pos - span; c <= pos + span; ++c) {
              if (c == pos || c < 0 || c >= n) continue;
              const auto& rs = rows_of_[static_cast<std::size_t>(sent[c])];
              ctx_rows.insert(ctx_rows.end(), rs.begin(), rs.end());
            }
            if (ctx_rows.empty()) continue;
            mean_of_rows(ctx_rows, h);
            std::fill(grad.begin(), grad.end(), 0.0);
            update_outputs(h, center, lr, rng, grad);
            apply_grad(ctx_rows, grad);
          }
        }
        processed_.fetch_add(sent.size(), std::memory_order_relaxed);
      }
    }
  }

  WordVectorModel export_model() {
    WordVectorModel model(cfg_.dim, cfg_.architecture == Architecture::cbow ? Framework::cbow : Framework::skipgram);
    model.min_count_ = cfg_.min_count;
    model.subword_ = cfg_.subword;
    model.ngram_seed_ = cfg_.seed;
    Vector v(dim_);
    for (std::size_t w = 0; w < words_.size(); ++w) {
      mean_of_rows(rows_of_[w], v);
      model.add(words_[w].first, v);
    }
    const std::size_t n_words = words_.size();
    for (std::size_t k = 0; k < buckets_.size(); ++k) {
      auto r = input_.row(n_words + k);
      model.ngram_rows_.emplace(buckets_[k], Vector(r.begin(), r.end()));
    }
    return model;
  }

  WordVecTrainConfig cfg_;
  std::size_t dim_;
  std::vector<std::pair<std::string, std::uint64_t>> words_;
  std::vector<std::vector<int>> corpus_;
  std::uint64_t train_words_ = 0;
  std::vector<std::vector<std::size_t>> rows_of_;  // input rows composing each word
  std::vector<std::uint64_t> buckets_;
  Matrix input_;
  Matrix output_;
  std::vector<double> noise_cdf_;
  std::atomic<std::uint64_t> processed_{0};
};

WordVectorModel train_word_vectors(const std::vector<std::vector<std::string>>& sentences,
                                   const WordVecTrainConfig& config) {
  config.validate();
  return Word2VecTrainer(sentences, config).run();
}

// ---------------------------------------------------------------------------
// Text format

WordVectorModel load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty vector file");
  std::istringstream header(line);
  long long vocab_size = -1;
  long long dim = -1;
  if (!(header >> vocab_size >> dim) || vocab_size < 0 || dim < 1) {
    throw DataError(path.string() + ":1: header must be \"vocab_size dim\"");
  }
  WordVectorModel model(static_cast<int>(dim), Framework::loaded);
  Vector v;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(number);
    std::size_t p = line.find(' ');
    if (p == std::string::npos) throw DataError(where + ": row has no components");
    std::string token = line.substr(0, p);
    v.clear();
    const char* cur = line.data() + p;
    const char* end = line.data() + line.size();
    while (cur < end) {
      while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
      if (cur == end) break;
      double x = 0.0;
      auto [next, ec] = std::from_chars(cur, end, x);
      if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t')) {
        throw DataError(where + ": non-numeric component");
      }
      v.push_back(x);
      cur = next;
    }
    if (v.size() != static_cast<std::size_t>(dim)) {
      throw DataError(where + ": expected " + std::to_string(dim) + " components, got " + std::to_string(v.size()));
    }
    try {
      model.add(std::move(token), v);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (model.size() != static_cast<std::size_t>(vocab_size)) {
    throw DataError(path.string() + ": header declares " + std::to_string(vocab_size) + " rows, found " +
                    std::to_string(model.size()));
  }
  return model;
}

void save_vectors(const WordVectorModel& model, const std::filesystem::path& path) {
  std::string out = std::to_string(model.size()) + " " + std::to_string(model.dim()) + "\n";
  char buf[32];
  for (std::size_t i = 0; i < model.size(); ++i) {
    out += model.tokens()[i];
    for (double x : model.row(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
      out += ' ';
      out.append(buf, end);
    }
    out += '\n';
  }
  write_file(path, out);
}

Vector embed_title(std::string_view title, const WordVectorModel& model) {
  if (title.empty()) throw DataError("embed_title: empty title");
  if (auto idx = model.index_of(title)) {
    auto r = model.row(*idx);
    return Vector(r.begin(), r.end());
  }
  std::vector<Vector> parts;
  for (const auto& tok : segment(title)) {
    if (auto v = model.lookup(tok)) parts.push_back(std::move(*v));
  }
  if (parts.empty()) throw DataError("unrepresentable title \"" + std::string(title) + "\"");
  return centroid(parts);
}

}  // namespace ccr
