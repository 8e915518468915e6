#include "ccr/embedding.hpp"

#include <chrono>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ccr/error.hpp"
#include "ccr/rng.hpp"
#include "ccr/text.hpp"

namespace ccr {

Vector mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  std::uint64_t h = fnv1a64(text);
  char seed_bytes[8];
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<char>((seed >> (8 * i)) & 0xFF);
  h = fnv1a64(std::string_view(seed_bytes, 8), h);
  Rng rng(h);
  Vector v(dim);
  for (auto& x : v) x = rng.normal();
  return normalized(v);
}

MockBackend::MockBackend(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw ConfigError("mock backend: dim must be at least 1");
}

std::string MockBackend::name() const {
  return "mock:dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_);
}

Vector MockBackend::embed_one(std::string_view text) const {
  const auto tokens = segment(text);
  if (tokens.size() <= 1 || text.find_first_of(" \t\n\r") == std::string_view::npos) {
    return mock_embed(text, dim_, seed_);
  }
  Vector sum(dim_, 0.0);
  for (const auto& tok : tokens) {
    const auto v = mock_embed(tok, dim_, seed_);
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += v[i];
  }
  if (norm(sum) == 0.0) return mock_embed(text, dim_, seed_);
  return normalized(sum);
}

std::vector<Vector> MockBackend::embed(const std::vector<std::string>& texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

// ---------------------------------------------------------------------------
// Cache

void write_cache(const std::filesystem::path& path, const std::vector<CacheEntry>& entries) {
  std::vector<Json> rows;
  rows.reserve(entries.size());
  std::optional<std::size_t> dim;
  for (const auto& e : entries) {
    if (dim && *dim != e.vector.size()) throw DataError("write_cache: inconsistent vector dims");
    dim = e.vector.size();
    rows.push_back(Json{{"id", e.id}, {"vector", e.vector}});
  }
  write_jsonl(path, rows);
}

void cache_embeddings(const EmbeddingBackend& backend, const std::vector<ParagraphRecord>& records,
                      const std::filesystem::path& path, std::size_t batch_size) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw DataError("cache_embeddings: duplicate id " + r.id);
  }
  const auto vectors = embed_batch(backend, backend_inputs(backend, records), batch_size);
  std::vector<CacheEntry> entries;
  entries.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) entries.push_back({records[i].id, vectors[i]});
  write_cache(path, entries);
}

std::map<std::string, Vector> load_cache(const std::filesystem::path& path) {
  std::map<std::string, Vector> out;
  std::optional<std::size_t> dim;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    auto id = require_string(obj, "id", line);
    auto it = obj.find("vector");
    if (it == obj.end() || !it->is_array()) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": missing \"vector\" array");
    }
    auto v = it->get<Vector>();
    if (v.empty()) throw DataError(path.string() + ":" + std::to_string(line) + ": empty vector");
    if (dim && *dim != v.size()) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": dim " + std::to_string(v.size()) +
                      " differs from " + std::to_string(*dim));
    }
    dim = v.size();
    if (!out.emplace(std::move(id), std::move(v)).second) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": duplicate id");
    }
  });
  return out;
}

CacheBackend::CacheBackend(const std::filesystem::path& path)
    : CacheBackend(load_cache(path), path.filename().string()) {}

CacheBackend::CacheBackend(std::map<std::string, Vector> vectors, std::string label)
    : vectors_(std::move(vectors)), label_(std::move(label)) {
  if (vectors_.empty()) throw DataError("cache backend: no vectors");
  dim_ = vectors_.begin()->second.size();
  for (const auto& [id, v] : vectors_) {
    if (v.size() != dim_) throw DataError("cache backend: inconsistent dims at id " + id);
  }
}

std::vector<Vector> CacheBackend::embed(const std::vector<std::string>& ids) const {
  std::vector<Vector> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw DataError("embedding cache has no entry for id \"" + id + "\"");
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP

HttpBackend::HttpBackend(std::string base_url, HttpBackendOptions options)
    : base_url_(std::move(base_url)), options_(options), in_flight_(std::max(1, options.max_in_flight)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  const Json health = request("GET", "/v1/health", "");
  if (!health.is_object() || health.value("status", "") != "ok" || !health.contains("dim") ||
      !health["dim"].is_number_integer() || health["dim"].get<long long>() < 1) {
    throw BackendError(base_url_ + ": unexpected /v1/health response: " + health.dump());
  }
  dim_ = health["dim"].get<std::size_t>();
  model_ = health.value("model", "");
}

std::string HttpBackend::name() const { return base_url_; }

Json HttpBackend::request(const std::string& method, const std::string& path, const std::string& body) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    auto res = method == "GET" ? client.Get(path) : client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw BackendError(base_url_ + path + ": HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return Json::parse(res->body);
    } catch (const Json::parse_error& e) {
      throw BackendError(base_url_ + path + ": malformed JSON response: " + e.what());
    }
  }
  throw BackendError(base_url_ + path + ": request failed after retries: " + last_error);
}

std::vector<Vector> HttpBackend::embed(const std::vector<std::string>& texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  const std::size_t batch = std::max<std::size_t>(1, options_.max_batch);
  for (std::size_t start = 0; start < texts.size(); start += batch) {
    const std::size_t stop = std::min(texts.size(), start + batch);
    Json body = {{"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                    texts.begin() + static_cast<std::ptrdiff_t>(stop))}};
    const Json res = request("POST", "/v1/embed", body.dump());
    if (!res.contains("vectors") || !res["vectors"].is_array() || !res.contains("dim")) {
      throw BackendError(base_url_ + "/v1/embed: response lacks \"dim\"/\"vectors\"");
    }
    if (res["dim"].get<std::size_t>() != dim_) {
      throw BackendError(base_url_ + "/v1/embed: dim " + res["dim"].dump() + " differs from health dim " +
                         std::to_string(dim_));
    }
    const auto& vs = res["vectors"];
    if (vs.size() != stop - start) {
      throw BackendError(base_url_ + "/v1/embed: expected " + std::to_string(stop - start) + " vectors, got " +
                         std::to_string(vs.size()));
    }
    for (const auto& v : vs) out.push_back(v.get<Vector>());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::map<std::string, std::string> parse_options(std::string_view s) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = s.find(',', i);
    if (j == std::string_view::npos) j = s.size();
    auto kv = s.substr(i, j - i);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw ConfigError("backend option \"" + std::string(kv) + "\" lacks '='");
    out.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::unique_ptr<EmbeddingBackend> make_backend(const std::string& spec) {
  if (spec.rfind("mock", 0) == 0) {
    std::size_t dim = 64;
    std::uint64_t seed = 0;
    if (spec.size() > 4) {
      if (spec[4] != ':') throw ConfigError("bad backend spec \"" + spec + "\"");
      for (const auto& [k, v] : parse_options(std::string_view(spec).substr(5))) {
        try {
          if (k == "dim") {
            dim = std::stoul(v);
          } else if (k == "seed") {
            seed = std::stoull(v);
          } else {
            throw ConfigError("unknown mock backend option \"" + k + "\"");
          }
        } catch (const std::logic_error&) {
          throw ConfigError("bad value for mock backend option \"" + k + "\"");
        }
      }
    }
    return std::make_unique<MockBackend>(dim, seed);
  }
  if (spec.rfind("cache:", 0) == 0) return std::make_unique<CacheBackend>(std::filesystem::path(spec.substr(6)));
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) return std::make_unique<HttpBackend>(spec);
  throw ConfigError("unrecognized backend spec \"" + spec + "\" (expected mock:..., cache:PATH or http://...)");
}

std::vector<Vector> embed_batch(const EmbeddingBackend& backend, const std::vector<std::string>& texts,
                                std::size_t batch_size) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const std::size_t stop = std::min(texts.size(), start + batch_size);
    std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                   texts.begin() + static_cast<std::ptrdiff_t>(stop));
    auto rows = backend.embed(chunk);
    if (rows.size() != chunk.size()) throw BackendError(backend.name() + ": row count mismatch");
    for (auto& r : rows) {
      if (r.size() != backend.dim()) {
        throw BackendError(backend.name() + ": dim drift (" + std::to_string(r.size()) + " vs " +
                           std::to_string(backend.dim()) + ")");
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::string> backend_inputs(const EmbeddingBackend& backend, const std::vector<ParagraphRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(backend.keyed_by_id() ? r.id : r.text);
  return out;
}

// ---------------------------------------------------------------------------
// Adapter

AdapterParams AdapterParams::identity(std::size_t dim) {
  return AdapterParams{dim, dim, Matrix::identity(dim), Vector(dim, 0.0)};
}

void AdapterParams::validate() const {
  if (dim_in == 0 || dim_out == 0) throw DataError("adapter: dims must be positive");
  if (W.rows != dim_out || W.cols != dim_in || W.data.size() != dim_out * dim_in) {
    throw DataError("adapter: W shape does not match dim_out x dim_in");
  }
  if (b.size() != dim_out) throw DataError("adapter: b length does not match dim_out");
}

bool AdapterParams::is_identity() const { return dim_in == dim_out && W == Matrix::identity(dim_in) && b == Vector(dim_out, 0.0); }

Vector apply_adapter(const AdapterParams& params, std::span<const double> e) {
  if (e.size() != params.dim_in) {
    throw DataError("apply_adapter: input dim " + std::to_string(e.size()) + " != " + std::to_string(params.dim_in));
  }
  Vector out(params.b);
  for (std::size_t r = 0; r < params.dim_out; ++r) out[r] += dot(params.W.row(r), e);
  return out;
}

void save_adapter(const AdapterParams& params, const AdapterMeta& meta, const std::filesystem::path& path) {
  params.validate();
  Json W = Json::array();
  for (std::size_t r = 0; r < params.dim_out; ++r) {
    auto row = params.W.row(r);
    W.push_back(Vector(row.begin(), row.end()));
  }
  Json doc = {{"dim_in", params.dim_in},
              {"dim_out", params.dim_out},
              {"W", W},
              {"b", params.b},
              {"meta", {{"seed", meta.seed}, {"config_hash", meta.config_hash}, {"epoch", meta.epoch}}}};
  write_json(path, doc);
}

AdapterParams load_adapter(const std::filesystem::path& path, AdapterMeta* meta) {
  const Json doc = read_json(path);
  try {
    AdapterParams p;
    p.dim_in = doc.at("dim_in").get<std::size_t>();
    p.dim_out = doc.at("dim_out").get<std::size_t>();
    p.W = Matrix(p.dim_out, p.dim_in);
    const auto& W = doc.at("W");
    if (!W.is_array() || W.size() != p.dim_out) throw DataError(path.string() + ": W has wrong row count");
    for (std::size_t r = 0; r < p.dim_out; ++r) {
      auto row = W[r].get<Vector>();
      if (row.size() != p.dim_in) throw DataError(path.string() + ": W row " + std::to_string(r) + " has wrong length");
      std::copy(row.begin(), row.end(), p.W.row(r).begin());
    }
    p.b = doc.at("b").get<Vector>();
    p.validate();
    if (meta && doc.contains("meta")) {
      const auto& m = doc["meta"];
      meta->seed = m.value("seed", std::uint64_t{0});
      meta->config_hash = m.value("config_hash", "");
      meta->epoch = m.value("epoch", 0);
    }
    return p;
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": malformed adapter checkpoint: " + e.what());
  }
}

std::map<std::string, Vector> embed_records(const EmbeddingBackend& backend, const AdapterParams* adapter,
                                            const std::vector<ParagraphRecord>& records) {
  const auto raw = embed_batch(backend, backend_inputs(backend, records));
  std::map<std::string, Vector> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.emplace(records[i].id, adapter ? apply_adapter(*adapter, raw[i]) : raw[i]);
  }
  return out;
}

}  // namespace ccr
