#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/io.hpp"
#include "ccr/vec.hpp"

namespace ccr {

/// Text -> vector encoder. Implementations must be safe for concurrent
/// embed() calls.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual bool deterministic() const = 0;
  /// True when embed() expects record ids rather than texts.
  virtual bool keyed_by_id() const { return false; }

  /// One row per input text, in order.
  virtual std::vector<Vector> embed(const std::vector<std::string>& texts) const = 0;
};

/// Deterministic pseudo-embedding: FNV-1a-64 over the UTF-8 bytes of text,
/// continued over the 8 little-endian bytes of seed, seeds an mt19937_64;
/// dim standard-normal draws are then L2-normalized.
Vector mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

/// Test double. A text with whitespace is embedded as the normalized sum of
/// mock_embed over its tokens, so lexical overlap produces similarity; a
/// single-token text embeds to exactly mock_embed(text).
class MockBackend final : public EmbeddingBackend {
 public:
  MockBackend(std::size_t dim, std::uint64_t seed);

  std::string name() const override;
  std::size_t dim() const override { return dim_; }
  bool deterministic() const override { return true; }
  std::vector<Vector> embed(const std::vector<std::string>& texts) const override;

  Vector embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// One line of an embedding-cache file: {"id": ..., "vector": [...]}.
struct CacheEntry {
  std::string id;
  Vector vector;
};

void cache_embeddings(const EmbeddingBackend& backend, const std::vector<ParagraphRecord>& records,
                      const std::filesystem::path& path, std::size_t batch_size = 64);

/// Writes {"id","vector"} lines. All vectors must share a dimension.
void write_cache(const std::filesystem::path& path, const std::vector<CacheEntry>& entries);

/// Validates a constant dim and unique ids.
std::map<std::string, Vector> load_cache(const std::filesystem::path& path);

/// Serves vectors from a cache file. embed() treats each input string as an id.
class CacheBackend final : public EmbeddingBackend {
 public:
  explicit CacheBackend(const std::filesystem::path& path);
  explicit CacheBackend(std::map<std::string, Vector> vectors, std::string label = "memory");

  std::string name() const override { return "cache:" + label_; }
  std::size_t dim() const override { return dim_; }
  bool deterministic() const override { return true; }
  bool keyed_by_id() const override { return true; }
  std::vector<Vector> embed(const std::vector<std::string>& ids) const override;

 private:
  std::map<std::string, Vector> vectors_;
  std::string label_;
  std::size_t dim_ = 0;
};

struct HttpBackendOptions {
  int max_in_flight = 4;
  int max_retries = 3;
  int timeout_seconds = 30;
  std::size_t max_batch = 64;
};

/// Client for the embedding sidecar:
///   GET  /v1/health -> {"status":"ok","model":..., "dim":...}
///   POST /v1/embed {"texts":[...]} -> {"dim":..., "vectors":[[...],...]}
class HttpBackend final : public EmbeddingBackend {
 public:
  explicit HttpBackend(std::string base_url, HttpBackendOptions options = {});

  std::string name() const override;
  std::size_t dim() const override { return dim_; }
  bool deterministic() const override { return true; }
  std::vector<Vector> embed(const std::vector<std::string>& texts) const override;

  const std::string& model() const { return model_; }

 private:
  Json request(const std::string& method, const std::string& path, const std::string& body) const;

  std::string base_url_;
  HttpBackendOptions options_;
  std::string model_;
  std::size_t dim_ = 0;
  mutable std::counting_semaphore<1024> in_flight_;
};

/// Parses "mock:dim=64,seed=7", "cache:emb.jsonl" or "http://host:port".
std::unique_ptr<EmbeddingBackend> make_backend(const std::string& spec);

/// Embeds in batches, checking that every row has the backend's dim.
std::vector<Vector> embed_batch(const EmbeddingBackend& backend, const std::vector<std::string>& texts,
                                std::size_t batch_size = 64);

/// Input to a backend for a record: the text, or the id for cache backends.
std::vector<std::string> backend_inputs(const EmbeddingBackend& backend, const std::vector<ParagraphRecord>& records);

// ---------------------------------------------------------------------------
// Adapter

/// Affine head f(e) = W e + b over frozen backend embeddings.
struct AdapterParams {
  std::size_t dim_in = 0;
  std::size_t dim_out = 0;
  Matrix W;  // dim_out x dim_in
  Vector b;  // dim_out

  static AdapterParams identity(std::size_t dim);
  void validate() const;
  bool is_identity() const;

  bool operator==(const AdapterParams&) const = default;
};

Vector apply_adapter(const AdapterParams& params, std::span<const double> e);

struct AdapterMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  int epoch = 0;
};

void save_adapter(const AdapterParams& params, const AdapterMeta& meta, const std::filesystem::path& path);
AdapterParams load_adapter(const std::filesystem::path& path, AdapterMeta* meta = nullptr);

/// Embeds each record through backend then adapter (adapter may be null for identity).
std::map<std::string, Vector> embed_records(const EmbeddingBackend& backend, const AdapterParams* adapter,
                                            const std::vector<ParagraphRecord>& records);

}  // namespace ccr
