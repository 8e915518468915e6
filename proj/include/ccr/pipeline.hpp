#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/evaluation.hpp"
#include "ccr/io.hpp"
#include "ccr/pairing.hpp"
#include "ccr/trainer.hpp"
#include "ccr/wordvec.hpp"

namespace ccr {

enum class SamplingMode { random, hard };
std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

std::string tool_version();

/// Declarative description of a full run. Relative input paths are resolved
/// against the directory of the config file. The global seed drives every
/// stochastic stage.
struct PipelineConfig {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> vectors;  // pretrained; trained from the corpus when absent
  std::vector<std::filesystem::path> questionnaires;
  std::vector<std::filesystem::path> dictionaries;
  std::optional<std::filesystem::path> officials;
  std::filesystem::path output_dir = "ccr_out";

  std::string backend = "mock:dim=64,seed=0";
  std::uint64_t seed = 42;

  bool normalize = true;
  std::size_t min_len = 50;
  std::size_t max_len = 500;
  SplitFractions splits;
  bool stratify_by_title = true;

  WordVecTrainConfig wordvec;
  ThresholdConfig thresholds;
  SamplingMode sampling = SamplingMode::random;
  TrainConfig train;
  TripletLossConfig loss;

  std::size_t sts_rounds = 20;
  std::size_t sts_pairs_per_round = 4308;
  std::size_t qic_folds = 10;

  static PipelineConfig from_json(const Json& doc, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
  Json to_json() const;
  void validate() const;
};

/// Hash of the canonical config with output paths removed and input paths
/// replaced by the hashes of their contents.
std::string config_hash(const PipelineConfig& config);

/// FNV-1a-64 of a file's bytes, hex encoded.
std::string file_hash(const std::filesystem::path& path);

struct StageOutcome {
  std::string name;
  bool ran = false;
  std::string stage_hash;
};

/// ingest -> train-wordvec -> build-pairs -> sample-triplets -> train-adapter
/// -> score -> eval. A stage is skipped when each of its outputs exists with
/// a sidecar "<file>.meta.json" whose stage hash and content hash match;
/// once a stage runs, every later stage runs too. Errors name the stage.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, std::ostream& log);

/// Writes a synthetic corpus, vectors, questionnaires, dictionaries,
/// officials and a ready-to-run config.json into dir.
void write_synthetic_workspace(const std::filesystem::path& dir, int n_titles, int paragraphs_per_title, int dim,
                               double noise, std::uint64_t seed);

}  // namespace ccr
