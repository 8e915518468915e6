#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/evaluation.hpp"
#include "ccr/scoring.hpp"
#include "ccr/vec.hpp"
#include "ccr/wordvec.hpp"

namespace ccr {

// Desk-scale fixtures with planted structure.

/// Titles are dealt round-robin into clusters. Every title vector is its
/// cluster centre plus jitter; paragraph texts are bags of the title's
/// keywords, the cluster's keywords and shared fillers (each of 12 extra
/// slots is a filler with probability `noise`).
struct SyntheticCorpus {
  std::vector<ParagraphRecord> records;
  std::map<std::string, Vector> title_vectors;
  std::map<std::string, int> title_cluster;
  /// Vectors for every title, keyword and filler.
  WordVectorModel model;
  /// One questionnaire (15 items) and one dictionary per cluster.
  std::vector<Questionnaire> questionnaires;
  std::vector<Dictionary> dictionaries;
};

SyntheticCorpus generate_synthetic_corpus(int n_titles, int paragraphs_per_title, int dim, double noise,
                                          std::uint64_t seed, int n_clusters = 2);

/// Sentences whose tokens come from a single class each, plus rare tokens
/// that occur fewer than 10 times in total.
struct GrammarCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::map<std::string, int> token_class;  // frequent tokens only
  std::vector<std::string> rare_tokens;
};

GrammarCorpus generate_grammar_corpus(int n_classes, int tokens_per_class, int n_sentences, int sentence_length,
                                      std::uint64_t seed);

/// Class centres at distance >= 2 * margin + 2 apart with points inside a
/// ball of radius 1 around them, so classes are separable with margin >= margin.
struct LabeledPoints {
  std::vector<Vector> points;
  std::vector<int> labels;
};

LabeledPoints generate_separable_points(int n_classes, int per_class, int dim, double margin, std::uint64_t seed);

/// Officials whose mean writing score decreases strictly with support, with
/// ordinal attitude derived from support terciles.
struct SyntheticOfficials {
  std::vector<OfficialRecord> officials;
  std::map<std::string, double> scores;
};

SyntheticOfficials generate_synthetic_officials(int n_officials, int writings_per_official, std::uint64_t seed);

}  // namespace ccr
