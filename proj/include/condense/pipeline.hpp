#pragma once

#include "condense/corpus.hpp"
#include "condense/embedding.hpp"
#include "condense/evaluate.hpp"
#include "condense/export.hpp"
#include "condense/groundtruth.hpp"
#include "condense/retrieve.hpp"
#include "condense/segmenter.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace condense {

enum class EngineChoice { kTfidf, kDense };

/// Everything a pipeline command needs. Built from an optional JSON config file, then command-line
/// overrides.
struct RunConfig {
  std::filesystem::path corpus_path;
  std::optional<std::filesystem::path> annotation_path;
  std::optional<std::filesystem::path> stopwords_path;
  SegmenterConfig segmenter;
  EngineChoice engine = EngineChoice::kTfidf;
  /// http(s) URL of an embedding service, or "hashed://<dimension>" for the offline hashed embedder.
  std::string embed_endpoint;
  std::string embed_model = "default";
  std::optional<std::size_t> embed_dimension;
  std::optional<std::filesystem::path> embed_cache_dir;
  RetrievalConfig retrieval;
  std::vector<std::size_t> k_candidates{5, 10, 15};
  std::size_t token_budget = 600;
  std::size_t keywords = 8;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  std::size_t jobs = 0;  // 0: one per logical CPU

  /// Throws ConfigError. Checks referenced paths exist; nothing is created.
  void validate(bool needs_dense = false) const;

  /// Fields that change results; excludes jobs, output_dir and the cache location.
  nlohmann::json semantic_json() const;
  /// First 12 hex digits of SHA-256 over semantic_json().
  std::string hash() const;
};

/// Reads the JSON config format (see README). Unknown keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_config_json(RunConfig& config, const nlohmann::json& json);

/// Run state shared by the commands: corpus, tokenizer, segmentation and fitted vocabulary.
struct PreparedRun {
  Corpus corpus;
  std::shared_ptr<const Tokenizer> tokenizer;
  std::vector<SegmentedDocument> documents;
  std::vector<GroundTruthAnnotation> annotations;
  std::optional<Vocabulary> vocabulary;
};

PreparedRun prepare_run(const RunConfig& config);

/// Engine for `config.engine`; `provider` receives ownership of any embedding provider it needs.
std::unique_ptr<ScoringEngine> make_engine(const RunConfig& config, EngineChoice choice, const PreparedRun& run,
                                           std::unique_ptr<EmbeddingProvider>& provider);

/// Ranks every (question, document) pair; parallel across documents, ordered questions-outer.
std::vector<RetrievalResult> retrieve_all(const PreparedRun& run, ScoringEngine& engine,
                                          const RetrievalConfig& retrieval, std::size_t jobs);

struct PairEvaluation {
  std::string question_id;
  std::string doc_id;
  TopkHit hit;
  std::optional<double> coverage;  // keyword coverage of the hit segment
  bool low_coverage = false;       // claimed hit with coverage < 0.5
};

struct EvaluationSummary {
  std::optional<double> recall;
  std::vector<PairEvaluation> pairs;
};

EvaluationSummary evaluate_results(const PreparedRun& run, std::span<const RetrievalResult> results,
                                   std::size_t keyword_count);

struct RunOutputs {
  std::filesystem::path run_dir;
  std::string config_hash;
  std::vector<std::filesystem::path> files;
};

/// Segment, retrieve, evaluate (when annotations are configured) and export. All outputs are
/// computed before the run directory is created.
RunOutputs execute_run(const RunConfig& config, std::ostream& log);

struct QuestionSweep {
  std::string question_id;
  std::vector<std::pair<std::size_t, double>> per_k;  // mean over documents
  std::size_t best_k = 0;
};

std::vector<QuestionSweep> sweep_corpus(const PreparedRun& run, ScoringEngine& engine,
                                        std::span<const std::size_t> candidates, bool query_with_explanation);

/// Schema checks for run outputs. Throw ParseError naming the offending line.
void validate_segments_stream(std::istream& in);
void validate_results_stream(std::istream& in);
void validate_dataset_stream(std::istream& in, std::size_t token_budget);
/// Checks manifest, file digests and every output file of a run directory.
void validate_run_dir(const std::filesystem::path& run_dir);

/// Command-line entry point. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace condense
