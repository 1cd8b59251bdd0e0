#include "condense/pipeline.hpp"

#include "condense/digest.hpp"
#include "condense/error.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace condense {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

constexpr std::string_view kToolVersion = "0.1.0";
constexpr std::string_view kHashedScheme = "hashed://";

std::string_view to_string(EngineChoice engine) { return engine == EngineChoice::kTfidf ? "tfidf" : "dense"; }

EngineChoice parse_engine(std::string_view name) {
  if (name == "tfidf") return EngineChoice::kTfidf;
  if (name == "dense") return EngineChoice::kDense;
  throw ConfigError("unknown engine '" + std::string(name) + "' (expected tfidf or dense)");
}

std::optional<std::size_t> hashed_dimension(const std::string& endpoint) {
  if (!endpoint.starts_with(kHashedScheme)) return std::nullopt;
  const std::string digits = endpoint.substr(kHashedScheme.size());
  std::size_t value = 0;
  try {
    std::size_t used = 0;
    value = std::stoul(digits, &used);
    if (used != digits.size()) value = 0;
  } catch (const std::exception&) {
    value = 0;
  }
  if (value == 0) throw ConfigError("hashed endpoint needs a positive dimension, e.g. hashed://1024");
  return value;
}

std::size_t effective_jobs(std::size_t jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The exception of the lowest failing index
/// is rethrown, so failures are reported the same way regardless of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  const std::size_t workers = std::min(effective_jobs(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y%m%dT%H%M%SZ", &tm);
  return buffer;
}

std::optional<fs::path> optional_path(const json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  fs::path p = j[key].get<std::string>();
  return p.is_relative() ? base / p : p;
}

}  // namespace

void RunConfig::validate(bool needs_dense) const {
  segmenter.validate();
  retrieval.validate();
  if (corpus_path.empty()) throw ConfigError("no corpus given (--corpus or \"corpus\" in the config file)");
  if (!fs::is_regular_file(corpus_path)) throw ConfigError("corpus file '" + corpus_path.string() + "' does not exist");
  if (annotation_path && !fs::is_regular_file(*annotation_path)) {
    throw ConfigError("annotation file '" + annotation_path->string() + "' does not exist");
  }
  if (stopwords_path && !fs::is_regular_file(*stopwords_path)) {
    throw ConfigError("stop-word file '" + stopwords_path->string() + "' does not exist");
  }
  for (std::size_t k : k_candidates) {
    if (k == 0) throw ConfigError("k candidates must be positive");
  }
  if (token_budget < kMinTokenBudget) {
    throw ConfigError("token budget must be at least " + std::to_string(kMinTokenBudget));
  }
  if (keywords == 0) throw ConfigError("keyword count must be positive");
  if (engine == EngineChoice::kDense || needs_dense) {
    if (embed_endpoint.empty()) {
      throw ConfigError("the dense engine needs --embed-endpoint (an http(s) URL or hashed://<dimension>)");
    }
    if (!hashed_dimension(embed_endpoint) && !embed_endpoint.starts_with("http://") &&
        !embed_endpoint.starts_with("https://")) {
      throw ConfigError("embedding endpoint must start with http://, https:// or hashed://");
    }
    if (embed_model.empty()) throw ConfigError("the dense engine needs --embed-model");
  }
}

json RunConfig::semantic_json() const {
  json j;
  j["corpus"] = corpus_path.lexically_normal().generic_string();
  j["annotations"] = annotation_path ? json(annotation_path->lexically_normal().generic_string()) : json(nullptr);
  j["stopwords"] = stopwords_path ? json(stopwords_path->lexically_normal().generic_string()) : json(nullptr);
  j["segmenter"] = {{"target_window_tokens", segmenter.target_window_tokens},
                    {"max_window_tokens", segmenter.max_window_tokens},
                    {"overlap_fraction", segmenter.overlap_fraction},
                    {"boundary_policy", std::string(to_string(segmenter.boundary_policy))}};
  j["engine"] = std::string(to_string(engine));
  if (engine == EngineChoice::kDense) {
    j["embed_endpoint"] = embed_endpoint;
    j["embed_model"] = embed_model;
    j["embed_dimension"] = embed_dimension ? json(*embed_dimension) : json(nullptr);
  }
  j["k"] = retrieval.k;
  j["query_with_explanation"] = retrieval.query_with_explanation;
  j["k_candidates"] = k_candidates;
  j["token_budget"] = token_budget;
  j["keywords"] = keywords;
  j["seed"] = seed;
  j["normalization_version"] = std::string(kNormalizationVersion);
  return j;
}

std::string RunConfig::hash() const { return sha256_hex(semantic_json().dump()).substr(0, 12); }

void apply_config_json(RunConfig& config, const json& j) {
  static const std::set<std::string> kKnown = {
      "corpus", "annotations", "stopwords", "segmenter", "engine", "embed_endpoint", "embed_model",
      "embed_dimension", "embed_cache_dir", "k", "query_with_explanation", "k_candidates", "token_budget",
      "keywords", "output", "seed", "jobs", "base_dir"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    const fs::path base = j.contains("base_dir") ? fs::path(j["base_dir"].get<std::string>()) : fs::path();
    if (j.contains("corpus")) config.corpus_path = *optional_path(j, "corpus", base);
    if (auto p = optional_path(j, "annotations", base)) config.annotation_path = p;
    if (auto p = optional_path(j, "stopwords", base)) config.stopwords_path = p;
    if (auto p = optional_path(j, "embed_cache_dir", base)) config.embed_cache_dir = p;
    if (auto p = optional_path(j, "output", base)) config.output_dir = *p;
    if (j.contains("segmenter")) {
      const json& s = j["segmenter"];
      for (const auto& [key, value] : s.items()) {
        if (key != "target_window_tokens" && key != "max_window_tokens" && key != "overlap_fraction" &&
            key != "boundary_policy") {
          throw ConfigError("unknown segmenter key '" + key + "'");
        }
      }
      if (s.contains("target_window_tokens")) config.segmenter.target_window_tokens = s["target_window_tokens"].get<std::size_t>();
      if (s.contains("max_window_tokens")) config.segmenter.max_window_tokens = s["max_window_tokens"].get<std::size_t>();
      if (s.contains("overlap_fraction")) config.segmenter.overlap_fraction = s["overlap_fraction"].get<double>();
      if (s.contains("boundary_policy")) {
        config.segmenter.boundary_policy = parse_boundary_policy(s["boundary_policy"].get<std::string>());
      }
    }
    if (j.contains("engine")) config.engine = parse_engine(j["engine"].get<std::string>());
    if (j.contains("embed_endpoint")) config.embed_endpoint = j["embed_endpoint"].get<std::string>();
    if (j.contains("embed_model")) config.embed_model = j["embed_model"].get<std::string>();
    if (j.contains("embed_dimension") && !j["embed_dimension"].is_null()) {
      config.embed_dimension = j["embed_dimension"].get<std::size_t>();
    }
    if (j.contains("k")) config.retrieval.k = j["k"].get<std::size_t>();
    if (j.contains("query_with_explanation")) config.retrieval.query_with_explanation = j["query_with_explanation"].get<bool>();
    if (j.contains("k_candidates")) config.k_candidates = j["k_candidates"].get<std::vector<std::size_t>>();
    if (j.contains("token_budget")) config.token_budget = j["token_budget"].get<std::size_t>();
    if (j.contains("keywords")) config.keywords = j["keywords"].get<std::size_t>();
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) config.jobs = j["jobs"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (j.is_object() && !j.contains("base_dir")) j["base_dir"] = path.parent_path().string();
  RunConfig config;
  apply_config_json(config, j);
  return config;
}

PreparedRun prepare_run(const RunConfig& config) {
  PreparedRun run;
  run.corpus = load_corpus(config.corpus_path);
  if (run.corpus.documents().empty()) throw DataError("corpus '" + config.corpus_path.string() + "' has no documents");
  run.tokenizer = config.stopwords_path ? std::make_shared<const Tokenizer>(Tokenizer::from_file(*config.stopwords_path))
                                        : std::make_shared<const Tokenizer>();
  if (config.annotation_path) {
    run.annotations = load_annotations(*config.annotation_path);
    validate_annotations(run.annotations, run.corpus);
  }

  const auto& docs = run.corpus.documents();
  run.documents.resize(docs.size());
  parallel_for(docs.size(), config.jobs, [&](std::size_t i) {
    run.documents[i].document = &docs[i];
    run.documents[i].segments = segment_document(docs[i], config.segmenter, *run.tokenizer);
  });

  std::vector<std::vector<std::string>> tokenized;
  for (const SegmentedDocument& sd : run.documents) {
    for (const Segment& s : sd.segments) tokenized.push_back(run.tokenizer->tokenize(sd.document->utf8(s.span())));
  }
  run.vocabulary = fit_vocabulary(tokenized);
  return run;
}

std::unique_ptr<ScoringEngine> make_engine(const RunConfig& config, EngineChoice choice, const PreparedRun& run,
                                           std::unique_ptr<EmbeddingProvider>& provider) {
  if (choice == EngineChoice::kTfidf) return std::make_unique<TfidfEngine>(*run.vocabulary, *run.tokenizer);
  if (const auto dimension = hashed_dimension(config.embed_endpoint)) {
    provider = std::make_unique<HashedEmbeddingProvider>(*dimension, config.seed, *run.tokenizer);
  } else {
    RemoteEmbeddingConfig remote = RemoteEmbeddingConfig::from_env(config.embed_endpoint, config.embed_model);
    remote.dimension = config.embed_dimension;
    remote.cache_dir = config.embed_cache_dir ? *config.embed_cache_dir : config.output_dir / "embedding-cache";
    provider = std::make_unique<RemoteEmbeddingProvider>(std::move(remote));
  }
  return std::make_unique<DenseEngine>(*provider);
}

std::vector<RetrievalResult> retrieve_all(const PreparedRun& run, ScoringEngine& engine,
                                          const RetrievalConfig& retrieval, std::size_t jobs) {
  retrieval.validate();
  const auto& questions = run.corpus.questions();
  std::vector<std::string> queries;
  for (const Question& q : questions) queries.push_back(q.query_text(retrieval.query_with_explanation));

  // per_doc[d][q]
  std::vector<std::vector<RetrievalResult>> per_doc(run.documents.size());
  parallel_for(run.documents.size(), jobs, [&](std::size_t d) {
    const SegmentedDocument& sd = run.documents[d];
    const std::vector<std::string> texts = segment_texts(*sd.document, sd.segments);
    const ScoreMatrix scores = engine.score(queries, texts);
    for (std::size_t q = 0; q < questions.size(); ++q) {
      per_doc[d].push_back(rank_scores(questions[q].question_id, sd.document->doc_id, engine.name(), scores[q],
                                       sd.segments, retrieval.k));
    }
  });

  std::vector<RetrievalResult> results;
  results.reserve(questions.size() * run.documents.size());
  for (std::size_t q = 0; q < questions.size(); ++q) {
    for (std::size_t d = 0; d < run.documents.size(); ++d) results.push_back(std::move(per_doc[d][q]));
  }
  return results;
}

namespace {

SegmentIndex make_segment_index(const PreparedRun& run) {
  SegmentIndex index;
  for (const SegmentedDocument& sd : run.documents) {
    index.documents[sd.document->doc_id] = {sd.segments, sd.document->length()};
  }
  return index;
}

}  // namespace

EvaluationSummary evaluate_results(const PreparedRun& run, std::span<const RetrievalResult> results,
                                   std::size_t keyword_count) {
  EvaluationSummary summary;
  if (run.annotations.empty()) return summary;
  const SegmentIndex index = make_segment_index(run);
  std::map<std::pair<std::string, std::string>, const RetrievalResult*> by_pair;
  for (const RetrievalResult& r : results) by_pair.emplace(std::pair(r.question_id, r.doc_id), &r);

  std::size_t hits = 0;
  for (const GroundTruthAnnotation& a : run.annotations) {
    if (a.label != 1) continue;
    const auto it = by_pair.find({a.question_id, a.doc_id});
    if (it == by_pair.end()) throw MissingResult(a.question_id, a.doc_id);
    const auto& entry = index.at(a.doc_id);
    PairEvaluation pair;
    pair.question_id = a.question_id;
    pair.doc_id = a.doc_id;
    pair.hit = answer_in_topk(*it->second, a, entry.segments, entry.doc_length);
    if (pair.hit.hit) {
      ++hits;
      const std::size_t segment_index = it->second->ranked[*pair.hit.best_rank - 1].segment_index;
      const Document& doc = *run.corpus.find_document(a.doc_id);
      const Question& question = *run.corpus.find_question(a.question_id);
      try {
        const KeywordSet keywords = extract_keywords(question, *run.vocabulary, keyword_count, *run.tokenizer);
        const auto seg = std::find_if(entry.segments.begin(), entry.segments.end(),
                                      [&](const Segment& s) { return s.segment_index == segment_index; });
        pair.coverage = keyword_coverage(doc.utf8(seg->span()), keywords, *run.tokenizer);
        pair.low_coverage = *pair.coverage < 0.5;
      } catch (const NoKeywords&) {
        pair.low_coverage = true;
      }
    }
    summary.pairs.push_back(std::move(pair));
  }
  if (!summary.pairs.empty()) {
    summary.recall = static_cast<double>(hits) / static_cast<double>(summary.pairs.size());
  }
  return summary;
}

namespace {

std::string render_run_report(const RunConfig& config, const PreparedRun& run, const std::string& engine,
                              std::span<const RetrievalResult> results, const EvaluationSummary& eval) {
  std::size_t segment_total = 0;
  for (const SegmentedDocument& sd : run.documents) segment_total += sd.segments.size();

  std::string out;
  out += fmt::format("config_hash: {}\nengine: {}\nk: {}\nnormalization_version: {}\n", config.hash(), engine,
                     config.retrieval.k, kNormalizationVersion);
  out += fmt::format("documents: {}\nquestions: {}\nsegments: {}\n\n", run.documents.size(),
                     run.corpus.questions().size(), segment_total);

  std::map<std::string, std::pair<double, std::size_t>> means;
  for (const RetrievalResult& r : results) {
    auto& [sum, count] = means[r.question_id];
    sum += mean_topk_score(r);
    ++count;
  }
  out += "question_id\tmean_topk\n";
  for (const auto& [id, acc] : means) {
    out += fmt::format("{}\t{:.4f}\n", id, acc.first / static_cast<double>(acc.second) + 0.0);
  }

  out += '\n';
  if (!eval.recall) {
    out += run.annotations.empty() ? "recall_at_k: undefined (no annotations)\n"
                                   : "recall_at_k: undefined (no label-1 annotations)\n";
    return out;
  }
  out += fmt::format("recall_at_k: {:.4f}\n", *eval.recall);
  out += "question_id\tdoc_id\thit\tbest_rank\tkeyword_coverage\tflag\n";
  for (const PairEvaluation& p : eval.pairs) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", p.question_id, p.doc_id, p.hit.hit ? "yes" : "no",
                       p.hit.best_rank ? std::to_string(*p.hit.best_rank) : std::string("-"),
                       p.coverage ? fmt::format("{:.4f}", *p.coverage) : std::string("-"),
                       p.low_coverage ? "low-coverage" : "");
  }
  return out;
}

}  // namespace

RunOutputs execute_run(const RunConfig& config, std::ostream& log) {
  config.validate();
  PreparedRun run = prepare_run(config);
  if (run.corpus.questions().empty()) throw DataError("corpus has no questions");

  std::unique_ptr<EmbeddingProvider> provider;
  std::unique_ptr<ScoringEngine> engine = make_engine(config, config.engine, run, provider);
  log << fmt::format("segmented {} documents; vocabulary of {} terms; engine {}\n", run.documents.size(),
                     run.vocabulary->size(), engine->name());

  const std::vector<RetrievalResult> results = retrieve_all(run, *engine, config.retrieval, config.jobs);
  const EvaluationSummary eval = evaluate_results(run, results, config.keywords);
  ExportOptions export_options;
  export_options.token_budget = config.token_budget;
  export_options.question_with_explanation = config.retrieval.query_with_explanation;
  const std::vector<ClassificationRecord> records =
      export_dataset(run.corpus.questions(), run.documents, results, run.annotations, export_options, *run.tokenizer);

  std::map<std::string, std::string> files;
  {
    std::ostringstream segments;
    for (const SegmentedDocument& sd : run.documents) write_segments(sd.segments, segments);
    files["segments.jsonl"] = segments.str();
  }
  {
    std::ostringstream out;
    write_results(results, out);
    files["results.jsonl"] = out.str();
  }
  {
    std::ostringstream out;
    write_dataset(records, out);
    files["dataset.jsonl"] = out.str();
  }
  files["report.txt"] = render_run_report(config, run, engine->name(), results, eval);

  ordered manifest;
  manifest["tool"] = "condense";
  manifest["version"] = kToolVersion;
  manifest["config_hash"] = config.hash();
  manifest["config"] = config.semantic_json();
  manifest["engine"] = engine->name();
  manifest["token_budget"] = config.token_budget;
  manifest["counts"] = {{"documents", run.documents.size()},
                        {"questions", run.corpus.questions().size()},
                        {"results", results.size()},
                        {"records", records.size()}};
  ordered digests = ordered::object();
  for (const auto& [name, content] : files) digests[name] = sha256_hex(content);
  manifest["files"] = digests;
  files["manifest.json"] = manifest.dump(2) + "\n";

  RunOutputs outputs;
  outputs.config_hash = config.hash();
  const std::string base_id = utc_stamp() + "-" + outputs.config_hash;
  fs::create_directories(config.output_dir);
  fs::path dir = config.output_dir / base_id;
  for (int attempt = 2; !fs::create_directory(dir); ++attempt) {
    dir = config.output_dir / (base_id + "-" + std::to_string(attempt));
  }
  outputs.run_dir = dir;
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    outputs.files.push_back(dir / name);
  }
  return outputs;
}

std::vector<QuestionSweep> sweep_corpus(const PreparedRun& run, ScoringEngine& engine,
                                        std::span<const std::size_t> candidates, bool query_with_explanation) {
  if (candidates.empty()) throw ConfigError("k sweep needs at least one candidate");
  const auto& questions = run.corpus.questions();
  std::vector<std::string> queries;
  for (const Question& q : questions) queries.push_back(q.query_text(query_with_explanation));
  const std::size_t max_k = *std::max_element(candidates.begin(), candidates.end());

  std::vector<std::map<std::size_t, double>> sums(questions.size());
  for (const SegmentedDocument& sd : run.documents) {
    const ScoreMatrix scores = engine.score(queries, segment_texts(*sd.document, sd.segments));
    for (std::size_t q = 0; q < questions.size(); ++q) {
      const RetrievalResult full =
          rank_scores(questions[q].question_id, sd.document->doc_id, engine.name(), scores[q], sd.segments, max_k);
      for (const auto& [k, score] : sweep_k(full, candidates).per_k) sums[q][k] += score;
    }
  }

  std::vector<QuestionSweep> out;
  for (std::size_t q = 0; q < questions.size(); ++q) {
    QuestionSweep sweep;
    sweep.question_id = questions[q].question_id;
    double best = 0.0;
    for (const auto& [k, sum] : sums[q]) {
      const double mean = sum / static_cast<double>(run.documents.size());
      sweep.per_k.emplace_back(k, mean);
      if (sweep.best_k == 0 || mean > best) {
        best = mean;
        sweep.best_k = k;
      }
    }
    out.push_back(std::move(sweep));
  }
  return out;
}

void validate_segments_stream(std::istream& in) {
  const std::vector<Segment> segments = read_segments(in);
  std::map<std::string, const Segment*> last;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    const std::size_t line = i + 1;
    const auto it = last.find(s.doc_id);
    if (it == last.end()) {
      if (s.segment_index != 0) throw ParseError(line, "first segment of a document must have index 0");
      if (s.overlap_with_prev_chars != 0) throw ParseError(line, "first segment cannot overlap");
    } else {
      const Segment& prev = *it->second;
      if (s.segment_index != prev.segment_index + 1) throw ParseError(line, "segment indices are not consecutive");
      if (s.start_char <= prev.start_char) throw ParseError(line, "segment starts do not increase");
      const std::size_t overlap = s.start_char < prev.end_char ? prev.end_char - s.start_char : 0;
      if (overlap != s.overlap_with_prev_chars) throw ParseError(line, "overlap_with_prev_chars is inconsistent");
    }
    last[s.doc_id] = &s;
  }
}

void validate_results_stream(std::istream& in) {
  const std::vector<RetrievalResult> results = read_results(in);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& ranked = results[i].ranked;
    if (ranked.empty()) throw ParseError(i + 1, "ranked list is empty");
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (ranked[r].score < -1.0 || ranked[r].score > 1.0) throw ParseError(i + 1, "score outside [-1, 1]");
      if (r > 0) {
        const bool ordered_pair = ranked[r - 1].score > ranked[r].score ||
                                  (ranked[r - 1].score == ranked[r].score &&
                                   ranked[r - 1].segment_index < ranked[r].segment_index);
        if (!ordered_pair) throw ParseError(i + 1, "ranked list is not sorted by score then segment_index");
      }
    }
  }
}

void validate_dataset_stream(std::istream& in, std::size_t token_budget) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line, "record is not an object");
    for (const char* key : {"question_id", "doc_id", "text"}) {
      if (!record.contains(key) || !record[key].is_string()) {
        throw ParseError(line, std::string("missing or non-string field '") + key + "'");
      }
    }
    if (record["text"].get<std::string>().find(kQuestionSeparator) == std::string::npos) {
      throw ParseError(line, "text lacks the question separator");
    }
    if (!record.contains("token_count") || !record["token_count"].is_number_unsigned()) {
      throw ParseError(line, "missing or non-integer field 'token_count'");
    }
    const auto tokens = record["token_count"].get<std::size_t>();
    if (tokens == 0 || tokens > token_budget) {
      throw ParseError(line, "token_count " + std::to_string(tokens) + " outside (0, " + std::to_string(token_budget) + "]");
    }
    if (record.contains("label")) {
      const json& label = record["label"];
      if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
        throw ParseError(line, "label must be 0 or 1");
      }
    }
  }
}

void validate_run_dir(const fs::path& run_dir) {
  const fs::path manifest_path = run_dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw DataError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.contains("files") || !manifest.contains("token_budget") || !manifest.contains("config_hash")) {
    throw DataError("manifest lacks files, token_budget or config_hash");
  }
  for (const char* name : {"segments.jsonl", "results.jsonl", "dataset.jsonl", "report.txt"}) {
    if (!manifest["files"].contains(name)) throw DataError(std::string("manifest does not list ") + name);
  }
  for (const auto& [name, digest] : manifest["files"].items()) {
    const std::string content = read_file(run_dir / name);
    if (sha256_hex(content) != digest.get<std::string>()) throw DataError(name + " does not match its manifest digest");
    std::istringstream in(content);
    try {
      if (name == "segments.jsonl") validate_segments_stream(in);
      if (name == "results.jsonl") validate_results_stream(in);
      if (name == "dataset.jsonl") validate_dataset_stream(in, manifest["token_budget"].get<std::size_t>());
    } catch (const ParseError& e) {
      throw DataError(name + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------------------------
// Command line

namespace {

struct CliState {
  std::string config_path;
  std::size_t jobs = 0;
  std::string engine;
  std::string embed_endpoint;
  std::string embed_model;
  std::size_t k = 0;
  std::size_t token_budget = 0;
  std::string stopwords;
  std::string output;
  std::string corpus;
  std::string annotations;
};

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kData: return 3;
    case ErrorCategory::kProvider: return 4;
  }
  return 3;
}

RunConfig build_config(const CliState& s, const CLI::App& app) {
  RunConfig config = s.config_path.empty() ? RunConfig{} : load_run_config(s.config_path);
  auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
  if (given("--jobs")) config.jobs = s.jobs;
  if (given("--engine")) config.engine = parse_engine(s.engine);
  if (given("--embed-endpoint")) config.embed_endpoint = s.embed_endpoint;
  if (given("--embed-model")) config.embed_model = s.embed_model;
  if (given("--k")) config.retrieval.k = s.k;
  if (given("--token-budget")) config.token_budget = s.token_budget;
  if (given("--stopwords")) config.stopwords_path = s.stopwords;
  if (given("--output")) config.output_dir = s.output;
  if (!s.corpus.empty()) config.corpus_path = s.corpus;
  if (!s.annotations.empty()) config.annotation_path = s.annotations;
  return config;
}

int cmd_ingest(const fs::path& input_dir, const std::string& questions_path, const std::string& output,
               std::ostream& out, std::ostream& err) {
  if (output.empty()) throw ConfigError("ingest needs --output <corpus file>");
  if (!fs::is_directory(input_dir)) throw ConfigError("'" + input_dir.string() + "' is not a directory");
  if (!questions_path.empty() && !fs::is_regular_file(questions_path)) {
    throw ConfigError("question file '" + questions_path + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(input_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    err << "error: no documents found in '" << input_dir.string() << "'\n";
    return 2;
  }
  std::map<std::string, fs::path> stems;
  for (const fs::path& file : files) {
    const auto [it, inserted] = stems.emplace(file.stem().string(), file);
    if (!inserted) {
      err << "error: " << DuplicateId(file.stem().string()).what() << ": '" << it->second.string() << "' and '"
          << file.string() << "'\n";
      return 2;
    }
  }

  Corpus corpus;
  bool failed = false;
  for (const fs::path& file : files) {
    try {
      corpus.ingest(file.stem().string(), file.stem().string(), read_file(file));
    } catch (const Error& e) {
      err << "error: " << file.string() << ": " << e.what() << "\n";
      failed = true;
    }
  }
  if (failed) return 3;
  if (!questions_path.empty()) {
    const Corpus extra = load_corpus(questions_path);
    for (const Document& d : extra.documents()) corpus.add_document(d);
    for (const Question& q : extra.questions()) corpus.add_question(q);
  }
  const fs::path target(output);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  save_corpus(corpus, target);
  out << fmt::format("wrote {} documents and {} questions to {}\n", corpus.documents().size(),
                     corpus.questions().size(), target.string());
  return 0;
}

int cmd_sweep(const RunConfig& config, std::ostream& out) {
  if (config.k_candidates.empty()) throw ConfigError("sweep-k needs at least one k candidate");
  config.validate();
  const PreparedRun run = prepare_run(config);
  if (run.corpus.questions().empty()) throw DataError("corpus has no questions");
  std::unique_ptr<EmbeddingProvider> provider;
  auto engine = make_engine(config, config.engine, run, provider);
  const auto sweeps = sweep_corpus(run, *engine, config.k_candidates, config.retrieval.query_with_explanation);
  out << fmt::format("# engine: {}\n", engine->name());
  out << "question_id\tk\tmean_topk\n";
  for (const QuestionSweep& s : sweeps) {
    for (const auto& [k, score] : s.per_k) out << fmt::format("{}\t{}\t{:.4f}\n", s.question_id, k, score + 0.0);
  }
  out << "\nquestion_id\tbest_k\n";
  for (const QuestionSweep& s : sweeps) out << fmt::format("{}\t{}\n", s.question_id, s.best_k);
  return 0;
}

int cmd_compare(const RunConfig& config, const std::string& format, std::ostream& out) {
  const ReportFormat report_format = parse_report_format(format);
  config.validate(/*needs_dense=*/true);
  const PreparedRun run = prepare_run(config);
  if (run.corpus.questions().empty()) throw DataError("corpus has no questions");
  std::unique_ptr<EmbeddingProvider> baseline_provider;
  std::unique_ptr<EmbeddingProvider> method_provider;
  auto baseline = make_engine(config, EngineChoice::kTfidf, run, baseline_provider);
  auto method = make_engine(config, EngineChoice::kDense, run, method_provider);
  const ComparisonReport report = compare_engines(run.corpus.questions(), run.documents, config.retrieval.k,
                                                  *baseline, *method, config.retrieval.query_with_explanation);
  out << render_report(report, report_format);
  return 0;
}

int cmd_validate(const CliState& s, const std::string& run_dir, std::ostream& out) {
  if (s.corpus.empty() && run_dir.empty()) throw ConfigError("validate needs --corpus and/or --run-dir");
  if (!s.annotations.empty() && s.corpus.empty()) throw ConfigError("--annotations needs --corpus to check against");
  if (!s.corpus.empty()) {
    if (!fs::is_regular_file(s.corpus)) throw ConfigError("corpus file '" + s.corpus + "' does not exist");
    const Corpus corpus = load_corpus(s.corpus);
    out << fmt::format("corpus ok: {} documents, {} questions\n", corpus.documents().size(), corpus.questions().size());
    if (!s.annotations.empty()) {
      if (!fs::is_regular_file(s.annotations)) throw ConfigError("annotation file '" + s.annotations + "' does not exist");
      const auto annotations = load_annotations(s.annotations);
      validate_annotations(annotations, corpus);
      out << fmt::format("annotations ok: {} records\n", annotations.size());
    }
  }
  if (!run_dir.empty()) {
    if (!fs::is_directory(run_dir)) throw ConfigError("run directory '" + run_dir + "' does not exist");
    validate_run_dir(run_dir);
    out << "run directory ok: " << run_dir << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Condense long documents into their question-relevant segments", "condense"};
  app.require_subcommand(1);
  app.fallthrough();

  CliState s;
  app.add_option("--config", s.config_path, "JSON run configuration");
  app.add_option("--jobs", s.jobs, "Worker threads (default: logical CPUs)")->check(CLI::PositiveNumber);
  app.add_option("--engine", s.engine, "Retrieval engine")->check(CLI::IsMember({"tfidf", "dense"}));
  app.add_option("--embed-endpoint", s.embed_endpoint, "Embedding service URL, or hashed://<dimension>");
  app.add_option("--embed-model", s.embed_model, "Embedding model name");
  app.add_option("--k", s.k, "Segments kept per question and document")->check(CLI::PositiveNumber);
  app.add_option("--token-budget", s.token_budget, "Token budget of exported records")->check(CLI::PositiveNumber);
  app.add_option("--stopwords", s.stopwords, "Stop-word file, one term per line");
  app.add_option("--output", s.output, "Output directory (ingest: corpus file)");

  auto* ingest = app.add_subcommand("ingest", "Build a corpus file from a directory of .txt documents");
  std::string input_dir;
  std::string questions_path;
  ingest->add_option("input_dir", input_dir, "Directory scanned recursively for .txt files")->required();
  ingest->add_option("--questions", questions_path, "Line-delimited question records to include");

  auto* run = app.add_subcommand("run", "Segment, retrieve, evaluate and export");
  run->add_option("--corpus", s.corpus, "Corpus file");
  run->add_option("--annotations", s.annotations, "Annotation file");

  auto* sweep = app.add_subcommand("sweep-k", "Mean top-k similarity for several k per question");
  std::vector<std::size_t> candidates;
  sweep->add_option("--corpus", s.corpus, "Corpus file");
  sweep->add_option("--k-candidates", candidates, "Comma-separated k values")->delimiter(',');

  auto* compare = app.add_subcommand("compare", "Compare TF-IDF against the dense engine");
  std::string format = "table";
  compare->add_option("--corpus", s.corpus, "Corpus file");
  compare->add_option("--format", format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));

  auto* validate = app.add_subcommand("validate", "Check corpus, annotation and run output files");
  std::string run_dir;
  validate->add_option("--corpus", s.corpus, "Corpus file");
  validate->add_option("--annotations", s.annotations, "Annotation file (checked against --corpus)");
  validate->add_option("--run-dir", run_dir, "Run directory written by 'run'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(input_dir, questions_path, s.output, out, err);
    if (validate->parsed()) return cmd_validate(s, run_dir, out);
    RunConfig config = build_config(s, app);
    if (run->parsed()) {
      const RunOutputs outputs = execute_run(config, err);
      out << outputs.run_dir.string() << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      if (!candidates.empty()) config.k_candidates = candidates;
      return cmd_sweep(config, out);
    }
    if (compare->parsed()) return cmd_compare(config, format, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace condense
