#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace condense {

/// Coarse failure category. The CLI maps these onto exit codes.
enum class ErrorCategory {
  kConfig,    // bad arguments or configuration (exit 2)
  kData,      // malformed or inconsistent input data (exit 3)
  kProvider,  // embedding provider failure (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::kData, what) {}
};

class EmptyDocument : public DataError {
 public:
  explicit EmptyDocument(const std::string& doc_id)
      : DataError("document '" + doc_id + "' is empty after normalization") {}
};

class DuplicateId : public DataError {
 public:
  explicit DuplicateId(const std::string& id) : DataError("duplicate id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Malformed record in a line-delimited file. Lines are 1-based.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : DataError("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class InvalidPosition : public DataError {
 public:
  explicit InvalidPosition(std::size_t position)
      : DataError("position " + std::to_string(position) + " is outside every paragraph") {}
};

class EmptyCorpus : public DataError {
 public:
  EmptyCorpus() : DataError("no segment contains an indexable term") {}
};

class ZeroVector : public DataError {
 public:
  ZeroVector() : DataError("cosine similarity is undefined for a zero vector") {}
};

class NoScorableSegments : public DataError {
 public:
  explicit NoScorableSegments(const std::string& what) : DataError(what) {}
};

class NoKeywords : public DataError {
 public:
  explicit NoKeywords(const std::string& question_id)
      : DataError("question '" + question_id + "' has no in-vocabulary keywords") {}
};

class AnnotationOutOfBounds : public DataError {
 public:
  explicit AnnotationOutOfBounds(const std::string& what) : DataError(what) {}
};

class MissingResult : public DataError {
 public:
  MissingResult(const std::string& question_id, const std::string& doc_id)
      : DataError("no retrieval result for question '" + question_id + "' in document '" + doc_id +
                  "'"),
        question_id_(question_id),
        doc_id_(doc_id) {}
  const std::string& question_id() const noexcept { return question_id_; }
  const std::string& doc_id() const noexcept { return doc_id_; }

 private:
  std::string question_id_;
  std::string doc_id_;
};

class NoPositivePairs : public DataError {
 public:
  NoPositivePairs() : DataError("recall is undefined: no annotation has label 1") {}
};

class BudgetTooSmall : public DataError {
 public:
  explicit BudgetTooSmall(const std::string& what) : DataError(what) {}
};

class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what) : Error(ErrorCategory::kProvider, what) {}
};

class TransportError : public ProviderError {
 public:
  explicit TransportError(const std::string& what) : ProviderError(what) {}
};

class DimensionMismatch : public ProviderError {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : ProviderError("embedding dimension mismatch: expected " + std::to_string(expected) +
                      ", got " + std::to_string(actual)) {}
};

}  // namespace condense
