#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aug {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define AUG_DEFINE_ERROR(Name)                                                \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}      \
  }

// embed
AUG_DEFINE_ERROR(ProviderUnavailable);
AUG_DEFINE_ERROR(DimensionMismatch);
AUG_DEFINE_ERROR(CacheMiss);
AUG_DEFINE_ERROR(IoError);
AUG_DEFINE_ERROR(FormatError);

// auggam
AUG_DEFINE_ERROR(SingularSystem);
AUG_DEFINE_ERROR(DegenerateLabels);
AUG_DEFINE_ERROR(UnknownNgramNoProvider);
AUG_DEFINE_ERROR(FallbackUnavailable);

// augtree
AUG_DEFINE_ERROR(EmptyNode);
AUG_DEFINE_ERROR(DegenerateSplit);
AUG_DEFINE_ERROR(EmptyTrainingSplit);

// llmclient
AUG_DEFINE_ERROR(LLMUnavailable);
AUG_DEFINE_ERROR(UnparseableCompletion);

// harness
AUG_DEFINE_ERROR(EmptyCorpus);
AUG_DEFINE_ERROR(DegenerateInput);
AUG_DEFINE_ERROR(InvalidArgument);

#undef AUG_DEFINE_ERROR

class ReplayMiss : public Error {
public:
  explicit ReplayMiss(std::string key)
      : Error("ReplayMiss: no recorded completion for key " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

class MalformedRow : public Error {
public:
  MalformedRow(std::size_t line, const std::string& why)
      : Error("MalformedRow: line " + std::to_string(line) + ": " + why), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace aug
