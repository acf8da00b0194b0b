#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aug {

enum class Task { Classification, Regression };
enum class Split : std::uint8_t { Train, Validation, Test };

std::string_view to_string(Task task);
std::string_view to_string(Split split);
Task parse_task(std::string_view name);

/// Documents with targets and a train/validation/test assignment.
///
/// Classification corpora keep labels as indices into `classes`, which is
/// ordered by first appearance in the source file(s). Regression corpora use
/// `responses` and leave `classes`/`labels` empty.
struct LabeledCorpus {
  Task task = Task::Classification;
  std::vector<std::string> documents;
  std::vector<std::string> classes;
  std::vector<int> labels;
  std::vector<double> responses;
  std::vector<Split> splits;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return documents.size(); }
  std::size_t num_classes() const noexcept { return classes.size(); }

  /// Indices of documents assigned to `split`, ascending.
  std::vector<std::size_t> indices(Split split) const;

  /// Targets as doubles (label index for classification).
  double target(std::size_t i) const {
    return task == Task::Classification ? static_cast<double>(labels[i]) : responses[i];
  }

  /// Appends a document; classification labels are interned in first-appearance order.
  void add(std::string document, std::string_view label, Split split = Split::Train);
  void add(std::string document, double response, Split split = Split::Train);

  /// Copy restricted to `rows` (in that order); class list is preserved.
  LabeledCorpus subset(const std::vector<std::size_t>& rows) const;

  void validate() const;
};

enum class CorpusFormat { Tsv, Jsonl };
CorpusFormat parse_format(std::string_view name);

/// How documents are assigned to splits.
///  - `fixed`: every row of the file gets the same split.
///  - fractions: seeded random assignment with the given train/validation
///    fractions; the remainder goes to test.
struct SplitSpec {
  std::optional<Split> fixed = Split::Train;
  double train_fraction = 1.0;
  double validation_fraction = 0.0;
  std::uint64_t seed = 0;

  static SplitSpec all(Split split) { return SplitSpec{split, 1.0, 0.0, 0}; }
  static SplitSpec random(double train, double validation, std::uint64_t seed) {
    return SplitSpec{std::nullopt, train, validation, seed};
  }
};

/// Reads `label<TAB>text` rows (TSV) or `{"text": ..., "label": ...}` objects
/// (JSONL). Blank lines are skipped. Throws MalformedRow or EmptyCorpus.
LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const SplitSpec& split_spec, Task task = Task::Classification);

/// Parses corpus text already in memory (same rules as load_corpus).
LabeledCorpus parse_corpus(std::string_view content, CorpusFormat format,
                           const SplitSpec& split_spec, Task task = Task::Classification);

/// Appends every row of `other` to `corpus`, re-interning class names.
void append_corpus(LabeledCorpus& corpus, const LabeledCorpus& other);

}  // namespace aug
