#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "augimodels/corpus.hpp"

namespace aug::text {

using Token = std::string;

struct NgramConfig {
  static constexpr int kMaxOrder = 8;

  std::vector<int> orders{1, 2};
  bool lowercase = true;
  bool strip_punctuation = true;

  /// Sorted, deduplicated copy; throws InvalidArgument on an empty set or
  /// an order outside [1, kMaxOrder].
  NgramConfig canonical() const;
  int max_order() const;

  /// "1,2" style rendering of the orders.
  std::string orders_string() const;
  static std::vector<int> parse_orders(std::string_view csv);

  bool operator==(const NgramConfig&) const = default;
};

/// Word ngram. Equality and ordering follow the canonical form (tokens
/// joined by one space), compared bytewise.
class Ngram {
public:
  explicit Ngram(std::vector<Token> tokens);
  /// Splits a canonical string on single spaces.
  static Ngram parse(std::string_view canonical);

  const std::string& text() const noexcept { return text_; }
  std::span<const Token> tokens() const noexcept { return tokens_; }
  std::size_t order() const noexcept { return tokens_.size(); }

  bool operator==(const Ngram& o) const noexcept { return text_ == o.text_; }
  std::strong_ordering operator<=>(const Ngram& o) const noexcept {
    return text_.compare(o.text_) <=> 0;
  }

private:
  std::vector<Token> tokens_;
  std::string text_;
};

/// Splits on Unicode whitespace; optionally strips leading/trailing Unicode
/// punctuation (general category P*) and case-folds. Tokens left empty by
/// stripping are dropped.
std::vector<Token> tokenize(std::string_view text, const NgramConfig& config);

/// Every contiguous window of each configured order, orders ascending,
/// document order within an order, duplicates kept.
std::vector<Ngram> extract_ngrams(std::span<const Token> tokens, const NgramConfig& config);

/// Same windows as extract_ngrams, as canonical strings.
std::vector<std::string> extract_ngram_strings(std::span<const Token> tokens,
                                               const NgramConfig& config);

/// Convenience: tokenize + extract_ngram_strings.
std::vector<std::string> document_ngrams(std::string_view document, const NgramConfig& config);

/// Applies token normalization to a free-form phrase and joins with single
/// spaces; empty when nothing survives.
std::string normalize_phrase(std::string_view phrase, const NgramConfig& config);

/// Lowercases and strips surrounding whitespace/punctuation of a whole phrase,
/// collapsing internal whitespace runs to a single space. Inner punctuation
/// is kept.
std::string clean_phrase(std::string_view phrase);

struct VocabEntry {
  std::string ngram;
  std::size_t count = 0;
  std::size_t doc_freq = 0;
};

/// Unique ngrams in lexicographic (bytewise) order with counts.
class Vocabulary {
public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<VocabEntry> sorted_entries);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const VocabEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<VocabEntry>& entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Index of `ngram` or npos.
  std::size_t find(std::string_view ngram) const;
  bool contains(std::string_view ngram) const { return find(ngram) != npos; }
  std::vector<std::string> ngrams() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

Vocabulary build_vocabulary(std::span<const std::string> documents, const NgramConfig& config);

/// Vocabulary over the training split only.
Vocabulary vocabulary(const LabeledCorpus& corpus, const NgramConfig& config);

}  // namespace aug::text
