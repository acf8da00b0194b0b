#pragma once

// CART over binary ngram-presence features where each split may hold a
// disjunction of keyphrases: the best CART ngram plus expansions (from an
// LLM or from embedding neighbours) that strictly improve the split.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augimodels/corpus.hpp"
#include "augimodels/embed.hpp"
#include "augimodels/kernels.hpp"
#include "augimodels/llmclient.hpp"
#include "augimodels/textproc.hpp"

namespace aug::tree {

inline constexpr std::string_view kDefaultPromptTemplate =
    "Generate 100 concise phrases that are very similar to the keyphrase:\n"
    "Keyphrase: \"{keyphrase}\"\n"
    "1.";

/// Relative slack under which two impurity decreases count as tied.
inline constexpr double kTieTolerance = 1e-12;

enum class ExpansionKind { None, Llm, Embedding };
std::string_view to_string(ExpansionKind kind);
ExpansionKind parse_expansion(std::string_view name);

struct TreeFitConfig {
  int max_depth = 8;
  std::size_t min_samples_split = 2;
  Task task = Task::Classification;
  ExpansionKind expansion = ExpansionKind::None;
  int expansion_seeds = 1;
  std::string prompt_template{kDefaultPromptTemplate};
  std::size_t candidate_limit = 100;
  text::NgramConfig ngram_config;

  void validate() const;
};

// --- impurity -----------------------------------------------------------------

/// Gini impurity 1 - sum p_c^2. Throws EmptyNode.
double impurity(std::span<const int> labels, std::size_t num_classes);
/// Mean squared deviation from the mean. Throws EmptyNode.
double impurity(std::span<const double> responses);

/// n_t h(t) - n_L h(t_L) - n_R h(t_R), children given by `in_left`.
/// Throws DegenerateSplit when a child would be empty.
double impurity_decrease(std::span<const bool> in_left, std::span<const int> labels,
                         std::size_t num_classes);
double impurity_decrease(std::span<const bool> in_left, std::span<const double> responses);

// --- training data ------------------------------------------------------------

/// Tokenized training documents with targets, plus cached keyphrase
/// postings (documents containing a phrase as a contiguous token window).
/// Postings lookups are safe to call concurrently.
class TreeData {
public:
  TreeData(const LabeledCorpus& corpus, std::span<const std::size_t> rows,
           const text::NgramConfig& config, const text::Vocabulary& vocabulary);

  std::size_t size() const noexcept { return tokens_.size(); }
  Task task() const noexcept { return task_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& responses() const noexcept { return responses_; }
  const text::NgramConfig& config() const noexcept { return config_; }
  const text::Vocabulary& vocabulary() const noexcept { return vocabulary_; }
  /// Row v lists the documents containing vocabulary ngram v.
  const kernels::CsrIndex& vocabulary_postings() const noexcept { return vocab_postings_; }

  /// Sorted document ids containing `keyphrase` (normalized with the config).
  const std::vector<std::uint32_t>& postings(const std::string& keyphrase) const;

  kernels::SplitTargets targets(std::span<const std::uint32_t> weight) const;

private:
  Task task_;
  std::size_t num_classes_ = 0;
  std::vector<int> labels_;
  std::vector<double> responses_;
  text::NgramConfig config_;
  text::Vocabulary vocabulary_;
  std::vector<std::vector<text::Token>> tokens_;
  kernels::CsrIndex vocab_postings_;

  mutable std::shared_mutex cache_mutex_;
  mutable std::map<std::string, std::vector<std::uint32_t>> cache_;
};

/// Impurity decrease of splitting the weighted node on "any keyphrase present".
/// Returns nullopt when a child would be empty.
std::optional<double> disjunction_decrease(const TreeData& data,
                                           std::span<const std::uint32_t> weight,
                                           std::span<const std::string> keyphrases);

struct CartCandidate {
  std::string ngram;
  double impurity_decrease = 0;
};

/// Best `count` vocabulary ngrams by impurity decrease (ties to the
/// lexicographically smaller ngram), keeping only decreases > 0.
std::vector<CartCandidate> top_cart_splits(const TreeData& data,
                                           std::span<const std::uint32_t> weight,
                                           std::size_t count);

/// The single best CART split, or nullopt when no split decreases impurity.
std::optional<CartCandidate> best_cart_split(const TreeData& data,
                                             std::span<const std::uint32_t> weight);

// --- expansion and screening ---------------------------------------------------

struct ExpansionStats {
  std::size_t generated = 0;     // parsed from the completion / neighbours found
  std::size_t deduplicated = 0;  // after cleaning and deduplication
  std::size_t retained = 0;      // after screening
};

struct ExpansionResult {
  std::vector<std::string> candidates;
  std::size_t generated = 0;
};

/// Source of expansion candidates for a seed keyphrase.
class KeyphraseExpander {
public:
  virtual ~KeyphraseExpander() = default;
  virtual ExpansionResult expand(const std::string& keyphrase) = 0;
};

/// Replaces every "{keyphrase}" in `prompt_template`.
std::string format_prompt(std::string_view prompt_template, std::string_view keyphrase);

/// Cleans and deduplicates raw phrases: lowercase, trim, strip surrounding
/// punctuation, drop empties and the seed, keep first occurrences, cap at
/// `limit`.
std::vector<std::string> deduplicate_candidates(std::span<const std::string> raw,
                                                std::string_view seed, std::size_t limit);

/// One completion request, parsed as a numbered list. A prompt ending in a
/// list marker ("1.") is treated as the start of the answer.
ExpansionResult expand_keyphrase_llm(std::string_view keyphrase, llm::Client& client,
                                     std::string_view prompt_template, std::size_t limit,
                                     int max_tokens = 1024);

/// The `k` vocabulary ngrams nearest to embed(keyphrase) in Euclidean
/// distance, excluding the seed; ties go to the smaller ngram.
std::vector<std::string> expand_keyphrase_embedding(std::string_view keyphrase,
                                                    std::span<const std::string> vocabulary,
                                                    embed::EmbeddingProvider& provider,
                                                    std::size_t k);

/// Memoizing LLM expander (safe for concurrent use).
class LlmExpander final : public KeyphraseExpander {
public:
  LlmExpander(std::shared_ptr<llm::Client> client, std::string prompt_template, std::size_t limit,
              int max_tokens = 1024);
  ExpansionResult expand(const std::string& keyphrase) override;

private:
  std::shared_ptr<llm::Client> client_;
  std::string template_;
  std::size_t limit_;
  int max_tokens_;
  std::mutex mutex_;
  std::map<std::string, ExpansionResult> memo_;
};

/// Nearest-neighbour expander over a fixed vocabulary; the vocabulary is
/// embedded once.
class EmbeddingExpander final : public KeyphraseExpander {
public:
  EmbeddingExpander(std::vector<std::string> vocabulary,
                    std::shared_ptr<embed::EmbeddingProvider> provider, std::size_t k);
  ExpansionResult expand(const std::string& keyphrase) override;

private:
  std::vector<std::string> vocabulary_;
  std::shared_ptr<embed::EmbeddingProvider> provider_;
  std::size_t k_;
  std::once_flag embedded_;
  RowMatrix table_;
};

struct SplitDisjunction {
  std::vector<std::string> keyphrases;  // seed first
  double impurity_decrease = 0;
  ExpansionStats stats;
};

/// Greedy screening: starting from [seed], each candidate is kept only if
/// it strictly raises the decrease. A final pass drops keyphrases whose
/// removal would not lower the decrease, so every retained non-seed
/// keyphrase is load-bearing.
SplitDisjunction screen_candidates(const TreeData& data, std::span<const std::uint32_t> weight,
                                   const std::string& seed,
                                   std::span<const std::string> candidates);

// --- model ----------------------------------------------------------------------

struct TreeNode {
  bool leaf = true;
  std::size_t n_samples = 0;
  // leaf
  std::vector<double> value;  // class distribution or {mean}
  // internal
  std::vector<std::string> keyphrases;
  double impurity_decrease = 0;
  ExpansionStats stats;
  std::size_t contains_child = 0;
  std::size_t absent_child = 0;
};

class AugTreeModel {
public:
  Task task = Task::Classification;
  std::vector<std::string> classes;
  text::NgramConfig ngram_config;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Class distribution or {response}.
  std::vector<double> predict(std::string_view document) const;
  std::vector<double> predict_tokens(std::span<const text::Token> tokens) const;

  std::size_t num_internal() const;
  std::size_t depth() const;

  /// Recomputes the per-node keyphrase token cache; call after editing nodes.
  void rebuild_matchers();

private:
  std::vector<std::vector<std::vector<text::Token>>> matchers_;
};

struct TreeFitStats {
  std::vector<ExpansionStats> per_split;
};

/// Recursive induction on the weighted training rows of `data`. With
/// ExpansionKind::None this is plain greedy CART.
AugTreeModel fit_augtree(const TreeData& data, std::span<const std::uint32_t> weight,
                         const TreeFitConfig& config, KeyphraseExpander* expander,
                         const std::vector<std::string>& classes);

/// Convenience: builds TreeData from the corpus training split.
AugTreeModel fit_augtree(const LabeledCorpus& corpus, const TreeFitConfig& config,
                         const text::Vocabulary& vocabulary, KeyphraseExpander* expander);

struct AugTreeEnsemble {
  std::vector<AugTreeModel> trees;
  std::size_t n_estimators = 0;
  std::uint64_t bootstrap_seed = 0;
  bool bootstrap = true;

  std::vector<double> predict(std::string_view document) const;
};

/// Bagging: tree t is fitted on a bootstrap resample (size of the training
/// split) drawn from Rng(seed, t). `bootstrap = false` fits every tree on the
/// full split.
AugTreeEnsemble fit_ensemble(const LabeledCorpus& corpus, const TreeFitConfig& config,
                             const text::Vocabulary& vocabulary, KeyphraseExpander* expander,
                             std::size_t n_estimators, std::uint64_t seed, bool bootstrap = true);

/// Bootstrap multiplicities for tree `index` over `n` rows.
std::vector<std::uint32_t> bootstrap_weights(std::size_t n, std::uint64_t seed, std::size_t index);

// --- persistence ----------------------------------------------------------------

std::string serialize_tree(const AugTreeModel& model);
AugTreeModel parse_tree(std::string_view json);
std::string serialize_ensemble(const AugTreeEnsemble& ensemble);
AugTreeEnsemble parse_ensemble(std::string_view json);

void save_tree(const AugTreeModel& model, const std::filesystem::path& path);
AugTreeModel load_tree(const std::filesystem::path& path);
void save_ensemble(const AugTreeEnsemble& ensemble, const std::filesystem::path& path);
AugTreeEnsemble load_ensemble(const std::filesystem::path& path);

}  // namespace aug::tree
