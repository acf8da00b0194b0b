#pragma once

// Grid sweeps over model kinds and their knobs. Every cell fits on the
// training split, evaluates on the test split (validation when there is no
// test split), writes its artifacts to its own directory and contributes
// one row to results.tsv.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "augimodels/augtree.hpp"
#include "augimodels/corpus.hpp"
#include "augimodels/embed.hpp"
#include "augimodels/llmclient.hpp"
#include "augimodels/solvers.hpp"
#include "augimodels/textproc.hpp"

namespace aug::experiment {

enum class ModelKind { Gam, Tree, Ensemble, BagOfNgrams, TfIdf };
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct DataSpec {
  CorpusFormat format = CorpusFormat::Tsv;
  Task task = Task::Classification;
  // Either per-split files ...
  std::filesystem::path train, validation, test;
  // ... or one file split at random.
  std::filesystem::path path;
  double train_fraction = 0.8;
  double validation_fraction = 0.0;
  std::uint64_t split_seed = 0;

  LabeledCorpus load() const;
};

struct LlmSpec {
  std::string endpoint;
  std::optional<std::filesystem::path> replay_dir;
  llm::Mode mode = llm::Mode::Replay;
};

struct ExperimentSpec {
  std::string name = "sweep";
  DataSpec data;
  std::uint64_t seed = 0;
  std::optional<embed::EmbeddingProviderSpec> embedding;
  std::optional<LlmSpec> llm;

  // grid
  std::vector<ModelKind> models{ModelKind::Gam};
  std::vector<std::vector<int>> orders{{1, 2}};
  std::vector<double> lambdas;  // empty: cross-validate over lambda_grid
  std::vector<int> max_depths{8};
  std::vector<std::size_t> n_estimators{10};
  std::vector<tree::ExpansionKind> expansions{tree::ExpansionKind::None};
  std::vector<double> thresholds;  // empty: no hybrid routing
  std::vector<double> keep_fractions{1.0};

  // fixed knobs
  std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::size_t folds = 3;
  std::optional<LinkKind> link;  // default from the task and class count
  std::size_t min_samples_split = 2;
  int expansion_seeds = 1;
  std::string prompt_template{tree::kDefaultPromptTemplate};
  std::size_t candidate_limit = 100;

  /// Relative paths inside `json` resolve against `base_dir`.
  static ExperimentSpec parse(std::string_view json, const std::filesystem::path& base_dir = {});
  static ExperimentSpec load(const std::filesystem::path& path);
  void validate() const;
};

struct Cell {
  std::size_t index = 0;
  ModelKind model = ModelKind::Gam;
  text::NgramConfig config;
  std::optional<double> lambda;
  std::optional<int> max_depth;
  std::optional<std::size_t> n_estimators;
  std::optional<tree::ExpansionKind> expansion;
  std::optional<double> threshold;
  std::optional<double> keep_fraction;
  /// Derived from the experiment seed and the settings that affect fitting, so
  /// cells differing only in threshold or keep_fraction share a fit.
  std::uint64_t seed = 0;

  std::string directory_name() const;
};

/// Cells in deterministic order: models, then orders, then each model's
/// own dimensions.
std::vector<Cell> expand_grid(const ExperimentSpec& spec);

struct CellResult {
  Cell cell;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<LabeledCorpus> corpus;                   // instead of spec.data
  std::shared_ptr<embed::EmbeddingProvider> provider;  // instead of spec.embedding
  std::shared_ptr<llm::Client> client;                 // instead of spec.llm
  bool parallel = true;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::string table;
  std::size_t failures = 0;
};

/// Columns of results.tsv, in order.
const std::vector<std::string>& result_columns();

/// Renders the results table; absent values are "NA".
std::string results_table(const std::vector<CellResult>& cells);

/// Runs every cell (concurrently when allowed), writes
/// <out>/cells/<cell>/... and <out>/results.tsv. Cell failures are recorded,
/// not thrown.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options);

}  // namespace aug::experiment
