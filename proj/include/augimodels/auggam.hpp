#pragma once

// Additive text model: score = intercept + W * sum_i embed(ngram_i), passed
// through a logit, softmax or identity link. After fitting, each ngram's
// contribution W * embed(ngram) can be exported as a plain dictionary so that
// inference needs no embedding provider.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "augimodels/corpus.hpp"
#include "augimodels/embed.hpp"
#include "augimodels/solvers.hpp"
#include "augimodels/textproc.hpp"

namespace aug::gam {

struct AugGamModel {
  LinkKind link = LinkKind::Logit;
  text::NgramConfig ngram_config;
  std::string provider_fingerprint;
  std::vector<std::string> classes;  // empty for regression
  Eigen::MatrixXd weights;           // outputs x dim
  Eigen::VectorXd intercepts;        // outputs

  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  std::size_t num_outputs() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  void validate() const;
};

/// Scores before and after the link.
struct Prediction {
  std::vector<double> scores;         // one per output
  std::vector<double> probabilities;  // per class; empty for regression
  int predicted_class = -1;           // -1 for regression
  double value = 0;                   // response (identity) or top-class probability

  double confidence() const;          // max class probability
};

Prediction apply_link(LinkKind link, std::span<const double> scores);

struct RegularizationPlan {
  std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::size_t folds = 3;
  std::vector<text::NgramConfig> order_candidates{text::NgramConfig{}};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sum of the embeddings of every ngram in `document` (with multiplicity).
embed::EmbeddingVector featurize(std::string_view document, const text::NgramConfig& config,
                                 embed::EmbeddingProvider& provider);

/// One featurize() row per document; each distinct ngram is embedded once.
/// Bit-identical to calling featurize() per document.
RowMatrix featurize_documents(std::span<const std::string> documents,
                              const text::NgramConfig& config,
                              embed::EmbeddingProvider& provider);

struct CvCell {
  double lambda = 0;
  text::NgramConfig config;
  double mean_metric = 0;
};

struct FitReport {
  double lambda = 0;
  text::NgramConfig config;
  std::vector<CvCell> cells;
  bool converged = true;
  double gradient_norm = 0;
};

/// Throws DegenerateLabels/InvalidArgument unless `link` suits the task and
/// the labels of `rows`.
void check_link(const LabeledCorpus& corpus, std::span<const std::size_t> rows, LinkKind link);

/// Seeded fold index for each position of `rows`; stratified by class for
/// classification corpora.
std::vector<std::size_t> assign_folds(const LabeledCorpus& corpus,
                                      std::span<const std::size_t> rows, std::size_t folds,
                                      std::uint64_t seed);

/// Cross-validates (lambda, ngram config) on the training split, then refits
/// on the full training split. Validation metric: accuracy for
/// classification, Pearson r for regression. Ties prefer the larger lambda,
/// then the smaller maximum order.
AugGamModel fit_auggam(const LabeledCorpus& corpus, const RegularizationPlan& plan,
                       embed::EmbeddingProvider& provider, LinkKind link,
                       FitReport* report = nullptr);

/// Fits on an explicit feature matrix (no cross-validation).
AugGamModel fit_on_features(const RowMatrix& features, const LabeledCorpus& corpus,
                            std::span<const std::size_t> rows, double lambda, LinkKind link,
                            const text::NgramConfig& config, const std::string& fingerprint,
                            FitReport* report = nullptr);

Prediction predict(const AugGamModel& model, std::string_view document,
                   embed::EmbeddingProvider& provider);

Prediction predict_with_test_orders(const AugGamModel& model, std::string_view document,
                                    const text::NgramConfig& test_orders,
                                    embed::EmbeddingProvider& provider);

/// Ngram -> per-output contribution W * embed(ngram).
struct CoefficientDictionary {
  std::map<std::string, std::vector<double>> entries;
  std::vector<double> intercepts;
  LinkKind link = LinkKind::Logit;
  text::NgramConfig ngram_config;
  std::vector<std::string> classes;
  std::string provider_fingerprint;

  std::size_t num_outputs() const noexcept { return intercepts.size(); }
  std::size_t size() const noexcept { return entries.size(); }
};

enum class UnknownNgramPolicy { Strict, Skip, Infer };
UnknownNgramPolicy parse_unknown_policy(std::string_view name);

/// How dictionary-backed prediction handles ngrams missing from the
/// dictionary. `Infer` needs both a model and a provider.
struct DictionaryInference {
  UnknownNgramPolicy policy = UnknownNgramPolicy::Skip;
  const AugGamModel* model = nullptr;
  embed::EmbeddingProvider* provider = nullptr;
};

Prediction predict(const CoefficientDictionary& dictionary, std::string_view document,
                   const DictionaryInference& inference = {});

CoefficientDictionary export_dictionary(const AugGamModel& model,
                                        const text::Vocabulary& vocabulary,
                                        embed::EmbeddingProvider& provider);
CoefficientDictionary export_dictionary(const AugGamModel& model,
                                        std::span<const std::string> ngrams,
                                        embed::EmbeddingProvider& provider);

/// W * embed(ngram), the same formula as dictionary entries.
std::vector<double> infer_unseen_coefficient(const AugGamModel& model, std::string_view ngram,
                                             embed::EmbeddingProvider& provider);

/// Keeps the ceil(keep_fraction * N) entries with the largest max-absolute
/// contribution; ties go to the lexicographically smaller ngram.
CoefficientDictionary prune(const CoefficientDictionary& dictionary, double keep_fraction);

enum class Route { Gam, Fallback };
std::string_view to_string(Route route);

/// Predictor consulted for low-confidence inputs.
class FallbackPredictor {
public:
  virtual ~FallbackPredictor() = default;
  virtual Prediction predict(std::string_view document) = 0;
};

struct RoutingOptions {
  double threshold = 0.5;  // clamped to [0, 1]
  bool strict = false;     // confidence > threshold instead of >=
};

struct RoutedPrediction {
  Prediction prediction;
  Route route = Route::Gam;
  double confidence = 0;
};

/// Keeps `gam` when its top-class probability clears the threshold,
/// otherwise defers to `fallback` (whose failures surface as FallbackUnavailable).
RoutedPrediction route_hybrid(const Prediction& gam, FallbackPredictor& fallback,
                              std::string_view document, const RoutingOptions& options);
RoutedPrediction route_hybrid(const AugGamModel& model, FallbackPredictor& fallback,
                              std::string_view document, const RoutingOptions& options,
                              embed::EmbeddingProvider& provider);
RoutedPrediction route_hybrid(const CoefficientDictionary& dictionary,
                              FallbackPredictor& fallback, std::string_view document,
                              const RoutingOptions& options,
                              const DictionaryInference& inference = {});

// --- persistence ------------------------------------------------------------

/// Binary model file ("AUGM"). Weights and intercepts are stored as f32.
void save_model(const AugGamModel& model, const std::filesystem::path& path);
AugGamModel load_model(const std::filesystem::path& path);
std::string serialize_model(const AugGamModel& model);
AugGamModel parse_model(std::string_view bytes);

/// Text dictionary: a JSON metadata line, then "ngram<TAB>v1[<TAB>v2...]"
/// rows sorted bytewise, values in shortest round-trip decimal.
std::string serialize_dictionary(const CoefficientDictionary& dictionary);
CoefficientDictionary parse_dictionary(std::string_view text);
void save_dictionary(const CoefficientDictionary& dictionary, const std::filesystem::path& path);
CoefficientDictionary load_dictionary(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

}  // namespace aug::gam
