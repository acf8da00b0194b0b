#pragma once

// Linear baselines over sparse ngram features: raw counts or TF-IDF.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "augimodels/auggam.hpp"
#include "augimodels/corpus.hpp"
#include "augimodels/solvers.hpp"
#include "augimodels/textproc.hpp"

namespace aug::baselines {

enum class FeatureWeighting { Counts, TfIdf };
std::string_view to_string(FeatureWeighting weighting);

/// ln((1 + n) / (1 + df)) + 1
double idf(std::size_t num_documents, std::size_t doc_freq);

struct BagOfNgramsModel {
  FeatureWeighting weighting = FeatureWeighting::Counts;
  LinkKind link = LinkKind::Logit;
  text::NgramConfig ngram_config;
  std::vector<std::string> classes;
  std::vector<std::string> features;  // column ngrams, sorted bytewise
  std::vector<double> idf;            // per column; empty for counts
  Eigen::MatrixXd weights;            // outputs x features
  Eigen::VectorXd intercepts;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t feature_index(std::string_view ngram) const;

  /// One row per document. Ngrams outside `features` are ignored.
  SparseDesign design(std::span<const std::string> documents) const;
  gam::Prediction predict(std::string_view document) const;
};

/// Fits with cross-validation exactly as fit_auggam does (same folds, same
/// tie rules); the vocabulary and document frequencies come from the
/// training split.
BagOfNgramsModel fit_bag_of_ngrams(const LabeledCorpus& corpus, const gam::RegularizationPlan& plan,
                                   LinkKind link, FeatureWeighting weighting = FeatureWeighting::Counts,
                                   gam::FitReport* report = nullptr);

inline BagOfNgramsModel fit_tfidf(const LabeledCorpus& corpus, const gam::RegularizationPlan& plan,
                                  LinkKind link, gam::FitReport* report = nullptr) {
  return fit_bag_of_ngrams(corpus, plan, link, FeatureWeighting::TfIdf, report);
}

/// Per-column coefficients as a dictionary (for reporting). Only additive
/// for count features.
gam::CoefficientDictionary to_dictionary(const BagOfNgramsModel& model);

/// Serves a bag-of-ngrams model as the low-confidence fallback.
class BagOfNgramsFallback final : public gam::FallbackPredictor {
public:
  explicit BagOfNgramsFallback(const BagOfNgramsModel& model) : model_(model) {}
  gam::Prediction predict(std::string_view document) override { return model_.predict(document); }

private:
  const BagOfNgramsModel& model_;
};

struct InteractionGap {
  std::string bigram;
  double gap = 0;
};

/// Fits a unigram-only and a bigram-only count model with `plan`'s lambda
/// grid, then ranks every training bigram by
/// |coef(bigram) - (coef(w1) + coef(w2))| (largest output-wise gap),
/// descending with ties to the smaller bigram. Returns the top `k`.
std::vector<InteractionGap> interaction_gap(const LabeledCorpus& corpus,
                                            const gam::RegularizationPlan& plan, LinkKind link,
                                            std::size_t k);

}  // namespace aug::baselines
