#include "augimodels/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "augimodels/errors.hpp"
#include "augimodels/metrics.hpp"

namespace aug::baselines {

std::string_view to_string(FeatureWeighting weighting) {
  return weighting == FeatureWeighting::Counts ? "counts" : "tfidf";
}

double idf(std::size_t num_documents, std::size_t doc_freq) {
  return std::log((1.0 + static_cast<double>(num_documents)) / (1.0 + static_cast<double>(doc_freq))) + 1.0;
}

std::size_t BagOfNgramsModel::feature_index(std::string_view ngram) const {
  auto it = std::lower_bound(features.begin(), features.end(), ngram);
  if (it == features.end() || *it != ngram) return npos;
  return static_cast<std::size_t>(it - features.begin());
}

SparseDesign BagOfNgramsModel::design(std::span<const std::string> documents) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < documents.size(); ++r) {
    std::map<std::size_t, double> row;
    for (const auto& g : text::document_ngrams(documents[r], ngram_config)) {
      const auto j = feature_index(g);
      if (j != npos) row[j] += 1.0;
    }
    if (weighting == FeatureWeighting::TfIdf) {
      double norm = 0;
      for (auto& [j, v] : row) {
        v *= idf[j];
        norm += v * v;
      }
      norm = std::sqrt(norm);
      if (norm > 0)
        for (auto& [j, v] : row) v /= norm;
    }
    for (const auto& [j, v] : row)
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(j), v);
  }
  SparseDesign x(static_cast<Eigen::Index>(documents.size()), static_cast<Eigen::Index>(features.size()));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

gam::Prediction BagOfNgramsModel::predict(std::string_view document) const {
  const std::string doc(document);
  const SparseDesign x = design(std::span<const std::string>(&doc, 1));
  Eigen::VectorXd s = intercepts;
  for (SparseDesign::InnerIterator it(x, 0); it; ++it) s += it.value() * weights.col(it.col());
  return gam::apply_link(link, std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
}

namespace {

SparseDesign select_rows(const SparseDesign& x, std::span<const std::size_t> positions) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (SparseDesign::InnerIterator it(x, static_cast<Eigen::Index>(positions[i])); it; ++it)
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
  SparseDesign out(static_cast<Eigen::Index>(positions.size()), x.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

struct Fitted {
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercepts;
  bool converged = true;
  double gradient_norm = 0;
};

Fitted fit_design(const SparseDesign& x, const LabeledCorpus& corpus,
                  std::span<const std::size_t> corpus_rows, double lambda, LinkKind link) {
  Fitted f;
  if (link == LinkKind::Identity) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(corpus_rows.size()));
    for (std::size_t i = 0; i < corpus_rows.size(); ++i)
      y[static_cast<Eigen::Index>(i)] = corpus.responses[corpus_rows[i]];
    auto sol = solve::fit_ridge(x, y, lambda);
    f.weights = sol.weights.transpose();
    f.intercepts = Eigen::VectorXd::Constant(1, sol.intercept);
    return f;
  }
  std::vector<int> labels(corpus_rows.size());
  for (std::size_t i = 0; i < corpus_rows.size(); ++i) labels[i] = corpus.labels[corpus_rows[i]];
  auto sol = solve::fit_logistic(x, labels, corpus.num_classes(), lambda, link);
  f.weights = std::move(sol.weights);
  f.intercepts = std::move(sol.intercepts);
  f.converged = sol.converged;
  f.gradient_norm = sol.gradient_norm;
  return f;
}

double validation_metric(const Fitted& f, const SparseDesign& x, const LabeledCorpus& corpus,
                         std::span<const std::size_t> corpus_rows, LinkKind link) {
  std::vector<int> predicted, truth;
  std::vector<double> values, responses;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::VectorXd s = f.intercepts;
    for (SparseDesign::InnerIterator it(x, r); it; ++it) s += it.value() * f.weights.col(it.col());
    const auto p = gam::apply_link(link, std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
    const auto row = corpus_rows[static_cast<std::size_t>(r)];
    if (link == LinkKind::Identity) {
      values.push_back(p.value);
      responses.push_back(corpus.responses[row]);
    } else {
      predicted.push_back(p.predicted_class);
      truth.push_back(corpus.labels[row]);
    }
  }
  if (link != LinkKind::Identity) return metrics::accuracy(predicted, truth);
  try {
    return metrics::pearson(values, responses);
  } catch (const DegenerateInput&) {
    return 0.0;
  }
}

BagOfNgramsModel skeleton(const LabeledCorpus& corpus, const std::vector<std::string>& docs,
                          const text::NgramConfig& config, LinkKind link, FeatureWeighting weighting) {
  BagOfNgramsModel m;
  m.weighting = weighting;
  m.link = link;
  m.ngram_config = config;
  if (link != LinkKind::Identity) m.classes = corpus.classes;
  const auto vocab = text::build_vocabulary(docs, config);
  for (const auto& e : vocab) {
    m.features.push_back(e.ngram);
    if (weighting == FeatureWeighting::TfIdf) m.idf.push_back(idf(docs.size(), e.doc_freq));
  }
  return m;
}

}  // namespace

BagOfNgramsModel fit_bag_of_ngrams(const LabeledCorpus& corpus, const gam::RegularizationPlan& plan,
                                   LinkKind link, FeatureWeighting weighting, gam::FitReport* report) {
  plan.validate();
  corpus.validate();
  const auto train = corpus.indices(Split::Train);
  if (train.empty()) throw EmptyTrainingSplit("corpus has no training documents");
  gam::check_link(corpus, train, link);

  std::vector<std::string> docs;
  for (auto i : train) docs.push_back(corpus.documents[i]);

  std::vector<BagOfNgramsModel> candidates;
  std::vector<SparseDesign> designs;
  for (const auto& c : plan.order_candidates) {
    candidates.push_back(skeleton(corpus, docs, c.canonical(), link, weighting));
    designs.push_back(candidates.back().design(docs));
  }

  gam::FitReport local;
  gam::FitReport& rep = report ? *report : local;
  rep.cells.clear();

  std::size_t best_config = 0;
  double best_lambda = plan.lambda_grid.front();
  const bool single_cell = candidates.size() == 1 && plan.lambda_grid.size() == 1;
  const std::size_t folds = std::min(plan.folds, train.size());
  if (!single_cell && folds >= 2) {
    const auto fold_of = gam::assign_folds(corpus, train, folds, plan.seed);
    double best_metric = -std::numeric_limits<double>::infinity();
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      for (double lambda : plan.lambda_grid) {
        double total = 0;
        std::size_t used = 0;
        for (std::size_t f = 0; f < folds; ++f) {
          std::vector<std::size_t> fit_pos, fit_rows, val_pos, val_rows;
          for (std::size_t i = 0; i < train.size(); ++i) {
            if (fold_of[i] == f) {
              val_pos.push_back(i);
              val_rows.push_back(train[i]);
            } else {
              fit_pos.push_back(i);
              fit_rows.push_back(train[i]);
            }
          }
          if (val_pos.empty() || fit_pos.empty()) continue;
          const auto fitted = fit_design(select_rows(designs[ci], fit_pos), corpus, fit_rows, lambda, link);
          total += validation_metric(fitted, select_rows(designs[ci], val_pos), corpus, val_rows, link);
          ++used;
        }
        const double mean = used ? total / static_cast<double>(used) : 0.0;
        rep.cells.push_back({lambda, candidates[ci].ngram_config, mean});
        const auto& cfg = candidates[ci].ngram_config;
        const bool better =
            mean > best_metric ||
            (mean == best_metric &&
             (lambda > best_lambda ||
              (lambda == best_lambda && cfg.max_order() < candidates[best_config].ngram_config.max_order())));
        if (better) {
          best_metric = mean;
          best_lambda = lambda;
          best_config = ci;
        }
      }
    }
  }

  auto model = std::move(candidates[best_config]);
  auto fitted = fit_design(designs[best_config], corpus, train, best_lambda, link);
  model.weights = std::move(fitted.weights);
  model.intercepts = std::move(fitted.intercepts);
  rep.lambda = best_lambda;
  rep.config = model.ngram_config;
  rep.converged = fitted.converged;
  rep.gradient_norm = fitted.gradient_norm;
  return model;
}

gam::CoefficientDictionary to_dictionary(const BagOfNgramsModel& model) {
  gam::CoefficientDictionary dict;
  dict.link = model.link;
  dict.ngram_config = model.ngram_config;
  dict.classes = model.classes;
  dict.provider_fingerprint = std::string("bag-of-ngrams:") + std::string(to_string(model.weighting));
  dict.intercepts.assign(model.intercepts.data(), model.intercepts.data() + model.intercepts.size());
  for (std::size_t j = 0; j < model.features.size(); ++j) {
    const auto col = model.weights.col(static_cast<Eigen::Index>(j));
    dict.entries.emplace(model.features[j], std::vector<double>(col.data(), col.data() + col.size()));
  }
  return dict;
}

std::vector<InteractionGap> interaction_gap(const LabeledCorpus& corpus,
                                            const gam::RegularizationPlan& plan, LinkKind link,
                                            std::size_t k) {
  auto fit_orders = [&](int order) {
    auto p = plan;
    text::NgramConfig c = plan.order_candidates.empty() ? text::NgramConfig{} : plan.order_candidates.front();
    c.orders = {order};
    p.order_candidates = {c};
    return fit_bag_of_ngrams(corpus, p, link, FeatureWeighting::Counts);
  };
  const auto unigram = fit_orders(1);
  const auto bigram = fit_orders(2);

  std::vector<InteractionGap> gaps;
  for (std::size_t j = 0; j < bigram.features.size(); ++j) {
    const auto& g = bigram.features[j];
    const auto space = g.find(' ');
    const auto a = unigram.feature_index(std::string_view(g).substr(0, space));
    const auto b = unigram.feature_index(std::string_view(g).substr(space + 1));
    if (a == BagOfNgramsModel::npos || b == BagOfNgramsModel::npos) continue;
    double gap = 0;
    for (Eigen::Index o = 0; o < bigram.weights.rows(); ++o) {
      const double sum = unigram.weights(o, static_cast<Eigen::Index>(a)) + unigram.weights(o, static_cast<Eigen::Index>(b));
      gap = std::max(gap, std::abs(bigram.weights(o, static_cast<Eigen::Index>(j)) - sum));
    }
    gaps.push_back({g, gap});
  }
  std::stable_sort(gaps.begin(), gaps.end(), [](const InteractionGap& x, const InteractionGap& y) {
    if (x.gap != y.gap) return x.gap > y.gap;
    return x.bigram < y.bigram;
  });
  if (gaps.size() > k) gaps.resize(k);
  return gaps;
}

}  // namespace aug::baselines
