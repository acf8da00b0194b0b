#include "augimodels/auggam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "augimodels/errors.hpp"
#include "augimodels/metrics.hpp"
#include "augimodels/rng.hpp"

namespace aug::gam {

// --- model / link -----------------------------------------------------------

void AugGamModel::validate() const {
  if (weights.rows() != intercepts.size()) throw InvalidArgument("model output count mismatch");
  if (!weights.allFinite() || !intercepts.allFinite())
    throw InvalidArgument("model parameters must be finite");
  switch (link) {
    case LinkKind::Logit:
      if (classes.size() != 2 || weights.rows() != 1)
        throw InvalidArgument("logit model needs 2 classes and one output");
      break;
    case LinkKind::Softmax:
      if (classes.size() < 2 || static_cast<std::size_t>(weights.rows()) != classes.size())
        throw InvalidArgument("softmax model needs one output per class");
      break;
    case LinkKind::Identity:
      if (weights.rows() != 1) throw InvalidArgument("identity model needs one output");
      break;
  }
}

double Prediction::confidence() const {
  if (probabilities.empty()) return 1.0;
  return *std::max_element(probabilities.begin(), probabilities.end());
}

Prediction apply_link(LinkKind link, std::span<const double> scores) {
  Prediction p;
  p.scores.assign(scores.begin(), scores.end());
  switch (link) {
    case LinkKind::Identity:
      p.value = scores[0];
      break;
    case LinkKind::Logit: {
      const double z = scores[0];
      const double prob = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      p.probabilities = {1.0 - prob, prob};
      p.predicted_class = prob > 0.5 ? 1 : 0;
      p.value = p.probabilities[static_cast<std::size_t>(p.predicted_class)];
      break;
    }
    case LinkKind::Softmax: {
      const double m = *std::max_element(scores.begin(), scores.end());
      double sum = 0;
      p.probabilities.resize(scores.size());
      for (std::size_t c = 0; c < scores.size(); ++c) sum += p.probabilities[c] = std::exp(scores[c] - m);
      for (auto& x : p.probabilities) x /= sum;
      p.predicted_class = 0;
      for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[static_cast<std::size_t>(p.predicted_class)])
          p.predicted_class = static_cast<int>(c);
      p.value = p.probabilities[static_cast<std::size_t>(p.predicted_class)];
      break;
    }
  }
  return p;
}

void RegularizationPlan::validate() const {
  if (lambda_grid.empty()) throw InvalidArgument("lambda grid must be non-empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0) || !std::isfinite(lambda_grid[i]))
      throw InvalidArgument("lambda values must be positive and finite");
    if (i && !(lambda_grid[i] > lambda_grid[i - 1]))
      throw InvalidArgument("lambda grid must be strictly ascending");
  }
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  if (order_candidates.empty()) throw InvalidArgument("need at least one ngram config");
  for (const auto& c : order_candidates) (void)c.canonical();
}

// --- featurization ----------------------------------------------------------

embed::EmbeddingVector featurize(std::string_view document, const text::NgramConfig& config,
                                 embed::EmbeddingProvider& provider) {
  const auto grams = text::document_ngrams(document, config);
  return embed::sum_embeddings(grams, provider);
}

RowMatrix featurize_documents(std::span<const std::string> documents,
                              const text::NgramConfig& config,
                              embed::EmbeddingProvider& provider) {
  std::vector<std::vector<std::string>> per_doc(documents.size());
  std::vector<std::string> unique;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    per_doc[i] = text::document_ngrams(documents[i], config);
    std::sort(per_doc[i].begin(), per_doc[i].end());
    unique.insert(unique.end(), per_doc[i].begin(), per_doc[i].end());
  }
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  kernels::CsrIndex rows;
  std::vector<std::uint32_t> ids;
  for (const auto& grams : per_doc) {
    ids.clear();
    for (const auto& g : grams)
      ids.push_back(static_cast<std::uint32_t>(
          std::lower_bound(unique.begin(), unique.end(), g) - unique.begin()));
    rows.push_row(ids);
  }
  const RowMatrix table = unique.empty() ? RowMatrix(0, static_cast<Eigen::Index>(provider.dim()))
                                         : embed::embed_matrix(unique, provider);
  RowMatrix out;
  kernels::omp::gather_sum(rows, table, out);
  return out;
}

// --- fitting ----------------------------------------------------------------

void check_link(const LabeledCorpus& corpus, std::span<const std::size_t> rows, LinkKind link) {
  if (link == LinkKind::Identity) {
    if (corpus.task != Task::Regression) throw InvalidArgument("identity link needs a regression corpus");
    return;
  }
  if (corpus.task != Task::Classification)
    throw InvalidArgument("logit/softmax links need a classification corpus");
  std::vector<bool> present(corpus.num_classes(), false);
  std::size_t distinct = 0;
  for (auto r : rows) {
    const auto l = static_cast<std::size_t>(corpus.labels[r]);
    if (!present[l]) ++distinct;
    present[l] = true;
  }
  if (distinct < 2) throw DegenerateLabels("training split has fewer than two classes");
  if (link == LinkKind::Logit && corpus.num_classes() != 2)
    throw InvalidArgument("logit link needs exactly 2 classes; use softmax");
}

namespace {

struct Fitted {
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercepts;
  bool converged = true;
  double gradient_norm = 0;
};

Fitted fit_rows(const RowMatrix& features, const LabeledCorpus& corpus,
                std::span<const std::size_t> feature_rows, std::span<const std::size_t> corpus_rows,
                double lambda, LinkKind link) {
  RowMatrix x(static_cast<Eigen::Index>(feature_rows.size()), features.cols());
  for (std::size_t i = 0; i < feature_rows.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(feature_rows[i]));
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

}  // namespace

std::vector<std::size_t> assign_folds(const LabeledCorpus& corpus, std::span<const std::size_t> rows,
                                      std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> fold(rows.size());
  Rng rng(seed);
  std::size_t next = 0;
  auto deal = [&](std::vector<std::size_t>& members) {
    rng.shuffle(std::span(members));
    for (auto m : members) fold[m] = next++ % folds;
  };
  if (corpus.task == Task::Classification) {
    for (std::size_t c = 0; c < corpus.num_classes(); ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (static_cast<std::size_t>(corpus.labels[rows[i]]) == c) members.push_back(i);
      deal(members);
    }
  } else {
    std::vector<std::size_t> members(rows.size());
    std::iota(members.begin(), members.end(), 0);
    deal(members);
  }
  return fold;
}

namespace {

double validation_metric(const Fitted& f, const RowMatrix& features,
                         std::span<const std::size_t> feature_rows, const LabeledCorpus& corpus,
                         std::span<const std::size_t> corpus_rows, LinkKind link) {
  std::vector<int> predicted, truth;
  std::vector<double> values, responses;
  for (std::size_t i = 0; i < feature_rows.size(); ++i) {
    const Eigen::VectorXd s =
        f.weights * features.row(static_cast<Eigen::Index>(feature_rows[i])).transpose() + f.intercepts;
    const auto p = apply_link(link, std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
    if (link == LinkKind::Identity) {
      values.push_back(p.value);
      responses.push_back(corpus.responses[corpus_rows[i]]);
    } else {
      predicted.push_back(p.predicted_class);
      truth.push_back(corpus.labels[corpus_rows[i]]);
    }
  }
  if (link != LinkKind::Identity) return metrics::accuracy(predicted, truth);
  try {
    return metrics::pearson(values, responses);
  } catch (const DegenerateInput&) {
    return 0.0;
  }
}

}  // namespace

AugGamModel fit_on_features(const RowMatrix& features, const LabeledCorpus& corpus,
                            std::span<const std::size_t> rows, double lambda, LinkKind link,
                            const text::NgramConfig& config, const std::string& fingerprint,
                            FitReport* report) {
  check_link(corpus, rows, link);
  std::vector<std::size_t> positions(rows.size());
  std::iota(positions.begin(), positions.end(), 0);
  auto fitted = fit_rows(features, corpus, positions, rows, lambda, link);

  AugGamModel model;
  model.link = link;
  model.ngram_config = config;
  model.provider_fingerprint = fingerprint;
  if (link != LinkKind::Identity) model.classes = corpus.classes;
  model.weights = std::move(fitted.weights);
  model.intercepts = std::move(fitted.intercepts);
  if (report) {
    report->lambda = lambda;
    report->config = config;
    report->converged = fitted.converged;
    report->gradient_norm = fitted.gradient_norm;
  }
  return model;
}

AugGamModel fit_auggam(const LabeledCorpus& corpus, const RegularizationPlan& plan,
                       embed::EmbeddingProvider& provider, LinkKind link, FitReport* report) {
  plan.validate();
  corpus.validate();
  const auto train = corpus.indices(Split::Train);
  if (train.empty()) throw EmptyTrainingSplit("corpus has no training documents");
  check_link(corpus, train, link);

  std::vector<std::string> docs;
  docs.reserve(train.size());
  for (auto i : train) docs.push_back(corpus.documents[i]);

  std::vector<text::NgramConfig> configs;
  for (const auto& c : plan.order_candidates) configs.push_back(c.canonical());

  FitReport local;
  FitReport& rep = report ? *report : local;
  rep.cells.clear();

  std::size_t best_config = 0;
  double best_lambda = plan.lambda_grid.front();
  std::vector<RowMatrix> features(configs.size());

  const bool single_cell = configs.size() == 1 && plan.lambda_grid.size() == 1;
  const std::size_t folds = std::min(plan.folds, train.size());
  if (!single_cell && folds >= 2) {
    const auto fold_of = assign_folds(corpus, train, folds, plan.seed);
    double best_metric = -std::numeric_limits<double>::infinity();
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      features[ci] = featurize_documents(docs, configs[ci], provider);
      for (double lambda : plan.lambda_grid) {
        double total = 0;
        std::size_t used = 0;
        for (std::size_t f = 0; f < folds; ++f) {
          std::vector<std::size_t> fit_pos, fit_rows_c, val_pos, val_rows_c;
          for (std::size_t i = 0; i < train.size(); ++i) {
            if (fold_of[i] == f) {
              val_pos.push_back(i);
              val_rows_c.push_back(train[i]);
            } else {
              fit_pos.push_back(i);
              fit_rows_c.push_back(train[i]);
            }
          }
          if (val_pos.empty() || fit_pos.empty()) continue;
          const auto fitted = fit_rows(features[ci], corpus, fit_pos, fit_rows_c, lambda, link);
          total += validation_metric(fitted, features[ci], val_pos, corpus, val_rows_c, link);
          ++used;
        }
        const double mean = used ? total / static_cast<double>(used) : 0.0;
        rep.cells.push_back({lambda, configs[ci], mean});
        const bool better =
            mean > best_metric ||
            (mean == best_metric &&
             (lambda > best_lambda ||
              (lambda == best_lambda && configs[ci].max_order() < configs[best_config].max_order())));
        if (better) {
          best_metric = mean;
          best_lambda = lambda;
          best_config = ci;
        }
      }
    }
  }
  if (features[best_config].size() == 0 && !docs.empty())
    features[best_config] = featurize_documents(docs, configs[best_config], provider);

  auto cells = std::move(rep.cells);
  auto model = fit_on_features(features[best_config], corpus, train, best_lambda, link,
                               configs[best_config], provider.fingerprint(), &rep);
  rep.cells = std::move(cells);
  return model;
}

// --- prediction -------------------------------------------------------------

namespace {

Prediction score_embedding(const AugGamModel& model, const embed::EmbeddingVector& features) {
  if (features.size() != model.dim()) throw DimensionMismatch("feature length does not match model");
  const Eigen::Map<const Eigen::VectorXd> x(features.data(), static_cast<Eigen::Index>(features.size()));
  const Eigen::VectorXd s = model.weights * x + model.intercepts;
  return apply_link(model.link, std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
}

}  // namespace

Prediction predict(const AugGamModel& model, std::string_view document,
                   embed::EmbeddingProvider& provider) {
  return score_embedding(model, featurize(document, model.ngram_config, provider));
}

Prediction predict_with_test_orders(const AugGamModel& model, std::string_view document,
                                    const text::NgramConfig& test_orders,
                                    embed::EmbeddingProvider& provider) {
  auto config = model.ngram_config;
  config.orders = test_orders.canonical().orders;
  return score_embedding(model, featurize(document, config, provider));
}

UnknownNgramPolicy parse_unknown_policy(std::string_view name) {
  if (name == "strict") return UnknownNgramPolicy::Strict;
  if (name == "skip") return UnknownNgramPolicy::Skip;
  if (name == "infer") return UnknownNgramPolicy::Infer;
  throw InvalidArgument("unknown ngram policy: " + std::string(name));
}

Prediction predict(const CoefficientDictionary& dictionary, std::string_view document,
                   const DictionaryInference& inference) {
  auto grams = text::document_ngrams(document, dictionary.ngram_config);
  std::sort(grams.begin(), grams.end());
  std::vector<double> scores = dictionary.intercepts;
  for (const auto& g : grams) {
    auto it = dictionary.entries.find(g);
    if (it != dictionary.entries.end()) {
      for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += it->second[k];
      continue;
    }
    switch (inference.policy) {
      case UnknownNgramPolicy::Skip:
        break;
      case UnknownNgramPolicy::Strict:
        throw UnknownNgramNoProvider("ngram '" + g + "' is not in the dictionary");
      case UnknownNgramPolicy::Infer: {
        if (!inference.model || !inference.provider)
          throw UnknownNgramNoProvider("inferring '" + g + "' needs a model and a provider");
        const auto c = infer_unseen_coefficient(*inference.model, g, *inference.provider);
        for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += c[k];
        break;
      }
    }
  }
  return apply_link(dictionary.link, scores);
}

// --- dictionary -------------------------------------------------------------

CoefficientDictionary export_dictionary(const AugGamModel& model,
                                        std::span<const std::string> ngrams,
                                        embed::EmbeddingProvider& provider) {
  model.validate();
  if (provider.dim() != model.dim()) throw DimensionMismatch("provider dim does not match model");
  CoefficientDictionary dict;
  dict.link = model.link;
  dict.ngram_config = model.ngram_config;
  dict.classes = model.classes;
  dict.provider_fingerprint = model.provider_fingerprint;
  dict.intercepts.assign(model.intercepts.data(), model.intercepts.data() + model.intercepts.size());
  if (ngrams.empty()) return dict;

  const RowMatrix table = embed::embed_matrix(ngrams, provider);
  const auto k = static_cast<Eigen::Index>(model.num_outputs());
  std::vector<std::vector<double>> values(ngrams.size(), std::vector<double>(static_cast<std::size_t>(k)));
  const auto n = static_cast<std::ptrdiff_t>(ngrams.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c)
      values[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] =
          model.weights.row(c).dot(table.row(i));
  for (std::size_t i = 0; i < ngrams.size(); ++i) dict.entries.emplace(ngrams[i], std::move(values[i]));
  return dict;
}

CoefficientDictionary export_dictionary(const AugGamModel& model,
                                        const text::Vocabulary& vocabulary,
                                        embed::EmbeddingProvider& provider) {
  if (vocabulary.empty()) throw InvalidArgument("cannot export a dictionary for an empty vocabulary");
  const auto ngrams = vocabulary.ngrams();
  return export_dictionary(model, ngrams, provider);
}

std::vector<double> infer_unseen_coefficient(const AugGamModel& model, std::string_view ngram,
                                             embed::EmbeddingProvider& provider) {
  const auto v = provider.embed(ngram);
  if (v.size() != model.dim()) throw DimensionMismatch("provider dim does not match model");
  const Eigen::Map<const Eigen::RowVectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  std::vector<double> out(model.num_outputs());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = model.weights.row(static_cast<Eigen::Index>(c)).dot(x);
  return out;
}

CoefficientDictionary prune(const CoefficientDictionary& dictionary, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw InvalidArgument("keep_fraction must lie in (0, 1]");
  if (dictionary.entries.empty()) throw InvalidArgument("cannot prune an empty dictionary");
  struct Ranked {
    double magnitude;
    const std::string* ngram;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(dictionary.size());
  for (const auto& [g, v] : dictionary.entries) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    ranked.push_back({m, &g});
  }
  const auto keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(dictionary.size()) - 1e-9));
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return *a.ngram < *b.ngram;
  });
  CoefficientDictionary out = dictionary;
  out.entries.clear();
  for (std::size_t i = 0; i < std::min(keep, ranked.size()); ++i)
    out.entries.emplace(*ranked[i].ngram, dictionary.entries.at(*ranked[i].ngram));
  return out;
}

// --- hybrid routing -----------------------------------------------------------

std::string_view to_string(Route route) { return route == Route::Gam ? "gam" : "fallback"; }

RoutedPrediction route_hybrid(const Prediction& gam, FallbackPredictor& fallback,
                              std::string_view document, const RoutingOptions& options) {
  if (gam.probabilities.empty()) throw InvalidArgument("hybrid routing needs a classification model");
  const double tau = std::clamp(options.threshold, 0.0, 1.0);
  RoutedPrediction out;
  out.confidence = gam.confidence();
  const bool keep = options.strict ? out.confidence > tau : out.confidence >= tau;
  if (keep) {
    out.prediction = gam;
    out.route = Route::Gam;
    return out;
  }
  try {
    out.prediction = fallback.predict(document);
  } catch (const std::exception& e) {
    throw FallbackUnavailable(e.what());
  }
  out.route = Route::Fallback;
  return out;
}

RoutedPrediction route_hybrid(const AugGamModel& model, FallbackPredictor& fallback,
                              std::string_view document, const RoutingOptions& options,
                              embed::EmbeddingProvider& provider) {
  return route_hybrid(predict(model, document, provider), fallback, document, options);
}

RoutedPrediction route_hybrid(const CoefficientDictionary& dictionary,
                              FallbackPredictor& fallback, std::string_view document,
                              const RoutingOptions& options,
                              const DictionaryInference& inference) {
  return route_hybrid(predict(dictionary, document, inference), fallback, document, options);
}

}  // namespace aug::gam
