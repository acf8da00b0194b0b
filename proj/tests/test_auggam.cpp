#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "augimodels/auggam.hpp"
#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"
#include "augimodels/textproc.hpp"
#include "helpers.hpp"
#include "planted.hpp"

using namespace aug;
using namespace aug::gam;
using aug::embed::EmbeddingVector;
using aug::embed::StubProvider;

namespace {

text::NgramConfig orders(std::vector<int> o) {
  text::NgramConfig c;
  c.orders = std::move(o);
  return c;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Labels are the sign of a fixed direction dotted with each document's features.
LabeledCorpus direction_corpus(StubProvider& stub, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto dir = stub.vector_for("__dir__");
  auto c = planted::empty_binary();
  for (std::size_t i = 0; i < n; ++i) {
    const auto doc = planted::make_doc(rng, planted::pick(rng, planted::kFiller), 3);
    const auto f = featurize(doc, text::NgramConfig{}, stub);
    double s = 0;
    for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * dir[j];
    c.add(doc, s > 0 ? "positive" : "negative");
  }
  return c;
}

class ConstantFallback final : public FallbackPredictor {
public:
  Prediction predict(std::string_view) override {
    ++calls;
    const std::vector<double> s = {0.0};
    return apply_link(LinkKind::Logit, s);
  }
  int calls = 0;
};

class BrokenFallback final : public FallbackPredictor {
public:
  Prediction predict(std::string_view) override { throw std::runtime_error("down"); }
};

AugGamModel toy_model(std::size_t dim, LinkKind link = LinkKind::Logit) {
  AugGamModel m;
  m.link = link;
  m.classes = link == LinkKind::Identity ? std::vector<std::string>{} : std::vector<std::string>{"neg", "pos"};
  m.weights = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(dim));
  Rng rng(5);
  for (Eigen::Index j = 0; j < m.weights.cols(); ++j) m.weights(0, j) = rng.uniform() * 2 - 1;
  m.intercepts = Eigen::VectorXd::Constant(1, 0.25);
  return m;
}

}  // namespace

TEST_SUITE("auggam") {
  TEST_CASE("featurize") {
    StubProvider stub(6, 2);
    CHECK(featurize("", text::NgramConfig{}, stub) == EmbeddingVector(6, 0.0));
    CHECK(featurize("Good!", orders({1}), stub) == stub.embed("good"));

    const auto f = featurize("a b", text::NgramConfig{}, stub);
    const auto a = stub.embed("a"), b = stub.embed("b"), ab = stub.embed("a b");
    for (int i = 0; i < 6; ++i) CHECK(std::abs(f[i] - (a[i] + b[i] + ab[i])) <= 1e-15);

    const std::vector<std::string> docs = {"a b", "", "the film the film", "b a"};
    const auto m = featurize_documents(docs, text::NgramConfig{}, stub);
    for (std::size_t r = 0; r < docs.size(); ++r) {
      const auto one = featurize(docs[r], text::NgramConfig{}, stub);
      for (std::size_t j = 0; j < 6; ++j) CHECK(m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) == one[j]);
    }
  }

  TEST_CASE("fit recovers a planted direction") {
    StubProvider stub(16, 3);
    const auto corpus = direction_corpus(stub, 120, 8);
    RegularizationPlan plan;
    plan.lambda_grid = {1e-4};
    plan.order_candidates = {text::NgramConfig{}};
    const auto model = fit_auggam(corpus, plan, stub, LinkKind::Logit);
    std::size_t right = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      right += predict(model, corpus.documents[i], stub).predicted_class == corpus.labels[i];
    CHECK(right == corpus.size());
  }

  TEST_CASE("degenerate inputs") {
    StubProvider stub(4);
    LabeledCorpus one;
    one.add("a", "x");
    one.add("b", "x");
    CHECK_THROWS_AS(fit_auggam(one, RegularizationPlan{}, stub, LinkKind::Logit), DegenerateLabels);
    LabeledCorpus three;
    for (const char* l : {"x", "y", "z"}) three.add("doc", l);
    CHECK_THROWS_AS(fit_auggam(three, RegularizationPlan{}, stub, LinkKind::Logit), InvalidArgument);
    CHECK_THROWS_AS(fit_auggam(three, RegularizationPlan{}, stub, LinkKind::Identity), InvalidArgument);
    RegularizationPlan bad;
    bad.lambda_grid = {1.0, 0.1};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  }

  TEST_CASE("one lambda, one config equals a direct logistic fit") {
    StubProvider stub(8, 1);
    const auto corpus = planted::gam_synonym_corpus(3, 60, 0);
    RegularizationPlan plan;
    plan.lambda_grid = {0.5};
    plan.order_candidates = {orders({1})};
    const auto model = fit_auggam(corpus, plan, stub, LinkKind::Logit);
    const auto features = featurize_documents(corpus.documents, orders({1}), stub);
    const auto direct = solve::fit_logistic(features, corpus.labels, 2, 0.5, LinkKind::Logit);
    CHECK(model.weights == direct.weights);
    CHECK(model.intercepts == direct.intercepts);
  }

  TEST_CASE("cross-validation reports every cell and is reproducible") {
    StubProvider stub(8, 1);
    const auto corpus = planted::gam_synonym_corpus(4, 90, 0);
    RegularizationPlan plan;
    plan.order_candidates = {orders({1}), orders({1, 2})};
    plan.seed = 9;
    FitReport r1, r2;
    const auto m1 = fit_auggam(corpus, plan, stub, LinkKind::Logit, &r1);
    const auto m2 = fit_auggam(corpus, plan, stub, LinkKind::Logit, &r2);
    CHECK(r1.cells.size() == 10);
    CHECK(m1.weights == m2.weights);
    CHECK(r1.lambda == r2.lambda);
    double best = -1;
    for (const auto& c : r1.cells) best = std::max(best, c.mean_metric);
    bool found = false;
    for (const auto& c : r1.cells)
      found |= c.lambda == r1.lambda && c.config == r1.config && c.mean_metric == best;
    CHECK(found);
  }

  TEST_CASE("stratified folds") {
    LabeledCorpus c;
    for (int i = 0; i < 30; ++i) c.add("d", i < 10 ? "a" : "b");
    std::vector<std::size_t> rows(30);
    for (std::size_t i = 0; i < 30; ++i) rows[i] = i;
    const auto folds = assign_folds(c, rows, 5, 1);
    std::map<std::pair<std::size_t, int>, int> per;
    for (std::size_t i = 0; i < 30; ++i) per[{folds[i], c.labels[i]}]++;
    for (std::size_t f = 0; f < 5; ++f) {
      CHECK(per[{f, 0}] == 2);
      CHECK(per[{f, 1}] == 4);
    }
    CHECK(assign_folds(c, rows, 5, 1) == folds);
  }

  TEST_CASE("prediction edge cases") {
    StubProvider stub(5);
    const auto m = toy_model(5);
    const auto p = predict(m, "", stub);
    CHECK(p.scores[0] == 0.25);
    CHECK(p.probabilities[1] == doctest::Approx(sigmoid(0.25)));
    CHECK(p.predicted_class == 1);

    const auto soft = apply_link(LinkKind::Softmax, std::vector<double>{1, 2, 3});
    CHECK(soft.probabilities[0] + soft.probabilities[1] + soft.probabilities[2] == doctest::Approx(1.0));
    CHECK(soft.predicted_class == 2);
    CHECK(apply_link(LinkKind::Identity, std::vector<double>{4.5}).value == 4.5);
  }

  TEST_CASE("test-time orders give the restricted partial sum") {
    StubProvider stub(6, 4);
    auto m = toy_model(6);
    m.ngram_config = orders({1, 2});
    const std::string doc = "not very good";
    const auto restricted = predict_with_test_orders(m, doc, orders({1}), stub);
    double manual = 0.25;
    for (const char* w : {"not", "very", "good"}) {
      const auto v = stub.embed(w);
      for (int j = 0; j < 6; ++j) manual += m.weights(0, j) * v[j];
    }
    CHECK(restricted.scores[0] == doctest::Approx(manual).epsilon(1e-12));
    CHECK(predict_with_test_orders(m, doc, orders({1, 2}), stub).scores == predict(m, doc, stub).scores);
  }

  TEST_CASE("dictionary export, inference and unknown policies") {
    StubProvider stub(6, 4);
    const auto m = toy_model(6);
    const std::vector<std::string> grams = {"bad", "good", "good film"};
    const auto dict = export_dictionary(m, grams, stub);
    REQUIRE(dict.size() == 3);
    CHECK(infer_unseen_coefficient(m, "good", stub) == dict.entries.at("good"));

    auto zero = m;
    zero.weights.setZero();
    for (const auto& [g, v] : export_dictionary(zero, grams, stub).entries) CHECK(v[0] == 0.0);
    CHECK(infer_unseen_coefficient(zero, "whatever", stub)[0] == 0.0);

    const auto skip = predict(dict, "good plot");
    CHECK(skip.scores[0] == doctest::Approx(0.25 + dict.entries.at("good")[0]));
    CHECK_THROWS_AS(predict(dict, "good plot", {UnknownNgramPolicy::Strict}), UnknownNgramNoProvider);
    CHECK_THROWS_AS(predict(dict, "good plot", {UnknownNgramPolicy::Infer}), UnknownNgramNoProvider);
    const auto infer = predict(dict, "good plot", {UnknownNgramPolicy::Infer, &m, &stub});
    CHECK(infer.scores[0] == doctest::Approx(predict(m, "good plot", stub).scores[0]).epsilon(1e-12));
    CHECK(predict(dict, "").scores[0] == 0.25);
  }

  TEST_CASE("planted collision: phi(trigram) = -phi(good)") {
    auto base = std::make_shared<StubProvider>(6, 4);
    auto good = base->embed("good");
    auto neg = good;
    for (auto& x : neg) x = -x;
    embed::OverlayProvider overlay(base, {{"not very good", neg}});
    const auto m = toy_model(6);
    CHECK(infer_unseen_coefficient(m, "not very good", overlay)[0] ==
          -infer_unseen_coefficient(m, "good", overlay)[0]);
  }

  TEST_CASE("pruning") {
    StubProvider stub(6, 4);
    const auto m = toy_model(6);
    std::vector<std::string> grams;
    for (int i = 0; i < 20; ++i) grams.push_back("w" + std::to_string(i));
    const auto dict = export_dictionary(m, grams, stub);
    const auto full = prune(dict, 1.0);
    CHECK(full.entries == dict.entries);
    CHECK(prune(dict, 0.5).size() == 10);
    const auto top = prune(dict, 0.01);
    REQUIRE(top.size() == 1);
    double best = 0;
    for (const auto& [g, v] : dict.entries) best = std::max(best, std::abs(v[0]));
    CHECK(std::abs(top.entries.begin()->second[0]) == best);
    CHECK_THROWS_AS(prune(dict, 0.0), InvalidArgument);

    // ties go to the smaller ngram
    CoefficientDictionary ties = dict;
    ties.entries = {{"b", {1.0}}, {"a", {-1.0}}, {"c", {0.5}}};
    CHECK(prune(ties, 0.34).entries.begin()->first == "a");
  }

  TEST_CASE("hybrid routing") {
    ConstantFallback fb;
    const auto confident = apply_link(LinkKind::Logit, std::vector<double>{3.0});
    CHECK(route_hybrid(confident, fb, "x", {0.0}).route == Route::Gam);
    CHECK(route_hybrid(confident, fb, "x", {1.0 + 1e-9, true}).route == Route::Fallback);
    CHECK(route_hybrid(confident, fb, "x", {0.9}).route == Route::Gam);
    CHECK(route_hybrid(confident, fb, "x", {0.99}).route == Route::Fallback);
    CHECK(fb.calls == 2);
    BrokenFallback broken;
    CHECK_THROWS_AS(route_hybrid(confident, broken, "x", {0.99}), FallbackUnavailable);
    const auto reg = apply_link(LinkKind::Identity, std::vector<double>{1.0});
    CHECK_THROWS_AS(route_hybrid(reg, fb, "x", {0.5}), InvalidArgument);
  }

  TEST_CASE("model and dictionary persistence") {
    testutil::TempDir dir;
    StubProvider stub(6, 4);
    auto m = toy_model(6);
    m.provider_fingerprint = stub.fingerprint();
    save_model(m, dir / "m.bin");
    const auto back = load_model(dir / "m.bin");
    CHECK(back.classes == m.classes);
    CHECK(back.link == m.link);
    CHECK(back.provider_fingerprint == m.provider_fingerprint);
    CHECK((back.weights - m.weights).cwiseAbs().maxCoeff() < 1e-6);  // stored as f32
    CHECK(serialize_model(back) == testutil::slurp(dir / "m.bin"));
    CHECK_THROWS_AS(parse_model("garbage"), FormatError);

    const std::vector<std::string> grams = {"a", "b c", "\xC3\xA9t\xC3\xA9"};
    const auto dict = export_dictionary(m, grams, stub);
    save_dictionary(dict, dir / "d.tsv");
    const auto text = testutil::slurp(dir / "d.tsv");
    const auto parsed = load_dictionary(dir / "d.tsv");
    CHECK(parsed.entries == dict.entries);
    CHECK(parsed.intercepts == dict.intercepts);
    CHECK(serialize_dictionary(parsed) == text);
  }

  TEST_CASE("format_double round-trips") {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
      const double x = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(40)) - 20);
      CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
  }
}
