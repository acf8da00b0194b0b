#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "augimodels/baselines.hpp"
#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"
#include "planted.hpp"

using namespace aug;
using namespace aug::baselines;

namespace {

gam::RegularizationPlan one_lambda(double lambda, std::vector<int> orders = {1}) {
  gam::RegularizationPlan plan;
  plan.lambda_grid = {lambda};
  text::NgramConfig c;
  c.orders = std::move(orders);
  plan.order_candidates = {c};
  return plan;
}

double dense(const SparseDesign& x, int r, int c) { return x.coeff(r, c); }

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("idf") {
    CHECK(idf(7, 7) == 1.0);
    CHECK(idf(1, 1) == 1.0);
    CHECK(idf(5, 1) == doctest::Approx(std::log(3.0) + 1.0));
  }

  TEST_CASE("tf-idf on a hand corpus") {
    LabeledCorpus c;
    const std::vector<std::string> docs = {"a b", "a c", "a a d", "b c", "e"};
    for (std::size_t i = 0; i < docs.size(); ++i) c.add(docs[i], i % 2 ? "x" : "y");
    const auto m = fit_tfidf(c, one_lambda(1.0), LinkKind::Logit);
    REQUIRE(m.features == std::vector<std::string>{"a", "b", "c", "d", "e"});

    // df: a 3, b 2, c 2, d 1, e 1 over 5 documents
    const double ia = std::log(6.0 / 4.0) + 1, ib = std::log(6.0 / 3.0) + 1, id = std::log(6.0 / 2.0) + 1;
    CHECK(m.idf[0] == doctest::Approx(ia));
    CHECK(m.idf[1] == doctest::Approx(ib));
    CHECK(m.idf[2] == doctest::Approx(ib));
    CHECK(m.idf[3] == doctest::Approx(id));
    CHECK(m.idf[4] == doctest::Approx(id));

    const auto x = m.design(docs);
    // "a b": (ia, ib) / |(ia, ib)|
    const double n0 = std::sqrt(ia * ia + ib * ib);
    CHECK(dense(x, 0, 0) == doctest::Approx(ia / n0));
    CHECK(dense(x, 0, 1) == doctest::Approx(ib / n0));
    // "a a d": (2 ia, id) / norm
    const double n2 = std::sqrt(4 * ia * ia + id * id);
    CHECK(dense(x, 2, 0) == doctest::Approx(2 * ia / n2));
    CHECK(dense(x, 2, 3) == doctest::Approx(id / n2));
    CHECK(dense(x, 2, 1) == 0.0);
    // "e": a single term normalizes to 1
    CHECK(dense(x, 4, 4) == doctest::Approx(1.0));

    // single document: every idf is 1, rows are normalized counts
    LabeledCorpus single;
    single.add("p q q", "x");
    single.add("other", "y", Split::Test);
    const std::vector<std::string> one = {"p q q"};
    auto skeleton = fit_tfidf(c, one_lambda(1.0), LinkKind::Logit);
    skeleton.features = {"p", "q"};
    skeleton.idf = {1.0, 1.0};
    const auto y = skeleton.design(one);
    CHECK(dense(y, 0, 1) == doctest::Approx(2 * dense(y, 0, 0)));
    CHECK(dense(y, 0, 0) == doctest::Approx(1 / std::sqrt(5.0)));
  }

  TEST_CASE("a separating unigram gives perfect training accuracy") {
    LabeledCorpus c;
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
      const bool pos = i % 2 == 0;
      c.add(planted::make_doc(rng, pos ? "yes" : "no", 4), pos ? "p" : "n");
    }
    const auto m = fit_bag_of_ngrams(c, gam::RegularizationPlan{}, LinkKind::Logit);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(m.predict(c.documents[i]).predicted_class == c.labels[i]);
  }

  TEST_CASE("identical documents") {
    LabeledCorpus c;
    for (int i = 0; i < 6; ++i) c.add("same same", i % 2 ? "a" : "b");
    const auto m = fit_bag_of_ngrams(c, gam::RegularizationPlan{}, LinkKind::Logit);
    const auto p = m.predict("same same");
    CHECK(p.probabilities[0] == doctest::Approx(0.5).epsilon(1e-6));
    LabeledCorpus one;
    one.add("x", "a");
    one.add("y", "a");
    CHECK_THROWS_AS(fit_bag_of_ngrams(one, gam::RegularizationPlan{}, LinkKind::Logit), DegenerateLabels);
  }

  TEST_CASE("sparse fit matches a dense refit") {
    const auto corpus = planted::gam_synonym_corpus(12, 50, 0);
    const auto plan = one_lambda(0.3, {1, 2});
    const auto m = fit_bag_of_ngrams(corpus, plan, LinkKind::Logit);
    const Eigen::MatrixXd x = Eigen::MatrixXd(m.design(corpus.documents));
    const auto ref = solve::fit_logistic(x, corpus.labels, 2, 0.3, LinkKind::Logit);
    CHECK((ref.weights - m.weights).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(std::abs(ref.intercepts[0] - m.intercepts[0]) < 1e-5);

    LabeledCorpus reg;
    reg.task = Task::Regression;
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
      const bool hi = rng.below(2) == 1;
      reg.add(planted::make_doc(rng, hi ? "high" : "low", 3), hi ? 5.0 + rng.uniform() : rng.uniform());
    }
    const auto r = fit_bag_of_ngrams(reg, one_lambda(0.1), LinkKind::Identity);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y[i] = reg.responses[static_cast<std::size_t>(i)];
    const auto rr = solve::fit_ridge(Eigen::MatrixXd(r.design(reg.documents)), y, 0.1);
    CHECK((rr.weights.transpose() - r.weights).cwiseAbs().maxCoeff() < 1e-5);
  }

  TEST_CASE("dictionary view and fallback") {
    const auto corpus = planted::gam_synonym_corpus(1, 60, 10);
    const auto m = fit_bag_of_ngrams(corpus, one_lambda(1.0), LinkKind::Logit);
    const auto dict = to_dictionary(m);
    CHECK(dict.size() == m.features.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto a = m.predict(corpus.documents[i]);
      const auto b = gam::predict(dict, corpus.documents[i]);
      CHECK(a.scores[0] == doctest::Approx(b.scores[0]).epsilon(1e-12));
    }
    BagOfNgramsFallback fb(m);
    CHECK(fb.predict("good").scores == m.predict("good").scores);
  }

  TEST_CASE("interaction gap") {
    // labels depend on "good" alone
    LabeledCorpus additive;
    additive.task = Task::Regression;
    const std::vector<std::string> others = {"film", "plot", "cast", "song", "scene", "role"};
    for (const auto& o : others) {
      additive.add("good " + o, 3.0);
      additive.add("dull " + o, 0.0);
    }
    const auto plan = one_lambda(1e-6);
    const auto add_gaps = interaction_gap(additive, plan, LinkKind::Identity, 100);
    for (const auto& g : add_gaps)
      if (g.bigram.find("good") != std::string::npos) CHECK(g.gap < 1e-3);
    for (const auto& g : add_gaps) CHECK(g.bigram != "film good");  // never observed

    // "not good" flips the sign of "good"
    LabeledCorpus xr;
    Rng rng(6);
    for (int i = 0; i < 120; ++i) {
      const auto kind = rng.below(4);
      const std::string filler = planted::pick(rng, others);
      if (kind == 0) xr.add("good " + filler, "pos");
      if (kind == 1) xr.add("not good " + filler, "neg");
      if (kind == 2) xr.add("bad " + filler, "neg");
      if (kind == 3) xr.add("not bad " + filler, "pos");
    }
    const auto gaps = interaction_gap(xr, one_lambda(0.1), LinkKind::Logit, 3);
    REQUIRE(gaps.size() == 3);
    bool found = false;
    for (const auto& g : gaps) found |= g.bigram == "not good";
    CHECK(found);
    CHECK(gaps[0].gap >= gaps[1].gap);
  }
}
