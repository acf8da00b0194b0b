#include <doctest.h>

#include <cmath>
#include <vector>

#include "augimodels/errors.hpp"
#include "augimodels/rng.hpp"
#include "augimodels/solvers.hpp"
#include "oracles.hpp"

using namespace aug;
using namespace aug::solve;

TEST_SUITE("solvers") {
  TEST_CASE("ridge limits") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    auto s = fit_ridge(x, y, 1e12);
    CHECK(s.weights.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(s.intercept == doctest::Approx(2.0));

    Rng rng(3);
    Eigen::MatrixXd r(10, 4);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform();
    s = fit_ridge(r, Eigen::VectorXd::Constant(10, 7.5), 0.1);
    CHECK(s.weights.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.intercept == doctest::Approx(7.5));
    CHECK_THROWS_AS(fit_ridge(r, Eigen::VectorXd::Constant(10, 1.0), -1.0), InvalidArgument);
  }

  TEST_CASE("ridge matches gradient descent, primal and dual") {
    Rng rng(17);
    for (const auto& [n, d] : {std::pair{20, 5}, std::pair{6, 12}}) {
      const auto inst = oracle::random_regression(static_cast<std::size_t>(n), static_cast<std::size_t>(d), rng);
      const auto gd = oracle::ridge_gradient_descent(inst.x, inst.y, 0.1);
      Eigen::MatrixXd x(n, d);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        y[i] = inst.y[i];
        for (int j = 0; j < d; ++j) x(i, j) = inst.x[i][j];
      }
      const auto s = fit_ridge(x, y, 0.1);
      double diff = std::abs(s.intercept - gd.back());
      for (int j = 0; j < d; ++j) diff = std::max(diff, std::abs(s.weights[j] - gd[j]));
      CHECK(diff < 1e-6);
    }
  }

  TEST_CASE("logistic symmetric zero features") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
    const std::vector<int> labels = {0, 1, 0, 1};
    const auto s = fit_logistic(x, labels, 2, 1.0, LinkKind::Logit);
    CHECK(s.converged);
    CHECK(std::abs(s.weights(0, 0)) < 1e-9);
    CHECK(std::abs(s.intercepts[0]) < 1e-9);
  }

  TEST_CASE("logistic 1-D separable data matches a refined grid search") {
    const std::vector<double> xs = {-2, -1.5, -0.5, 0.3, 1, 2.5};
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    Eigen::MatrixXd x(6, 1);
    for (int i = 0; i < 6; ++i) x(i, 0) = xs[i];
    LogisticOptions opt;
    opt.tolerance = 1e-10;
    opt.max_iterations = 20000;
    const auto s = fit_logistic(x, labels, 2, 1.0, LinkKind::Logit, opt);
    const auto [w, b] = oracle::logistic_grid_search(xs, labels, 1.0);
    CHECK(std::abs(s.weights(0, 0) - w) < 1e-4);
    CHECK(std::abs(s.intercepts[0] - b) < 1e-4);
  }

  TEST_CASE("logistic gradient matches central finite differences") {
    Rng rng(23);
    for (int inst = 0; inst < 10; ++inst) {
      const bool softmax = inst % 2 == 1;
      const std::size_t k = softmax ? 3 : 2;
      const Eigen::Index n = 30, d = 4;
      Eigen::MatrixXd x(n, d);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform() * 2 - 1;
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(rng.below(k));
      const auto link = softmax ? LinkKind::Softmax : LinkKind::Logit;
      const auto sol = fit_logistic(x, labels, k, 0.05, link);
      const auto at = logistic_objective(x, labels, k, 0.05, link, sol.weights, sol.intercepts);
      const double h = 1e-5;
      double err = 0;
      for (Eigen::Index r = 0; r < sol.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < d; ++c) {
          auto wp = sol.weights, wm = sol.weights;
          wp(r, c) += h;
          wm(r, c) -= h;
          const double fd = (logistic_objective(x, labels, k, 0.05, link, wp, sol.intercepts).value -
                             logistic_objective(x, labels, k, 0.05, link, wm, sol.intercepts).value) /
                            (2 * h);
          err = std::max(err, std::abs(fd - at.grad_weights(r, c)));
        }
      for (Eigen::Index r = 0; r < sol.intercepts.size(); ++r) {
        auto bp = sol.intercepts, bm = sol.intercepts;
        bp[r] += h;
        bm[r] -= h;
        const double fd = (logistic_objective(x, labels, k, 0.05, link, sol.weights, bp).value -
                           logistic_objective(x, labels, k, 0.05, link, sol.weights, bm).value) /
                          (2 * h);
        err = std::max(err, std::abs(fd - at.grad_intercepts[r]));
      }
      CHECK(err < 1e-4);
      CHECK(at.grad_weights.cwiseAbs().maxCoeff() < 1e-5);
    }
  }

  TEST_CASE("sparse and dense designs give the same fit") {
    Rng rng(31);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(40, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (rng.below(3) == 0) x.data()[i] = static_cast<double>(1 + rng.below(3));
    std::vector<int> labels(40);
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    const SparseDesign sp = x.sparseView();
    const auto a = fit_logistic(x, labels, 2, 0.3, LinkKind::Logit);
    const auto b = fit_logistic(sp, labels, 2, 0.3, LinkKind::Logit);
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-9);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y[i] = labels[i];
    CHECK((fit_ridge(x, y, 0.3).weights - fit_ridge(sp, y, 0.3).weights).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("non-convergence is reported, not thrown") {
    Eigen::MatrixXd x(4, 1);
    x << -1, -0.5, 0.5, 1;
    const std::vector<int> labels = {0, 0, 1, 1};
    LogisticOptions opt;
    opt.max_iterations = 1;
    const auto s = fit_logistic(x, labels, 2, 0.0, LinkKind::Logit, opt);
    CHECK_FALSE(s.converged);
    CHECK(s.iterations == 1);
  }

  TEST_CASE("link names") {
    CHECK(parse_link("softmax") == LinkKind::Softmax);
    CHECK(to_string(LinkKind::Identity) == "identity");
    CHECK_THROWS_AS(parse_link("probit"), InvalidArgument);
  }
}
