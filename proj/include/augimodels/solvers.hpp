#pragma once

// l2-regularized linear solvers with an unpenalized intercept.
//
// Ridge:    min ||y - (Xw + b)||^2 + lambda ||w||^2, closed form on centered data.
// Logistic: min sum_i CE_i(Xw + b) + lambda ||W||_F^2, gradient descent with
//           Barzilai-Borwein trial steps and Armijo backtracking from zero.
//
// Both are templates over the design matrix so the bag-of-ngrams baseline
// can pass a sparse design; they are instantiated for Eigen::MatrixXd,
// aug::RowMatrix and SparseDesign.

#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "augimodels/kernels.hpp"

namespace aug {

using SparseDesign = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class LinkKind { Logit, Softmax, Identity };

std::string_view to_string(LinkKind link);
LinkKind parse_link(std::string_view name);

namespace solve {

struct RidgeSolution {
  Eigen::VectorXd weights;
  double intercept = 0;
};

/// Solves the d x d primal system when d <= n, the n x n dual otherwise.
/// Throws SingularSystem if the regularized system cannot be solved.
template <class Matrix>
RidgeSolution fit_ridge(const Matrix& features, const Eigen::VectorXd& targets, double lambda);

struct LogisticOptions {
  double tolerance = 1e-6;  // on the gradient infinity-norm
  int max_iterations = 1000;
};

/// Weights are (outputs x d): one row for logit, one row per class for
/// softmax. Not converging within max_iterations is reported through
/// `converged`/`gradient_norm`, never thrown.
struct LogisticSolution {
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercepts;
  int iterations = 0;
  double gradient_norm = 0;
  bool converged = false;
};

template <class Matrix>
LogisticSolution fit_logistic(const Matrix& features, std::span<const int> labels,
                              std::size_t num_classes, double lambda, LinkKind link,
                              const LogisticOptions& options = {});

struct ObjectiveEval {
  double value = 0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_intercepts;
};

/// Regularized cross-entropy and its gradient at (weights, intercepts).
template <class Matrix>
ObjectiveEval logistic_objective(const Matrix& features, std::span<const int> labels,
                                 std::size_t num_classes, double lambda, LinkKind link,
                                 const Eigen::MatrixXd& weights,
                                 const Eigen::VectorXd& intercepts);

}  // namespace solve
}  // namespace aug
