#include "augimodels/solvers.hpp"

#include <cmath>
#include <type_traits>

#include "augimodels/errors.hpp"

namespace aug {

std::string_view to_string(LinkKind link) {
  switch (link) {
    case LinkKind::Logit: return "logit";
    case LinkKind::Softmax: return "softmax";
    case LinkKind::Identity: return "identity";
  }
  return "identity";
}

LinkKind parse_link(std::string_view name) {
  if (name == "logit") return LinkKind::Logit;
  if (name == "softmax") return LinkKind::Softmax;
  if (name == "identity") return LinkKind::Identity;
  throw InvalidArgument("unknown link: " + std::string(name));
}

namespace solve {
namespace {

template <class Matrix>
Eigen::MatrixXd to_dense(const Matrix& m) {
  if constexpr (std::is_same_v<Matrix, SparseDesign>)
    return Eigen::MatrixXd(m);
  else
    return m;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

template <class Matrix>
RidgeSolution fit_ridge(const Matrix& features, const Eigen::VectorXd& targets, double lambda) {
  const auto n = features.rows();
  const auto d = features.cols();
  if (n < 1) throw InvalidArgument("ridge needs at least one sample");
  if (targets.size() != n) throw InvalidArgument("ridge target length mismatch");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw InvalidArgument("ridge lambda must be >= 0");

  Eigen::MatrixXd xc = to_dense(features);
  const Eigen::RowVectorXd means = xc.colwise().mean();
  xc.rowwise() -= means;
  const double y_mean = targets.mean();
  const Eigen::VectorXd yc = targets.array() - y_mean;

  RidgeSolution sol;
  if (d == 0) {
    sol.weights = Eigen::VectorXd::Zero(0);
    sol.intercept = y_mean;
    return sol;
  }
  if (d <= n) {
    Eigen::MatrixXd system = xc.transpose() * xc;
    system.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("primal ridge system");
    sol.weights = ldlt.solve(xc.transpose() * yc);
  } else {
    Eigen::MatrixXd system = xc * xc.transpose();
    system.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("dual ridge system");
    sol.weights = xc.transpose() * ldlt.solve(yc);
  }
  if (!sol.weights.allFinite()) throw SingularSystem("non-finite ridge solution");
  sol.intercept = y_mean - means.dot(sol.weights);
  return sol;
}

template <class Matrix>
ObjectiveEval logistic_objective(const Matrix& x, std::span<const int> labels,
                                 std::size_t num_classes, double lambda, LinkKind link,
                                 const Eigen::MatrixXd& weights,
                                 const Eigen::VectorXd& intercepts) {
  const auto n = x.rows();
  ObjectiveEval out;
  if (link == LinkKind::Logit) {
    Eigen::VectorXd z = x * weights.row(0).transpose();
    z.array() += intercepts[0];
    Eigen::VectorXd residual(n);
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
      loss += softplus(z[i]) - y * z[i];
      residual[i] = sigmoid(z[i]) - y;
    }
    out.value = loss + lambda * weights.squaredNorm();
    out.grad_weights = (x.transpose() * residual).transpose();
    out.grad_weights += 2.0 * lambda * weights;
    out.grad_intercepts = Eigen::VectorXd::Constant(1, residual.sum());
    return out;
  }

  const auto k = static_cast<Eigen::Index>(num_classes);
  Eigen::MatrixXd z = x * weights.transpose();
  z.rowwise() += intercepts.transpose();
  Eigen::MatrixXd residual(n, k);
  double loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = z.row(i).maxCoeff();
    double sum = 0;
    for (Eigen::Index c = 0; c < k; ++c) sum += std::exp(z(i, c) - m);
    const double lse = m + std::log(sum);
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    loss += lse - z(i, y);
    for (Eigen::Index c = 0; c < k; ++c) residual(i, c) = std::exp(z(i, c) - lse);
    residual(i, y) -= 1.0;
  }
  out.value = loss + lambda * weights.squaredNorm();
  out.grad_weights = (x.transpose() * residual).transpose();
  out.grad_weights += 2.0 * lambda * weights;
  out.grad_intercepts = residual.colwise().sum().transpose();
  return out;
}

template <class Matrix>
LogisticSolution fit_logistic(const Matrix& x, std::span<const int> labels,
                              std::size_t num_classes, double lambda, LinkKind link,
                              const LogisticOptions& options) {
  if (link == LinkKind::Identity) throw InvalidArgument("fit_logistic needs a logit or softmax link");
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw InvalidArgument("logistic label length mismatch");
  if (link == LinkKind::Logit && num_classes != 2)
    throw InvalidArgument("logit link requires exactly 2 classes");
  if (num_classes < 2) throw DegenerateLabels("need at least two classes");
  if (!(lambda >= 0)) throw InvalidArgument("logistic lambda must be >= 0");

  const Eigen::Index outputs = link == LinkKind::Logit ? 1 : static_cast<Eigen::Index>(num_classes);
  const Eigen::Index d = x.cols();

  LogisticSolution sol;
  sol.weights = Eigen::MatrixXd::Zero(outputs, d);
  sol.intercepts = Eigen::VectorXd::Zero(outputs);

  auto grad_norm = [](const ObjectiveEval& e) {
    double g = e.grad_intercepts.size() ? e.grad_intercepts.cwiseAbs().maxCoeff() : 0.0;
    if (e.grad_weights.size()) g = std::max(g, e.grad_weights.cwiseAbs().maxCoeff());
    return g;
  };
  auto eval = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    return logistic_objective(x, labels, num_classes, lambda, link, w, b);
  };

  ObjectiveEval cur = eval(sol.weights, sol.intercepts);
  double step = 1.0 / std::max<double>(1.0, static_cast<double>(x.rows()));
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;

  for (int it = 0; it < options.max_iterations; ++it) {
    sol.gradient_norm = grad_norm(cur);
    if (sol.gradient_norm <= options.tolerance) {
      sol.converged = true;
      return sol;
    }
    const double g_sq = cur.grad_weights.squaredNorm() + cur.grad_intercepts.squaredNorm();

    Eigen::MatrixXd w_new;
    Eigen::VectorXd b_new;
    ObjectiveEval next;
    bool accepted = false;
    double t = step;
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      w_new = sol.weights - t * cur.grad_weights;
      b_new = sol.intercepts - t * cur.grad_intercepts;
      next = eval(w_new, b_new);
      if (std::isfinite(next.value) && next.value <= cur.value - kArmijo * t * g_sq) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no representable decrease left

    // Barzilai-Borwein trial step for the next iteration.
    const double s_dot_s = (w_new - sol.weights).squaredNorm() + (b_new - sol.intercepts).squaredNorm();
    const double s_dot_y =
        ((w_new - sol.weights).array() * (next.grad_weights - cur.grad_weights).array()).sum() +
        (b_new - sol.intercepts).dot(next.grad_intercepts - cur.grad_intercepts);
    step = s_dot_y > 0 ? s_dot_s / s_dot_y : 2.0 * t;

    sol.weights = std::move(w_new);
    sol.intercepts = std::move(b_new);
    cur = std::move(next);
    sol.iterations = it + 1;
  }
  sol.gradient_norm = grad_norm(cur);
  sol.converged = sol.gradient_norm <= options.tolerance;
  return sol;
}

#define AUG_INSTANTIATE(M)                                                                      \
  template RidgeSolution fit_ridge<M>(const M&, const Eigen::VectorXd&, double);                \
  template LogisticSolution fit_logistic<M>(const M&, std::span<const int>, std::size_t, double, \
                                            LinkKind, const LogisticOptions&);                  \
  template ObjectiveEval logistic_objective<M>(const M&, std::span<const int>, std::size_t,     \
                                               double, LinkKind, const Eigen::MatrixXd&,        \
                                               const Eigen::VectorXd&);

AUG_INSTANTIATE(Eigen::MatrixXd)
AUG_INSTANTIATE(RowMatrix)
AUG_INSTANTIATE(SparseDesign)

#undef AUG_INSTANTIATE

}  // namespace solve
}  // namespace aug
