#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "ssmr/error.hpp"
#include "ssmr/polyfeatures.hpp"

namespace ssmr {

struct RegressionOptions {
  double ridge = 0.0;
  double max_condition = 1e12;
};

struct LeastSquaresFit {
  Eigen::MatrixXd coefficients;  // targets x features
  double gram_condition = 0.0;   // of the column-normalized feature Gram matrix
  double residual = 0.0;         // Frobenius norm of targets - coefficients * features
};

/// min_C ||T - C F||_F^2 + ridge ||C||_F^2 for features F (k x N) and targets
/// T (p x N). Without ridge, solved by Householder QR of the column-scaled
/// design; the conditioning gate uses the scaled Gram matrix.
inline LeastSquaresFit least_squares(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                     const Eigen::Ref<const Eigen::MatrixXd>& targets,
                                     const RegressionOptions& opt = {}) {
  require(features.cols() == targets.cols(), ErrorKind::DimensionMismatch, "feature and target column counts differ");
  require(opt.ridge >= 0.0, ErrorKind::InvalidArgument, "ridge must be non-negative");
  const Eigen::Index k = features.rows();
  LeastSquaresFit fit;
  if (k == 0) {
    fit.coefficients = Eigen::MatrixXd::Zero(targets.rows(), 0);
    fit.residual = targets.norm();
    return fit;
  }
  Eigen::VectorXd scale = features.rowwise().norm();
  for (Eigen::Index i = 0; i < k; ++i)
    if (scale(i) == 0.0) scale(i) = 1.0;
  const Eigen::MatrixXd design = scale.cwiseInverse().asDiagonal() * features;  // k x N
  if (opt.ridge == 0.0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design.transpose());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
    const double cond_r = sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : std::numeric_limits<double>::infinity();
    fit.gram_condition = cond_r * cond_r;
    require(fit.gram_condition <= opt.max_condition, ErrorKind::IllConditionedRegression,
            "feature Gram condition number " + std::to_string(fit.gram_condition));
    const Eigen::MatrixXd scaled = qr.solve(targets.transpose()).transpose();  // p x k
    fit.coefficients = scaled * scale.cwiseInverse().asDiagonal();
  } else {
    const Eigen::MatrixXd gram = features * features.transpose();
    const Eigen::MatrixXd scaled_gram = design * design.transpose();
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled_gram).eigenvalues();
    fit.gram_condition = ev(0) > 0.0 ? ev(k - 1) / ev(0) : std::numeric_limits<double>::infinity();
    Eigen::MatrixXd lhs = gram;
    lhs.diagonal().array() += opt.ridge;
    fit.coefficients = lhs.ldlt().solve(features * targets.transpose()).transpose();
  }
  fit.residual = (targets - fit.coefficients * features).norm();
  return fit;
}

/// Stacks [x; x^{2:order}] column-wise.
inline Eigen::MatrixXd linear_and_nonlinear_features(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                                     const MultiIndexBasis& basis) {
  Eigen::MatrixXd f(xs.rows() + basis.size(), xs.cols());
  f.topRows(xs.rows()) = xs;
  if (!basis.empty()) f.bottomRows(basis.size()) = basis.evaluate_columns(xs);
  return f;
}

}  // namespace ssmr
