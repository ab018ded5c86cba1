#pragma once

// Ordered multivariate monomial bases x^{k:l} and their Jacobians. These are
// the nonlinear feature maps shared by the lift, the reduced dynamics and
// the linearizations used by the controller.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/error.hpp"

namespace ssmr {

using Exponents = std::vector<int>;

/// Monomials of total degree in [min_order, max_order] over n variables,
/// graded-lexicographically ordered: by total degree ascending, then by
/// exponent tuple descending (x1^2 before x1*x2 before x2^2).
class MultiIndexBasis {
 public:
  MultiIndexBasis() = default;

  /// Adopts an explicit exponent list (e.g. read back from a model file) and
  /// validates it against the type invariants. max_order = min_order - 1
  /// denotes an empty basis.
  MultiIndexBasis(int n, int min_order, int max_order, std::vector<Exponents> exponents)
      : n_(n), min_order_(min_order), max_order_(max_order), exponents_(std::move(exponents)) {
    require(n_ >= 1, ErrorKind::InvalidArgument, "basis dimension must be >= 1");
    require(min_order_ >= 1 && min_order_ <= max_order_ + 1, ErrorKind::InvalidDegreeRange,
            "orders [" + std::to_string(min_order_) + ", " + std::to_string(max_order_) + "]");
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
      const auto& e = exponents_[j];
      require(static_cast<int>(e.size()) == n_, ErrorKind::DimensionMismatch,
              "exponent tuple of wrong length");
      int degree = 0;
      for (int v : e) {
        require(v >= 0, ErrorKind::InvalidArgument, "negative exponent");
        degree += v;
      }
      require(degree >= min_order_ && degree <= max_order_, ErrorKind::InvalidDegreeRange,
              "monomial degree outside basis range");
      if (j > 0)
        require(graded_lex_less(exponents_[j - 1], e), ErrorKind::InvalidArgument,
                "exponent list not strictly graded-lexicographic");
    }
  }

  int dim() const { return n_; }
  int min_order() const { return min_order_; }
  int max_order() const { return max_order_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(exponents_.size()); }
  bool empty() const { return exponents_.empty(); }
  const std::vector<Exponents>& exponents() const { return exponents_; }

  friend bool operator==(const MultiIndexBasis&, const MultiIndexBasis&) = default;

  /// Strict order used by the basis: total degree, then descending tuple.
  static bool graded_lex_less(const Exponents& a, const Exponents& b) {
    int da = 0, db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size());
    const Eigen::MatrixXd powers = power_table(x);
    Eigen::VectorXd out(size());
    for (Eigen::Index j = 0; j < size(); ++j) {
      double prod = 1.0;
      const auto& e = exponents_[j];
      for (int i = 0; i < n_; ++i) prod *= powers(i, e[i]);
      out(j) = prod;
    }
    return out;
  }

  /// Column-wise evaluation of a sample matrix (n x N) into (size x N).
  Eigen::MatrixXd evaluate_columns(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
    check_dim(xs.rows());
    Eigen::MatrixXd out(size(), xs.cols());
    for (Eigen::Index k = 0; k < xs.cols(); ++k) out.col(k) = evaluate(xs.col(k));
    return out;
  }

  /// Analytic Jacobian, one row per monomial, one column per variable.
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size());
    const Eigen::MatrixXd powers = power_table(x);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(size(), n_);
    for (Eigen::Index j = 0; j < size(); ++j) {
      const auto& e = exponents_[j];
      for (int i = 0; i < n_; ++i) {
        if (e[i] == 0) continue;
        double prod = e[i] * powers(i, e[i] - 1);
        for (int l = 0; l < n_; ++l)
          if (l != i) prod *= powers(l, e[l]);
        jac(j, i) = prod;
      }
    }
    return jac;
  }

 private:
  void check_dim(Eigen::Index got) const {
    require(got == n_, ErrorKind::DimensionMismatch,
            "expected " + std::to_string(n_) + " variables, got " + std::to_string(got));
  }

  // powers(i, k) = x_i^k for k <= max_order
  Eigen::MatrixXd power_table(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::MatrixXd powers(n_, std::max(max_order_, 0) + 1);
    for (int i = 0; i < n_; ++i) {
      powers(i, 0) = 1.0;
      for (int k = 1; k <= max_order_; ++k) powers(i, k) = powers(i, k - 1) * x(i);
    }
    return powers;
  }

  int n_ = 0;
  int min_order_ = 1;
  int max_order_ = 0;
  std::vector<Exponents> exponents_;
};

namespace detail {

inline void append_degree(int remaining, int var, Exponents& current, std::vector<Exponents>& out) {
  const int n = static_cast<int>(current.size());
  if (var == n - 1) {
    current[var] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[var] = e;
    append_degree(remaining - e, var + 1, current, out);
  }
  current[var] = 0;
}

}  // namespace detail

/// All monomials in n variables with total degree in [min_order, max_order].
inline MultiIndexBasis build_basis(int n, int min_order, int max_order) {
  require(n >= 1, ErrorKind::InvalidArgument, "basis dimension must be >= 1");
  require(min_order >= 1, ErrorKind::InvalidDegreeRange, "min_order must be >= 1");
  require(min_order <= max_order, ErrorKind::InvalidDegreeRange,
          "min_order " + std::to_string(min_order) + " > max_order " + std::to_string(max_order));
  std::vector<Exponents> exps;
  Exponents current(n, 0);
  for (int d = min_order; d <= max_order; ++d) detail::append_degree(d, 0, current, exps);
  return MultiIndexBasis(n, min_order, max_order, std::move(exps));
}

/// Nonlinear tail x^{2:order}; empty when order < 2 (linear-only model).
inline MultiIndexBasis nonlinear_basis(int n, int order) {
  if (order < 2) return MultiIndexBasis(n, 2, 1, {});
  return build_basis(n, 2, order);
}

/// Closed-form basis length C(n+max, n) - C(n+min-1, n).
inline long long basis_size(int n, int min_order, int max_order) {
  auto binom = [](long long a, long long b) {
    long long r = 1;
    for (long long i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  if (max_order < min_order) return 0;
  return binom(n + max_order, n) - binom(n + min_order - 1, n);
}

}  // namespace ssmr
