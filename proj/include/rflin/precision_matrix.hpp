#pragma once

#include <vector>

#include "rflin/linear_mdp.hpp"

namespace rflin {

/// Lambda = lambda I + sum phi phi^T together with its inverse.
///
/// The inverse is maintained by Sherman-Morrison rank-one updates and
/// recomputed from scratch every kRefreshInterval updates.
class PrecisionMatrix {
 public:
  static constexpr int kRefreshInterval = 512;

  PrecisionMatrix(int dim, double lambda);

  int dim() const { return static_cast<int>(mat_.rows()); }
  double lambda() const { return lambda_; }
  const Matrix& mat() const { return mat_; }
  const Matrix& inv() const { return inv_; }
  long count() const { return count_; }
  /// log det(Lambda), tracked through the rank-one updates.
  double logdet() const { return logdet_; }

  /// Adds phi phi^T. Requires ||phi|| <= 1 + 1e-9.
  void update(const Vector& phi);
  /// Adds a precomputed sum of `n` outer products in one step.
  void add_gram(const Matrix& gram, long n);
  /// Recomputes inv and logdet from mat.
  void refresh();

  /// phi^T Lambda^{-1} phi, never negative.
  double quad_form(const Vector& phi) const;
  /// sqrt(v^T Lambda^{-1} v).
  double self_normalized_stat(const Vector& v) const;

 private:
  double lambda_;
  Matrix mat_;
  Matrix inv_;
  long count_ = 0;
  double logdet_ = 0.0;
  int since_refresh_ = 0;
};

/// phi^T inv phi for a frozen inverse snapshot, clamped at 0.
double quad_form(const Matrix& inv, const Vector& phi);

struct EllipticPotential {
  double lhs = 0.0;
  double bound = 0.0;
  bool ok = true;
};

/// lhs = sum_t min(1, ||phi_t||^2 in V_{t-1}^{-1}), V_0 = lambda I;
/// bound = 2 d log(1 + T / (d lambda)). ok allows 1e-9 of float noise.
EllipticPotential elliptic_potential_check(const std::vector<Vector>& phis, double lambda);

}  // namespace rflin
