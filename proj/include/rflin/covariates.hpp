#pragma once

#include <cstdint>
#include <vector>

#include "rflin/exploration.hpp"
#include "rflin/linear_mdp.hpp"

namespace rflin {

/// Smallest eigenvalue of a symmetric matrix. Throws std::invalid_argument
/// when the input is not symmetric within 1e-10 or has non-finite entries.
double eig_min(const Matrix& gram);

struct CovariateCertificate {
  Matrix pooled_gram;          // sum phi phi^T over collected data, no ridge
  double lambda_min = 0.0;
  double target = 0.0;         // epsilon / (4 gamma^2)
  double target_strong = 0.0;  // epsilon / gamma^2
  double epsilon_used = 0.0;
  double gamma_sq = 0.0;
  int m = 0;
  double lambda = 0.0;
  std::int64_t records = 0;
  double premise_value = -1.0; // oracle sup_pi lambda_min, -1 when not checked

  bool passed() const { return lambda_min >= target; }
  bool passed_strong() const { return lambda_min >= target_strong; }
};

struct CovariateOptions {
  double k_scale = 0.01;
  std::int64_t k_cap = 2000;
  bool check_premise = true;
  std::int64_t enumeration_budget = 100000;
};

/// m = ceil(log2(2 / eps)) and lambda = min(1, eps / (4 m gamma^2)).
int covariate_epochs(double epsilon);
double covariate_lambda(double epsilon, double gamma_sq);

struct CovariateResult {
  CoveringPartition partition;
  std::vector<TransitionRecord> data;
  CovariateCertificate certificate;
};

/// Runs lambda-regularized CoverTraj at step h with a uniform tolerance and
/// certifies lambda_min of the pooled covariates. With check_premise the
/// oracle must confirm sup_pi lambda_min(E[phi phi^T]) >= eps first,
/// otherwise ContractViolation is thrown before any episode is played.
CovariateResult collect_well_conditioned(Simulator& sim, int h, double epsilon, double gamma_sq,
                                         double delta, const RegMinConfig& regmin,
                                         const CovariateOptions& options, Rng& rng);

/// Gram matrix of the given records.
Matrix pooled_gram(const std::vector<TransitionRecord>& data, int d);

struct UnknownEpsilonResult {
  CovariateResult result;
  int rounds = 0;
  std::vector<double> epsilons_tried;
};

/// Starts at eps = 1/d and halves it until the certificate passes or
/// `max_rounds` runs are spent. The premise is not checked.
UnknownEpsilonResult collect_unknown_epsilon(Simulator& sim, int h, double gamma_sq, double delta,
                                             const RegMinConfig& regmin, CovariateOptions options,
                                             Rng& rng, int max_rounds = 8);

}  // namespace rflin
