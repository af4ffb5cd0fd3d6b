#include "rflin/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "rflin/errors.hpp"
#include "rflin/oracle.hpp"

namespace rflin {

double eig_min(const Matrix& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw std::invalid_argument("eig_min: need a square matrix");
  if (!gram.allFinite()) throw std::invalid_argument("eig_min: non-finite entry");
  const double asym = (gram - gram.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw std::invalid_argument(fmt::format("eig_min: not symmetric (max |A - A^T| = {:.3g})", asym));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eig_min: eigensolver failed");
  return eig.eigenvalues()(0);
}

int covariate_epochs(double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("covariate_epochs: epsilon must be > 0");
  return std::max(1, static_cast<int>(std::ceil(std::log2(2.0 / epsilon))));
}

double covariate_lambda(double epsilon, double gamma_sq) {
  return std::min(1.0, epsilon / (4.0 * covariate_epochs(epsilon) * gamma_sq));
}

Matrix pooled_gram(const std::vector<TransitionRecord>& data, int d) {
  Matrix g = Matrix::Zero(d, d);
  for (const auto& rec : data) g.noalias() += rec.feature * rec.feature.transpose();
  return g;
}

CovariateResult collect_well_conditioned(Simulator& sim, int h, double epsilon, double gamma_sq,
                                         double delta, const RegMinConfig& regmin,
                                         const CovariateOptions& options, Rng& rng) {
  const LinearMDP& mdp = sim.mdp();
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("collect_well_conditioned: epsilon must lie in (0,1]");
  if (!(gamma_sq > 0.0 && gamma_sq <= 1.0)) throw std::invalid_argument("collect_well_conditioned: gamma_sq must lie in (0,1]");

  double premise = -1.0;
  if (options.check_premise) {
    premise = best_mixture_min_eig(mdp, h, options.enumeration_budget).value;
    if (premise < epsilon)
      throw ContractViolation(fmt::format(
          "collect_well_conditioned: sup_pi lambda_min(E[phi phi^T]) = {:.6g} < epsilon = {:.6g} at step {}",
          premise, epsilon, h));
  }

  const int m = covariate_epochs(epsilon);
  const double lambda = covariate_lambda(epsilon, gamma_sq);
  ToleranceSchedule schedule{std::vector<double>(m, gamma_sq), options.k_scale, options.k_cap, lambda};

  CovariateResult out{cover_traj(sim, h, delta, schedule, regmin, rng), {}, {}};
  for (const auto& level : out.partition.levels)
    out.data.insert(out.data.end(), level.data.begin(), level.data.end());

  auto& cert = out.certificate;
  cert.pooled_gram = pooled_gram(out.data, mdp.dim());
  cert.lambda_min = std::max(0.0, eig_min(cert.pooled_gram));
  cert.target = epsilon / (4.0 * gamma_sq);
  cert.target_strong = epsilon / gamma_sq;
  cert.epsilon_used = epsilon;
  cert.gamma_sq = gamma_sq;
  cert.m = m;
  cert.lambda = lambda;
  cert.records = static_cast<std::int64_t>(out.data.size());
  cert.premise_value = premise;
  return out;
}

UnknownEpsilonResult collect_unknown_epsilon(Simulator& sim, int h, double gamma_sq, double delta,
                                             const RegMinConfig& regmin, CovariateOptions options,
                                             Rng& rng, int max_rounds) {
  if (max_rounds < 1) throw std::invalid_argument("collect_unknown_epsilon: max_rounds must be >= 1");
  options.check_premise = false;
  double epsilon = 1.0 / sim.mdp().dim();
  UnknownEpsilonResult out;
  for (int round = 0; round < max_rounds; ++round) {
    out.epsilons_tried.push_back(epsilon);
    out.rounds = round + 1;
    Rng child = rng.split(static_cast<std::uint64_t>(round));
    out.result = collect_well_conditioned(sim, h, epsilon, gamma_sq, delta, regmin, options, child);
    if (out.result.certificate.passed()) break;
    epsilon /= 2.0;
  }
  return out;
}

}  // namespace rflin
