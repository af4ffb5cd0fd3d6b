#include "rflin/precision_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rflin/errors.hpp"

namespace rflin {

PrecisionMatrix::PrecisionMatrix(int dim, double lambda) : lambda_(lambda) {
  if (dim < 1) throw std::invalid_argument("PrecisionMatrix: dim must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("PrecisionMatrix: lambda must be > 0");
  mat_ = lambda * Matrix::Identity(dim, dim);
  inv_ = (1.0 / lambda) * Matrix::Identity(dim, dim);
  logdet_ = dim * std::log(lambda);
}

void PrecisionMatrix::update(const Vector& phi) {
  if (phi.size() != mat_.rows()) throw std::invalid_argument("PrecisionMatrix::update: dimension mismatch");
  if (phi.norm() > 1.0 + 1e-9) throw ContractViolation("PrecisionMatrix::update: ||phi|| > 1");
  mat_.noalias() += phi * phi.transpose();
  ++count_;
  const Vector u = inv_ * phi;
  const double denom = 1.0 + phi.dot(u);
  if (++since_refresh_ >= kRefreshInterval) {
    refresh();
    return;
  }
  logdet_ += std::log(denom);
  inv_.noalias() -= (u * u.transpose()) / denom;
}

void PrecisionMatrix::add_gram(const Matrix& gram, long n) {
  if (gram.rows() != mat_.rows() || gram.cols() != mat_.cols())
    throw std::invalid_argument("PrecisionMatrix::add_gram: dimension mismatch");
  mat_ += gram;
  count_ += n;
  refresh();
}

void PrecisionMatrix::refresh() {
  Eigen::LLT<Matrix> llt(mat_);
  logdet_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  inv_ = llt.solve(Matrix::Identity(mat_.rows(), mat_.cols()));
  inv_ = 0.5 * (inv_ + inv_.transpose()).eval();
  since_refresh_ = 0;
}

double PrecisionMatrix::quad_form(const Vector& phi) const { return rflin::quad_form(inv_, phi); }

double PrecisionMatrix::self_normalized_stat(const Vector& v) const {
  return std::sqrt(rflin::quad_form(inv_, v));
}

double quad_form(const Matrix& inv, const Vector& phi) {
  if (phi.size() != inv.rows()) throw std::invalid_argument("quad_form: dimension mismatch");
  return std::max(0.0, phi.dot(inv * phi));
}

EllipticPotential elliptic_potential_check(const std::vector<Vector>& phis, double lambda) {
  EllipticPotential out;
  if (phis.empty()) return out;
  const int d = static_cast<int>(phis.front().size());
  PrecisionMatrix pm(d, lambda);
  for (const auto& phi : phis) {
    out.lhs += std::min(1.0, pm.quad_form(phi));
    pm.update(phi);
  }
  const double t = static_cast<double>(phis.size());
  out.bound = 2.0 * d * std::log(1.0 + t / (d * lambda));
  out.ok = out.lhs <= out.bound + 1e-9;
  return out;
}

}  // namespace rflin
