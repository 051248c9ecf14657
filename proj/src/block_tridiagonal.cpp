#include "lrio/block_tridiagonal.hpp"

#include <Eigen/Eigenvalues>

namespace lrio {

void BlockTridiagonalSystem::reset(std::size_t nodes) {
  diag_.assign(nodes, Mat15::Zero());
  upper_.assign(nodes > 0 ? nodes - 1 : 0, Mat15::Zero());
  grad_.assign(nodes, Vec15::Zero());
}

std::optional<std::vector<Vec15>> BlockTridiagonalSystem::solve(double lambda) const {
  const std::size_t n = diag_.size();
  std::vector<Eigen::LLT<Mat15>> chol(n);
  std::vector<Mat15> coupling(n);  // C_k = L_{k-1}^{-1} U_{k-1}
  std::vector<Vec15> y(n);

  for (std::size_t k = 0; k < n; ++k) {
    Mat15 s = diag_[k];
    s.diagonal().array() += lambda;
    Vec15 b = -grad_[k];
    if (k > 0) {
      coupling[k] = chol[k - 1].matrixL().solve(upper_[k - 1]);
      s.noalias() -= coupling[k].transpose() * coupling[k];
      b.noalias() -= coupling[k].transpose() * y[k - 1];
    }
    chol[k].compute(s);
    if (chol[k].info() != Eigen::Success) return std::nullopt;
    y[k] = chol[k].matrixL().solve(b);
  }

  std::vector<Vec15> x(n);
  for (std::size_t k = n; k-- > 0;) {
    Vec15 rhs = y[k];
    if (k + 1 < n) rhs.noalias() -= coupling[k + 1] * x[k + 1];
    x[k] = chol[k].matrixU().solve(rhs);
    if (!x[k].allFinite()) return std::nullopt;
  }
  return x;
}

double BlockTridiagonalSystem::predicted_decrease(const std::vector<Vec15>& d) const {
  double gd = 0.0;
  double dHd = 0.0;
  for (std::size_t k = 0; k < diag_.size(); ++k) {
    gd += grad_[k].dot(d[k]);
    dHd += d[k].dot(diag_[k] * d[k]);
    if (k + 1 < diag_.size()) dHd += 2.0 * d[k].dot(upper_[k] * d[k + 1]);
  }
  return -2.0 * gd - dHd;
}

double BlockTridiagonalSystem::gradient_max_norm() const {
  double m = 0.0;
  for (const auto& g : grad_) m = std::max(m, g.cwiseAbs().maxCoeff());
  return m;
}

Eigen::MatrixXd BlockTridiagonalSystem::dense_hessian() const {
  const auto n = static_cast<Eigen::Index>(diag_.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(15 * n, 15 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    h.block<15, 15>(15 * k, 15 * k) = diag_[k];
    if (k + 1 < n) {
      h.block<15, 15>(15 * k, 15 * (k + 1)) = upper_[k];
      h.block<15, 15>(15 * (k + 1), 15 * k) = upper_[k].transpose();
    }
  }
  return h;
}

Eigen::VectorXd BlockTridiagonalSystem::dense_gradient() const {
  Eigen::VectorXd g(15 * static_cast<Eigen::Index>(grad_.size()));
  for (std::size_t k = 0; k < grad_.size(); ++k) g.segment<15>(15 * k) = grad_[k];
  return g;
}

std::pair<Mat15, Vec15> schur_complement_first(const MarginalizationBlock& block) {
  const Mat15 h00 = block.hessian.topLeftCorner<15, 15>();
  const Mat15 h01 = block.hessian.topRightCorner<15, 15>();
  const Mat15 h11 = block.hessian.bottomRightCorner<15, 15>();
  const Vec15 g0 = block.gradient.head<15>();
  const Vec15 g1 = block.gradient.tail<15>();

  // Pseudo-inverse so that directions nothing constrains drop out cleanly.
  const Eigen::SelfAdjointEigenSolver<Mat15> eig(0.5 * (h00 + h00.transpose()));
  const Vec15 ev = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  Vec15 inv = Vec15::Zero();
  for (int i = 0; i < 15; ++i) {
    if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
  }
  const Mat15 h00_pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();

  Mat15 h = h11 - h01.transpose() * h00_pinv * h01;
  h = 0.5 * (h + h.transpose());
  const Vec15 g = g1 - h01.transpose() * h00_pinv * g0;
  return {h, g};
}

GaussianPrior prior_from_information(const NavState& linearization_point, const Mat15& hessian,
                                     const Vec15& gradient) {
  const Eigen::SelfAdjointEigenSolver<Mat15> eig(0.5 * (hessian + hessian.transpose()));
  const Vec15 ev = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  GaussianPrior prior;
  prior.linearization_point = linearization_point;
  const Vec15 projected = eig.eigenvectors().transpose() * gradient;
  for (int i = 0; i < 15; ++i) {
    if (ev[i] <= cutoff) continue;
    const double s = std::sqrt(ev[i]);
    prior.sqrt_information.row(i) = s * eig.eigenvectors().col(i).transpose();
    prior.offset[i] = projected[i] / s;
  }
  return prior;
}

}  // namespace lrio
