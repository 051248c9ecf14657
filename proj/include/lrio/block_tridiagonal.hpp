#pragma once

#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "lrio/lo_factor.hpp"
#include "lrio/types.hpp"

namespace lrio {

/// Normal equations of a chain-structured least-squares problem:
/// H is block tridiagonal with 15x15 blocks, g = J^T r.
///
/// Every factor in the sliding window touches one node or two consecutive
/// nodes, so this is the full sparsity pattern of the window.
class BlockTridiagonalSystem {
 public:
  explicit BlockTridiagonalSystem(std::size_t nodes = 0) { reset(nodes); }

  void reset(std::size_t nodes);
  std::size_t size() const { return diag_.size(); }

  Mat15& diagonal(std::size_t k) { return diag_[k]; }
  const Mat15& diagonal(std::size_t k) const { return diag_[k]; }
  /// Block (k, k+1); block (k+1, k) is its transpose.
  Mat15& upper(std::size_t k) { return upper_[k]; }
  const Mat15& upper(std::size_t k) const { return upper_[k]; }
  Vec15& gradient(std::size_t k) { return grad_[k]; }
  const Vec15& gradient(std::size_t k) const { return grad_[k]; }

  /// Solves (H + lambda I) d = -g by block Cholesky. nullopt if the damped
  /// matrix is not positive definite.
  std::optional<std::vector<Vec15>> solve(double lambda) const;

  /// Model decrease of the squared cost for step d: -2 g^T d - d^T H d.
  double predicted_decrease(const std::vector<Vec15>& d) const;

  double gradient_max_norm() const;

  Eigen::MatrixXd dense_hessian() const;
  Eigen::VectorXd dense_gradient() const;

 private:
  std::vector<Mat15> diag_;
  std::vector<Mat15> upper_;
  std::vector<Vec15> grad_;
};

/// Normal equations of all factors touching the node being removed (first
/// 15 rows/cols) and its successor (last 15).
struct MarginalizationBlock {
  Eigen::Matrix<double, 30, 30> hessian = Eigen::Matrix<double, 30, 30>::Zero();
  Eigen::Matrix<double, 30, 1> gradient = Eigen::Matrix<double, 30, 1>::Zero();
};

/// Schur complement eliminating the first node: returns the information
/// matrix and gradient left on the successor.
std::pair<Mat15, Vec15> schur_complement_first(const MarginalizationBlock& block);

/// Square-root prior with information `hessian` and gradient `gradient` at
/// `linearization_point`. Eigenvalues below 1e-12 of the largest are dropped,
/// so the stored information is PSD by construction.
GaussianPrior prior_from_information(const NavState& linearization_point, const Mat15& hessian,
                                     const Vec15& gradient);

}  // namespace lrio
