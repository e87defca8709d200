#pragma once

// Scalar-generic equilibrium algebra shared by the double-precision API and
// the automatic-differentiation Jacobian of the root finder.

#include <Eigen/Dense>

#include "ree/core_model.hpp"

namespace ree::detail {

template <typename Scalar>
struct Loadings {
  Eigen::Matrix<Scalar, 1, 5> S;
  Eigen::Matrix<Scalar, 1, 4> Thalf;
  Scalar T;
};

template <typename Scalar>
Loadings<Scalar> loadings(const SystemMatrices& sys, double r_eff,
                          const Eigen::Matrix<Scalar, 1, 5>& pbar) {
  Eigen::Matrix<Scalar, 1, 5> M;
  M << Scalar(0), Scalar(1), Scalar(1), Scalar(0), Scalar(0);
  Loadings<Scalar> out;
  out.S = M - pbar * Scalar(r_eff) + pbar * sys.A.cast<Scalar>();
  out.Thalf = pbar * sys.Bhalf.cast<Scalar>();
  out.T = out.Thalf.squaredNorm();
  return out;
}

template <typename Scalar>
struct Blocks {
  Eigen::Matrix<Scalar, 5, 5> U, X, Y;
};

// X uses the riskless rate r, which is what the Hamilton-Jacobi-Bellman
// expansion with wealth discounting produces.
template <typename Scalar>
Blocks<Scalar> blocks(const SystemMatrices& sys, double r, const Loadings<Scalar>& l) {
  using M5 = Eigen::Matrix<Scalar, 5, 5>;
  using M4 = Eigen::Matrix<Scalar, 4, 4>;
  const Eigen::Matrix<Scalar, 5, 4> B = sys.Bhalf.cast<Scalar>();
  Blocks<Scalar> b;
  const M4 inner = M4::Identity() * l.T - l.Thalf.transpose() * l.Thalf;
  b.U = B * inner * B.transpose();
  b.X = (sys.A.cast<Scalar>() - M5::Identity() * Scalar(0.5 * r)) * l.T -
        (B * l.Thalf.transpose()) * l.S;
  b.Y = l.S.transpose() * l.S;
  return b;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 5, 5> riccati(const Eigen::Matrix<Scalar, 5, 5>& L, const Blocks<Scalar>& b) {
  return L * b.U * L - L * b.X - b.X.transpose() * L - b.Y;
}

// Per-unit-wealth demand loadings on Z: (S - Thalf Bhalf' L) / (r phi T).
template <typename Scalar>
Eigen::Matrix<Scalar, 1, 5> demand(const SystemMatrices& sys, double r, double phi,
                                   const Loadings<Scalar>& l, const Eigen::Matrix<Scalar, 5, 5>& L) {
  const Eigen::Matrix<Scalar, 1, 5> num = l.S - l.Thalf * sys.Bhalf.transpose().cast<Scalar>() * L;
  return num / (Scalar(r * phi) * l.T);
}

}  // namespace ree::detail
