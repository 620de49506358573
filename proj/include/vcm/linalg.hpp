#pragma once

#include <Eigen/Dense>

namespace vcm::linalg {

// Relative tolerance for rank decisions, applied by the pivoted QR as a
// fraction of the largest column norm. Span equality, not any particular
// basis, is the contract everywhere this is used.
inline constexpr double kRankRtol = 1e-10;

Eigen::Index rank(const Eigen::MatrixXd& m, double rtol = kRankRtol);

// v lies in the column span of m (augmented rank test).
bool in_span(const Eigen::MatrixXd& m, const Eigen::VectorXd& v,
             double rtol = kRankRtol);

// Column spans coincide (two-sided augmented rank test).
bool same_span(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
               double rtol = kRankRtol);

// Orthonormal basis of the column space, n x rank.
Eigen::MatrixXd orthonormal_colspace(const Eigen::MatrixXd& m,
                                     double rtol = kRankRtol);

// Orthonormal basis of the orthogonal complement of col(m), n x (n - rank).
Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& m,
                                       double rtol = kRankRtol);

// I - Q Qᵀ with Q an orthonormal basis of col(x): projector onto the
// residual space of x.
Eigen::MatrixXd residual_projector(const Eigen::MatrixXd& x,
                                   double rtol = kRankRtol);

}  // namespace vcm::linalg
