#include "vcm/linalg.hpp"

namespace vcm::linalg {

namespace {

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted_qr(const Eigen::MatrixXd& m,
                                                       double rtol) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(rtol);
  return qr;
}

}  // namespace

Eigen::Index rank(const Eigen::MatrixXd& m, double rtol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  return pivoted_qr(m, rtol).rank();
}

bool in_span(const Eigen::MatrixXd& m, const Eigen::VectorXd& v, double rtol) {
  Eigen::MatrixXd augmented(m.rows(), m.cols() + 1);
  augmented << m, v;
  return rank(augmented, rtol) == rank(m, rtol);
}

bool same_span(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rtol) {
  Eigen::MatrixXd augmented(a.rows(), a.cols() + b.cols());
  augmented << a, b;
  const Eigen::Index joint = rank(augmented, rtol);
  return rank(a, rtol) == joint && rank(b, rtol) == joint;
}

Eigen::MatrixXd orthonormal_colspace(const Eigen::MatrixXd& m, double rtol) {
  const Eigen::Index n = m.rows();
  if (m.cols() == 0) return Eigen::MatrixXd(n, 0);
  auto qr = pivoted_qr(m, rtol);
  const Eigen::Index r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ();
  return q.leftCols(r);
}

Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& m, double rtol) {
  const Eigen::Index n = m.rows();
  if (m.cols() == 0) return Eigen::MatrixXd::Identity(n, n);
  auto qr = pivoted_qr(m, rtol);
  const Eigen::Index r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - r);
}

Eigen::MatrixXd residual_projector(const Eigen::MatrixXd& x, double rtol) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd q = orthonormal_colspace(x, rtol);
  return Eigen::MatrixXd::Identity(n, n) - q * q.transpose();
}

}  // namespace vcm::linalg
