#include "rnode/projector.hpp"

namespace rnode {

ConstraintStack ConstraintStack::from_rows(Eigen::MatrixXd rows) {
  ConstraintStack s;
  s.rows_ = std::move(rows);
  s.rebuild_gram_pinv();
  return s;
}

void ConstraintStack::refresh(const ControlSignal& u,
                              std::span<const LabeledPoint> memorized,
                              const ModelConfig& cfg) {
  const Eigen::Index width = static_cast<Eigen::Index>(cfg.num_steps) * cfg.control_dim();
  rows_.resize(static_cast<Eigen::Index>(memorized.size()) * cfg.output_dim, width);
  Eigen::Index at = 0;
  for (const LabeledPoint& pt : memorized) {
    rows_.middleRows(at, cfg.output_dim) = compute_sensitivity(u, pt.x, cfg).matrix();
    at += cfg.output_dim;
  }
  rebuild_gram_pinv();
}

void ConstraintStack::rebuild_gram_pinv() {
  const Eigen::Index m = rows_.rows();
  if (m == 0) {
    gram_pinv_.resize(0, 0);
    return;
  }
  const Eigen::MatrixXd gram = rows_ * rows_.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    throw numeric_error("constraint stack: Gram eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = kGramCutoff * std::max(ev.maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (ev(i) > cutoff && ev(i) > 0.0) inv(i) = 1.0 / ev(i);
  gram_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd ConstraintStack::project_to_kernel(const Eigen::VectorXd& g) const {
  if (rows_.rows() == 0) return g;
  if (g.size() != rows_.cols())
    throw config_error("project: vector has " + std::to_string(g.size()) +
                       " entries, expected " + std::to_string(rows_.cols()));
  return g - rows_.transpose() * (gram_pinv_ * (rows_ * g));
}

}  // namespace rnode
