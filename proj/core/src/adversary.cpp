#include "rnode/adversary.hpp"

#include <string>

namespace rnode {

Disturbance::Disturbance(Eigen::MatrixXd values, double radius)
    : values_(std::move(values)), radius_(radius) {
  if (!(radius_ >= 0.0)) throw config_error("disturbance: radius must be >= 0");
  if (!values_.allFinite())
    throw config_error("disturbance: non-finite entries");
  if (values_.size() > 0 && values_.cwiseAbs().maxCoeff() > radius_ + 1e-12)
    throw config_error("disturbance: sup norm " +
                       std::to_string(values_.cwiseAbs().maxCoeff()) +
                       " exceeds budget " + std::to_string(radius_));
}

Disturbance Disturbance::zero(int num_steps, int control_dim, double radius) {
  return Disturbance(Eigen::MatrixXd::Zero(num_steps, control_dim), radius);
}

void AdversaryConfig::validate() const {
  if (!(penalty_weight > 0.0))
    throw config_error("adversary config: penalty_weight must be positive");
  if (!(radius >= 0.0)) throw config_error("adversary config: radius must be >= 0");
  if (!(zero_threshold >= 0.0))
    throw config_error("adversary config: zero_threshold must be >= 0");
}

Eigen::VectorXd residual(const ControlSignal& u, const LabeledPoint& pt,
                         const ModelConfig& cfg) {
  if (pt.y.size() != cfg.output_dim)
    throw config_error("residual: label has " + std::to_string(pt.y.size()) +
                       " entries, expected " + std::to_string(cfg.output_dim));
  return predict(u, pt.x, cfg) - pt.y;
}

Eigen::VectorXd perturbed_predict(const ControlSignal& u, const Disturbance& eps,
                                  const Eigen::VectorXd& x0, const ModelConfig& cfg) {
  return predict(u.shifted(eps.values()), x0, cfg);
}

double spectral_norm_sq(const SensitivityMatrix& S) {
  const Eigen::MatrixXd& L = S.matrix();
  const Eigen::MatrixXd gram = L * L.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    throw numeric_error("spectral norm: eigensolve failed");
  return es.eigenvalues().maxCoeff();
}

Disturbance worst_case_disturbance(const SensitivityMatrix& S, const Eigen::VectorXd& r,
                                   const AdversaryConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd& L = S.matrix();
  if (r.size() != L.rows())
    throw config_error("worst case: residual has " + std::to_string(r.size()) +
                       " entries, expected " + std::to_string(L.rows()));

  const double norm_sq = spectral_norm_sq(S);
  if (cfg.penalty_weight <= norm_sq)
    throw numeric_error("worst case: penalty_weight " +
                        std::to_string(cfg.penalty_weight) +
                        " must exceed squared sensitivity norm " +
                        std::to_string(norm_sq));

  /* gamma = (penalty*I - L^T L)^{-1} L^T r collapses, via the push-through
   * identity, to the output-sized solve below; the matrix is positive
   * definite because penalty_weight > |L|^2.  */
  const Eigen::MatrixXd small =
      cfg.penalty_weight * Eigen::MatrixXd::Identity(L.rows(), L.rows()) -
      L * L.transpose();
  const Eigen::VectorXd w = small.ldlt().solve(r);
  const Eigen::VectorXd gamma = L.transpose() * w;

  const double sup = gamma.lpNorm<Eigen::Infinity>();
  if (sup <= cfg.zero_threshold)
    return Disturbance::zero(S.num_steps(), S.control_dim(), cfg.radius);

  const Eigen::VectorXd e = (gamma / sup) * cfg.radius;

  const double grown = (r + L * e).squaredNorm();
  const double base = r.squaredNorm();
  if (grown + 1e-12 * (1.0 + base) < base)
    throw numeric_error("worst case: scaled direction decreased the residual");

  return Disturbance(vector_to_grid(e, S.num_steps(), S.control_dim()), cfg.radius);
}

double robust_cost(const ControlSignal& u, const Disturbance& eps, const LabeledPoint& pt,
                   const ModelConfig& mcfg, const AdversaryConfig& acfg) {
  acfg.validate();
  const Eigen::VectorXd pred = perturbed_predict(u, eps, pt.x, mcfg);
  return (pred - pt.y).squaredNorm() - acfg.penalty_weight * eps.l2_sq(mcfg.dt);
}

}  // namespace rnode
