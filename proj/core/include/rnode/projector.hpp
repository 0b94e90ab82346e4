#pragma once

#include <Eigen/Dense>
#include <span>

#include "rnode/model.hpp"
#include "rnode/sensitivity.hpp"

namespace rnode {

/* Vertically stacked sensitivity rows of the memorized points, with the
 * orthogonal projector onto their common kernel.
 *
 *   project(g) = g - M^T pinv(M M^T) M g
 *
 * The pseudo-inverse lives on the small (points*output_dim)^2 Gram matrix and
 * is cached eagerly at refresh time, so project() is const and safe to call
 * concurrently between refreshes.  Eigenvalues of the Gram matrix at or below
 * 1e-10 times the largest are truncated to zero, which keeps duplicate or
 * nearly dependent rows harmless.  */
class ConstraintStack {
 public:
  ConstraintStack() = default;

  // adopt arbitrary constraint rows (used by tests and diagnostics)
  static ConstraintStack from_rows(Eigen::MatrixXd rows);

  /* Recompute one sensitivity block per memorized point at the current
   * control.  Blocks are stacked in the order given.  */
  void refresh(const ControlSignal& u, std::span<const LabeledPoint> memorized,
               const ModelConfig& cfg);

  // orthogonal projection of g onto the kernel of the stacked rows
  Eigen::VectorXd project_to_kernel(const Eigen::VectorXd& g) const;

  const Eigen::MatrixXd& rows() const { return rows_; }
  bool empty() const { return rows_.rows() == 0; }
  int row_count() const { return static_cast<int>(rows_.rows()); }

  static constexpr double kGramCutoff = 1e-10;  // relative eigenvalue cutoff

 private:
  void rebuild_gram_pinv();

  Eigen::MatrixXd rows_;       // (points*output_dim) x (num_steps*control_dim)
  Eigen::MatrixXd gram_pinv_;  // pinv(rows rows^T), rebuilt on refresh
};

}  // namespace rnode
