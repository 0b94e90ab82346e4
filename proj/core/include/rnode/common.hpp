#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rnode {

// Bad user-supplied configuration, shapes, or file contents.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure at runtime (divergence, infeasible solve, ...).
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/* Layout shared by control grids, disturbance grids, sensitivity columns and
 * gradients: grid row k (time step k) occupies vector slots [k*p, (k+1)*p).  */
Eigen::VectorXd grid_to_vector(const Eigen::MatrixXd& grid);
Eigen::MatrixXd vector_to_grid(const Eigen::VectorXd& v, Eigen::Index rows,
                               Eigen::Index cols);

// FNV-1a over raw bytes; used to fingerprint the linearization base point.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t h = 1469598103934665603ULL);
std::uint64_t fnv1a(const Eigen::MatrixXd& m, std::uint64_t h = 1469598103934665603ULL);

}  // namespace rnode
