#include "rnode/common.hpp"

#include <cstring>

namespace rnode {

Eigen::VectorXd grid_to_vector(const Eigen::MatrixXd& grid) {
  const Eigen::Index rows = grid.rows(), cols = grid.cols();
  Eigen::VectorXd v(rows * cols);
  for (Eigen::Index k = 0; k < rows; ++k)
    for (Eigen::Index c = 0; c < cols; ++c) v(k * cols + c) = grid(k, c);
  return v;
}

Eigen::MatrixXd vector_to_grid(const Eigen::VectorXd& v, Eigen::Index rows,
                               Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw config_error("vector_to_grid: size " + std::to_string(v.size()) +
                       " does not factor as " + std::to_string(rows) + "x" +
                       std::to_string(cols));
  Eigen::MatrixXd grid(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k)
    for (Eigen::Index c = 0; c < cols; ++c) grid(k, c) = v(k * cols + c);
  return grid;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a(const Eigen::MatrixXd& m, std::uint64_t h) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    h = fnv1a(m.col(c).data(), sizeof(double) * static_cast<std::size_t>(m.rows()), h);
  return h;
}

}  // namespace rnode
