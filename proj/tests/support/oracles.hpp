#pragma once

// Reference implementations used only by the tests. None of these call into
// the library's numerical code paths.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spectralcf/ingest.hpp"
#include "spectralcf/model.hpp"
#include "spectralcf/training.hpp"

namespace spectralcf::oracle {

using DenseMatrix = Eigen::MatrixXd;

// Cyclic Jacobi rotations on a symmetric matrix; eigenvalues ascending.
Eigen::VectorXd jacobi_eigenvalues(DenseMatrix a, double tolerance = 1e-14, int max_sweeps = 100);

// Connected components of the user-item graph by union-find.
Index count_components(const InteractionSet& data);

// Dense 0/1 adjacency [[0, R], [R^T, 0]] built entry by entry.
DenseMatrix dense_adjacency(const InteractionSet& data);

// I - D^{-1/2} A D^{-1/2} assembled elementwise.
DenseMatrix dense_sym_laplacian(const InteractionSet& data);

// Random user-item set with the given edge density. Isolated users and items
// receive one random edge so the invariants hold.
InteractionSet random_interactions(Index n_users, Index n_items, double density, std::mt19937_64& rng);

// Several disconnected random blocks; the result has exactly `blocks`
// components when every block is internally connected (which the generator
// enforces with a spanning path per block).
InteractionSet random_blocks(Index blocks, Index users_per_block, Index items_per_block, double density,
                             std::mt19937_64& rng);

// Recall and AP by explicit set construction and double loops.
double naive_recall(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index m);
double naive_average_precision(const std::vector<Index>& ranked, const std::vector<Index>& relevant, Index m,
                               bool min_denominator = true);

// BPR objective expanded scalar by scalar, full-table regularizer.
double naive_bpr_loss(const Matrix& users, const Matrix& items, std::span<const Triple> batch, double reg);

// Max over entries of |a - n| / max(|a|, |n|, abs_floor).
struct GradientComparison {
  double max_relative_error = 0.0;
  Index entries = 0;
};

GradientComparison compare_gradients(const Matrix& analytic, const Matrix& numeric, double abs_floor = 1e-7);

// Central finite differences of `loss` with respect to every entry of `param`.
template <class Loss>
Matrix finite_difference(Matrix& param, Loss&& loss, double step = 1e-5) {
  Matrix grad(param.rows(), param.cols());
  for (Index r = 0; r < param.rows(); ++r) {
    for (Index c = 0; c < param.cols(); ++c) {
      const double saved = param(r, c);
      param(r, c) = saved + step;
      const double up = loss();
      param(r, c) = saved - step;
      const double down = loss();
      param(r, c) = saved;
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

}  // namespace spectralcf::oracle
