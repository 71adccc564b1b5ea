#include "spectralcf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "spectralcf/errors.hpp"

namespace spectralcf {

namespace {

using ColMatrix = Eigen::MatrixXd;

constexpr double kSignThreshold = 1e-10;
constexpr double kTieTolerance = 1e-9;

SparseMatrix sparse_identity(Index n) {
  SparseMatrix eye(n, n);
  eye.setIdentity();
  return eye;
}

void check_length(const SpectralBasis& basis, Index len, const char* what) {
  if (len != basis.size()) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(len) + ", basis has " +
                         std::to_string(basis.size()) + " vertices");
  }
}

void canonicalize_signs(ColMatrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    for (Index r = 0; r < vectors.rows(); ++r) {
      const double v = vectors(r, c);
      if (std::abs(v) > kSignThreshold) {
        if (v < 0) vectors.col(c) *= -1.0;
        break;
      }
    }
  }
}

// Stable column order: ascending eigenvalue, then lexicographic within ties.
void order_columns(Vector& values, ColMatrix& vectors) {
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });

  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && values(order[end]) - values(order[end - 1]) <= kTieTolerance) ++end;
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end), [&](Index a, Index b) {
                       for (Index r = 0; r < vectors.rows(); ++r) {
                         if (vectors(r, a) != vectors(r, b)) return vectors(r, a) < vectors(r, b);
                       }
                       return false;
                     });
    start = end;
  }

  Vector sorted_values(n);
  ColMatrix sorted_vectors(vectors.rows(), n);
  for (Index k = 0; k < n; ++k) {
    sorted_values(k) = values(order[k]);
    sorted_vectors.col(k) = vectors.col(order[k]);
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

double worst_residual(const ColMatrix& op, const Vector& values, const ColMatrix& vectors, Index* worst_pair) {
  double worst = 0.0;
  for (Index l = 0; l < values.size(); ++l) {
    const double r = (op * vectors.col(l) - values(l) * vectors.col(l)).cwiseAbs().maxCoeff();
    if (r > worst || !std::isfinite(r)) {
      worst = r;
      *worst_pair = l;
      if (!std::isfinite(r)) break;
    }
  }
  return worst;
}

}  // namespace

// --- graph ---------------------------------------------------------------------

BipartiteGraph build_graph(const InteractionSet& train) {
  if (train.n_pairs() == 0) throw InvariantError("cannot build a graph from an empty training set");
  BipartiteGraph g;
  g.n_users_ = train.n_users();
  g.n_items_ = train.n_items();
  g.n_edges_ = train.n_pairs();
  const Index n = g.n_vertices();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * g.n_edges_));
  for (Index u = 0; u < g.n_users_; ++u) {
    for (Index i : train.items_of(u)) {
      triplets.emplace_back(u, g.n_users_ + i, 1.0);
      triplets.emplace_back(g.n_users_ + i, u, 1.0);
    }
  }
  g.adjacency_.resize(n, n);
  g.adjacency_.setFromTriplets(triplets.begin(), triplets.end());
  g.adjacency_.makeCompressed();

  g.degree_ = Vector::Zero(n);
  for (Index r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(g.adjacency_, r); it; ++it) g.degree_(r) += it.value();
  }
  for (Index r = 0; r < n; ++r) {
    if (g.degree_(r) < 1.0) throw InvariantError("vertex " + std::to_string(r) + " is isolated");
  }
  return g;
}

SparseMatrix BipartiteGraph::normalized_adjacency() const {
  const Vector inv_sqrt = degree_.cwiseSqrt().cwiseInverse();
  SparseMatrix out = adjacency_;
  for (Index r = 0; r < out.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
      it.valueRef() *= inv_sqrt(r) * inv_sqrt(it.col());
    }
  }
  return out;
}

SparseMatrix BipartiteGraph::sym_laplacian() const {
  SparseMatrix out = sparse_identity(n_vertices()) - normalized_adjacency();
  out.prune(0.0);
  return out;
}

SparseMatrix BipartiteGraph::rw_laplacian() const {
  SparseMatrix scaled = adjacency_;
  for (Index r = 0; r < scaled.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(scaled, r); it; ++it) it.valueRef() /= degree_(r);
  }
  SparseMatrix out = sparse_identity(n_vertices()) - scaled;
  out.prune(0.0);
  return out;
}

// --- eigensystem -------------------------------------------------------------

SpectralBasis eigendecompose(const BipartiteGraph& graph, BasisNormalization normalization) {
  const ColMatrix lsym = ColMatrix(graph.sym_laplacian());
  Eigen::SelfAdjointEigenSolver<ColMatrix> solver(lsym);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver did not converge for N=" + std::to_string(graph.n_vertices()));
  }
  Vector values = solver.eigenvalues();
  ColMatrix vectors = solver.eigenvectors();

  const ColMatrix* op = &lsym;
  ColMatrix lrw;
  if (normalization == BasisNormalization::rw_raw) {
    // L_rw = D^{-1/2} L_sym D^{1/2}, so D^{-1/2} u is an eigenvector of L_rw.
    const Vector inv_sqrt = graph.degree().cwiseSqrt().cwiseInverse();
    vectors = inv_sqrt.asDiagonal() * vectors;
    vectors.colwise().normalize();
    lrw = ColMatrix(graph.rw_laplacian());
    op = &lrw;
  }

  canonicalize_signs(vectors);
  order_columns(values, vectors);

  Index worst_pair = 0;
  const double residual = worst_residual(*op, values, vectors, &worst_pair);
  if (!(residual < kEigenResidualTolerance)) {
    throw NumericError("eigenpair " + std::to_string(worst_pair) + " residual " + std::to_string(residual) +
                       " exceeds tolerance");
  }

  SpectralBasis basis;
  basis.eigenvalues = std::move(values);
  basis.eigenvectors = vectors;
  basis.normalization = normalization;
  return basis;
}

Vector gft(const SpectralBasis& basis, const Vector& signal) {
  check_length(basis, signal.size(), "signal");
  if (basis.normalization == BasisNormalization::sym_orthonormal) {
    return basis.eigenvectors.transpose() * signal;
  }
  return Eigen::PartialPivLU<ColMatrix>(ColMatrix(basis.eigenvectors)).solve(signal);
}

Vector igft(const SpectralBasis& basis, const Vector& spectrum) {
  check_length(basis, spectrum.size(), "spectrum");
  return basis.eigenvectors * spectrum;
}

Vector apply_diag_filter(const SpectralBasis& basis, const Vector& theta, const Vector& signal) {
  check_length(basis, theta.size(), "theta");
  const Vector spectrum = gft(basis, signal);
  return igft(basis, theta.cwiseProduct(basis.eigenvalues).cwiseProduct(spectrum));
}

// --- polynomial interpolation ------------------------------------------------

PolynomialFit verify_polynomial_equivalence(const SpectralBasis& basis, const Vector& theta,
                                            double merge_tolerance) {
  check_length(basis, theta.size(), "theta");
  const Index n = basis.size();
  const Vector& lambda = basis.eigenvalues;
  const Vector target = theta.cwiseProduct(lambda);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lambda(a) < lambda(b); });

  std::vector<double> nodes, values;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && lambda(order[end]) - lambda(order[end - 1]) <= merge_tolerance) ++end;
    double node = 0.0, value = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      const double t0 = target(order[start]);
      const double tk = target(order[k]);
      if (std::abs(tk - t0) > merge_tolerance * (1.0 + std::abs(t0))) {
        throw DegenerateInterpolationError("repeated eigenvalue " + std::to_string(lambda(order[start])) +
                                           " carries conflicting filter targets");
      }
      node += lambda(order[k]);
      value += tk;
    }
    const auto count = static_cast<double>(end - start);
    nodes.push_back(node / count);
    values.push_back(value / count);
    start = end;
  }

  const auto m = static_cast<Index>(nodes.size());
  ColMatrix vandermonde(m, m);
  Vector rhs(m);
  for (Index r = 0; r < m; ++r) {
    double power = 1.0;
    for (Index c = 0; c < m; ++c) {
      vandermonde(r, c) = power;
      power *= nodes[r];
    }
    rhs(r) = values[r];
  }
  const Vector solved = vandermonde.fullPivLu().solve(rhs);

  PolynomialFit fit;
  fit.coefficients = Vector::Zero(n);
  fit.coefficients.head(m) = solved;
  fit.distinct_eigenvalues = m;
  for (Index l = 0; l < n; ++l) {
    double acc = 0.0;
    for (Index p = m - 1; p >= 0; --p) acc = acc * lambda(l) + solved(p);
    fit.max_residual = std::max(fit.max_residual, std::abs(acc - target(l)));
  }
  if (!std::isfinite(fit.max_residual)) throw NumericError("polynomial interpolation produced non-finite values");
  return fit;
}

Vector apply_laplacian_polynomial(const BipartiteGraph& graph, const Vector& coefficients, const Vector& signal) {
  if (signal.size() != graph.n_vertices()) throw DimensionError("signal length does not match graph");
  const SparseMatrix lsym = graph.sym_laplacian();
  Vector acc = Vector::Zero(signal.size());
  for (Index p = coefficients.size() - 1; p >= 0; --p) {
    acc = lsym * acc + coefficients(p) * signal;
  }
  return acc;
}

// --- convolution kernel ------------------------------------------------------

KernelForm parse_kernel_form(std::string_view name) {
  if (name == "dense-eig" || name == "dense_eig") return KernelForm::dense_eig;
  if (name == "closed-sparse" || name == "closed_sparse") return KernelForm::closed_sparse;
  throw FormatError("unknown kernel form '" + std::string(name) + "'");
}

std::string_view to_string(KernelForm form) {
  return form == KernelForm::dense_eig ? "dense-eig" : "closed-sparse";
}

ConvKernel ConvKernel::dense(Matrix m) {
  if (m.rows() != m.cols()) throw DimensionError("kernel must be square");
  ConvKernel k;
  k.matrix_ = std::move(m);
  return k;
}

ConvKernel ConvKernel::sparse(SparseMatrix m) {
  if (m.rows() != m.cols()) throw DimensionError("kernel must be square");
  ConvKernel k;
  k.matrix_ = std::move(m);
  return k;
}

KernelForm ConvKernel::form() const {
  return std::holds_alternative<Matrix>(matrix_) ? KernelForm::dense_eig : KernelForm::closed_sparse;
}

Index ConvKernel::size() const {
  return std::visit([](const auto& m) -> Index { return m.rows(); }, matrix_);
}

Matrix ConvKernel::apply(const Matrix& x) const {
  if (x.rows() != size()) throw DimensionError("kernel/input row mismatch");
  return std::visit([&](const auto& m) -> Matrix { return m * x; }, matrix_);
}

Matrix ConvKernel::apply_transpose(const Matrix& x) const {
  if (x.rows() != size()) throw DimensionError("kernel/input row mismatch");
  return std::visit([&](const auto& m) -> Matrix { return m.transpose() * x; }, matrix_);
}

Matrix ConvKernel::to_dense() const {
  return std::visit([](const auto& m) -> Matrix { return Matrix(m); }, matrix_);
}

ConvKernel closed_form_kernel(const BipartiteGraph& graph) {
  SparseMatrix k = 2.0 * sparse_identity(graph.n_vertices()) - graph.normalized_adjacency();
  k.makeCompressed();
  return ConvKernel::sparse(std::move(k));
}

ConvKernel conv_kernel(const BipartiteGraph& graph, const SpectralBasis& basis, KernelForm form) {
  if (basis.size() != graph.n_vertices()) throw DimensionError("basis was not built from this graph");
  if (form == KernelForm::closed_sparse) {
    if (basis.normalization != BasisNormalization::sym_orthonormal) {
      throw UnsupportedError("closed_sparse kernel requires a sym_orthonormal basis");
    }
    return closed_form_kernel(graph);
  }
  const Matrix& u = basis.eigenvectors;
  Matrix k = u * u.transpose() + u * basis.eigenvalues.asDiagonal() * u.transpose();
  return ConvKernel::dense(std::move(k));
}

Matrix spectral_coordinates(const SpectralBasis& basis, Index k) {
  if (k < 1 || k > basis.size() - 1) {
    throw DimensionError("k must lie in [1, " + std::to_string(basis.size() - 1) + "], got " + std::to_string(k));
  }
  return basis.eigenvectors.middleCols(1, k);
}

}  // namespace spectralcf
