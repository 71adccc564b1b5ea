#pragma once

#include <cstdint>
#include <iosfwd>
#include <variant>

#include <Eigen/SparseCore>

#include "spectralcf/ingest.hpp"
#include "spectralcf/types.hpp"

namespace spectralcf {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// User-item bipartite graph. Vertex order is users first, then items:
// vertex u for user u, vertex n_users + i for item i.
class BipartiteGraph {
 public:
  Index n_users() const { return n_users_; }
  Index n_items() const { return n_items_; }
  Index n_vertices() const { return n_users_ + n_items_; }
  Index n_edges() const { return n_edges_; }

  // [[0, R], [R^T, 0]], 0/1 entries.
  const SparseMatrix& adjacency() const { return adjacency_; }
  // Row sums of the adjacency, all >= 1.
  const Vector& degree() const { return degree_; }

  // D^{-1/2} A D^{-1/2}
  SparseMatrix normalized_adjacency() const;
  // I - D^{-1/2} A D^{-1/2}
  SparseMatrix sym_laplacian() const;
  // I - D^{-1} A
  SparseMatrix rw_laplacian() const;

 private:
  friend BipartiteGraph build_graph(const InteractionSet& train);

  Index n_users_ = 0;
  Index n_items_ = 0;
  Index n_edges_ = 0;
  SparseMatrix adjacency_;
  Vector degree_;
};

// Throws InvariantError when a vertex is isolated.
BipartiteGraph build_graph(const InteractionSet& train);

enum class BasisNormalization : std::uint8_t {
  sym_orthonormal = 0,  // eigenvectors of I - D^{-1/2} A D^{-1/2}
  rw_raw = 1,           // eigenvectors of I - D^{-1} A, unit columns, not orthogonal
};

// Eigenvalues ascending; eigenvector l in column l. Each column has its first
// non-negligible entry positive; columns sharing an eigenvalue are ordered
// lexicographically.
struct SpectralBasis {
  Vector eigenvalues;
  Matrix eigenvectors;
  BasisNormalization normalization = BasisNormalization::sym_orthonormal;

  Index size() const { return eigenvalues.size(); }
};

// Dense O(N^3) eigendecomposition. Requires ||L u - lambda u||_inf < 1e-8 for
// every pair and throws NumericError with the worst residual otherwise.
SpectralBasis eigendecompose(const BipartiteGraph& graph,
                             BasisNormalization normalization = BasisNormalization::sym_orthonormal);

inline constexpr double kEigenResidualTolerance = 1e-8;

// Graph Fourier transform: U^T x for an orthonormal basis, U^{-1} x for rw_raw.
Vector gft(const SpectralBasis& basis, const Vector& signal);
// Inverse transform: U x.
Vector igft(const SpectralBasis& basis, const Vector& spectrum);

// U diag(theta_l * lambda_l) U^{-1} x.
Vector apply_diag_filter(const SpectralBasis& basis, const Vector& theta, const Vector& signal);

struct PolynomialFit {
  // a_0 .. a_{N-1}; entries beyond the number of distinct eigenvalues are zero.
  Vector coefficients;
  // max_l |sum_p a_p lambda_l^p - theta_l lambda_l|
  double max_residual = 0.0;
  Index distinct_eigenvalues = 0;
};

// Interpolates the points (lambda_l, theta_l * lambda_l). Eigenvalues closer
// than `merge_tolerance` are one node; if their targets disagree by more than
// that, throws DegenerateInterpolationError.
PolynomialFit verify_polynomial_equivalence(const SpectralBasis& basis, const Vector& theta,
                                            double merge_tolerance = 1e-9);

// sum_p a_p L_sym^p x evaluated with Horner's rule on the sparse Laplacian, no
// eigenvectors involved.
Vector apply_laplacian_polynomial(const BipartiteGraph& graph, const Vector& coefficients, const Vector& signal);

enum class KernelForm { dense_eig, closed_sparse };

KernelForm parse_kernel_form(std::string_view name);
std::string_view to_string(KernelForm form);

// The propagation matrix U U^T + U Lambda U^T, either materialized from the
// eigensystem or as the sparse closed form I + L_sym.
class ConvKernel {
 public:
  static ConvKernel dense(Matrix m);
  static ConvKernel sparse(SparseMatrix m);

  KernelForm form() const;
  Index size() const;

  // kernel * x
  Matrix apply(const Matrix& x) const;
  // kernel^T * x
  Matrix apply_transpose(const Matrix& x) const;
  Matrix to_dense() const;

 private:
  std::variant<Matrix, SparseMatrix> matrix_;
};

// Throws UnsupportedError for closed_sparse with an rw_raw basis.
ConvKernel conv_kernel(const BipartiteGraph& graph, const SpectralBasis& basis, KernelForm form);
// Closed form only; never needs the eigensystem.
ConvKernel closed_form_kernel(const BipartiteGraph& graph);

// Columns mu_1 .. mu_k, skipping the trivial mu_0. 1 <= k <= N - 1.
Matrix spectral_coordinates(const SpectralBasis& basis, Index k);

// Basis cache file: "SPCF", u32 version, u64 N, u8 normalization, then N
// eigenvalues and the N x N eigenvectors row-major, all little-endian f64.
void write_basis(std::ostream& out, const SpectralBasis& basis);
SpectralBasis read_basis(std::istream& in);

}  // namespace spectralcf
