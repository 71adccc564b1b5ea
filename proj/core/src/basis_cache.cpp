#include "binary_io.hpp"
#include "spectralcf/graph.hpp"

namespace spectralcf {

namespace {
constexpr std::uint32_t kBasisVersion = 1;
}

void write_basis(std::ostream& out, const SpectralBasis& basis) {
  const Index n = basis.size();
  if (basis.eigenvectors.rows() != n || basis.eigenvectors.cols() != n) {
    throw DimensionError("eigenvector matrix is not N x N");
  }
  detail::put_magic(out, "SPCF");
  detail::put_u32(out, kBasisVersion);
  detail::put_u64(out, static_cast<std::uint64_t>(n));
  detail::put_u8(out, static_cast<std::uint8_t>(basis.normalization));
  for (Index l = 0; l < n; ++l) detail::put_f64(out, basis.eigenvalues(l));
  detail::put_matrix(out, basis.eigenvectors);
  if (!out) throw Error("failed writing basis cache");
}

SpectralBasis read_basis(std::istream& in) {
  detail::expect_magic(in, "SPCF");
  const auto version = detail::get_u32(in);
  if (version != kBasisVersion) throw FormatError("unsupported basis cache version " + std::to_string(version));
  const Index n = detail::checked_dim(detail::get_u64(in), "vertex count");
  const auto tag = detail::get_u8(in);
  if (tag > 1) throw FormatError("unknown basis normalization tag " + std::to_string(tag));

  SpectralBasis basis;
  basis.normalization = static_cast<BasisNormalization>(tag);
  basis.eigenvalues.resize(n);
  for (Index l = 0; l < n; ++l) basis.eigenvalues(l) = detail::get_f64(in);
  basis.eigenvectors = detail::get_matrix(in, n, n);
  return basis;
}

}  // namespace spectralcf
