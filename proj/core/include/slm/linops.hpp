#pragma once

// Matrix-free linear operators. Images are vectorized row-major: pixel (r, c) of an
// h x w image sits at index r*w + c.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace slm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// A linear map R^cols -> R^rows given by its forward and adjoint products.
/// Immutable after construction; copies share the lazily materialized matrices.
class LinearOperator {
 public:
  using Map = std::function<Vector(const Vector&)>;

  LinearOperator();
  LinearOperator(Index rows, Index cols, Map forward, Map adjoint, std::string tag);

  Index rows() const;
  Index cols() const;
  const std::string& tag() const;

  /// Throws ShapeError on a length mismatch.
  Vector apply(const Vector& u) const;
  Vector apply_adjoint(const Vector& v) const;

  /// Explicit matrix, probed with unit vectors on first use (thread-safe).
  const Matrix& dense() const;
  const SparseMatrix& sparse() const;

 private:
  friend LinearOperator make_dense(Matrix, std::string);
  friend LinearOperator make_sparse(SparseMatrix, std::string);
  struct State;
  std::shared_ptr<State> state_;
};

/// A symmetric positive definite map given by its product.
using SpdMap = LinearOperator::Map;

LinearOperator make_dense(Matrix m, std::string tag = "dense");
/// Row-major nested input; ragged rows raise FormatError.
LinearOperator make_dense(const std::vector<std::vector<double>>& rows);
LinearOperator make_sparse(SparseMatrix m, std::string tag = "sparse");
LinearOperator make_identity(Index n);
/// Zero-row operator on R^n.
LinearOperator make_empty(Index n);

enum class Axis { Horizontal, Vertical };

/// Forward differences u(r, c+1) - u(r, c) (Horizontal) or u(r+1, c) - u(r, c) (Vertical).
/// No wrap-around rows: output length h*(w-1) or (h-1)*w, ordered row-major.
LinearOperator make_finite_difference_2d(Index height, Index width, Axis axis);

/// Isotropic total variation rows: an interleaved (dx, dy) pair per pixel with both
/// neighbours, then the single dx of the last row and the single dy of the last column.
/// Use isotropic_tv_group_sizes for the matching group layout.
LinearOperator make_isotropic_tv_2d(Index height, Index width);
std::vector<Index> isotropic_tv_group_sizes(Index height, Index width);

/// Orthonormal 1-D Haar transform, Mallat layout (approximation first).
LinearOperator make_haar_1d(Index n, int levels);
/// Separable orthonormal 2-D Haar pyramid on a square image with power-of-two side.
LinearOperator make_haar_wavelet_2d(Index side, int levels);

/// Orthonormal DCT-II matrix, D(k, i) = s_k cos(pi (2i+1) k / (2N)).
Matrix dct_matrix(Index n);

/// Frequency index of transform-domain column position c in the centered layout:
/// positions ordered by distance from (w-1)/2, left first, get frequencies 0, 1, 2, ...
std::vector<Index> centered_frequency_order(Index width);

/// Full orthonormal 2-D DCT with columns in centered-frequency layout.
/// Output index is r*w + c for coefficient row r and column position c.
LinearOperator make_dct_2d(Index height, Index width);

/// Rows of the 2-D transform belonging to the selected column positions, in the given
/// order: output j*h + r is coefficient (r, columns[j]).
LinearOperator make_partial_orthotransform_2d(Index height, Index width,
                                              const std::vector<Index>& columns);

/// Vertical concatenation of weighted blocks; empty weights mean all ones.
LinearOperator stack(const std::vector<LinearOperator>& ops, std::vector<double> weights = {});
/// outer * inner.
LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner);
LinearOperator select_rows(const LinearOperator& op, const std::vector<Index>& rows);
LinearOperator scale(const LinearOperator& op, double weight);

/// max over probe pairs of |<Au, v> - <u, A^T v>| / (|Au| |v| + 1).
double adjoint_gap(const LinearOperator& op, int probes, std::uint64_t seed);

}  // namespace slm
