#pragma once

#include <vector>

#include "slm/linops.hpp"
#include "slm/potentials.hpp"

namespace slm {

/// Partition of the q rows of B into contiguous groups, each tied to one potential.
struct GroupLayout {
  std::vector<Index> offsets{0};    ///< size groups()+1, offsets.front() == 0
  std::vector<Index> potential;     ///< per group, index into ModelSpec::potentials

  /// q groups of size one; potential i for row i.
  static GroupLayout scalar(Index q);
  /// q groups of size one sharing the given per-row potential indices.
  static GroupLayout scalar(const std::vector<Index>& potential_per_row);
  static GroupLayout from_sizes(const std::vector<Index>& sizes, std::vector<Index> potential);

  Index groups() const { return static_cast<Index>(potential.size()); }
  Index rows() const { return offsets.back(); }
  Index begin(Index g) const { return offsets[static_cast<std::size_t>(g)]; }
  Index size(Index g) const {
    return offsets[static_cast<std::size_t>(g) + 1] - offsets[static_cast<std::size_t>(g)];
  }
  bool all_scalar() const { return rows() == groups(); }

  /// Concatenate two layouts; potential indices of `tail` are shifted by `potential_shift`.
  GroupLayout append(const GroupLayout& tail, Index potential_shift) const;

  /// Sum of v over the rows of each group.
  Vector sum_groups(const Vector& v) const;
  /// Repeat one value per group onto its rows.
  Vector expand(const Vector& per_group) const;

  /// Throws ShapeError unless the layout partitions q rows and references existing potentials.
  void validate(Index q, Index potential_count) const;
};

/// Everything that defines the variational criterion.
struct ModelSpec {
  LinearOperator X;
  LinearOperator B;
  Vector y;
  double sigma2 = 1.0;
  std::vector<PotentialSpec> potentials;
  GroupLayout layout;

  Index n() const { return X.cols(); }
  Index m() const { return X.rows(); }
  Index q() const { return B.rows(); }
  Index groups() const { return layout.groups(); }
  const PotentialSpec& potential(Index g) const {
    return potentials[static_cast<std::size_t>(layout.potential[static_cast<std::size_t>(g)])];
  }
  /// b_i for every row of B (zero rows inside groups).
  Vector b_vector() const;

  /// Throws ShapeError / DomainError on inconsistent fields.
  void validate() const;
};

}  // namespace slm
