#include "slm/model.hpp"

#include "slm/errors.hpp"

namespace slm {

GroupLayout GroupLayout::scalar(Index q) {
  std::vector<Index> idx(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) idx[static_cast<std::size_t>(i)] = i;
  return scalar(idx);
}

GroupLayout GroupLayout::scalar(const std::vector<Index>& potential_per_row) {
  GroupLayout out;
  out.offsets.resize(potential_per_row.size() + 1);
  for (std::size_t i = 0; i <= potential_per_row.size(); ++i) out.offsets[i] = static_cast<Index>(i);
  out.potential = potential_per_row;
  return out;
}

GroupLayout GroupLayout::from_sizes(const std::vector<Index>& sizes, std::vector<Index> potential) {
  if (sizes.size() != potential.size()) throw ShapeError("group layout: one potential per group");
  GroupLayout out;
  out.offsets.assign(1, 0);
  for (Index s : sizes) {
    if (s < 1) throw ShapeError("group layout: group sizes must be >= 1");
    out.offsets.push_back(out.offsets.back() + s);
  }
  out.potential = std::move(potential);
  return out;
}

GroupLayout GroupLayout::append(const GroupLayout& tail, Index potential_shift) const {
  GroupLayout out = *this;
  const Index base = rows();
  for (Index g = 0; g < tail.groups(); ++g) {
    out.offsets.push_back(base + tail.offsets[static_cast<std::size_t>(g) + 1]);
    out.potential.push_back(tail.potential[static_cast<std::size_t>(g)] + potential_shift);
  }
  return out;
}

Vector GroupLayout::sum_groups(const Vector& v) const {
  if (v.size() != rows()) throw ShapeError("sum_groups: length mismatch");
  Vector out(groups());
  for (Index g = 0; g < groups(); ++g) out[g] = v.segment(begin(g), size(g)).sum();
  return out;
}

Vector GroupLayout::expand(const Vector& per_group) const {
  if (per_group.size() != groups()) throw ShapeError("expand: length mismatch");
  Vector out(rows());
  for (Index g = 0; g < groups(); ++g) out.segment(begin(g), size(g)).setConstant(per_group[g]);
  return out;
}

void GroupLayout::validate(Index q, Index potential_count) const {
  if (offsets.empty() || offsets.front() != 0) throw ShapeError("group layout must start at row 0");
  if (offsets.size() != potential.size() + 1) throw ShapeError("group layout: offsets/potentials mismatch");
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    if (offsets[g + 1] <= offsets[g]) throw ShapeError("group layout: empty or unordered group");
  }
  if (rows() != q) {
    throw ShapeError("group layout covers " + std::to_string(rows()) + " rows, B has " +
                     std::to_string(q));
  }
  for (Index p : potential) {
    if (p < 0 || p >= potential_count) throw ShapeError("group layout references a missing potential");
  }
}

Vector ModelSpec::b_vector() const {
  Vector b = Vector::Zero(q());
  for (Index g = 0; g < groups(); ++g) {
    if (layout.size(g) == 1) b[layout.begin(g)] = potential(g).b;
  }
  return b;
}

void ModelSpec::validate() const {
  if (B.cols() != X.cols()) throw ShapeError("X and B must have the same number of columns");
  if (y.size() != X.rows()) throw ShapeError("y length must equal the number of rows of X");
  if (!(sigma2 > 0.0)) throw DomainError("noise variance must be positive");
  layout.validate(B.rows(), static_cast<Index>(potentials.size()));
  for (const auto& p : potentials) p.validate();
  for (Index g = 0; g < groups(); ++g) {
    if (layout.size(g) > 1 && potential(g).b != 0.0) {
      throw UnsupportedError("group potentials must be even");
    }
  }
}

}  // namespace slm
