#include "slm/linops.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include "slm/errors.hpp"

namespace slm {

struct LinearOperator::State {
  Index rows = 0;
  Index cols = 0;
  Map forward;
  Map adjoint;
  std::string tag;

  std::once_flag dense_once;
  std::once_flag sparse_once;
  Matrix dense;
  SparseMatrix sparse;
  bool has_dense = false;
  bool has_sparse = false;
};

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorMatrix> as_image(const Vector& u, Index h, Index w) {
  return Eigen::Map<const RowMajorMatrix>(u.data(), h, w);
}

Vector from_image(const RowMajorMatrix& img) {
  return Eigen::Map<const Vector>(img.data(), img.size());
}

int log2_exact(Index n) {
  int l = 0;
  while ((Index{1} << l) < n) ++l;
  return (Index{1} << l) == n ? l : -1;
}

// One analysis step on the first len entries of x (len even).
void haar_step(double* x, Index len, Index stride, std::vector<double>& buf) {
  const double r = std::numbers::sqrt2 / 2.0;
  const Index half = len / 2;
  buf.resize(static_cast<std::size_t>(len));
  for (Index i = 0; i < half; ++i) {
    const double a = x[(2 * i) * stride];
    const double b = x[(2 * i + 1) * stride];
    buf[static_cast<std::size_t>(i)] = r * (a + b);
    buf[static_cast<std::size_t>(half + i)] = r * (a - b);
  }
  for (Index i = 0; i < len; ++i) x[i * stride] = buf[static_cast<std::size_t>(i)];
}

void haar_step_inverse(double* x, Index len, Index stride, std::vector<double>& buf) {
  const double r = std::numbers::sqrt2 / 2.0;
  const Index half = len / 2;
  buf.resize(static_cast<std::size_t>(len));
  for (Index i = 0; i < half; ++i) {
    const double a = x[i * stride];
    const double d = x[(half + i) * stride];
    buf[static_cast<std::size_t>(2 * i)] = r * (a + d);
    buf[static_cast<std::size_t>(2 * i + 1)] = r * (a - d);
  }
  for (Index i = 0; i < len; ++i) x[i * stride] = buf[static_cast<std::size_t>(i)];
}

void check_levels(Index n, int levels, int max_levels) {
  if (max_levels < 1) throw DomainError("Haar: side must be a power of two >= 2, got " + std::to_string(n));
  if (levels < 1 || levels > max_levels) {
    throw DomainError("Haar: levels must lie in [1, " + std::to_string(max_levels) + "]");
  }
}

}  // namespace

LinearOperator::LinearOperator() : LinearOperator(0, 0, {}, {}, "empty") {}

LinearOperator::LinearOperator(Index rows, Index cols, Map forward, Map adjoint, std::string tag)
    : state_(std::make_shared<State>()) {
  if (rows < 0 || cols < 0) throw ShapeError("operator dimensions must be nonnegative");
  state_->rows = rows;
  state_->cols = cols;
  state_->forward = std::move(forward);
  state_->adjoint = std::move(adjoint);
  state_->tag = std::move(tag);
}

Index LinearOperator::rows() const { return state_->rows; }
Index LinearOperator::cols() const { return state_->cols; }
const std::string& LinearOperator::tag() const { return state_->tag; }

Vector LinearOperator::apply(const Vector& u) const {
  if (u.size() != state_->cols) {
    throw ShapeError(state_->tag + ": forward input has length " + std::to_string(u.size()) +
                     ", expected " + std::to_string(state_->cols));
  }
  if (state_->rows == 0) return Vector(0);
  return state_->forward(u);
}

Vector LinearOperator::apply_adjoint(const Vector& v) const {
  if (v.size() != state_->rows) {
    throw ShapeError(state_->tag + ": adjoint input has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(state_->rows));
  }
  if (state_->rows == 0) return Vector::Zero(state_->cols);
  return state_->adjoint(v);
}

const Matrix& LinearOperator::dense() const {
  State& s = *state_;
  std::call_once(s.dense_once, [&] {
    if (s.has_dense) return;
    if (s.has_sparse) {
      s.dense = Matrix(s.sparse);
    } else {
      s.dense.resize(s.rows, s.cols);
      Vector e = Vector::Zero(s.cols);
      for (Index j = 0; j < s.cols; ++j) {
        e[j] = 1.0;
        s.dense.col(j) = apply(e);
        e[j] = 0.0;
      }
    }
    s.has_dense = true;
  });
  return s.dense;
}

const SparseMatrix& LinearOperator::sparse() const {
  State& s = *state_;
  std::call_once(s.sparse_once, [&] {
    if (s.has_sparse) return;
    std::vector<Eigen::Triplet<double>> triplets;
    if (s.has_dense) {
      for (Index j = 0; j < s.cols; ++j) {
        for (Index i = 0; i < s.rows; ++i) {
          if (s.dense(i, j) != 0.0) triplets.emplace_back(i, j, s.dense(i, j));
        }
      }
    } else {
      Vector e = Vector::Zero(s.cols);
      for (Index j = 0; j < s.cols; ++j) {
        e[j] = 1.0;
        const Vector col = apply(e);
        e[j] = 0.0;
        for (Index i = 0; i < s.rows; ++i) {
          if (col[i] != 0.0) triplets.emplace_back(i, j, col[i]);
        }
      }
    }
    s.sparse.resize(s.rows, s.cols);
    s.sparse.setFromTriplets(triplets.begin(), triplets.end());
    s.sparse.makeCompressed();
    s.has_sparse = true;
  });
  return s.sparse;
}

LinearOperator make_dense(Matrix m, std::string tag) {
  auto mat = std::make_shared<const Matrix>(std::move(m));
  LinearOperator op(
      mat->rows(), mat->cols(), [mat](const Vector& u) -> Vector { return *mat * u; },
      [mat](const Vector& v) -> Vector { return mat->transpose() * v; }, std::move(tag));
  op.state_->dense = *mat;
  op.state_->has_dense = true;
  return op;
}

LinearOperator make_dense(const std::vector<std::vector<double>>& rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != c) {
      throw FormatError("ragged matrix: row " + std::to_string(i) + " has " +
                        std::to_string(row.size()) + " entries, expected " + std::to_string(c));
    }
    for (Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return make_dense(std::move(m));
}

LinearOperator make_sparse(SparseMatrix m, std::string tag) {
  m.makeCompressed();
  auto mat = std::make_shared<const SparseMatrix>(std::move(m));
  LinearOperator op(
      mat->rows(), mat->cols(), [mat](const Vector& u) -> Vector { return *mat * u; },
      [mat](const Vector& v) -> Vector { return mat->transpose() * v; }, std::move(tag));
  op.state_->sparse = *mat;
  op.state_->has_sparse = true;
  return op;
}

LinearOperator make_identity(Index n) {
  auto id = [](const Vector& u) -> Vector { return u; };
  return LinearOperator(n, n, id, id, "identity");
}

LinearOperator make_empty(Index n) {
  return LinearOperator(
      0, n, [](const Vector&) -> Vector { return Vector(0); },
      [n](const Vector&) -> Vector { return Vector::Zero(n); }, "empty");
}

LinearOperator make_finite_difference_2d(Index height, Index width, Axis axis) {
  const bool horiz = axis == Axis::Horizontal;
  const Index along = horiz ? width : height;
  const Index across = horiz ? height : width;
  if (along < 2 || across < 1) {
    throw DomainError("finite differences need at least 2 pixels along the differenced axis");
  }
  const Index h = height;
  const Index w = width;
  const Index n = h * w;
  if (horiz) {
    auto fwd = [h, w](const Vector& u) -> Vector {
      const auto img = as_image(u, h, w);
      RowMajorMatrix out = img.rightCols(w - 1) - img.leftCols(w - 1);
      return from_image(out);
    };
    auto adj = [h, w](const Vector& v) -> Vector {
      const auto d = as_image(v, h, w - 1);
      RowMajorMatrix out = RowMajorMatrix::Zero(h, w);
      out.rightCols(w - 1) += d;
      out.leftCols(w - 1) -= d;
      return from_image(out);
    };
    return LinearOperator(h * (w - 1), n, fwd, adj, "dx");
  }
  auto fwd = [h, w](const Vector& u) -> Vector {
    const auto img = as_image(u, h, w);
    RowMajorMatrix out = img.bottomRows(h - 1) - img.topRows(h - 1);
    return from_image(out);
  };
  auto adj = [h, w](const Vector& v) -> Vector {
    const auto d = as_image(v, h - 1, w);
    RowMajorMatrix out = RowMajorMatrix::Zero(h, w);
    out.bottomRows(h - 1) += d;
    out.topRows(h - 1) -= d;
    return from_image(out);
  };
  return LinearOperator((h - 1) * w, n, fwd, adj, "dy");
}

std::vector<Index> isotropic_tv_group_sizes(Index height, Index width) {
  std::vector<Index> sizes(static_cast<std::size_t>((height - 1) * (width - 1)), 2);
  sizes.insert(sizes.end(), static_cast<std::size_t>((width - 1) + (height - 1)), 1);
  return sizes;
}

LinearOperator make_isotropic_tv_2d(Index height, Index width) {
  if (height < 2 || width < 2) throw DomainError("isotropic TV needs an image of at least 2x2");
  const Index h = height;
  const Index w = width;
  const Index pairs = (h - 1) * (w - 1);
  const Index rows = 2 * pairs + (w - 1) + (h - 1);
  auto fwd = [h, w, pairs](const Vector& u) -> Vector {
    Vector out(2 * pairs + (w - 1) + (h - 1));
    Index k = 0;
    for (Index r = 0; r + 1 < h; ++r) {
      for (Index c = 0; c + 1 < w; ++c) {
        const double x = u[r * w + c];
        out[k++] = u[r * w + c + 1] - x;
        out[k++] = u[(r + 1) * w + c] - x;
      }
    }
    for (Index c = 0; c + 1 < w; ++c) out[k++] = u[(h - 1) * w + c + 1] - u[(h - 1) * w + c];
    for (Index r = 0; r + 1 < h; ++r) out[k++] = u[(r + 1) * w + w - 1] - u[r * w + w - 1];
    return out;
  };
  auto adj = [h, w](const Vector& v) -> Vector {
    Vector out = Vector::Zero(h * w);
    Index k = 0;
    for (Index r = 0; r + 1 < h; ++r) {
      for (Index c = 0; c + 1 < w; ++c) {
        const double dx = v[k++];
        const double dy = v[k++];
        out[r * w + c + 1] += dx;
        out[(r + 1) * w + c] += dy;
        out[r * w + c] -= dx + dy;
      }
    }
    for (Index c = 0; c + 1 < w; ++c) {
      out[(h - 1) * w + c + 1] += v[k];
      out[(h - 1) * w + c] -= v[k++];
    }
    for (Index r = 0; r + 1 < h; ++r) {
      out[(r + 1) * w + w - 1] += v[k];
      out[r * w + w - 1] -= v[k++];
    }
    return out;
  };
  return LinearOperator(rows, h * w, fwd, adj, "tv-iso");
}

LinearOperator make_haar_1d(Index n, int levels) {
  check_levels(n, levels, log2_exact(n));
  auto fwd = [n, levels](const Vector& u) -> Vector {
    Vector x = u;
    std::vector<double> buf;
    for (int l = 0; l < levels; ++l) haar_step(x.data(), n >> l, 1, buf);
    return x;
  };
  auto adj = [n, levels](const Vector& v) -> Vector {
    Vector x = v;
    std::vector<double> buf;
    for (int l = levels - 1; l >= 0; --l) haar_step_inverse(x.data(), n >> l, 1, buf);
    return x;
  };
  return LinearOperator(n, n, fwd, adj, "haar1d");
}

LinearOperator make_haar_wavelet_2d(Index side, int levels) {
  check_levels(side, levels, log2_exact(side));
  const Index s = side;
  auto fwd = [s, levels](const Vector& u) -> Vector {
    RowMajorMatrix img = as_image(u, s, s);
    std::vector<double> buf;
    for (int l = 0; l < levels; ++l) {
      const Index len = s >> l;
      for (Index r = 0; r < len; ++r) haar_step(&img(r, 0), len, 1, buf);
      for (Index c = 0; c < len; ++c) haar_step(&img(0, c), len, s, buf);
    }
    return from_image(img);
  };
  auto adj = [s, levels](const Vector& v) -> Vector {
    RowMajorMatrix img = as_image(v, s, s);
    std::vector<double> buf;
    for (int l = levels - 1; l >= 0; --l) {
      const Index len = s >> l;
      for (Index c = 0; c < len; ++c) haar_step_inverse(&img(0, c), len, s, buf);
      for (Index r = 0; r < len; ++r) haar_step_inverse(&img(r, 0), len, 1, buf);
    }
    return from_image(img);
  };
  return LinearOperator(s * s, s * s, fwd, adj, "haar2d");
}

Matrix dct_matrix(Index n) {
  if (n < 1) throw DomainError("DCT size must be positive");
  Matrix d(n, n);
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double s1 = std::sqrt(2.0 / static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      d(k, i) = (k == 0 ? s0 : s1) *
                std::cos(std::numbers::pi * static_cast<double>((2 * i + 1) * k) /
                         static_cast<double>(2 * n));
    }
  }
  return d;
}

std::vector<Index> centered_frequency_order(Index width) {
  std::vector<Index> positions(static_cast<std::size_t>(width));
  for (Index c = 0; c < width; ++c) positions[static_cast<std::size_t>(c)] = c;
  const double center = 0.5 * static_cast<double>(width - 1);
  std::stable_sort(positions.begin(), positions.end(), [center](Index a, Index b) {
    return std::abs(static_cast<double>(a) - center) < std::abs(static_cast<double>(b) - center);
  });
  std::vector<Index> freq(static_cast<std::size_t>(width));
  for (Index rank = 0; rank < width; ++rank) {
    freq[static_cast<std::size_t>(positions[static_cast<std::size_t>(rank)])] = rank;
  }
  return freq;
}

LinearOperator make_dct_2d(Index height, Index width) {
  std::vector<Index> all(static_cast<std::size_t>(width));
  for (Index c = 0; c < width; ++c) all[static_cast<std::size_t>(c)] = c;
  // All columns in position order, re-laid out as r*w + c.
  const LinearOperator by_column = make_partial_orthotransform_2d(height, width, all);
  const Index h = height;
  const Index w = width;
  auto fwd = [by_column, h, w](const Vector& u) -> Vector {
    const Vector cols = by_column.apply(u);
    RowMajorMatrix out(h, w);
    for (Index c = 0; c < w; ++c) {
      for (Index r = 0; r < h; ++r) out(r, c) = cols[c * h + r];
    }
    return from_image(out);
  };
  auto adj = [by_column, h, w](const Vector& v) -> Vector {
    Vector cols(h * w);
    for (Index c = 0; c < w; ++c) {
      for (Index r = 0; r < h; ++r) cols[c * h + r] = v[r * w + c];
    }
    return by_column.apply_adjoint(cols);
  };
  return LinearOperator(h * w, h * w, fwd, adj, "dct2d");
}

LinearOperator make_partial_orthotransform_2d(Index height, Index width,
                                              const std::vector<Index>& columns) {
  if (height < 1 || width < 1) throw DomainError("transform dimensions must be positive");
  std::vector<bool> seen(static_cast<std::size_t>(width), false);
  for (Index c : columns) {
    if (c < 0 || c >= width) throw DomainError("column " + std::to_string(c) + " out of range");
    if (seen[static_cast<std::size_t>(c)]) {
      throw DomainError("column " + std::to_string(c) + " selected twice");
    }
    seen[static_cast<std::size_t>(c)] = true;
  }
  const Index h = height;
  const Index w = width;
  const Index k = static_cast<Index>(columns.size());
  if (k == 0) return make_empty(h * w);

  const std::vector<Index> freq = centered_frequency_order(w);
  auto dh = std::make_shared<const Matrix>(dct_matrix(h));
  // Rows of the width transform for the selected positions, stacked as columns (w x k).
  Matrix dw_sel(w, k);
  const Matrix dw = dct_matrix(w);
  for (Index j = 0; j < k; ++j) {
    dw_sel.col(j) = dw.row(freq[static_cast<std::size_t>(columns[static_cast<std::size_t>(j)])]).transpose();
  }
  auto sel = std::make_shared<const Matrix>(std::move(dw_sel));

  auto fwd = [dh, sel, h, w, k](const Vector& u) -> Vector {
    const auto img = as_image(u, h, w);
    const Matrix coeffs = (*dh) * (img * (*sel));  // h x k
    return Eigen::Map<const Vector>(coeffs.data(), h * k);  // column j -> rows j*h..
  };
  auto adj = [dh, sel, h, w, k](const Vector& v) -> Vector {
    const Eigen::Map<const Matrix> coeffs(v.data(), h, k);
    const RowMajorMatrix img = dh->transpose() * coeffs * sel->transpose();
    return from_image(img);
  };
  return LinearOperator(h * k, h * w, fwd, adj, "dct2d-partial");
}

LinearOperator stack(const std::vector<LinearOperator>& ops, std::vector<double> weights) {
  if (ops.empty()) throw ShapeError("stack: no operators");
  if (weights.empty()) weights.assign(ops.size(), 1.0);
  if (weights.size() != ops.size()) throw ShapeError("stack: one weight per block required");
  const Index n = ops.front().cols();
  Index rows = 0;
  std::string tag = "stack(";
  for (std::size_t b = 0; b < ops.size(); ++b) {
    if (ops[b].cols() != n) throw ShapeError("stack: column counts differ");
    rows += ops[b].rows();
    tag += (b ? "," : "") + ops[b].tag();
  }
  tag += ")";
  auto fwd = [ops, weights, rows](const Vector& u) -> Vector {
    Vector out(rows);
    Index off = 0;
    for (std::size_t b = 0; b < ops.size(); ++b) {
      const Index r = ops[b].rows();
      if (r > 0) out.segment(off, r) = weights[b] * ops[b].apply(u);
      off += r;
    }
    return out;
  };
  auto adj = [ops, weights, n](const Vector& v) -> Vector {
    Vector out = Vector::Zero(n);
    Index off = 0;
    for (std::size_t b = 0; b < ops.size(); ++b) {
      const Index r = ops[b].rows();
      if (r > 0) out += weights[b] * ops[b].apply_adjoint(v.segment(off, r));
      off += r;
    }
    return out;
  };
  return LinearOperator(rows, n, fwd, adj, tag);
}

LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner) {
  if (outer.cols() != inner.rows()) throw ShapeError("compose: inner rows != outer cols");
  return LinearOperator(
      outer.rows(), inner.cols(),
      [outer, inner](const Vector& u) -> Vector { return outer.apply(inner.apply(u)); },
      [outer, inner](const Vector& v) -> Vector {
        return inner.apply_adjoint(outer.apply_adjoint(v));
      },
      outer.tag() + "*" + inner.tag());
}

LinearOperator select_rows(const LinearOperator& op, const std::vector<Index>& rows) {
  for (Index r : rows) {
    if (r < 0 || r >= op.rows()) throw DomainError("select_rows: row index out of range");
  }
  const Index m = static_cast<Index>(rows.size());
  if (m == 0) return make_empty(op.cols());
  const Index full = op.rows();
  return LinearOperator(
      m, op.cols(),
      [op, rows, m](const Vector& u) -> Vector {
        const Vector all = op.apply(u);
        Vector out(m);
        for (Index i = 0; i < m; ++i) out[i] = all[rows[static_cast<std::size_t>(i)]];
        return out;
      },
      [op, rows, m, full](const Vector& v) -> Vector {
        Vector all = Vector::Zero(full);
        for (Index i = 0; i < m; ++i) all[rows[static_cast<std::size_t>(i)]] += v[i];
        return op.apply_adjoint(all);
      },
      op.tag() + "[rows]");
}

LinearOperator scale(const LinearOperator& op, double weight) {
  return LinearOperator(
      op.rows(), op.cols(), [op, weight](const Vector& u) -> Vector { return weight * op.apply(u); },
      [op, weight](const Vector& v) -> Vector { return weight * op.apply_adjoint(v); },
      op.tag());
}

double adjoint_gap(const LinearOperator& op, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    Vector u(op.cols());
    Vector v(op.rows());
    for (Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    const Vector au = op.apply(u);
    const Vector atv = op.apply_adjoint(v);
    const double gap = std::abs(au.dot(v) - u.dot(atv)) / (au.norm() * v.norm() + 1.0);
    worst = std::max(worst, gap);
  }
  return worst;
}

}  // namespace slm
