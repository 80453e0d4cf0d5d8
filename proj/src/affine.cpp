#include "haarlab/affine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "haarlab/errors.hpp"

namespace haarlab {

namespace {

void check_square(const SquareMatrix& m) {
  if (m.dim < 1) throw domain_error("matrix dim must be >= 1");
  if (m.a.size() != static_cast<std::size_t>(m.dim) * m.dim)
    throw domain_error("matrix storage does not match dim");
}

} // namespace

SquareMatrix SquareMatrix::identity(int dim) {
  if (dim < 1) throw domain_error("matrix dim must be >= 1");
  SquareMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> SquareMatrix::apply(const std::vector<double>& x) const {
  check_square(*this);
  if (static_cast<int>(x.size()) != dim)
    throw domain_error("vector dim does not match matrix dim");
  std::vector<double> y(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

SquareMatrix SquareMatrix::times(const SquareMatrix& rhs) const {
  check_square(*this);
  check_square(rhs);
  if (dim != rhs.dim) throw domain_error("matrix dims do not match");
  SquareMatrix out(dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const double v = (*this)(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < dim; ++j) out(i, j) += v * rhs(k, j);
    }
  return out;
}

double inf_norm(const SquareMatrix& m) {
  check_square(m);
  double worst = 0.0;
  for (int i = 0; i < m.dim; ++i) {
    double row = 0.0;
    for (int j = 0; j < m.dim; ++j) row += std::abs(m(i, j));
    worst = std::max(worst, row);
  }
  return worst;
}

double vector_inf_norm(const std::vector<double>& v) {
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x));
  return worst;
}

LuFactors lu_factor(const SquareMatrix& m) {
  check_square(m);
  const int d = m.dim;
  LuFactors f{SquareMatrix::identity(d), SquareMatrix::identity(d)};
  SquareMatrix& l = f.lower;
  SquareMatrix& u = f.upper;
  const double pivot_floor = 1e-14 * (1.0 + inf_norm(m));
  for (int k = 0; k < d; ++k) {
    for (int j = k; j < d; ++j) {
      double s = m(k, j);
      for (int t = 0; t < k; ++t) s -= l(k, t) * u(t, j);
      u(k, j) = s;
    }
    if (std::abs(u(k, k)) <= pivot_floor)
      throw factorization_error("pivot " + std::to_string(k) +
                                " vanished in pivot-free elimination");
    for (int i = k + 1; i < d; ++i) {
      double s = m(i, k);
      for (int t = 0; t < k; ++t) s -= l(i, t) * u(t, k);
      l(i, k) = s / u(k, k);
    }
  }
  return f;
}

std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b) {
  const int d = f.lower.dim;
  if (static_cast<int>(b.size()) != d)
    throw domain_error("rhs dim does not match factor dim");
  std::vector<double> y(b);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) y[i] -= f.lower(i, j) * y[j];
  for (int i = d - 1; i >= 0; --i) {
    for (int j = i + 1; j < d; ++j) y[i] -= f.upper(i, j) * y[j];
    y[i] /= f.upper(i, i);
  }
  return y;
}

SquareMatrix telescope(const SquareMatrix& m, int k, TelescopeDirection dir) {
  check_square(m);
  const int d = m.dim;
  if (k < 0 || k > d) throw domain_error("telescope stage must lie in [0, dim]");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const bool off = (dir == TelescopeDirection::upper) ? (i > j) : (i < j);
      if (off && m(i, j) != 0.0)
        throw domain_error("telescope input is not triangular in the stated direction");
    }
  SquareMatrix out = m;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      // stage k freezes rows/columns by position: upper direction replaces
      // entries with min(i,j) < k, lower direction those with max(i,j) >= d-k.
      const bool frozen = (dir == TelescopeDirection::upper)
                              ? (std::min(i, j) < k)
                              : (std::max(i, j) >= d - k);
      if (frozen) out(i, j) = (i == j) ? 1.0 : 0.0;
    }
  return out;
}

double determinant(const SquareMatrix& m) {
  check_square(m);
  const int d = m.dim;
  SquareMatrix dev = m;
  for (int i = 0; i < d; ++i) dev(i, i) -= 1.0;
  if (inf_norm(dev) < 1.0) {
    // strictly diagonally dominant: pivot-free elimination cannot break down
    const LuFactors f = lu_factor(m);
    double det = 1.0;
    for (int i = 0; i < d; ++i) det *= f.upper(i, i);
    return det;
  }
  SquareMatrix w = m;
  double det = 1.0;
  for (int k = 0; k < d; ++k) {
    int p = k;
    for (int i = k + 1; i < d; ++i)
      if (std::abs(w(i, k)) > std::abs(w(p, k))) p = i;
    if (w(p, k) == 0.0) return 0.0;
    if (p != k) {
      for (int j = 0; j < d; ++j) std::swap(w(p, j), w(k, j));
      det = -det;
    }
    det *= w(k, k);
    for (int i = k + 1; i < d; ++i) {
      const double r = w(i, k) / w(k, k);
      for (int j = k; j < d; ++j) w(i, j) -= r * w(k, j);
    }
  }
  return det;
}

AffinePerturbation::AffinePerturbation(SquareMatrix matrix_in,
                                       std::vector<double> translation_in,
                                       double eta_in)
    : matrix(std::move(matrix_in)),
      translation(std::move(translation_in)),
      eta(eta_in) {
  check_square(matrix);
  if (static_cast<int>(translation.size()) != matrix.dim)
    throw domain_error("translation dim does not match matrix dim");
  if (!(eta >= 0.0) || eta > 0.5 + 1e-15)
    throw domain_error("perturbation size must lie in [0, 1/2]");
  SquareMatrix dev = matrix;
  for (int i = 0; i < matrix.dim; ++i) dev(i, i) -= 1.0;
  const double used = inf_norm(dev) + vector_inf_norm(translation);
  if (used > eta + 1e-12)
    throw domain_error("matrix and translation exceed the stated budget");
}

AffinePerturbation AffinePerturbation::identity(int dim) {
  return AffinePerturbation(SquareMatrix::identity(dim),
                            std::vector<double>(dim, 0.0), 0.0);
}

bool AffinePerturbation::is_identity() const {
  for (int i = 0; i < matrix.dim; ++i) {
    if (translation[i] != 0.0) return false;
    for (int j = 0; j < matrix.dim; ++j)
      if (matrix(i, j) != ((i == j) ? 1.0 : 0.0)) return false;
  }
  return true;
}

Point apply_map(const AffinePerturbation& p, const DyadicCube& cube,
                const Point& x) {
  const int d = cube.dim;
  if (p.matrix.dim != d) throw domain_error("perturbation dim does not match cube");
  if (static_cast<int>(x.size()) != d)
    throw domain_error("point dim does not match cube dim");
  const double side = cube.side_length();
  std::vector<double> z(d);
  for (int i = 0; i < d; ++i)
    z[i] = side * p.translation[i] + (x[i] - cube.center(i));
  std::vector<double> az = p.matrix.apply(z);
  Point out(d);
  for (int i = 0; i < d; ++i) out[i] = cube.center(i) + az[i];
  return out;
}

} // namespace haarlab
