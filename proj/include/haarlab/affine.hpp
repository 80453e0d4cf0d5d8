#ifndef HAARLAB_AFFINE_HPP
#define HAARLAB_AFFINE_HPP

#include <vector>

#include "haarlab/dyadic.hpp"

namespace haarlab {

// Dense row-major d x d matrix.  Dimensions stay desk-sized (d <= ~8), so
// everything is direct arithmetic; no external linear algebra.
struct SquareMatrix {
  int dim = 0;
  std::vector<double> a;  // row-major, a[i*dim + j]

  SquareMatrix() = default;
  explicit SquareMatrix(int d) : dim(d), a(static_cast<size_t>(d) * d, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * dim + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * dim + j]; }

  static SquareMatrix identity(int d);

  std::vector<double> apply(const std::vector<double>& x) const;
  SquareMatrix times(const SquareMatrix& other) const;
  bool operator==(const SquareMatrix& o) const = default;
};

// Max absolute row sum (the operator norm for sup-norm vectors).
double inf_norm(const SquareMatrix& m);
double vector_inf_norm(const std::vector<double>& v);

struct LuFactors {
  SquareMatrix lower;  // unit diagonal
  SquareMatrix upper;
};

// Pivot-free Doolittle factorization A = L U with unit lower-triangular L.
// Intended for near-identity matrices, where it exists and satisfies
// max(|L - I|_inf, |U - I|_inf) <= eta/(1 - eta) when |A - I|_inf <= eta < 1.
// Throws factorization_error on a vanishing pivot.
LuFactors lu_factor(const SquareMatrix& a);

// Solves A x = b through the factors (forward then back substitution).
std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b);

enum class TelescopeDirection { upper, lower };

// Interpolating matrices between a triangular factor and the identity:
// upper: entries with min(i,j) <= k (1-based) replaced by delta(i,j);
// lower: entries with max(i,j) > d-k replaced by delta(i,j).
// k = 0 returns m unchanged, k = dim the identity.  Requires m triangular in
// the matching direction; throws domain_error otherwise.
SquareMatrix telescope(const SquareMatrix& m, int k, TelescopeDirection dir);

// det(m): diagonal product of the pivot-free LU when |m - I|_inf < 1,
// otherwise Gaussian elimination with partial pivoting.
double determinant(const SquareMatrix& m);

// Near-identity affine perturbation attached to a cube: the map
//   x -> x_Q + A (l(Q) y + x - x_Q)
// with budget |A - I|_inf + |y|_inf <= eta.  Construction validates the
// budget and the library-wide cap eta <= 1/2.
struct AffinePerturbation {
  SquareMatrix matrix;
  std::vector<double> translation;  // y, in units of l(Q)
  double eta = 0.0;

  AffinePerturbation() = default;
  AffinePerturbation(SquareMatrix a, std::vector<double> y, double budget);

  static AffinePerturbation identity(int dim);
  bool is_identity() const;
};

// Evaluates x_Q + A (l(Q) y + x - x_Q).
Point apply_map(const AffinePerturbation& p, const DyadicCube& cube,
                const Point& x);

} // namespace haarlab

#endif
