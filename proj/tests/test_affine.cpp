#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "haarlab/affine.hpp"
#include "haarlab/errors.hpp"
#include "haarlab/random.hpp"

using namespace haarlab;

namespace {

SquareMatrix random_near_identity(Rng& rng, int d, double eta) {
  SquareMatrix dev(d);
  double r = 0.0;
  do {
    for (double& v : dev.a) v = rng.uniform(-1.0, 1.0);
    r = inf_norm(dev);
  } while (r < 1e-9);
  SquareMatrix a = SquareMatrix::identity(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) += dev(i, j) * (eta / r);
  return a;
}

}  // namespace

TEST_CASE("inf_norm is the max absolute row sum") {
  SquareMatrix m(2);
  m(0, 0) = 1.0; m(0, 1) = -2.0;
  m(1, 0) = 0.5; m(1, 1) = 0.25;
  CHECK(inf_norm(m) == 3.0);
  CHECK(inf_norm(SquareMatrix(3)) == 0.0);
  CHECK(vector_inf_norm({-0.5, 0.25}) == 0.5);
}

TEST_CASE("LU of the identity and of a worked 2x2 example") {
  const auto id = lu_factor(SquareMatrix::identity(3));
  CHECK(id.lower == SquareMatrix::identity(3));
  CHECK(id.upper == SquareMatrix::identity(3));

  SquareMatrix a(2);
  a(0, 0) = 1.0; a(0, 1) = 0.1;
  a(1, 0) = 0.1; a(1, 1) = 1.0;
  const auto f = lu_factor(a);
  CHECK(f.lower(0, 0) == 1.0);
  CHECK(f.lower(0, 1) == 0.0);
  CHECK(f.lower(1, 0) == 0.1);
  CHECK(f.lower(1, 1) == 1.0);
  CHECK(f.upper(0, 0) == 1.0);
  CHECK(f.upper(0, 1) == 0.1);
  CHECK(f.upper(1, 0) == 0.0);
  CHECK(f.upper(1, 1) == 0.99);

  // Both factor deviations within eta/(1-eta) at eta = 0.1.
  SquareMatrix dl = f.lower, du = f.upper;
  for (int i = 0; i < 2; ++i) { dl(i, i) -= 1.0; du(i, i) -= 1.0; }
  const double bound = 0.1 / 0.9;
  CHECK(inf_norm(dl) <= bound);
  CHECK(inf_norm(du) <= bound);
}

TEST_CASE("LU factor deviations obey eta/(1-eta) over random near-identity draws") {
  Rng rng(0xabcdef);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(2, 6));
    const double eta = rng.uniform(0.01, 0.5);
    const SquareMatrix a = random_near_identity(rng, d, eta);

    const auto f = lu_factor(a);
    SquareMatrix recon = f.lower.times(f.upper);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) recon(i, j) -= a(i, j);
    CHECK(inf_norm(recon) <= 1e-12);

    SquareMatrix dl = f.lower, du = f.upper;
    for (int i = 0; i < d; ++i) { dl(i, i) -= 1.0; du(i, i) -= 1.0; }
    const double dev = std::max(inf_norm(dl), inf_norm(du));
    CHECK(dev <= eta / (1.0 - eta) + 1e-12);
    CHECK(dev <= 2.0 * eta + 1e-12);  // follows for eta <= 1/2
  }
}

TEST_CASE("vanishing pivot throws") {
  SquareMatrix a(2);
  a(0, 0) = 0.0; a(0, 1) = 1.0;
  a(1, 0) = 1.0; a(1, 1) = 0.0;
  CHECK_THROWS_AS(lu_factor(a), factorization_error);
}

TEST_CASE("lu_solve round-trips random systems") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(1, 6));
    const SquareMatrix a = random_near_identity(rng, d, 0.4);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const std::vector<double> b = a.apply(x);
    const std::vector<double> got = lu_solve(lu_factor(a), b);
    for (int i = 0; i < d; ++i)
      CHECK(got[static_cast<std::size_t>(i)] ==
            doctest::Approx(x[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("telescope endpoints and the d=3 single-step example") {
  Rng rng(5);
  SquareMatrix u(3);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) u(i, j) = rng.uniform(0.5, 1.5);

  CHECK(telescope(u, 0, TelescopeDirection::upper) == u);
  CHECK(telescope(u, 3, TelescopeDirection::upper) == SquareMatrix::identity(3));

  // k=1: first row and column from the identity, lower-right block kept.
  SquareMatrix want = u;
  want(0, 0) = 1.0; want(0, 1) = 0.0; want(0, 2) = 0.0;
  want(1, 0) = 0.0; want(2, 0) = 0.0;
  CHECK(telescope(u, 1, TelescopeDirection::upper) == want);

  SquareMatrix l(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = rng.uniform(0.5, 1.5);
  CHECK(telescope(l, 0, TelescopeDirection::lower) == l);
  CHECK(telescope(l, 3, TelescopeDirection::lower) == SquareMatrix::identity(3));

  // Non-triangular input is rejected.
  SquareMatrix full = SquareMatrix::identity(2);
  full(1, 0) = 0.5; full(0, 1) = 0.5;
  CHECK_THROWS_AS(telescope(full, 1, TelescopeDirection::upper), domain_error);
}

TEST_CASE("telescope interpolants move by at most one eliminated entry per step") {
  // Successive telescopes differ only in row/column k, so the sup-norm gap
  // between steps stays within the largest eliminated entry.
  Rng rng(99);
  SquareMatrix u = SquareMatrix::identity(4);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) u(i, j) += rng.uniform(-0.2, 0.2);
  double emax = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      emax = std::max(emax, std::fabs(u(i, j) - (i == j ? 1.0 : 0.0)));
  for (int k = 0; k < 4; ++k) {
    SquareMatrix a = telescope(u, k, TelescopeDirection::upper);
    SquareMatrix b = telescope(u, k + 1, TelescopeDirection::upper);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) -= b(i, j);
    CHECK(inf_norm(a) <= 4 * emax + 1e-15);
  }
}

TEST_CASE("determinant: identity, triangular, and the near-identity bound") {
  CHECK(determinant(SquareMatrix::identity(4)) == 1.0);

  SquareMatrix t(3);
  t(0, 0) = 2.0; t(0, 1) = 5.0; t(0, 2) = -1.0;
  t(1, 1) = 0.5; t(1, 2) = 3.0;
  t(2, 2) = -4.0;
  CHECK(determinant(t) == doctest::Approx(-4.0).epsilon(1e-14));

  Rng rng(0x7777);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(1, 6));
    const double eta = rng.uniform(0.01, 0.5);
    const SquareMatrix a = random_near_identity(rng, d, eta);
    CHECK(std::fabs(1.0 - determinant(a)) <=
          std::exp(4.0 * d * eta) - 1.0 + 1e-12);
  }

  // Swapped rows: partial pivoting must recover the sign.
  SquareMatrix sw(2);
  sw(0, 1) = 1.0; sw(1, 0) = 1.0;
  CHECK(determinant(sw) == -1.0);
}

TEST_CASE("apply_map: identity, pure translation, and budget validation") {
  const DyadicCube q = unit_cube(1);
  const AffinePerturbation none = AffinePerturbation::identity(1);
  CHECK(none.is_identity());
  CHECK(apply_map(none, q, {0.3})[0] == 0.3);

  const AffinePerturbation shift(SquareMatrix::identity(1), {0.1}, 0.1);
  CHECK(apply_map(shift, q, {0.25})[0] == doctest::Approx(0.35).epsilon(1e-15));

  // l(Q) scales the translation: same map on [0,2) moves twice as far.
  const DyadicCube big{1, 1, {0}};
  CHECK(apply_map(shift, big, {0.25})[0] == doctest::Approx(0.45).epsilon(1e-15));

  // The map fixes x_Q when y = 0.
  SquareMatrix a = SquareMatrix::identity(1);
  a(0, 0) = 1.25;
  const AffinePerturbation dil(a, {0.0}, 0.25);
  CHECK(apply_map(dil, q, {0.5})[0] == 0.5);
  CHECK(apply_map(dil, q, {0.9})[0] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(AffinePerturbation(SquareMatrix::identity(1), {0.4}, 0.2),
                  domain_error);
  CHECK_THROWS_AS(AffinePerturbation(SquareMatrix::identity(1), {0.6}, 0.6),
                  domain_error);
}
