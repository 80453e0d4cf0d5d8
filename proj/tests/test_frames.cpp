#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "haarlab/dyadic.hpp"
#include "haarlab/errors.hpp"
#include "haarlab/frames.hpp"
#include "haarlab/gridfn.hpp"
#include "haarlab/random.hpp"

using namespace haarlab;

namespace {

FamilySpec haar_family(int dim, int J, int min_scale) {
  const Box window = default_window(dim, J);
  FamilySpec family;
  for (const HaarIndex& idx : enumerate_window(unit_cube(dim), min_scale))
    family.push(from_haar(idx, J, window), idx);
  return family;
}

// Every cube translated by the same -eta: the breakpoint-crossing family.
FamilySpec translated_difference_family(int J, int min_scale, double eta) {
  const Box window = default_window(1, J);
  FamilySpec family;
  for (const DyadicCube& q : cube_window(unit_cube(1), min_scale)) {
    const AffinePerturbation p(SquareMatrix::identity(1), {-eta}, eta);
    for (unsigned k = 1; k < 2; ++k) {
      GridFunction member = from_haar(HaarIndex{q, k}, J, window);
      member.add_scaled(perturb(member, q, p), -1.0);
      member.shrink_support();
      family.push(std::move(member), HaarIndex{q, k});
    }
  }
  return family;
}

}  // namespace

TEST_CASE("sparse matrix plumbing and the 2x2 eigenvalue") {
  SparseSymMatrix m;
  m.n = 2;
  m.rows = {{{0, 2.0}, {1, 1.0}}, {{0, 1.0}, {1, 2.0}}};
  CHECK(m.entry(0, 1) == 1.0);
  CHECK(m.entry(1, 1) == 2.0);
  CHECK(m.nonzero_count() == 4);
  CHECK(m.max_abs_off_diagonal() == 1.0);
  CHECK(m.min_diagonal() == 2.0);
  const auto mv = m.multiply({1.0, -1.0});
  CHECK(mv[0] == 1.0);
  CHECK(mv[1] == -1.0);

  const auto top = top_eigenvalue(m);
  CHECK(top.converged);
  CHECK(top.eigenvalue == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(min_eigenvalue(m) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Haar family Gram is the identity") {
  for (int dim : {1, 2}) {
    const FamilySpec family = haar_family(dim, dim == 1 ? 6 : 5, -2);
    const SparseSymMatrix gram = gram_matrix(family);
    CHECK(gram.max_abs_off_diagonal() <= 1e-13);
    CHECK(gram.min_diagonal() == doctest::Approx(1.0).epsilon(1e-12));
    const GramSummary s = gram_summary(family);
    CHECK(s.bessel_bound == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.ao_norm == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("single member and duplicated member Gram spectra") {
  const Box window = default_window(1, 5);
  GridFunction f = from_haar(HaarIndex{unit_cube(1), 1}, 5, window);
  f.scale(0.5);  // norm 1/2, so B = 1/4 for the singleton

  FamilySpec solo;
  solo.push(f, HaarIndex{unit_cube(1), 1});
  const SparseSymMatrix g1 = gram_matrix(solo);
  CHECK(g1.n == 1);
  CHECK(g1.entry(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(bessel_bound(solo) == doctest::Approx(0.25).epsilon(1e-10));

  FamilySpec twice;
  twice.push(f, std::nullopt);
  twice.push(f, std::nullopt);
  const SparseSymMatrix g2 = gram_matrix(twice);
  CHECK(bessel_bound(twice) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(min_eigenvalue(g2) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(ao_norm(twice) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));
}

TEST_CASE("family validation rejects mesh mismatches") {
  FamilySpec family;
  family.push(GridFunction(1, 4, default_window(1, 4)), std::nullopt);
  family.push(GridFunction(1, 5, default_window(1, 5)), std::nullopt);
  CHECK_THROWS_AS(family.validate(), alignment_error);
  CHECK_THROWS_AS(gram_matrix(family), alignment_error);
}

TEST_CASE("analyze and synthesize on the Haar basis") {
  const FamilySpec family = haar_family(1, 6, -3);
  const Box window = default_window(1, 6);

  // A member analyzes to its standard basis vector.
  const CoefficientVector e =
      analyze(from_haar(HaarIndex{unit_cube(1), 1}, 6, window), family);
  for (std::size_t i = 0; i < e.size(); ++i)
    CHECK(e[i] == doctest::Approx(i == 0 ? 1.0 : 0.0).epsilon(1e-14));

  // Zero analyzes to zero.
  for (double c : analyze(GridFunction(1, 6, window), family))
    CHECK(c == 0.0);

  // A standard basis vector synthesizes back to the member.
  CoefficientVector basis(static_cast<std::size_t>(family.size()), 0.0);
  basis[3] = 1.0;
  const GridFunction back = synthesize(basis, family);
  GridFunction diff = back;
  diff.add_scaled(family.members[3], -1.0);
  CHECK(l2_norm(diff) == 0.0);

  // Parseval on random span elements.
  Rng rng(2024);
  for (int t = 0; t < 20; ++t) {
    CoefficientVector c(static_cast<std::size_t>(family.size()));
    for (double& v : c) v = rng.normal();
    const GridFunction f = synthesize(c, family);
    const CoefficientVector got = analyze(f, family);
    double sum = 0.0;
    for (double v : got) sum += v * v;
    const double n2 = l2_norm(f) * l2_norm(f);
    CHECK(sum == doctest::Approx(n2).epsilon(1e-10));
  }

  CHECK_THROWS_AS(synthesize(CoefficientVector{1.0}, family), domain_error);
}

TEST_CASE("synthesis norm is controlled by the AO norm") {
  const FamilySpec family = translated_difference_family(8, -2, 0.03125);
  const double delta = ao_norm(family);
  Rng rng(55);
  for (int t = 0; t < 10; ++t) {
    CoefficientVector c(static_cast<std::size_t>(family.size()));
    double norm2 = 0.0;
    for (double& v : c) {
      v = rng.normal();
      norm2 += v * v;
    }
    for (double& v : c) v /= std::sqrt(norm2);  // unit coefficient vector
    CHECK(l2_norm(synthesize(c, family)) <= delta + 1e-12);
  }
}

TEST_CASE("reconstruction: identity family is exact, perturbed family is bounded") {
  const FamilySpec haar = haar_family(1, 8, -3);
  Rng rng(9);
  CoefficientVector c(static_cast<std::size_t>(haar.size()));
  for (double& v : c) v = rng.normal();
  const GridFunction f = synthesize(c, haar);
  const ReconstructionResult same = reconstruct_error(f, haar, haar);
  CHECK(same.relative_error <= 1e-12);

  // Perturbed analysis = synthesis family, exact dyadic translations.
  const double eta = 0.03125;
  const Box window = default_window(1, 8);
  FamilySpec perturbed;
  for (const HaarIndex& idx : enumerate_window(unit_cube(1), -3)) {
    const AffinePerturbation p(SquareMatrix::identity(1), {-eta}, eta);
    GridFunction member = from_haar(idx, 8, window);
    perturbed.push(perturb(member, idx.cube, p), idx);
  }
  const FamilySpec diff = translated_difference_family(8, -3, eta);
  const double delta = ao_norm(diff);
  REQUIRE(delta < 1.0);
  const ReconstructionResult r = reconstruct_error(f, perturbed, perturbed);
  CHECK(r.relative_error <= delta * (2.0 + delta) + 0.02);

  const std::vector<GridFunction> probes = {f};
  const FrameBounds fb = frame_bounds_empirical(perturbed, probes);
  CHECK(fb.lower >= (1.0 - delta) * (1.0 - delta) - 0.02);
  CHECK(fb.upper <= (1.0 + delta) * (1.0 + delta) + 0.02);

  CHECK_THROWS_AS(reconstruct_error(GridFunction(1, 8, window), haar, haar),
                  domain_error);
}

TEST_CASE("orthonormal frame bounds are exactly one on span probes") {
  const FamilySpec family = haar_family(1, 6, -2);
  Rng rng(77);
  std::vector<GridFunction> probes;
  for (int t = 0; t < 5; ++t) {
    CoefficientVector c(static_cast<std::size_t>(family.size()));
    for (double& v : c) v = rng.normal();
    probes.push_back(synthesize(c, family));
  }
  const FrameBounds fb = frame_bounds_empirical(family, probes);
  CHECK(fb.lower == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fb.upper == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Schur diagnostic dominates the Bessel bound") {
  const FamilySpec family = haar_family(1, 7, -2);
  const double viaTiles = schur_diagnostic_haar(family, {unit_cube(1)}, -6);
  CHECK(viaTiles == doctest::Approx(1.0).epsilon(1e-12));

  // Explicit reference built from the same orthonormal system.
  FamilySpec reference = haar_family(1, 7, -6);
  GridFunction flat = indicator(unit_cube(1), 7, default_window(1, 7));
  reference.push(std::move(flat), std::nullopt);
  CHECK(schur_diagnostic(family, reference) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Schur diagnostic of a difference family decays linearly in eta") {
  const int J = 10, ms = -2;
  const double eta = 0.0625;
  const FamilySpec fine = translated_difference_family(J, ms, eta / 4.0);
  const FamilySpec coarse = translated_difference_family(J, ms, eta);
  const double s_fine = schur_diagnostic_haar(fine, window_tiles(1), 1 - J);
  const double s_coarse = schur_diagnostic_haar(coarse, window_tiles(1), 1 - J);

  CHECK(bessel_bound(fine) <= s_fine + 1e-10);
  CHECK(bessel_bound(coarse) <= s_coarse + 1e-10);
  CHECK(s_fine <= 0.4 * s_coarse);        // linear decay, not sqrt
  CHECK(s_coarse <= 32.0 * eta);          // absolute-constant sanity cap
}

TEST_CASE("window tiles cover the default window at scale zero") {
  const auto t1 = window_tiles(1);
  CHECK(t1.size() == 3);
  const auto t2 = window_tiles(2);
  CHECK(t2.size() == 9);
  for (const auto& q : t2) {
    CHECK(q.scale == 0);
    CHECK(q.lower(0) >= -1.0);
    CHECK(q.upper(0) <= 2.0);
  }
}

TEST_CASE("average square function: identity, sharpness value, overflow naming") {
  const int J = 8;
  const Box window = default_window(1, J);
  const std::vector<DyadicCube> cubes = cube_window(unit_cube(1), -3);

  Rng rng(4);
  GridFunction g(1, J, window);
  g.reset_support(cube_cells(unit_cube(1), J));
  for (double& v : g.values()) v = rng.uniform(-1.0, 1.0);

  PerturbationMap still;
  for (const DyadicCube& q : cubes) still.emplace(q, AffinePerturbation::identity(1));
  CHECK(avg_square_function(g, still, cubes) == 0.0);

  // The sharpness construction: g = indicator of [0, eta), only the root
  // perturbed, result exactly eta.
  const double eta = 0.03125;
  const GridFunction chi = indicator(DyadicCube{1, -5, {0}}, J, window);
  PerturbationMap slide;
  slide.emplace(unit_cube(1),
                AffinePerturbation(SquareMatrix::identity(1), {-eta}, eta));
  CHECK(avg_square_function(chi, slide, cubes) == eta);

  // Overflow inside the averaging names the offending cube.
  const DyadicCube edge{1, 0, {1}};
  PerturbationMap off;
  off.emplace(edge, AffinePerturbation(SquareMatrix::identity(1), {-0.5}, 0.5));
  try {
    avg_square_function(g, off, {edge});
    FAIL("expected window_overflow_error");
  } catch (const window_overflow_error& e) {
    const std::string what = e.what();
    CHECK(what.find("corner=[1]") != std::string::npos);
    CHECK(what.find("scale=0") != std::string::npos);
  }
}

TEST_CASE("gram summary export round-trips through JSON and COO") {
  const FamilySpec family = haar_family(1, 5, -1);
  GramSummary s = gram_summary(family);
  const std::string text = gram_summary_to_json(s);
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("bessel_bound").get<double>() ==
        doctest::Approx(s.bessel_bound).epsilon(1e-15));
  CHECK(j.at("ao_norm").get<double>() ==
        doctest::Approx(s.ao_norm).epsilon(1e-15));

  const std::string dir = "gram_scratch";
  std::filesystem::create_directories(dir);
  write_gram_summary(s, dir + "/summary.json", dir + "/gram.csv");
  std::ifstream coo(dir + "/gram.csv");
  REQUIRE(coo.good());
  std::string line;
  std::int64_t rows = 0;
  while (std::getline(coo, line))
    if (!line.empty()) ++rows;
  std::int64_t upper = 0;  // file stores the upper triangle only
  for (int i = 0; i < s.gram.n; ++i)
    for (const auto& [j, v] : s.gram.rows[i])
      if (j >= i) ++upper;
  CHECK(rows == upper + 1);  // header plus one line per stored entry
  std::filesystem::remove_all(dir);
}
