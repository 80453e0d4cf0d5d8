#ifndef HAARLAB_FRAMES_HPP
#define HAARLAB_FRAMES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haarlab/gridfn.hpp"

namespace haarlab {

// Finite labelled family of grid functions on a common mesh.  Labels retain
// the originating (Q, k) where there is one; member order is part of the
// value and fixes every downstream iteration order.
struct FamilySpec {
  std::vector<GridFunction> members;
  std::vector<std::optional<HaarIndex>> labels;

  int size() const { return static_cast<int>(members.size()); }
  void push(GridFunction f, std::optional<HaarIndex> label);
  void validate() const;  // alignment_error on mesh mismatch
};

// Symmetric sparse matrix stored as full adjacency rows.
struct SparseSymMatrix {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  std::vector<double> multiply(const std::vector<double>& v) const;
  std::int64_t nonzero_count() const;
  double max_abs_off_diagonal() const;
  double min_diagonal() const;
  double entry(int i, int j) const;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  int iterations = 0;
  int restarts = 0;
  bool converged = true;
};

struct GramSummary {
  SparseSymMatrix gram;
  double bessel_bound = 0.0;  // top eigenvalue of the Gram matrix
  double ao_norm = 0.0;       // sqrt(bessel_bound)
  std::optional<double> schur_sq;
  int iterations = 0;
  int restarts = 0;
  double tolerance = 0.0;
};

// Gram matrix with entries <f_i, f_j>; pairs with disjoint support boxes are
// skipped as exact zeros.
SparseSymMatrix gram_matrix(const FamilySpec& family);

// Top eigenvalue via power iteration (residual |Gv - lambda v| <=
// rel_tol * lambda), randomized restarts on stagnation, deterministic given
// the seed.  Throws convergence_error when the budget is exhausted.
PowerIterationResult top_eigenvalue(const SparseSymMatrix& m,
                                    double rel_tol = 1e-10,
                                    std::uint64_t seed = 0x5eed);

// Smallest eigenvalue via power iteration on lambda_max * I - G (slow path,
// diagnostics and tests only).
double min_eigenvalue(const SparseSymMatrix& m, double rel_tol = 1e-10,
                      std::uint64_t seed = 0x5eed);

// Bessel bound B (optimal over the span) and its square root, the
// operator-norm measurement used throughout the experiments.
GramSummary gram_summary(const FamilySpec& family, double rel_tol = 1e-10,
                         std::uint64_t seed = 0x5eed);
double bessel_bound(const FamilySpec& family);
double ao_norm(const FamilySpec& family);

// Schur-test diagnostic against an orthonormal reference family that spans
// every member: with M(i,j) = |<family_i, reference_j>| this returns
// (max row sum) * (max column sum), an upper bound for the Bessel bound of
// the family restricted to the reference's span.
double schur_diagnostic(const FamilySpec& family, const FamilySpec& reference);

// Same diagnostic against the implicit orthonormal reference made of the
// normalized indicators of `tiles` plus all Haar functions on their
// sub-cubes down to min_scale.  References are never materialized: members
// are reduced to prefix sums and each reference contributes O(2^d) box
// sums, which is what makes resolution-scale reference depths affordable.
double schur_diagnostic_haar(const FamilySpec& family,
                             const std::vector<DyadicCube>& tiles,
                             int min_scale);

// Scale-0 tiling of the default window [-1,2)^d.
std::vector<DyadicCube> window_tiles(int dim);

using CoefficientVector = std::vector<double>;

// Analysis coefficients <f, member_i>.
CoefficientVector analyze(const GridFunction& f, const FamilySpec& family);

// Synthesis sum_i c_i member_i; coefficient count must match.
GridFunction synthesize(const CoefficientVector& coefficients,
                        const FamilySpec& family);

struct ReconstructionResult {
  GridFunction reconstruction;
  double relative_error = 0.0;  // |f - f*|_2 / |f|_2
};

// f* = synthesize(analyze(f, analysis), synthesis); throws domain_error for
// |f|_2 = 0.
ReconstructionResult reconstruct_error(const GridFunction& f,
                                       const FamilySpec& analysis,
                                       const FamilySpec& synthesis);

struct FrameBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// min/max over probes of sum_i |<p, member_i>|^2 / |p|^2.
FrameBounds frame_bounds_empirical(const FamilySpec& family,
                                   const std::vector<GridFunction>& probes);

using PerturbationMap = std::map<DyadicCube, AffinePerturbation, CubeLess>;

// Dyadic-average sensitivity: with g_Q the average of g over Q and g_Q* the
// average over the perturbed cube (indicator of Q composed with the map),
// returns (sum_Q |g_Q - g_Q*|^2 |Q|)^{1/2}.  Perturbed-cube measures are
// taken on the grid; a mapped cube of measure 0 throws degenerate_error.
double avg_square_function(const GridFunction& g, const PerturbationMap& map,
                           const std::vector<DyadicCube>& cubes);

// JSON/CSV export of a Gram summary (bounds + iteration metadata; sparse
// entries in coordinate format).
std::string gram_summary_to_json(const GramSummary& summary);
void write_gram_summary(const GramSummary& summary, const std::string& json_path,
                        const std::string& coo_csv_path);

} // namespace haarlab

#endif
