#ifndef HAARLAB_LABCLI_HPP
#define HAARLAB_LABCLI_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "haarlab/frames.hpp"

namespace haarlab {

// Experiment names accepted by run() and the CLI.
extern const std::vector<std::string> kExperimentNames;

struct ExperimentConfig {
  std::string experiment;
  int dim = 1;
  int resolution = 10;        // mesh exponent J
  int min_scale = -3;         // cubes span scales [min_scale, 0]
  std::vector<double> eta_list;
  std::uint64_t seed = 0x11aa22bb33cc44ddull;
  std::string kernel = "box";     // box | bump | path to a CSV sample table
  std::string out_dir = ".";
  bool align = true;          // round perturbations onto the mesh
  int trials = 200;           // randomized-suite repetitions
  int probes = 20;

  // Parses + validates; config_error messages name the offending field.
  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  void validate() const;
  MollifierSpec kernel_spec() const;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log2 coordinates
  double residual_rms = 0.0;
  int points = 0;
};

// Least squares on (log2 eta, log2 value).  Requires >= 3 etas spanning >= 2
// octaves (domain_error) and measurements above 1e-13 (underflow_error when
// every one is below).
SlopeFit fit_loglog(const std::vector<double>& etas,
                    const std::vector<double>& values);

// Perturbation scenarios.  `align` rounds parameters to the largest
// mesh-representable magnitudes at or below the drawn ones, so that mapped
// breakpoints land on cell boundaries and quadrature stays exact; fine
// scales whose rounding unit exceeds eta degenerate to the identity.
//   identity          A = I, y = 0
//   translation-only  y uniform in [-eta,eta]^d, rounded per cube
//   diagonal          reciprocal-dyadic dilations about x_Q (y = 0)
//   shear             single off-diagonal entry +-eta
//   general           random A and y with |A-I|_inf + |y|_inf = eta exactly
//   adversarial-1d    translation by exactly eta (crosses the midpoint)
struct PerturbationGenerator {
  std::string name;
  int dim = 1;
  double eta = 0.0;
  std::uint64_t seed = 0;
  int resolution = 10;
  bool align = true;

  AffinePerturbation operator()(const DyadicCube& cube) const;
  PerturbationMap materialize(const std::vector<DyadicCube>& cubes) const;
};

PerturbationGenerator make_generator(const std::string& name, int dim,
                                     double eta, std::uint64_t seed,
                                     int resolution, bool align);

// One measured point of an eta sweep.
struct SweepPoint {
  double eta = 0.0;
  double measurement = 0.0;      // AO norm of the difference family
  double ratio_to_sqrt_eta = 0.0;
  double bessel = 0.0;
  int members = 0;
};

struct SweepResult {
  std::string scenario;
  std::vector<SweepPoint> points;
  SlopeFit fit;
  double c_meas = 0.0;  // max over points of measurement / sqrt(eta)
};

// Hook invoked with every difference family right after measurement; the
// acceptance suite uses it for Schur-dominance and truncation checks.
using FamilyHook = std::function<void(const FamilySpec&, const SweepPoint&,
                                      const std::string& scenario)>;

// For each eta: build the family
//   { h_(Q),k - |A_Q| * h_(Q),k o map_Q }  over (Q,k) in [0,1)^d,
// scales [min_scale, 0], measure its AO norm, then fit the log-log slope.
SweepResult sweep_eta(const std::string& scenario, int dim, int resolution,
                      int min_scale, const std::vector<double>& eta_list,
                      std::uint64_t seed, bool align,
                      const FamilyHook& hook = nullptr);

// Mollified-system report for one (dim, eta, kernel): support containment in
// (1+2 eta)Q, the empirical equality radius (max distance from the
// discontinuity set at which the mollified function still differs from the
// Haar function, in units of eta*l(Q)), the AO norm of {h - h*psi}, and the
// two-sided rescaling-identity discrepancy at random points.
struct MollifyReport {
  double eta = 0.0;
  std::string kernel;
  bool support_ok = true;
  double equality_radius = 0.0;       // in units of eta * l(Q)
  double max_violation_distance = 0.0;  // abs distance of the worst unequal cell
  double ao_norm = 0.0;
  double self_similarity_discrepancy = 0.0;
  int members = 0;
};

MollifyReport mollified_frame_report(int dim, int resolution, int min_scale,
                                     double eta, const MollifierSpec& kernel,
                                     std::uint64_t seed,
                                     const FamilyHook& hook = nullptr);

// ---- experiment drivers (shared by run() and the acceptance suite) ----

struct OrthonormalityOutcome {
  double max_off_diagonal = 0.0;
  double bessel_deviation = 0.0;    // |B - 1|
  double max_parseval_error = 0.0;  // relative, over probes
  int members = 0;
  bool pass = false;
};
OrthonormalityOutcome run_orthonormality(int dim, int resolution, int min_scale,
                                         int probes, std::uint64_t seed);

struct LuSuiteOutcome {
  double max_reconstruction_error = 0.0;
  double max_deviation_slack = 0.0;  // max over trials of dev - eta/(1-eta)
  double max_det_slack = 0.0;        // max of |1-det| - (exp(4 d eta) - 1)
  int trials = 0;
  bool pass = false;
};
LuSuiteOutcome run_lu_suite(const std::vector<int>& dims,
                            const std::vector<double>& etas, int trials_per_cell,
                            std::uint64_t seed);

struct SharpnessOutcome {
  std::vector<double> etas;
  std::vector<double> ratios;  // result / (sqrt(eta) * |g|_2), exactly 1
  double max_ratio_error = 0.0;
  bool pass = false;
};
SharpnessOutcome run_sharpness(int resolution, int min_scale,
                               const std::vector<double>& etas);

struct NbvTrialStats {
  double max_bessel = 0.0;
  double max_bessel_minus_schur = 0.0;  // max of B - schur_sq (<= tol)
  double bound = 0.0;                   // ((1 + 1/sqrt 2) d)^2
  int trials = 0;
  bool pass = false;
};
NbvTrialStats run_nbv_suite(int dim, int resolution, int min_scale, int trials,
                            std::uint64_t seed, const FamilyHook& hook = nullptr);

struct ReconstructOutcome {
  double eta = 0.0;
  double delta = 0.0;  // max AO norm of the two difference families
  FrameBounds bounds;
  double bound_slack = 0.0;      // how far outside [(1-d)^2, (1+d)^2]
  double max_relative_error = 0.0;
  double error_budget = 0.0;     // delta (2 + delta)
  bool pass = false;
};
ReconstructOutcome run_reconstruct(int resolution, int min_scale, double eta,
                                   int probes, std::uint64_t seed,
                                   const FamilyHook& hook = nullptr);

struct RandomAverageOutcome {
  std::vector<SweepPoint> points;
  SlopeFit fit;
  double c_meas = 0.0;
  bool pass = false;
};
RandomAverageOutcome run_random_average(int resolution, int min_scale,
                                        const std::vector<double>& etas,
                                        std::uint64_t seed);

// Full experiment: writes <out>/<experiment>.csv and .json.  Returns 0 on
// pass, 1 on a failed threshold.  Configuration problems throw config_error
// (the CLI maps that to exit code 2).
int run(const ExperimentConfig& config);

} // namespace haarlab

#endif
