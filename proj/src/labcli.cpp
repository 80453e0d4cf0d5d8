#include "haarlab/labcli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "haarlab/errors.hpp"
#include "haarlab/random.hpp"

namespace haarlab {

const std::vector<std::string> kExperimentNames = {
    "orthonormality",     "lemma1-lu",          "theorem1-mollify",
    "theorem3-nbv",       "theorem4-diagonal",  "theorem5-affine",
    "corollary3-reconstruct", "corollary5-sharpness", "corollary5-random"};

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Magnitude floor onto multiples of 2^unit_exp; exact because the scalings
// are powers of two.
double floor_to_unit(double v, int unit_exp) {
  const double steps = std::floor(std::ldexp(std::fabs(v), -unit_exp));
  return std::copysign(std::ldexp(steps, unit_exp), v);
}

// Dyadic rational with at most 24 fractional bits, in (0, 1/2].
bool dyadic_eta(double eta) {
  if (!(eta > 0.0) || eta > 0.5) return false;
  const double scaled = std::ldexp(eta, 24);
  return scaled == std::floor(scaled);
}

std::string cube_text(const DyadicCube& q) {
  std::string s = "scale=" + std::to_string(q.scale) + " corner=[";
  for (std::size_t i = 0; i < q.corner.size(); ++i)
    s += (i ? "," : "") + std::to_string(q.corner[i]);
  return s + "]";
}

// Deterministic per-cube stream keyed by structure, not draw order.
std::uint64_t cube_seed(std::uint64_t seed, const DyadicCube& cube) {
  std::uint64_t s =
      mix_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(cube.scale)));
  for (std::int64_t c : cube.corner)
    s = mix_seed(s, static_cast<std::uint64_t>(c));
  return s;
}

GridFunction perturb_named(const GridFunction& f, const DyadicCube& q,
                           const AffinePerturbation& p) {
  try {
    return perturb(f, q, p);
  } catch (const window_overflow_error& e) {
    throw window_overflow_error(std::string(e.what()) + " (cube " +
                                cube_text(q) + ")");
  }
}

}  // namespace

SlopeFit fit_loglog(const std::vector<double>& etas,
                    const std::vector<double>& values) {
  if (etas.size() != values.size())
    throw domain_error("fit_loglog: eta and value counts differ");
  if (etas.size() < 3)
    throw domain_error("fit_loglog: need at least 3 eta points");
  for (double e : etas)
    if (!(e > 0.0))
      throw domain_error("fit_loglog: eta values must be positive");
  const double lo = *std::min_element(etas.begin(), etas.end());
  const double hi = *std::max_element(etas.begin(), etas.end());
  if (std::log2(hi / lo) < 2.0 - 1e-9)
    throw domain_error("fit_loglog: eta range must span at least 2 octaves");

  // Points at the numerical floor carry no slope information; drop them, and
  // give up when what survives cannot pin an exponent.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (values[i] > 1e-13) {
      xs.push_back(std::log2(etas[i]));
      ys.push_back(std::log2(values[i]));
    }
  }
  if (xs.empty())
    throw underflow_error("fit_loglog: every measurement is at the numerical floor");
  if (xs.size() < 3)
    throw underflow_error("fit_loglog: too few measurable points for a fit");
  const double xlo = *std::min_element(xs.begin(), xs.end());
  const double xhi = *std::max_element(xs.begin(), xs.end());
  if (xhi - xlo < 2.0 - 1e-9)
    throw underflow_error("fit_loglog: measurable points span fewer than 2 octaves");

  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  SlopeFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / n);
  fit.points = static_cast<int>(xs.size());
  return fit;
}

AffinePerturbation PerturbationGenerator::operator()(const DyadicCube& cube) const {
  if (cube.dim != dim)
    throw domain_error("perturbation generator: cube dimension mismatch");
  Rng rng(cube_seed(seed, cube));
  SquareMatrix a = SquareMatrix::identity(dim);
  std::vector<double> y(static_cast<std::size_t>(dim), 0.0);

  if (name == "identity")
    return AffinePerturbation(std::move(a), std::move(y), eta);

  if (name == "translation-only") {
    // Shift 2^scale * y must be a whole number of cells for exactness.
    const int unit = -(resolution + cube.scale);
    for (int i = 0; i < dim; ++i) {
      double t = rng.uniform(-eta, eta);
      if (align) t = floor_to_unit(t, unit);
      y[static_cast<std::size_t>(i)] = t;
    }
    return AffinePerturbation(std::move(a), std::move(y), eta);
  }

  if (name == "diagonal") {
    // alpha = 1/(1+eps) with eps a multiple of 2^{1-(J+scale)} keeps every
    // preimage breakpoint on the mesh: breakpoints sit at half-cube offsets
    // m*2^{scale-1} from x_Q and map to offsets m*2^{scale-1}*(1+eps).
    const int unit = 1 - (resolution + cube.scale);
    for (int i = 0; i < dim; ++i) {
      const int sgn = rng.sign();
      const double u = rng.uniform01();
      if (align) {
        // |alpha - 1| = |eps|/(1+eps): the negative branch needs the tighter
        // cap eta/(1+eta) to keep the deviation within budget.
        const double cap = (sgn > 0) ? eta : eta / (1.0 + eta);
        const double eps = sgn * floor_to_unit(u * cap, unit);
        a(i, i) = 1.0 / (1.0 + eps);
      } else {
        a(i, i) = 1.0 + sgn * u * eta;
      }
    }
    return AffinePerturbation(std::move(a), std::move(y), eta);
  }

  if (name == "shear") {
    if (dim < 2) throw domain_error("shear scenario needs dim >= 2");
    const int i = static_cast<int>(rng.uniform_int(0, dim - 1));
    int j = static_cast<int>(rng.uniform_int(0, dim - 2));
    if (j >= i) ++j;
    a(i, j) = rng.sign() * eta;
    return AffinePerturbation(std::move(a), std::move(y), eta);
  }

  if (name == "general") {
    // Random matrix direction scaled to a theta share of the budget; the
    // translation takes the exact remainder, so the sum lands on eta.
    SquareMatrix dev(dim);
    double r = 0.0;
    do {
      for (double& e : dev.a) e = rng.uniform(-1.0, 1.0);
      r = inf_norm(dev);
    } while (r < 1e-9);
    const double theta = rng.uniform(0.25, 0.75);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        a(i, j) = (i == j ? 1.0 : 0.0) + dev(i, j) * (theta * eta / r);
    SquareMatrix offset(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        offset(i, j) = a(i, j) - (i == j ? 1.0 : 0.0);
    const double anorm = inf_norm(offset);
    double ry = 0.0;
    do {
      for (double& t : y) t = rng.uniform(-1.0, 1.0);
      ry = vector_inf_norm(y);
    } while (ry < 1e-9);
    const double remainder = eta - anorm;
    for (double& t : y) t *= remainder / ry;
    return AffinePerturbation(std::move(a), std::move(y), eta);
  }

  if (name == "adversarial-1d") {
    if (dim != 1) throw domain_error("adversarial-1d scenario needs dim == 1");
    y[0] = eta;
    return AffinePerturbation(std::move(a), std::move(y), eta);
  }

  throw domain_error("unknown perturbation scenario: " + name);
}

PerturbationMap PerturbationGenerator::materialize(
    const std::vector<DyadicCube>& cubes) const {
  PerturbationMap out;
  for (const DyadicCube& q : cubes) out.emplace(q, (*this)(q));
  return out;
}

PerturbationGenerator make_generator(const std::string& name, int dim,
                                     double eta, std::uint64_t seed,
                                     int resolution, bool align) {
  static const std::set<std::string> known = {
      "identity", "translation-only", "diagonal",
      "shear",    "general",          "adversarial-1d"};
  if (!known.count(name))
    throw domain_error("unknown perturbation scenario: " + name);
  if (!(eta >= 0.0) || eta > 0.5)
    throw domain_error("perturbation scenario needs 0 <= eta <= 1/2");
  PerturbationGenerator gen;
  gen.name = name;
  gen.dim = dim;
  gen.eta = eta;
  gen.seed = seed;
  gen.resolution = resolution;
  gen.align = align;
  return gen;
}

namespace {

// Difference family { h_(Q),k - |A_Q| h_(Q),k o map_Q } over the window.
FamilySpec difference_family(int dim, int resolution, int min_scale,
                             const PerturbationGenerator& gen) {
  const Box window = default_window(dim, resolution);
  FamilySpec family;
  for (const DyadicCube& q : cube_window(unit_cube(dim), min_scale)) {
    const AffinePerturbation p = gen(q);
    const double det = determinant(p.matrix);
    for (unsigned k = 1; k < (1u << dim); ++k) {
      const HaarIndex idx{q, k};
      GridFunction member = from_haar(idx, resolution, window);
      const GridFunction mapped = perturb_named(member, q, p);
      member.add_scaled(mapped, -det);
      member.shrink_support();
      family.push(std::move(member), idx);
    }
  }
  return family;
}

}  // namespace

SweepResult sweep_eta(const std::string& scenario, int dim, int resolution,
                      int min_scale, const std::vector<double>& eta_list,
                      std::uint64_t seed, bool align, const FamilyHook& hook) {
  if (eta_list.size() < 3)
    throw domain_error("sweep_eta: need at least 3 eta points");
  SweepResult out;
  out.scenario = scenario;
  std::vector<double> measurements;
  for (std::size_t ei = 0; ei < eta_list.size(); ++ei) {
    const double eta = eta_list[ei];
    const PerturbationGenerator gen =
        make_generator(scenario, dim, eta, mix_seed(seed, ei), resolution, align);
    FamilySpec family = difference_family(dim, resolution, min_scale, gen);
    const GramSummary summary =
        gram_summary(family, 1e-10, mix_seed(seed, 1000 + ei));
    SweepPoint point;
    point.eta = eta;
    point.measurement = summary.ao_norm;
    point.ratio_to_sqrt_eta = summary.ao_norm / std::sqrt(eta);
    point.bessel = summary.bessel_bound;
    point.members = family.size();
    out.points.push_back(point);
    measurements.push_back(point.measurement);
    if (hook) hook(family, point, scenario);
  }
  out.fit = fit_loglog(eta_list, measurements);
  for (const SweepPoint& p : out.points)
    out.c_meas = std::max(out.c_meas, p.ratio_to_sqrt_eta);
  return out;
}

namespace {

// +-1 sign pattern of a Haar function: the normalization stripped by exact
// sign extraction, so patterns at different scales can be compared bit for
// bit after mollification.
GridFunction haar_sign_pattern(const HaarIndex& idx, int resolution,
                               const Box& window) {
  GridFunction g = from_haar(idx, resolution, window);
  for (double& v : g.values()) v = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return g;
}

// Nearest-point distance (sup norm) from a cell to the discontinuity set of
// h_(Q),k: the boundary faces of Q plus the midplanes of the axes k selects.
double cell_disc_distance(const std::vector<double>& center, double half_cell,
                          const DyadicCube& q, unsigned k) {
  const int d = q.dim;
  bool inside = true;
  double outside = 0.0;
  for (int i = 0; i < d; ++i) {
    const double lo = q.lower(i), hi = q.upper(i);
    const double deficit = std::max(lo - center[static_cast<std::size_t>(i)],
                                    center[static_cast<std::size_t>(i)] - hi);
    if (deficit > 0.0) inside = false;
    outside = std::max(outside, deficit);
  }
  double dist;
  if (!inside) {
    dist = outside;  // nearest boundary point realizes the sup distance
  } else {
    dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
      const double x = center[static_cast<std::size_t>(i)];
      dist = std::min(dist, std::min(x - q.lower(i), q.upper(i) - x));
      if ((k >> i) & 1u) dist = std::min(dist, std::fabs(x - q.center(i)));
    }
  }
  return dist - half_cell;
}

}  // namespace

MollifyReport mollified_frame_report(int dim, int resolution, int min_scale,
                                     double eta, const MollifierSpec& kernel,
                                     std::uint64_t seed, const FamilyHook& hook) {
  if (!dyadic_eta(eta) || !(eta < 0.5))
    throw domain_error("mollified report needs dyadic eta in (0, 1/2)");
  MollifyReport report;
  report.eta = eta;
  report.kernel = kernel.name();

  const Box window = default_window(dim, resolution);
  const std::vector<HaarIndex> indices =
      enumerate_window(unit_cube(dim), min_scale);
  FamilySpec family;
  std::vector<GridFunction> patterns;  // mollified sign patterns, per member
  // Unit-cube mollified patterns by (scale, k); bitwise-identical inputs to
  // the per-cube convolutions, which makes the rescaling check exact.
  std::map<std::pair<int, unsigned>, GridFunction> unit_patterns;

  double worst_radius = 0.0, worst_abs = 0.0;
  bool support_ok = true;

  for (const HaarIndex& idx : indices) {
    const DyadicCube& q = idx.cube;
    const double delta = std::ldexp(eta, q.scale);  // eta * l(Q)
    const double s = scale_factor(q.scale, dim);
    GridFunction pattern = haar_sign_pattern(idx, resolution, window);
    GridFunction pm = mollify(pattern, kernel, delta);
    pm.shrink_support();

    // Support containment in (1+2 eta)Q, exact at cell granularity.
    const std::int64_t margin =
        static_cast<std::int64_t>(std::ldexp(eta, resolution + q.scale));
    Box allowed = cube_cells(q, resolution);
    for (int i = 0; i < dim; ++i) {
      allowed.lo[static_cast<std::size_t>(i)] -= margin;
      allowed.hi[static_cast<std::size_t>(i)] += margin;
    }
    if (!allowed.contains(pm.support())) support_ok = false;

    // Family member h - phi with phi = s * mollified pattern; cells the
    // kernel never mixes across a discontinuity cancel exactly.
    GridFunction member = from_haar(idx, resolution, window);
    GridFunction phi = pm;
    phi.scale(s);
    member.add_scaled(phi, -1.0);
    member.shrink_support();

    // Equality radius: nearest-point cell distance to the discontinuity
    // set, in units of eta * l(Q), over cells where phi != h.
    const Box& sup = member.support();
    if (!sup.empty()) {
      const double half_cell = 0.5 * member.cell_size();
      std::vector<std::int64_t> cell(sup.lo);
      std::vector<double> center(static_cast<std::size_t>(dim));
      while (true) {
        if (member.value_at_cell(cell) != 0.0) {
          for (int i = 0; i < dim; ++i)
            center[static_cast<std::size_t>(i)] = std::ldexp(
                static_cast<double>(cell[static_cast<std::size_t>(i)]) + 0.5,
                -resolution);
          const double dist = cell_disc_distance(center, half_cell, q, idx.k);
          const double units = dist / delta;
          if (units > worst_radius) {
            worst_radius = units;
            worst_abs = dist;
          }
        }
        int axis = dim - 1;
        while (axis >= 0) {
          std::size_t ai = static_cast<std::size_t>(axis);
          if (++cell[ai] < sup.hi[ai]) break;
          cell[ai] = sup.lo[ai];
          --axis;
        }
        if (axis < 0) break;
      }
    }

    patterns.push_back(std::move(pm));
    family.push(std::move(member), idx);
  }

  report.support_ok = support_ok;
  report.equality_radius = worst_radius;
  report.max_violation_distance = worst_abs;
  report.members = family.size();

  const GramSummary summary = gram_summary(family, 1e-10, mix_seed(seed, 1));
  report.ao_norm = summary.ao_norm;

  // Two-sided rescaling identity at random points: each side is evaluated
  // from its own mollified pattern (cube grid at J versus unit grid at
  // J+scale); identical kernels and iteration orders make both convolutions
  // bitwise equal, so the discrepancy must come out exactly 0.
  Rng rng(mix_seed(seed, 2));
  double disc = 0.0;
  const int samples = 1000;
  for (int p = 0; p < samples; ++p) {
    const std::size_t mi = static_cast<std::size_t>(p) % patterns.size();
    const HaarIndex& idx = indices[mi];
    const DyadicCube& q = idx.cube;
    const auto key = std::make_pair(q.scale, idx.k);
    auto it = unit_patterns.find(key);
    if (it == unit_patterns.end()) {
      const int ures = resolution + q.scale;
      GridFunction up = mollify(
          haar_sign_pattern(HaarIndex{unit_cube(dim), idx.k}, ures,
                            default_window(dim, ures)),
          kernel, eta);
      it = unit_patterns.emplace(key, std::move(up)).first;
    }
    const double s = scale_factor(q.scale, dim);
    Point x(static_cast<std::size_t>(dim));
    Point u(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      const double reach = 2.0 * std::ldexp(eta, q.scale);
      x[static_cast<std::size_t>(i)] =
          rng.uniform(q.lower(i) - reach, q.upper(i) + reach);
      u[static_cast<std::size_t>(i)] =
          std::ldexp(x[static_cast<std::size_t>(i)], -q.scale) -
          static_cast<double>(q.corner[static_cast<std::size_t>(i)]);
    }
    const double lhs = s * patterns[mi].value_at_point(x);
    const double rhs = s * it->second.value_at_point(u);
    disc = std::max(disc, std::fabs(lhs - rhs));
  }
  report.self_similarity_discrepancy = disc;

  if (hook) {
    SweepPoint point;
    point.eta = eta;
    point.measurement = summary.ao_norm;
    point.ratio_to_sqrt_eta = summary.ao_norm / std::sqrt(eta);
    point.bessel = summary.bessel_bound;
    point.members = family.size();
    hook(family, point, "mollify-" + report.kernel);
  }
  return report;
}

OrthonormalityOutcome run_orthonormality(int dim, int resolution, int min_scale,
                                         int probes, std::uint64_t seed) {
  const Box window = default_window(dim, resolution);
  FamilySpec family;
  for (const HaarIndex& idx : enumerate_window(unit_cube(dim), min_scale))
    family.push(from_haar(idx, resolution, window), idx);

  const GramSummary summary = gram_summary(family, 1e-10, mix_seed(seed, 1));
  OrthonormalityOutcome out;
  out.members = family.size();
  out.max_off_diagonal = summary.gram.max_abs_off_diagonal();
  out.bessel_deviation = std::fabs(summary.bessel_bound - 1.0);

  Rng rng(mix_seed(seed, 2));
  for (int p = 0; p < probes; ++p) {
    CoefficientVector c(static_cast<std::size_t>(family.size()));
    for (double& v : c) v = rng.normal();
    const GridFunction f = synthesize(c, family);
    const double norm = l2_norm(f);
    if (!(norm > 0.0)) continue;
    const CoefficientVector back = analyze(f, family);
    double sum = 0.0;
    for (double v : back) sum += v * v;
    const double rel = std::fabs(sum - norm * norm) / (norm * norm);
    out.max_parseval_error = std::max(out.max_parseval_error, rel);
  }
  out.pass = out.max_off_diagonal <= 1e-12 && out.bessel_deviation <= 1e-10 &&
             out.max_parseval_error <= 1e-10;
  return out;
}

LuSuiteOutcome run_lu_suite(const std::vector<int>& dims,
                            const std::vector<double>& etas,
                            int trials_per_cell, std::uint64_t seed) {
  LuSuiteOutcome out;
  for (int d : dims) {
    if (d < 1) throw domain_error("lu suite: dimensions must be positive");
    for (double eta : etas) {
      if (!(eta > 0.0) || !(eta < 1.0))
        throw domain_error("lu suite: eta must lie in (0, 1)");
      const std::uint64_t cell =
          mix_seed(static_cast<std::uint64_t>(d),
                   static_cast<std::uint64_t>(std::llround(std::ldexp(eta, 20))));
      Rng rng(mix_seed(seed, cell));
      const double bound = eta / (1.0 - eta);
      for (int t = 0; t < trials_per_cell; ++t) {
        SquareMatrix dev(d);
        double r = 0.0;
        do {
          for (double& v : dev.a) v = rng.uniform(-1.0, 1.0);
          r = inf_norm(dev);
        } while (r < 1e-9);
        SquareMatrix a = SquareMatrix::identity(d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) a(i, j) += dev(i, j) * (eta / r);

        const LuFactors f = lu_factor(a);
        SquareMatrix residual = f.lower.times(f.upper);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) residual(i, j) -= a(i, j);
        out.max_reconstruction_error =
            std::max(out.max_reconstruction_error, inf_norm(residual));

        SquareMatrix dl = f.lower, du = f.upper;
        for (int i = 0; i < d; ++i) {
          dl(i, i) -= 1.0;
          du(i, i) -= 1.0;
        }
        const double deviation = std::max(inf_norm(dl), inf_norm(du));
        out.max_deviation_slack =
            std::max(out.max_deviation_slack, deviation - bound);

        const double det = determinant(a);
        out.max_det_slack =
            std::max(out.max_det_slack,
                     std::fabs(1.0 - det) - (std::exp(4.0 * d * eta) - 1.0));
      }
      out.trials += trials_per_cell;
    }
  }
  out.pass = out.max_reconstruction_error <= 1e-12 &&
             out.max_deviation_slack <= 1e-12 && out.max_det_slack <= 1e-12;
  return out;
}

SharpnessOutcome run_sharpness(int resolution, int min_scale,
                               const std::vector<double>& etas) {
  SharpnessOutcome out;
  const Box window = default_window(1, resolution);
  const std::vector<DyadicCube> cubes = cube_window(unit_cube(1), min_scale);
  for (double eta : etas) {
    int msb = 0;
    const double mant = std::frexp(eta, &msb);
    if (mant != 0.5 || msb >= 1)
      throw domain_error("sharpness needs eta = 2^-m");
    const int m = 1 - msb;  // eta = 2^-m
    if (m > resolution)
      throw domain_error("sharpness eta must be a whole number of cells");

    // g = indicator of [0, eta); only the root cube is perturbed, by the
    // exact translation that slides [0,1) to [eta, 1+eta).
    const DyadicCube gcube{1, -m, {0}};
    const GridFunction g = indicator(gcube, resolution, window);
    PerturbationMap pmap;
    pmap.emplace(unit_cube(1),
                 AffinePerturbation(SquareMatrix::identity(1), {-eta}, eta));
    const double result = avg_square_function(g, pmap, cubes);
    const double ratio = result / (std::sqrt(eta) * l2_norm(g));
    out.etas.push_back(eta);
    out.ratios.push_back(ratio);
    out.max_ratio_error = std::max(out.max_ratio_error, std::fabs(ratio - 1.0));
  }
  out.pass = out.max_ratio_error <= 1e-12;
  return out;
}

NbvTrialStats run_nbv_suite(int dim, int resolution, int min_scale, int trials,
                            std::uint64_t seed, const FamilyHook& hook) {
  if (resolution + min_scale < 2)
    throw domain_error("nbv suite needs at least 4 cells per cube axis");
  NbvTrialStats out;
  const double side = (1.0 + 1.0 / std::numbers::sqrt2) * dim;
  out.bound = side * side;
  const Box window = default_window(dim, resolution);
  const std::vector<DyadicCube> cubes = cube_window(unit_cube(dim), min_scale);
  const std::vector<DyadicCube> tile = {unit_cube(dim)};
  const std::size_t blocks = 1u << (2 * dim);  // 4 per axis

  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = mix_seed(seed, static_cast<std::uint64_t>(t));
    FamilySpec family;
    for (const DyadicCube& q : cubes) {
      Rng rng(cube_seed(trial_seed, q));
      GridFunction g(dim, resolution, window);
      const Box cells = cube_cells(q, resolution);
      const std::int64_t block_cells =
          cells.extent(0) / 4;  // power of two by the resolution check
      double mtv = 0.0;
      do {
        std::vector<double> vals(blocks);
        double mean = 0.0;
        for (double& v : vals) {
          v = rng.uniform(-1.0, 1.0);
          mean += v;
        }
        mean /= static_cast<double>(blocks);
        for (double& v : vals) v -= mean;

        g.reset_support(cells);
        std::vector<std::int64_t> cell(cells.lo);
        while (true) {
          std::size_t block = 0;
          for (int i = 0; i < dim; ++i) {
            const std::size_t ai = static_cast<std::size_t>(i);
            block = block * 4 + static_cast<std::size_t>(
                                    (cell[ai] - cells.lo[ai]) / block_cells);
          }
          g.cell_ref(cell) = vals[block];
          int axis = dim - 1;
          while (axis >= 0) {
            std::size_t ai = static_cast<std::size_t>(axis);
            if (++cell[ai] < cells.hi[ai]) break;
            cell[ai] = cells.lo[ai];
            --axis;
          }
          if (axis < 0) break;
        }
        mtv = max_axis_tv(g);
      } while (mtv < 1e-9);
      // Zero mean and axis-line TV <= 1 by construction; |Q|^{-1/2}
      // normalization matches the Haar members.
      g.scale(scale_factor(q.scale, dim) / mtv);
      family.push(std::move(g), HaarIndex{q, 1});
    }
    const GramSummary summary =
        gram_summary(family, 1e-10, mix_seed(trial_seed, 0xb0bull));
    const double schur = schur_diagnostic_haar(family, tile, 1 - resolution);
    out.max_bessel = std::max(out.max_bessel, summary.bessel_bound);
    out.max_bessel_minus_schur =
        std::max(out.max_bessel_minus_schur, summary.bessel_bound - schur);
    if (hook) {
      SweepPoint point;
      point.measurement = summary.ao_norm;
      point.bessel = summary.bessel_bound;
      point.members = family.size();
      hook(family, point, "nbv");
    }
  }
  out.trials = trials;
  out.pass = out.max_bessel <= out.bound + 1e-9 &&
             out.max_bessel_minus_schur <= 1e-10;
  return out;
}

ReconstructOutcome run_reconstruct(int resolution, int min_scale, double eta,
                                   int probes, std::uint64_t seed,
                                   const FamilyHook& hook) {
  const int dim = 1;
  const Box window = default_window(dim, resolution);
  const std::vector<DyadicCube> cubes = cube_window(unit_cube(dim), min_scale);
  const PerturbationMap pa =
      make_generator("general", dim, eta, mix_seed(seed, 1), resolution, false)
          .materialize(cubes);
  const PerturbationMap ps =
      make_generator("general", dim, eta, mix_seed(seed, 2), resolution, false)
          .materialize(cubes);

  FamilySpec haar, analysis, synthesis, diff_a, diff_s;
  for (const HaarIndex& idx : enumerate_window(unit_cube(dim), min_scale)) {
    GridFunction h = from_haar(idx, resolution, window);
    const AffinePerturbation& qa = pa.at(idx.cube);
    const AffinePerturbation& qs = ps.at(idx.cube);

    GridFunction ha = perturb_named(h, idx.cube, qa);
    ha.scale(determinant(qa.matrix));
    GridFunction da = h;
    da.add_scaled(ha, -1.0);
    da.shrink_support();

    GridFunction hs = perturb_named(h, idx.cube, qs);
    hs.scale(determinant(qs.matrix));
    GridFunction ds = h;
    ds.add_scaled(hs, -1.0);
    ds.shrink_support();

    haar.push(std::move(h), idx);
    analysis.push(std::move(ha), idx);
    synthesis.push(std::move(hs), idx);
    diff_a.push(std::move(da), idx);
    diff_s.push(std::move(ds), idx);
  }

  const GramSummary sa = gram_summary(diff_a, 1e-10, mix_seed(seed, 11));
  const GramSummary ss = gram_summary(diff_s, 1e-10, mix_seed(seed, 12));
  ReconstructOutcome out;
  out.eta = eta;
  out.delta = std::max(sa.ao_norm, ss.ao_norm);

  Rng rng(mix_seed(seed, 13));
  std::vector<GridFunction> span_probes;
  while (static_cast<int>(span_probes.size()) < probes) {
    CoefficientVector c(static_cast<std::size_t>(haar.size()));
    for (double& v : c) v = rng.normal();
    GridFunction f = synthesize(c, haar);
    if (l2_norm(f) > 0.0) span_probes.push_back(std::move(f));
  }

  out.bounds = frame_bounds_empirical(analysis, span_probes);
  const double lo_ref = (1.0 - out.delta) * (1.0 - out.delta);
  const double hi_ref = (1.0 + out.delta) * (1.0 + out.delta);
  out.bound_slack =
      std::max(lo_ref - out.bounds.lower, out.bounds.upper - hi_ref);

  for (const GridFunction& f : span_probes) {
    const ReconstructionResult r = reconstruct_error(f, analysis, synthesis);
    out.max_relative_error = std::max(out.max_relative_error, r.relative_error);
  }
  out.error_budget = out.delta * (2.0 + out.delta);
  out.pass = out.bound_slack <= 0.02 &&
             out.max_relative_error <= out.error_budget + 0.02;

  if (hook) {
    SweepPoint pa_point;
    pa_point.eta = eta;
    pa_point.measurement = sa.ao_norm;
    pa_point.ratio_to_sqrt_eta = sa.ao_norm / std::sqrt(eta);
    pa_point.bessel = sa.bessel_bound;
    pa_point.members = diff_a.size();
    hook(diff_a, pa_point, "reconstruct-analysis");
    SweepPoint ps_point;
    ps_point.eta = eta;
    ps_point.measurement = ss.ao_norm;
    ps_point.ratio_to_sqrt_eta = ss.ao_norm / std::sqrt(eta);
    ps_point.bessel = ss.bessel_bound;
    ps_point.members = diff_s.size();
    hook(diff_s, ps_point, "reconstruct-synthesis");
  }
  return out;
}

RandomAverageOutcome run_random_average(int resolution, int min_scale,
                                        const std::vector<double>& etas,
                                        std::uint64_t seed) {
  const int dim = 1;
  if (resolution < 5)
    throw domain_error("random-average experiment needs resolution >= 5");
  const Box window = default_window(dim, resolution);
  const std::vector<DyadicCube> cubes = cube_window(unit_cube(dim), min_scale);

  // Random g: piecewise constant on the 32 scale -5 blocks of [0,1).
  Rng rng(mix_seed(seed, 0x9a11));
  std::vector<double> blocks(32);
  for (double& v : blocks) v = rng.uniform(-1.0, 1.0);
  GridFunction g(dim, resolution, window);
  g.reset_support(cube_cells(unit_cube(dim), resolution));
  const int shift = resolution - 5;
  for (std::int64_t c = 0; c < (std::int64_t{1} << resolution); ++c)
    g.cell_ref({c}) = blocks[static_cast<std::size_t>(c >> shift)];
  const double gnorm = l2_norm(g);

  RandomAverageOutcome out;
  std::vector<double> measurements;
  for (std::size_t ei = 0; ei < etas.size(); ++ei) {
    const PerturbationGenerator gen = make_generator(
        "general", dim, etas[ei], mix_seed(seed, ei), resolution, false);
    const double result =
        avg_square_function(g, gen.materialize(cubes), cubes);
    SweepPoint point;
    point.eta = etas[ei];
    point.measurement = result;
    point.ratio_to_sqrt_eta = result / (std::sqrt(etas[ei]) * gnorm);
    point.members = static_cast<int>(cubes.size());
    out.points.push_back(point);
    measurements.push_back(result);
  }
  out.fit = fit_loglog(etas, measurements);
  for (const SweepPoint& p : out.points)
    out.c_meas = std::max(out.c_meas, p.ratio_to_sqrt_eta);
  out.pass = out.fit.slope >= 0.35 && std::isfinite(out.c_meas);
  return out;
}

// ---------------------------------------------------------------------------
// Config parsing and the experiment dispatcher.

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw config_error("config field '" + field + "': " + why);
}

int get_int(const json& j, const char* field, int fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_number_integer()) bad_field(field, "expected an integer");
  return j.at(field).get<int>();
}

bool get_bool(const json& j, const char* field, bool fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_boolean()) bad_field(field, "expected a boolean");
  return j.at(field).get<bool>();
}

std::string get_string(const json& j, const char* field,
                       const std::string& fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_string()) bad_field(field, "expected a string");
  return j.at(field).get<std::string>();
}

std::vector<double> default_etas(const std::string& experiment, int dim) {
  const auto dyadics = [](int lo, int hi) {
    std::vector<double> v;
    for (int e = lo; e <= hi; ++e) v.push_back(std::ldexp(1.0, e));
    return v;
  };
  if (experiment == "lemma1-lu") return {0.05, 0.25, 0.5};
  if (experiment == "corollary3-reconstruct")
    return {std::ldexp(1.0, -6), std::ldexp(1.0, -4)};
  if (experiment == "theorem1-mollify")
    return {std::ldexp(1.0, -4), std::ldexp(1.0, -3)};
  if (experiment == "theorem5-affine") {
    // Largest dyadic octaves under the 1/(20 d) cap, three octaves deep.
    int hi = -1;
    while (std::ldexp(1.0, hi) > 1.0 / (20.0 * dim)) --hi;
    return dyadics(hi - 3, hi);
  }
  if (experiment == "orthonormality" || experiment == "theorem3-nbv") return {};
  return dyadics(-8, -3);
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "experiment", "dim",     "resolution", "min_scale", "eta_list", "seed",
      "kernel",     "out_dir", "align",      "trials",    "probes"};
  return keys;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw config_error(std::string("config parse: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (!key.empty() && key[0] == '_') continue;  // comment keys
    if (!known_config_keys().count(key)) bad_field(key, "unknown key");
  }

  ExperimentConfig c;
  c.experiment = get_string(j, "experiment", "");
  c.dim = get_int(j, "dim", c.dim);
  c.resolution = get_int(j, "resolution", c.resolution);
  c.min_scale = get_int(j, "min_scale", c.min_scale);
  c.kernel = get_string(j, "kernel", c.kernel);
  c.out_dir = get_string(j, "out_dir", c.out_dir);
  c.align = get_bool(j, "align", c.align);
  c.trials = get_int(j, "trials", c.trials);
  c.probes = get_int(j, "probes", c.probes);
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_integer() && !v.is_number_unsigned())
      bad_field("seed", "expected an integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
      bad_field("seed", "must be nonnegative");
    c.seed = v.get<std::uint64_t>();
  }
  if (j.contains("eta_list")) {
    const auto& v = j.at("eta_list");
    if (!v.is_array()) bad_field("eta_list", "expected an array of numbers");
    for (const auto& e : v) {
      if (!e.is_number()) bad_field("eta_list", "expected an array of numbers");
      c.eta_list.push_back(e.get<double>());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config file '" + path + "': cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void ExperimentConfig::validate() const {
  if (std::find(kExperimentNames.begin(), kExperimentNames.end(), experiment) ==
      kExperimentNames.end())
    bad_field("experiment", "unknown experiment '" + experiment + "'");
  if (dim < 1 || dim > 8) bad_field("dim", "must lie in [1, 8]");
  if (resolution < 1 || resolution > 26)
    bad_field("resolution", "must lie in [1, 26]");
  if (min_scale > 0 || min_scale < -20)
    bad_field("min_scale", "must lie in [-20, 0]");
  if (trials < 1 || trials > 100000) bad_field("trials", "must lie in [1, 1e5]");
  if (probes < 1 || probes > 10000) bad_field("probes", "must lie in [1, 1e4]");

  const bool grid = experiment != "lemma1-lu";
  if (grid) {
    if (dim * resolution > 21)
      bad_field("resolution", "dim * resolution must stay <= 21 (memory)");
    if (resolution + min_scale < 1)
      bad_field("min_scale",
                "cubes at the minimum scale need at least 2 cells per axis");
  } else if (dim < 2) {
    bad_field("dim", "lemma1-lu needs dim >= 2");
  }

  const std::vector<double> etas =
      eta_list.empty() ? default_etas(experiment, dim) : eta_list;
  for (double eta : etas) {
    if (!(eta > 0.0) || eta > 0.5)
      bad_field("eta_list", "eta values must lie in (0, 1/2]");
    if (grid && align && !dyadic_eta(eta))
      bad_field("eta_list",
                "eta must be a dyadic rational in exact-alignment mode "
                "(pass --no-align to lift this)");
  }
  if (experiment == "theorem5-affine") {
    for (double eta : etas)
      if (eta > 1.0 / (20.0 * dim) + 1e-15)
        bad_field("eta_list", "theorem5-affine requires eta <= 1/(20 dim)");
  }
  if (experiment == "theorem4-diagonal" || experiment == "theorem5-affine" ||
      experiment == "corollary5-random") {
    if (etas.size() < 3)
      bad_field("eta_list", "slope experiments need at least 3 eta values");
    const auto [lo, hi] = std::minmax_element(etas.begin(), etas.end());
    if (*hi < 4.0 * *lo * (1.0 - 1e-9))
      bad_field("eta_list", "slope experiments need 2 octaves of eta range");
  }
  if (experiment == "corollary5-sharpness" ||
      experiment == "corollary3-reconstruct" ||
      experiment == "corollary5-random") {
    if (dim != 1) bad_field("dim", experiment + " is one-dimensional");
  }
  if (experiment == "corollary5-sharpness") {
    for (double eta : etas) {
      int msb = 0;
      if (std::frexp(eta, &msb) != 0.5 || 1 - msb > resolution)
        bad_field("eta_list",
                  "sharpness needs eta = 2^-m with m <= resolution");
    }
  }
  if (experiment == "corollary5-random" && resolution < 5)
    bad_field("resolution", "corollary5-random needs resolution >= 5");
  if (experiment == "theorem1-mollify") {
    kernel_spec();  // validates kernel names and CSV tables
    for (double eta : etas)
      if (std::ldexp(eta, resolution + min_scale) < 1.0)
        bad_field("eta_list",
                  "kernel under-resolved: need eta * 2^(resolution+min_scale) "
                  ">= 1");
  }
  if (experiment == "theorem3-nbv" && resolution + min_scale < 2)
    bad_field("min_scale", "theorem3-nbv needs 4 cells per cube axis");
}

MollifierSpec ExperimentConfig::kernel_spec() const {
  if (kernel == "box") return MollifierSpec::box_kernel();
  if (kernel == "bump") return MollifierSpec::bump_kernel();
  try {
    return MollifierSpec::from_csv(kernel, dim);
  } catch (const error& e) {
    throw config_error("config field 'kernel': " + std::string(e.what()));
  }
}

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw config_error("failed writing output file '" + path + "'");
}

json fit_to_json(const SlopeFit& fit) {
  return json{{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"residual_rms", fit.residual_rms},
              {"points", fit.points}};
}

json point_to_json(const SweepPoint& p) {
  return json{{"eta", p.eta},
              {"ao_norm", p.measurement},
              {"ratio_to_sqrt_eta", p.ratio_to_sqrt_eta},
              {"bessel", p.bessel},
              {"members", p.members}};
}

}  // namespace

int run(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> etas = config.eta_list.empty()
                                       ? default_etas(config.experiment, config.dim)
                                       : config.eta_list;
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec)
    throw config_error("cannot create out_dir '" + config.out_dir +
                       "': " + ec.message());
  const std::string base = config.out_dir + "/" + config.experiment;

  json summary;
  summary["experiment"] = config.experiment;
  summary["dim"] = config.dim;
  summary["resolution"] = config.resolution;
  summary["min_scale"] = config.min_scale;
  summary["seed"] = config.seed;
  summary["align"] = config.align;
  summary["eta_list"] = etas;

  std::string csv;
  std::vector<std::string> failures;
  double c_meas = 0.0;

  if (config.experiment == "orthonormality") {
    const OrthonormalityOutcome o = run_orthonormality(
        config.dim, config.resolution, config.min_scale, config.probes,
        config.seed);
    csv = "quantity,value\n";
    csv += "max_off_diagonal," + fmt_g(o.max_off_diagonal) + "\n";
    csv += "bessel_deviation," + fmt_g(o.bessel_deviation) + "\n";
    csv += "max_parseval_error," + fmt_g(o.max_parseval_error) + "\n";
    csv += "members," + std::to_string(o.members) + "\n";
    summary["max_off_diagonal"] = o.max_off_diagonal;
    summary["bessel_deviation"] = o.bessel_deviation;
    summary["max_parseval_error"] = o.max_parseval_error;
    summary["members"] = o.members;
    c_meas = std::max({o.max_off_diagonal, o.bessel_deviation,
                       o.max_parseval_error});
    if (!o.pass) failures.push_back("orthonormality-identity");
  } else if (config.experiment == "lemma1-lu") {
    csv = "dim,eta,max_reconstruction_error,max_deviation_slack,max_det_slack,pass\n";
    json cells = json::array();
    bool all = true;
    for (int d = 2; d <= config.dim; ++d) {
      for (double eta : etas) {
        const LuSuiteOutcome o =
            run_lu_suite({d}, {eta}, config.trials, config.seed);
        csv += std::to_string(d) + "," + fmt_g(eta) + "," +
               fmt_g(o.max_reconstruction_error) + "," +
               fmt_g(o.max_deviation_slack) + "," + fmt_g(o.max_det_slack) +
               "," + (o.pass ? "1" : "0") + "\n";
        cells.push_back(json{{"dim", d},
                             {"eta", eta},
                             {"max_reconstruction_error", o.max_reconstruction_error},
                             {"max_deviation_slack", o.max_deviation_slack},
                             {"max_det_slack", o.max_det_slack},
                             {"pass", o.pass}});
        const double bound = eta / (1.0 - eta);
        c_meas = std::max(c_meas, 1.0 + o.max_deviation_slack / bound);
        all = all && o.pass;
      }
    }
    summary["cells"] = cells;
    summary["trials_per_cell"] = config.trials;
    if (!all) failures.push_back("lu-factor-bounds");
  } else if (config.experiment == "corollary5-sharpness") {
    const SharpnessOutcome o =
        run_sharpness(config.resolution, config.min_scale, etas);
    csv = "eta,ratio,abs_error\n";
    json rows = json::array();
    for (std::size_t i = 0; i < o.etas.size(); ++i) {
      csv += fmt_g(o.etas[i]) + "," + fmt_g(o.ratios[i]) + "," +
             fmt_g(std::fabs(o.ratios[i] - 1.0)) + "\n";
      rows.push_back(json{{"eta", o.etas[i]}, {"ratio", o.ratios[i]}});
    }
    summary["rows"] = rows;
    summary["max_ratio_error"] = o.max_ratio_error;
    for (double r : o.ratios) c_meas = std::max(c_meas, r);
    if (!o.pass) failures.push_back("sharpness-exact-ratio");
  } else if (config.experiment == "theorem4-diagonal" ||
             config.experiment == "theorem5-affine") {
    const std::string scenario =
        config.experiment == "theorem4-diagonal" ? "diagonal" : "general";
    const SweepResult s =
        sweep_eta(scenario, config.dim, config.resolution, config.min_scale,
                  etas, config.seed, config.align);
    csv = "eta,ao_norm,bessel,ratio_to_sqrt_eta,members\n";
    json rows = json::array();
    for (const SweepPoint& p : s.points) {
      csv += fmt_g(p.eta) + "," + fmt_g(p.measurement) + "," + fmt_g(p.bessel) +
             "," + fmt_g(p.ratio_to_sqrt_eta) + "," +
             std::to_string(p.members) + "\n";
      rows.push_back(point_to_json(p));
    }
    summary["scenario"] = scenario;
    summary["rows"] = rows;
    summary["fit"] = fit_to_json(s.fit);
    c_meas = s.c_meas;
    if (!(s.fit.slope >= 0.35 && s.fit.slope <= 0.65))
      failures.push_back("slope-band");
    if (!std::isfinite(s.c_meas)) failures.push_back("c-meas-finite");
  } else if (config.experiment == "corollary5-random") {
    const RandomAverageOutcome o = run_random_average(
        config.resolution, config.min_scale, etas, config.seed);
    csv = "eta,result,ratio_to_sqrt_eta\n";
    json rows = json::array();
    for (const SweepPoint& p : o.points) {
      csv += fmt_g(p.eta) + "," + fmt_g(p.measurement) + "," +
             fmt_g(p.ratio_to_sqrt_eta) + "\n";
      rows.push_back(json{{"eta", p.eta},
                          {"result", p.measurement},
                          {"ratio_to_sqrt_eta", p.ratio_to_sqrt_eta}});
    }
    summary["rows"] = rows;
    summary["fit"] = fit_to_json(o.fit);
    c_meas = o.c_meas;
    if (!o.pass) failures.push_back("average-sensitivity-slope");
  } else if (config.experiment == "corollary3-reconstruct") {
    csv = "eta,delta,lower,upper,bound_slack,max_relative_error,error_budget,pass\n";
    json rows = json::array();
    bool all = true;
    for (std::size_t ei = 0; ei < etas.size(); ++ei) {
      const ReconstructOutcome o =
          run_reconstruct(config.resolution, config.min_scale, etas[ei],
                          config.probes, mix_seed(config.seed, ei));
      csv += fmt_g(o.eta) + "," + fmt_g(o.delta) + "," +
             fmt_g(o.bounds.lower) + "," + fmt_g(o.bounds.upper) + "," +
             fmt_g(o.bound_slack) + "," + fmt_g(o.max_relative_error) + "," +
             fmt_g(o.error_budget) + "," + (o.pass ? "1" : "0") + "\n";
      rows.push_back(json{{"eta", o.eta},
                          {"delta", o.delta},
                          {"lower", o.bounds.lower},
                          {"upper", o.bounds.upper},
                          {"bound_slack", o.bound_slack},
                          {"max_relative_error", o.max_relative_error},
                          {"error_budget", o.error_budget},
                          {"pass", o.pass}});
      c_meas = std::max(c_meas, o.delta / std::sqrt(o.eta));
      all = all && o.pass;
    }
    summary["rows"] = rows;
    if (!all) failures.push_back("frame-bounds-or-reconstruction");
  } else if (config.experiment == "theorem1-mollify") {
    const MollifierSpec spec = config.kernel_spec();
    csv = "eta,kernel,support_ok,equality_radius,max_violation_distance,"
          "ao_norm,self_similarity_discrepancy,members\n";
    json rows = json::array();
    std::vector<double> aos;
    bool all = true;
    for (std::size_t ei = 0; ei < etas.size(); ++ei) {
      const MollifyReport r = mollified_frame_report(
          config.dim, config.resolution, config.min_scale, etas[ei], spec,
          mix_seed(config.seed, ei));
      csv += fmt_g(r.eta) + "," + r.kernel + "," + (r.support_ok ? "1" : "0") +
             "," + fmt_g(r.equality_radius) + "," +
             fmt_g(r.max_violation_distance) + "," + fmt_g(r.ao_norm) + "," +
             fmt_g(r.self_similarity_discrepancy) + "," +
             std::to_string(r.members) + "\n";
      rows.push_back(json{{"eta", r.eta},
                          {"kernel", r.kernel},
                          {"support_ok", r.support_ok},
                          {"equality_radius", r.equality_radius},
                          {"max_violation_distance", r.max_violation_distance},
                          {"ao_norm", r.ao_norm},
                          {"self_similarity_discrepancy",
                           r.self_similarity_discrepancy},
                          {"members", r.members}});
      aos.push_back(r.ao_norm);
      c_meas = std::max(c_meas, r.ao_norm / std::sqrt(r.eta));
      const bool ok = r.support_ok && r.equality_radius <= 2.0 + 1e-9 &&
                      r.self_similarity_discrepancy == 0.0;
      all = all && ok;
    }
    summary["rows"] = rows;
    const double span = std::log2(*std::max_element(etas.begin(), etas.end()) /
                                  *std::min_element(etas.begin(), etas.end()));
    if (etas.size() >= 3 && span >= 2.0 - 1e-9) {
      const SlopeFit fit = fit_loglog(etas, aos);
      summary["fit"] = fit_to_json(fit);
      if (!(fit.slope >= 0.35 && fit.slope <= 0.65))
        failures.push_back("slope-band");
    }
    if (!all) failures.push_back("mollify-structure");
  } else if (config.experiment == "theorem3-nbv") {
    const NbvTrialStats o =
        run_nbv_suite(config.dim, config.resolution, config.min_scale,
                      config.trials, config.seed);
    csv = "quantity,value\n";
    csv += "max_bessel," + fmt_g(o.max_bessel) + "\n";
    csv += "bound," + fmt_g(o.bound) + "\n";
    csv += "max_bessel_minus_schur," + fmt_g(o.max_bessel_minus_schur) + "\n";
    csv += "trials," + std::to_string(o.trials) + "\n";
    summary["max_bessel"] = o.max_bessel;
    summary["bound"] = o.bound;
    summary["max_bessel_minus_schur"] = o.max_bessel_minus_schur;
    summary["trials"] = o.trials;
    c_meas = o.max_bessel / o.bound;
    if (!o.pass) failures.push_back("nbv-bessel-bound");
  }

  const bool pass = failures.empty();
  summary["pass"] = pass;
  summary["failures"] = failures;
  if (std::isfinite(c_meas))
    summary["c_meas"] = c_meas;
  else
    summary["c_meas"] = nullptr;

  write_text_file(base + ".csv", csv);
  write_text_file(base + ".json", summary.dump(2) + "\n");
  return pass ? 0 : 1;
}

}  // namespace haarlab
