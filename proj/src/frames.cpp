#include "haarlab/frames.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "haarlab/errors.hpp"
#include "haarlab/random.hpp"

namespace haarlab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

bool boxes_disjoint(const Box& a, const Box& b) {
  return intersect(a, b).empty();
}

} // namespace

void FamilySpec::push(GridFunction f, std::optional<HaarIndex> label) {
  members.push_back(std::move(f));
  labels.push_back(std::move(label));
}

void FamilySpec::validate() const {
  if (members.size() != labels.size())
    throw domain_error("family labels do not match members");
  for (std::size_t i = 1; i < members.size(); ++i)
    if (!members[i].same_mesh(members[0]))
      throw alignment_error("family members live on different meshes");
}

std::vector<double> SparseSymMatrix::multiply(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != n)
    throw domain_error("vector size does not match matrix size");
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& [j, a] : rows[i]) s += a * v[j];
    out[i] = s;
  }
  return out;
}

std::int64_t SparseSymMatrix::nonzero_count() const {
  std::int64_t c = 0;
  for (const auto& row : rows) c += static_cast<std::int64_t>(row.size());
  return c;
}

double SparseSymMatrix::max_abs_off_diagonal() const {
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (const auto& [j, a] : rows[i])
      if (j != i) worst = std::max(worst, std::abs(a));
  return worst;
}

double SparseSymMatrix::min_diagonal() const {
  double low = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) low = std::min(low, entry(i, i));
  return low;
}

double SparseSymMatrix::entry(int i, int j) const {
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw domain_error("matrix index out of range");
  for (const auto& [c, a] : rows[i])
    if (c == j) return a;
  return 0.0;
}

SparseSymMatrix gram_matrix(const FamilySpec& family) {
  family.validate();
  const int n = family.size();
  SparseSymMatrix m;
  m.n = n;
  m.rows.assign(n, {});
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (i != j && boxes_disjoint(family.members[i].support(),
                                   family.members[j].support()))
        continue;
      const double v = inner_product(family.members[i], family.members[j]);
      m.rows[i].emplace_back(j, v);
      if (j != i) m.rows[j].emplace_back(i, v);
    }
  }
  return m;
}

PowerIterationResult top_eigenvalue(const SparseSymMatrix& m, double rel_tol,
                                    std::uint64_t seed) {
  PowerIterationResult res;
  if (m.n == 0) return res;
  if (static_cast<int>(m.rows.size()) != m.n)
    throw domain_error("matrix rows do not match size");
  Rng rng(seed);
  const int max_restarts = 4;
  const int max_iters_per_run = 20000;
  int total_iters = 0;
  double best = 0.0;
  for (int restart = 0; restart < max_restarts; ++restart) {
    std::vector<double> v(m.n);
    double vn = 0.0;
    do {
      for (double& x : v) x = rng.normal();
      vn = norm2(v);
    } while (!(vn > 0.0));
    for (double& x : v) x /= vn;
    double lambda_prev = 0.0;
    int stall = 0;
    for (int iter = 0; iter < max_iters_per_run; ++iter) {
      std::vector<double> w = m.multiply(v);
      const double lambda = dot(v, w);
      ++total_iters;
      double rnorm = 0.0;
      for (int i = 0; i < m.n; ++i) {
        const double r = w[i] - lambda * v[i];
        rnorm += r * r;
      }
      rnorm = std::sqrt(rnorm);
      const double scale = std::max(std::abs(lambda), 1e-300);
      if (rnorm <= rel_tol * scale) {
        res.eigenvalue = lambda;
        res.iterations = total_iters;
        res.restarts = restart;
        res.converged = true;
        return res;
      }
      // Rayleigh quotient stationary at working precision: accept.  This is
      // the near-degenerate-gap case, where the quotient settles long before
      // the iterate does.
      if (std::abs(lambda - lambda_prev) <= 1e-13 * scale) {
        if (++stall >= 50) {
          res.eigenvalue = lambda;
          res.iterations = total_iters;
          res.restarts = restart;
          res.converged = true;
          return res;
        }
      } else {
        stall = 0;
      }
      lambda_prev = lambda;
      best = std::max(best, lambda);
      const double wn = norm2(w);
      if (!(wn > 0.0)) break;  // iterate hit the kernel: restart
      for (int i = 0; i < m.n; ++i) v[i] = w[i] / wn;
    }
  }
  throw convergence_error(
      "power iteration exhausted its budget (best estimate " +
      std::to_string(best) + " after " + std::to_string(total_iters) +
      " iterations)");
}

double min_eigenvalue(const SparseSymMatrix& m, double rel_tol,
                      std::uint64_t seed) {
  const PowerIterationResult top = top_eigenvalue(m, rel_tol, seed);
  SparseSymMatrix shifted;
  shifted.n = m.n;
  shifted.rows.assign(m.n, {});
  for (int i = 0; i < m.n; ++i) {
    bool diag_seen = false;
    for (const auto& [j, a] : m.rows[i]) {
      if (j == i) {
        shifted.rows[i].emplace_back(i, top.eigenvalue - a);
        diag_seen = true;
      } else {
        shifted.rows[i].emplace_back(j, -a);
      }
    }
    if (!diag_seen) shifted.rows[i].emplace_back(i, top.eigenvalue);
  }
  const PowerIterationResult low = top_eigenvalue(shifted, rel_tol, seed + 1);
  return top.eigenvalue - low.eigenvalue;
}

GramSummary gram_summary(const FamilySpec& family, double rel_tol,
                         std::uint64_t seed) {
  GramSummary s;
  s.gram = gram_matrix(family);
  const PowerIterationResult top = top_eigenvalue(s.gram, rel_tol, seed);
  s.bessel_bound = std::max(top.eigenvalue, 0.0);
  s.ao_norm = std::sqrt(s.bessel_bound);
  s.iterations = top.iterations;
  s.restarts = top.restarts;
  s.tolerance = rel_tol;
  return s;
}

double bessel_bound(const FamilySpec& family) {
  return gram_summary(family).bessel_bound;
}

double ao_norm(const FamilySpec& family) { return gram_summary(family).ao_norm; }

double schur_diagnostic(const FamilySpec& family, const FamilySpec& reference) {
  family.validate();
  reference.validate();
  if (family.size() == 0 || reference.size() == 0)
    throw domain_error("schur diagnostic needs non-empty families");
  if (!family.members[0].same_mesh(reference.members[0]))
    throw alignment_error("family and reference live on different meshes");
  std::vector<double> row(family.size(), 0.0);
  double colmax = 0.0;
  for (int j = 0; j < reference.size(); ++j) {
    double col = 0.0;
    for (int i = 0; i < family.size(); ++i) {
      if (boxes_disjoint(family.members[i].support(),
                         reference.members[j].support()))
        continue;
      const double e =
          std::abs(inner_product(family.members[i], reference.members[j]));
      row[i] += e;
      col += e;
    }
    colmax = std::max(colmax, col);
  }
  double rowmax = 0.0;
  for (double r : row) rowmax = std::max(rowmax, r);
  return rowmax * colmax;
}

namespace {

// Summed-area table over a member's support box: O(2^d) box-sum queries.
struct PrefixMember {
  Box support;                       // absolute cell coordinates
  std::vector<std::int64_t> ext;     // extents + 1 per axis
  std::vector<std::int64_t> strides;
  std::vector<double> table;         // zero border at index 0 on every axis

  explicit PrefixMember(const GridFunction& f) : support(f.support()) {
    const int d = f.dim();
    ext.resize(d);
    strides.assign(d, 1);
    for (int i = 0; i < d; ++i) ext[i] = std::max<std::int64_t>(support.extent(i), 0) + 1;
    for (int i = d - 2; i >= 0; --i) strides[i] = strides[i + 1] * ext[i + 1];
    table.assign(static_cast<std::size_t>(strides[0] * ext[0]), 0.0);
    if (support.empty()) return;
    // copy values, then cumulative-sum one axis at a time
    std::vector<std::int64_t> src_strides(d, 1);
    for (int i = d - 2; i >= 0; --i)
      src_strides[i] = src_strides[i + 1] * support.extent(i + 1);
    const auto& vals = f.values();
    for (std::size_t s = 0; s < vals.size(); ++s) {
      std::int64_t idx = 0;
      std::size_t rem = s;
      for (int i = 0; i < d; ++i) {
        const std::int64_t coord =
            static_cast<std::int64_t>(rem / static_cast<std::size_t>(src_strides[i]));
        rem %= static_cast<std::size_t>(src_strides[i]);
        idx += (coord + 1) * strides[i];
      }
      table[static_cast<std::size_t>(idx)] = vals[s];
    }
    for (int axis = 0; axis < d; ++axis) {
      // in-place running sum along `axis`
      const std::int64_t stride = strides[axis];
      const std::int64_t count = static_cast<std::int64_t>(table.size());
      for (std::int64_t base = 0; base < count; ++base) {
        const std::int64_t coord = (base / stride) % ext[axis];
        if (coord == 0) continue;
        table[static_cast<std::size_t>(base)] +=
            table[static_cast<std::size_t>(base - stride)];
      }
    }
  }

  // Sum of cell values over the absolute half-open box [lo, hi).
  double box_sum(const Box& query) const {
    if (support.empty()) return 0.0;
    const int d = support.dim();
    std::vector<std::int64_t> a(d), b(d);
    for (int i = 0; i < d; ++i) {
      a[i] = std::clamp(query.lo[i], support.lo[i], support.hi[i]) - support.lo[i];
      b[i] = std::clamp(query.hi[i], support.lo[i], support.hi[i]) - support.lo[i];
      if (b[i] <= a[i]) return 0.0;
    }
    double s = 0.0;
    const unsigned corners = 1u << d;
    for (unsigned m = 0; m < corners; ++m) {
      std::int64_t idx = 0;
      int lows = 0;
      for (int i = 0; i < d; ++i) {
        const bool low = (m >> i) & 1u;
        idx += (low ? a[i] : b[i]) * strides[i];
        lows += low ? 1 : 0;
      }
      const double sign = (lows % 2 == 0) ? 1.0 : -1.0;
      s += sign * table[static_cast<std::size_t>(idx)];
    }
    return s;
  }
};

struct SchurState {
  std::vector<PrefixMember> tables;
  std::vector<double> rowsum;
  double colmax = 0.0;
  double cellvol = 0.0;
  int dim = 0;
  int resolution = 0;
  int min_scale = 0;
};

// Walks the dyadic tree under `cube`, accumulating |<member, reference>| for
// the 2^d - 1 Haar references on each visited cube.  `active` holds the
// member ids whose support meets the cube.
void schur_walk(SchurState& st, const DyadicCube& cube,
                const std::vector<int>& active) {
  if (active.empty()) return;
  const int d = st.dim;
  const Box qbox = cube_cells(cube, st.resolution);
  const unsigned nchild = 1u << d;
  // child cell boxes, indexed by axis bitmask (bit i = axis i upper half)
  std::vector<Box> cboxes(nchild, qbox);
  for (unsigned m = 0; m < nchild; ++m) {
    for (int i = 0; i < d; ++i) {
      const std::int64_t mid = (qbox.lo[i] + qbox.hi[i]) / 2;
      if ((m >> i) & 1u)
        cboxes[m].lo[i] = mid;
      else
        cboxes[m].hi[i] = mid;
    }
  }
  const double norm = scale_factor(cube.scale, d) * st.cellvol;
  std::vector<double> colsum(nchild, 0.0);  // per k, k >= 1
  std::vector<double> child_sums(nchild);
  for (int id : active) {
    const PrefixMember& pm = st.tables[static_cast<std::size_t>(id)];
    for (unsigned m = 0; m < nchild; ++m) child_sums[m] = pm.box_sum(cboxes[m]);
    for (unsigned k = 1; k < nchild; ++k) {
      double s = 0.0;
      for (unsigned m = 0; m < nchild; ++m) {
        const bool flip = (std::popcount(k & m) % 2) != 0;
        s += flip ? -child_sums[m] : child_sums[m];
      }
      const double e = std::abs(norm * s);
      st.rowsum[static_cast<std::size_t>(id)] += e;
      colsum[k] += e;
    }
  }
  for (unsigned k = 1; k < nchild; ++k)
    st.colmax = std::max(st.colmax, colsum[k]);
  if (cube.scale <= st.min_scale) return;
  for (const DyadicCube& child : children(cube)) {
    const Box childbox = cube_cells(child, st.resolution);
    std::vector<int> next;
    for (int id : active)
      if (!boxes_disjoint(st.tables[static_cast<std::size_t>(id)].support,
                          childbox))
        next.push_back(id);
    if (!next.empty()) schur_walk(st, child, next);
  }
}

} // namespace

double schur_diagnostic_haar(const FamilySpec& family,
                             const std::vector<DyadicCube>& tiles,
                             int min_scale) {
  family.validate();
  if (family.size() == 0)
    throw domain_error("schur diagnostic needs a non-empty family");
  if (tiles.empty()) throw domain_error("schur diagnostic needs tiles");
  const GridFunction& first = family.members[0];
  const int d = first.dim();
  const int res = first.resolution();
  if (res + min_scale < 1)
    throw domain_error("min_scale is below what the mesh resolves");
  for (const DyadicCube& t : tiles) {
    if (t.dim != d) throw domain_error("tile dim does not match the family");
    if (t.scale < min_scale)
      throw domain_error("tile scale below min_scale");
  }
  SchurState st;
  st.dim = d;
  st.resolution = res;
  st.min_scale = min_scale;
  st.cellvol = first.cell_volume();
  st.rowsum.assign(static_cast<std::size_t>(family.size()), 0.0);
  st.tables.reserve(static_cast<std::size_t>(family.size()));
  Box covered{std::vector<std::int64_t>(d, 0), std::vector<std::int64_t>(d, 0)};
  bool covered_set = false;
  for (const DyadicCube& t : tiles) {
    const Box tb = cube_cells(t, res);
    covered = covered_set ? bounding_union(covered, tb) : tb;
    covered_set = true;
  }
  for (const GridFunction& f : family.members) {
    if (!covered.contains(f.support()))
      throw domain_error("a member's support escapes the tile union");
    st.tables.emplace_back(f);
  }
  for (const DyadicCube& tile : tiles) {
    const Box tbox = cube_cells(tile, res);
    std::vector<int> active;
    for (int i = 0; i < family.size(); ++i)
      if (!boxes_disjoint(st.tables[static_cast<std::size_t>(i)].support, tbox))
        active.push_back(i);
    if (active.empty()) continue;
    // normalized tile indicator reference
    const double norm = scale_factor(tile.scale, d) * st.cellvol;
    double col = 0.0;
    for (int id : active) {
      const double e =
          std::abs(norm * st.tables[static_cast<std::size_t>(id)].box_sum(tbox));
      st.rowsum[static_cast<std::size_t>(id)] += e;
      col += e;
    }
    st.colmax = std::max(st.colmax, col);
    schur_walk(st, tile, active);
  }
  double rowmax = 0.0;
  for (double r : st.rowsum) rowmax = std::max(rowmax, r);
  return rowmax * st.colmax;
}

std::vector<DyadicCube> window_tiles(int dim) {
  if (dim < 1) throw domain_error("dim must be >= 1");
  std::vector<DyadicCube> tiles;
  std::vector<std::int64_t> corner(dim, -1);
  while (true) {
    tiles.push_back(DyadicCube{dim, 0, corner});
    int axis = dim - 1;
    while (axis >= 0) {
      if (++corner[axis] <= 1) break;
      corner[axis] = -1;
      --axis;
    }
    if (axis < 0) break;
  }
  return tiles;
}

CoefficientVector analyze(const GridFunction& f, const FamilySpec& family) {
  family.validate();
  CoefficientVector c(static_cast<std::size_t>(family.size()));
  for (int i = 0; i < family.size(); ++i)
    c[static_cast<std::size_t>(i)] = inner_product(f, family.members[i]);
  return c;
}

GridFunction synthesize(const CoefficientVector& coefficients,
                        const FamilySpec& family) {
  family.validate();
  if (family.size() == 0)
    throw domain_error("cannot synthesize from an empty family");
  if (coefficients.size() != static_cast<std::size_t>(family.size()))
    throw domain_error("coefficient count does not match the family");
  const GridFunction& first = family.members[0];
  GridFunction g(first.dim(), first.resolution(), first.window());
  Box cover{g.window().lo, g.window().lo};
  bool any = false;
  for (int i = 0; i < family.size(); ++i) {
    if (coefficients[static_cast<std::size_t>(i)] == 0.0) continue;
    cover = any ? bounding_union(cover, family.members[i].support())
                : family.members[i].support();
    any = true;
  }
  if (!any) return g;
  g.reset_support(cover);
  for (int i = 0; i < family.size(); ++i)
    g.add_scaled(family.members[i], coefficients[static_cast<std::size_t>(i)]);
  return g;
}

ReconstructionResult reconstruct_error(const GridFunction& f,
                                       const FamilySpec& analysis,
                                       const FamilySpec& synthesis) {
  const double nf = f.l2_norm();
  if (!(nf > 0.0)) throw domain_error("reconstruction needs a nonzero input");
  const CoefficientVector c = analyze(f, analysis);
  ReconstructionResult out{synthesize(c, synthesis), 0.0};
  GridFunction diff = f;
  diff.add_scaled(out.reconstruction, -1.0);
  out.relative_error = diff.l2_norm() / nf;
  return out;
}

FrameBounds frame_bounds_empirical(const FamilySpec& family,
                                   const std::vector<GridFunction>& probes) {
  family.validate();
  if (probes.empty()) throw domain_error("empirical bounds need probes");
  FrameBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (const GridFunction& p : probes) {
    const double np = p.l2_norm();
    if (!(np > 0.0)) throw domain_error("probe with zero norm");
    double s = 0.0;
    for (int i = 0; i < family.size(); ++i) {
      const double ip = inner_product(p, family.members[i]);
      s += ip * ip;
    }
    const double ratio = s / (np * np);
    b.lower = std::min(b.lower, ratio);
    b.upper = std::max(b.upper, ratio);
  }
  return b;
}

double avg_square_function(const GridFunction& g, const PerturbationMap& map,
                           const std::vector<DyadicCube>& cubes) {
  if (cubes.empty()) throw domain_error("average sensitivity needs cubes");
  double acc = 0.0;
  for (const DyadicCube& q : cubes) {
    if (q.dim != g.dim()) throw domain_error("cube dim does not match function");
    const auto it = map.find(q);
    // absent cubes carry the identity, whose term vanishes exactly
    if (it == map.end() || it->second.is_identity()) continue;
    const GridFunction chi = indicator(q, g.resolution(), g.window());
    const double avg = inner_product(g, chi) / q.volume();
    GridFunction mapped;
    try {
      mapped = perturb(chi, q, it->second);
    } catch (const window_overflow_error& e) {
      std::string where = "scale=" + std::to_string(q.scale) + " corner=[";
      for (std::size_t i = 0; i < q.corner.size(); ++i)
        where += (i ? "," : "") + std::to_string(q.corner[i]);
      throw window_overflow_error(std::string(e.what()) + " (cube " + where +
                                  "])");
    }
    const double mass = mapped.integral();
    if (!(mass > 0.0))
      throw degenerate_error("perturbed cube has zero grid measure");
    const double avg_star = inner_product(g, mapped) / mass;
    const double diff = avg - avg_star;
    acc += diff * diff * q.volume();
  }
  return std::sqrt(acc);
}

std::string gram_summary_to_json(const GramSummary& summary) {
  nlohmann::json j{
      {"size", summary.gram.n},
      {"nonzeros", summary.gram.nonzero_count()},
      {"bessel_bound", summary.bessel_bound},
      {"ao_norm", summary.ao_norm},
      {"iterations", summary.iterations},
      {"restarts", summary.restarts},
      {"tolerance", summary.tolerance},
  };
  if (summary.schur_sq.has_value())
    j["schur_sq"] = *summary.schur_sq;
  else
    j["schur_sq"] = nullptr;
  return j.dump(2);
}

void write_gram_summary(const GramSummary& summary, const std::string& json_path,
                        const std::string& coo_csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw error("cannot write " + json_path);
    out << gram_summary_to_json(summary) << "\n";
  }
  std::ofstream out(coo_csv_path);
  if (!out) throw error("cannot write " + coo_csv_path);
  out << "i,j,value\n";
  char buf[48];
  for (int i = 0; i < summary.gram.n; ++i) {
    for (const auto& [j, v] : summary.gram.rows[i]) {
      if (j < i) continue;
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g", i, j, v);
      out << buf << "\n";
    }
  }
}

} // namespace haarlab
