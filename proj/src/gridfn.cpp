#include "haarlab/gridfn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "haarlab/errors.hpp"

namespace haarlab {

namespace {

std::vector<std::int64_t> box_strides(const Box& b) {
  const int d = b.dim();
  std::vector<std::int64_t> s(d, 1);
  for (int i = d - 2; i >= 0; --i) s[i] = s[i + 1] * std::max<std::int64_t>(b.extent(i + 1), 0);
  return s;
}

std::int64_t flat_index(const Box& b, const std::vector<std::int64_t>& strides,
                        const std::vector<std::int64_t>& cell) {
  std::int64_t idx = 0;
  for (int i = 0; i < b.dim(); ++i) idx += (cell[i] - b.lo[i]) * strides[i];
  return idx;
}

// Row-major odometer over all cells of a box.
template <typename F>
void for_each_cell(const Box& b, F&& fn) {
  if (b.dim() == 0 || b.empty()) return;
  const int d = b.dim();
  std::vector<std::int64_t> c(b.lo);
  while (true) {
    fn(c);
    int axis = d - 1;
    while (axis >= 0) {
      if (++c[axis] < b.hi[axis]) break;
      c[axis] = b.lo[axis];
      --axis;
    }
    if (axis < 0) return;
  }
}

// Visits each contiguous row (last axis) of the box: fn(cell_at_row_start).
template <typename F>
void for_each_row(const Box& b, F&& fn) {
  if (b.dim() == 0 || b.empty()) return;
  const int d = b.dim();
  std::vector<std::int64_t> c(b.lo);
  while (true) {
    fn(c);
    int axis = d - 2;
    while (axis >= 0) {
      if (++c[axis] < b.hi[axis]) break;
      c[axis] = b.lo[axis];
      --axis;
    }
    if (axis < 0) return;
  }
}

void check_same_dim(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw domain_error("box dims do not match");
}

} // namespace

std::int64_t Box::cell_count() const {
  std::int64_t n = 1;
  for (int i = 0; i < dim(); ++i) n *= std::max<std::int64_t>(extent(i), 0);
  return dim() == 0 ? 0 : n;
}

bool Box::empty() const {
  if (dim() == 0) return true;
  for (int i = 0; i < dim(); ++i)
    if (hi[i] <= lo[i]) return true;
  return false;
}

bool Box::contains(const Box& inner) const {
  check_same_dim(*this, inner);
  if (inner.empty()) return true;
  for (int i = 0; i < dim(); ++i)
    if (inner.lo[i] < lo[i] || inner.hi[i] > hi[i]) return false;
  return true;
}

Box intersect(const Box& a, const Box& b) {
  check_same_dim(a, b);
  Box out{a.lo, a.hi};
  for (int i = 0; i < a.dim(); ++i) {
    out.lo[i] = std::max(a.lo[i], b.lo[i]);
    out.hi[i] = std::max(std::min(a.hi[i], b.hi[i]), out.lo[i]);
  }
  return out;
}

Box bounding_union(const Box& a, const Box& b) {
  check_same_dim(a, b);
  if (a.empty()) return b;
  if (b.empty()) return a;
  Box out{a.lo, a.hi};
  for (int i = 0; i < a.dim(); ++i) {
    out.lo[i] = std::min(a.lo[i], b.lo[i]);
    out.hi[i] = std::max(a.hi[i], b.hi[i]);
  }
  return out;
}

GridFunction::GridFunction(int dim, int resolution, Box window)
    : dim_(dim), resolution_(resolution), window_(std::move(window)) {
  if (dim < 1) throw domain_error("grid function dim must be >= 1");
  if (resolution < 0 || resolution > 30)
    throw domain_error("resolution must lie in [0, 30]");
  if (window_.dim() != dim || static_cast<int>(window_.hi.size()) != dim)
    throw domain_error("window dim does not match function dim");
  if (window_.empty()) throw domain_error("window must be non-empty");
  support_ = Box{window_.lo, window_.lo};
}

double GridFunction::cell_size() const { return std::ldexp(1.0, -resolution_); }

double GridFunction::cell_volume() const {
  return std::ldexp(1.0, -resolution_ * dim_);
}

bool GridFunction::same_mesh(const GridFunction& other) const {
  return dim_ == other.dim_ && resolution_ == other.resolution_ &&
         window_ == other.window_;
}

double GridFunction::value_at_cell(const std::vector<std::int64_t>& cell) const {
  if (static_cast<int>(cell.size()) != dim_)
    throw domain_error("cell dim does not match function dim");
  if (support_.empty()) return 0.0;
  for (int i = 0; i < dim_; ++i)
    if (cell[i] < support_.lo[i] || cell[i] >= support_.hi[i]) return 0.0;
  return values_[flat_index(support_, box_strides(support_), cell)];
}

double GridFunction::value_at_point(const Point& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw domain_error("point dim does not match function dim");
  std::vector<std::int64_t> cell(dim_);
  for (int i = 0; i < dim_; ++i) {
    const double t = std::ldexp(x[i], resolution_);
    if (!(t >= static_cast<double>(window_.lo[i]) &&
          t < static_cast<double>(window_.hi[i])))
      return 0.0;
    cell[i] = static_cast<std::int64_t>(std::floor(t));
  }
  return value_at_cell(cell);
}

void GridFunction::reset_support(const Box& support) {
  if (support.dim() != dim_) throw domain_error("support dim does not match");
  if (!window_.contains(support))
    throw window_overflow_error("support box does not fit inside the window");
  Box nb = support;
  if (nb.empty()) nb = Box{window_.lo, window_.lo};
  std::vector<double> nv(static_cast<std::size_t>(nb.cell_count()), 0.0);
  if (!support_.empty() && !nb.empty()) {
    const Box ov = intersect(support_, nb);
    if (!ov.empty()) {
      const auto os = box_strides(support_);
      const auto ns = box_strides(nb);
      const std::int64_t len = ov.extent(dim_ - 1);
      for_each_row(ov, [&](const std::vector<std::int64_t>& row) {
        const std::int64_t src = flat_index(support_, os, row);
        const std::int64_t dst = flat_index(nb, ns, row);
        for (std::int64_t t = 0; t < len; ++t) nv[dst + t] = values_[src + t];
      });
    }
  }
  support_ = std::move(nb);
  values_ = std::move(nv);
}

double& GridFunction::cell_ref(const std::vector<std::int64_t>& cell) {
  if (static_cast<int>(cell.size()) != dim_)
    throw domain_error("cell dim does not match function dim");
  for (int i = 0; i < dim_; ++i)
    if (cell[i] < support_.lo[i] || cell[i] >= support_.hi[i])
      throw domain_error("cell lies outside the support box");
  return values_[flat_index(support_, box_strides(support_), cell)];
}

void GridFunction::shrink_support() {
  if (support_.empty()) return;
  std::vector<std::int64_t> lo(dim_, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(dim_, std::numeric_limits<std::int64_t>::min());
  std::size_t idx = 0;
  bool any = false;
  for_each_cell(support_, [&](const std::vector<std::int64_t>& c) {
    if (values_[idx++] != 0.0) {
      any = true;
      for (int i = 0; i < dim_; ++i) {
        lo[i] = std::min(lo[i], c[i]);
        hi[i] = std::max(hi[i], c[i] + 1);
      }
    }
  });
  if (!any) {
    support_ = Box{window_.lo, window_.lo};
    values_.clear();
    return;
  }
  const Box tight{lo, hi};
  if (tight == support_) return;
  reset_support(tight);
}

GridFunction& GridFunction::add_scaled(const GridFunction& other, double factor) {
  if (!same_mesh(other))
    throw alignment_error("grid functions combine only on an identical mesh");
  if (factor == 0.0 || other.support_.empty()) return *this;
  const Box u = bounding_union(support_, other.support_);
  if (!(u == support_)) reset_support(u);
  const auto ts = box_strides(support_);
  const auto os = box_strides(other.support_);
  const std::int64_t len = other.support_.extent(dim_ - 1);
  for_each_row(other.support_, [&](const std::vector<std::int64_t>& row) {
    const std::int64_t dst = flat_index(support_, ts, row);
    const std::int64_t src = flat_index(other.support_, os, row);
    for (std::int64_t t = 0; t < len; ++t)
      values_[dst + t] += factor * other.values_[src + t];
  });
  return *this;
}

GridFunction& GridFunction::scale(double factor) {
  for (double& v : values_) v *= factor;
  return *this;
}

double GridFunction::integral() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * cell_volume();
}

double GridFunction::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s * cell_volume());
}

Box default_window(int dim, int resolution) {
  if (dim < 1) throw domain_error("dim must be >= 1");
  if (resolution < 0 || resolution > 30)
    throw domain_error("resolution must lie in [0, 30]");
  const std::int64_t unit = std::int64_t{1} << resolution;
  Box b{std::vector<std::int64_t>(dim, -unit),
        std::vector<std::int64_t>(dim, 2 * unit)};
  return b;
}

Box box_from_coords(const std::vector<double>& lo, const std::vector<double>& hi,
                    int resolution) {
  if (lo.size() != hi.size() || lo.empty())
    throw domain_error("box corner vectors must have equal, positive size");
  const int d = static_cast<int>(lo.size());
  Box b{std::vector<std::int64_t>(d), std::vector<std::int64_t>(d)};
  for (int i = 0; i < d; ++i) {
    const double l = std::ldexp(lo[i], resolution);
    const double h = std::ldexp(hi[i], resolution);
    if (std::nearbyint(l) != l || std::nearbyint(h) != h)
      throw alignment_error("box corners do not land on the mesh");
    b.lo[i] = static_cast<std::int64_t>(l);
    b.hi[i] = static_cast<std::int64_t>(h);
  }
  return b;
}

Box cube_cells(const DyadicCube& cube, int resolution) {
  if (resolution + cube.scale < 0)
    throw resolution_error("cube is below mesh scale");
  const std::int64_t m = std::int64_t{1} << (resolution + cube.scale);
  const int d = cube.dim;
  Box b{std::vector<std::int64_t>(d), std::vector<std::int64_t>(d)};
  for (int i = 0; i < d; ++i) {
    b.lo[i] = cube.corner[i] * m;
    b.hi[i] = (cube.corner[i] + 1) * m;
  }
  return b;
}

GridFunction from_haar(const HaarIndex& index, int resolution, Box window) {
  const DyadicCube& q = index.cube;
  const unsigned count = 1u << q.dim;
  if (index.k == 0 || index.k >= count)
    throw domain_error("haar index k must lie in [1, 2^dim - 1]");
  if (resolution + q.scale < 1)
    throw alignment_error("mesh does not resolve cube children");
  const Box cells = cube_cells(q, resolution);
  if (!window.contains(cells))
    throw window_overflow_error("cube does not fit inside the window");
  GridFunction g(q.dim, resolution, std::move(window));
  g.reset_support(cells);
  const double s = scale_factor(q.scale, q.dim);
  const std::int64_t half = cells.extent(0) / 2;  // all cube extents are equal
  std::size_t idx = 0;
  for_each_cell(cells, [&](const std::vector<std::int64_t>& c) {
    int sign = 1;
    for (int i = 0; i < q.dim; ++i) {
      if (!((index.k >> i) & 1u)) continue;
      if (c[i] - cells.lo[i] >= half) sign = -sign;
    }
    g.values()[idx++] = (sign > 0) ? s : -s;
  });
  return g;
}

GridFunction indicator(const DyadicCube& cube, int resolution, Box window) {
  const Box cells = cube_cells(cube, resolution);
  if (!window.contains(cells))
    throw window_overflow_error("cube does not fit inside the window");
  GridFunction g(cube.dim, resolution, std::move(window));
  g.reset_support(cells);
  std::fill(g.values().begin(), g.values().end(), 1.0);
  return g;
}

GridFunction perturb(const GridFunction& f, const DyadicCube& cube,
                     const AffinePerturbation& p) {
  const int d = f.dim();
  if (cube.dim != d || p.matrix.dim != d)
    throw domain_error("cube or perturbation dim does not match function dim");
  GridFunction g(d, f.resolution(), f.window());
  if (f.support().empty()) return g;
  if (p.is_identity()) return f;
  const LuFactors lu = lu_factor(p.matrix);
  const double side = cube.side_length();
  // preimage of the support box: x = x_Q - l(Q) y + A^{-1}(s - x_Q)
  std::vector<double> xmin(d, std::numeric_limits<double>::infinity());
  std::vector<double> xmax(d, -std::numeric_limits<double>::infinity());
  const unsigned corners = 1u << d;
  for (unsigned m = 0; m < corners; ++m) {
    std::vector<double> s(d);
    for (int i = 0; i < d; ++i) {
      const std::int64_t c = ((m >> i) & 1u) ? f.support().hi[i] : f.support().lo[i];
      s[i] = std::ldexp(static_cast<double>(c), -f.resolution()) - cube.center(i);
    }
    const std::vector<double> w = lu_solve(lu, s);
    for (int i = 0; i < d; ++i) {
      const double x = cube.center(i) - side * p.translation[i] + w[i];
      xmin[i] = std::min(xmin[i], x);
      xmax[i] = std::max(xmax[i], x);
    }
  }
  Box out{std::vector<std::int64_t>(d), std::vector<std::int64_t>(d)};
  for (int i = 0; i < d; ++i) {
    out.lo[i] = static_cast<std::int64_t>(
                    std::floor(std::ldexp(xmin[i], f.resolution()))) - 1;
    out.hi[i] = static_cast<std::int64_t>(
                    std::floor(std::ldexp(xmax[i], f.resolution()))) + 2;
  }
  if (!f.window().contains(out))
    throw window_overflow_error(
        "preimage of the support does not fit inside the window");
  g.reset_support(out);
  std::size_t idx = 0;
  Point mid(d);
  for_each_cell(out, [&](const std::vector<std::int64_t>& c) {
    for (int i = 0; i < d; ++i)
      mid[i] = std::ldexp(static_cast<double>(c[i]) + 0.5, -f.resolution());
    g.values()[idx++] = f.value_at_point(apply_map(p, cube, mid));
  });
  g.shrink_support();
  return g;
}

MollifierSpec MollifierSpec::box_kernel() { return MollifierSpec{}; }

MollifierSpec MollifierSpec::bump_kernel() {
  MollifierSpec s;
  s.kind = Kind::bump;
  return s;
}

MollifierSpec MollifierSpec::custom(int dim, int samples_per_axis,
                                    std::vector<double> table) {
  if (dim < 1) throw domain_error("kernel dim must be >= 1");
  if (samples_per_axis < 1)
    throw domain_error("kernel needs at least one sample per axis");
  std::size_t want = 1;
  for (int i = 0; i < dim; ++i) want *= static_cast<std::size_t>(samples_per_axis);
  if (table.size() != want)
    throw domain_error("kernel table size does not match samples^dim");
  bool positive = false;
  for (double v : table) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw domain_error("kernel samples must be finite and nonnegative");
    if (v > 0.0) positive = true;
  }
  if (!positive) throw domain_error("kernel table is identically zero");
  MollifierSpec s;
  s.kind = Kind::custom;
  s.samples_per_axis = samples_per_axis;
  s.table = std::move(table);
  return s;
}

MollifierSpec MollifierSpec::from_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw error("cannot open kernel file: " + path);
  std::vector<double> tokens;
  std::string line;
  bool have_m = false;
  long long m = 0;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& ch : line)
      if (ch == ',' || ch == ';') ch = ' ';
    std::istringstream row(line);
    std::string tok;
    while (row >> tok) {
      try {
        if (!have_m) {
          m = std::stoll(tok);
          have_m = true;
        } else {
          tokens.push_back(std::stod(tok));
        }
      } catch (const std::exception&) {
        throw domain_error("malformed kernel entry '" + tok + "' in " + path);
      }
    }
  }
  if (!have_m) throw domain_error("kernel file has no sample count: " + path);
  if (m < 1 || m > 4096)
    throw domain_error("kernel sample count out of range in " + path);
  return custom(dim, static_cast<int>(m), std::move(tokens));
}

double MollifierSpec::evaluate(const Point& u, int dim) const {
  if (static_cast<int>(u.size()) != dim)
    throw domain_error("kernel argument dim mismatch");
  switch (kind) {
    case Kind::box: {
      for (double t : u)
        if (std::abs(t) > 1.0) return 0.0;
      return 1.0;
    }
    case Kind::bump: {
      double t = 0.0;
      for (double v : u) t = std::max(t, std::abs(v));
      return (t <= 1.0) ? (1.0 - t) * (1.0 + t) : 0.0;
    }
    case Kind::custom: {
      std::size_t want = 1;
      for (int i = 0; i < dim; ++i)
        want *= static_cast<std::size_t>(samples_per_axis);
      if (table.size() != want)
        throw domain_error("kernel table does not match the requested dim");
      std::size_t idx = 0;
      for (int i = 0; i < dim; ++i) {
        if (std::abs(u[i]) > 1.0) return 0.0;
        auto s = static_cast<std::int64_t>((u[i] + 1.0) * 0.5 * samples_per_axis);
        s = std::clamp<std::int64_t>(s, 0, samples_per_axis - 1);
        idx = idx * static_cast<std::size_t>(samples_per_axis) +
              static_cast<std::size_t>(s);
      }
      return table[idx];
    }
  }
  throw domain_error("unknown kernel kind");
}

std::string MollifierSpec::name() const {
  switch (kind) {
    case Kind::box: return "box";
    case Kind::bump: return "bump";
    case Kind::custom: return "custom";
  }
  return "unknown";
}

GridFunction mollify(const GridFunction& f, const MollifierSpec& psi,
                     double delta) {
  const int d = f.dim();
  if (!(delta > 0.0)) throw domain_error("mollification radius must be positive");
  if (delta < f.cell_size() * (1.0 - 1e-12))
    throw resolution_error("mollification radius is below the cell size");
  if (f.support().empty()) return f;
  const double t = std::ldexp(delta, f.resolution());  // radius in cells
  const std::int64_t mlo = static_cast<std::int64_t>(std::floor(-t));
  const std::int64_t mhi = static_cast<std::int64_t>(std::ceil(t));
  Box obox{std::vector<std::int64_t>(d, mlo), std::vector<std::int64_t>(d, mhi)};
  std::vector<std::vector<std::int64_t>> offsets;
  std::vector<double> weights;
  double total = 0.0;
  Point u(d);
  for_each_cell(obox, [&](const std::vector<std::int64_t>& m) {
    for (int i = 0; i < d; ++i)
      u[i] = (static_cast<double>(m[i]) + 0.5) / t;
    const double w = psi.evaluate(u, d);
    if (w > 0.0) {
      offsets.push_back(m);
      weights.push_back(w);
      total += w;
    }
  });
  if (!(total > 0.0))
    throw resolution_error("kernel sampled to zero mass on the mesh");
  std::vector<std::int64_t> omin(d, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> omax(d, std::numeric_limits<std::int64_t>::min());
  for (const auto& m : offsets)
    for (int i = 0; i < d; ++i) {
      omin[i] = std::min(omin[i], m[i]);
      omax[i] = std::max(omax[i], m[i]);
    }
  Box out{std::vector<std::int64_t>(d), std::vector<std::int64_t>(d)};
  for (int i = 0; i < d; ++i) {
    out.lo[i] = f.support().lo[i] + omin[i];
    out.hi[i] = f.support().hi[i] + omax[i];
  }
  if (!f.window().contains(out))
    throw window_overflow_error("mollified support does not fit inside the window");
  GridFunction g(d, f.resolution(), f.window());
  g.reset_support(out);
  auto& gv = g.values();
  const auto ts = box_strides(g.support());
  const auto ss = box_strides(f.support());
  const std::int64_t len = f.support().extent(d - 1);
  std::vector<std::int64_t> shifted(d);
  for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
    const double w = weights[oi];
    const auto& m = offsets[oi];
    for_each_row(f.support(), [&](const std::vector<std::int64_t>& row) {
      for (int i = 0; i < d; ++i) shifted[i] = row[i] + m[i];
      const std::int64_t dst = flat_index(g.support(), ts, shifted);
      const std::int64_t src = flat_index(f.support(), ss, row);
      for (std::int64_t k = 0; k < len; ++k)
        gv[dst + k] += w * f.values()[src + k];
    });
  }
  // Normalizing the output, not the weights, keeps the convolution exact on
  // constant regions: there the accumulated sum is bitwise the same addition
  // sequence as `total`, so the quotient is exactly the constant.
  for (double& v : gv) v /= total;
  return g;
}

double inner_product(const GridFunction& f, const GridFunction& g) {
  if (!f.same_mesh(g))
    throw alignment_error("inner product requires an identical mesh");
  const Box ov = intersect(f.support(), g.support());
  if (ov.empty()) return 0.0;
  const auto fs = box_strides(f.support());
  const auto gs = box_strides(g.support());
  const int d = f.dim();
  const std::int64_t len = ov.extent(d - 1);
  double s = 0.0;
  for_each_row(ov, [&](const std::vector<std::int64_t>& row) {
    const std::int64_t fi = flat_index(f.support(), fs, row);
    const std::int64_t gi = flat_index(g.support(), gs, row);
    for (std::int64_t t = 0; t < len; ++t)
      s += f.values()[fi + t] * g.values()[gi + t];
  });
  return s * f.cell_volume();
}

double l2_norm(const GridFunction& f) { return f.l2_norm(); }

double axis_tv(const GridFunction& f, int axis,
               const std::vector<std::int64_t>& transverse_cell) {
  const int d = f.dim();
  if (axis < 0 || axis >= d) throw domain_error("axis out of range");
  if (static_cast<int>(transverse_cell.size()) != d - 1)
    throw domain_error("transverse cell must have dim-1 coordinates");
  if (f.support().empty()) return 0.0;
  std::vector<std::int64_t> cell(d);
  int t = 0;
  for (int i = 0; i < d; ++i) {
    if (i == axis) continue;
    cell[i] = transverse_cell[t++];
    if (cell[i] < f.support().lo[i] || cell[i] >= f.support().hi[i]) return 0.0;
  }
  double tv = 0.0;
  double prev = 0.0;
  for (std::int64_t c = f.support().lo[axis]; c <= f.support().hi[axis]; ++c) {
    double v = 0.0;
    if (c < f.support().hi[axis]) {
      cell[axis] = c;
      v = f.value_at_cell(cell);
    }
    tv += std::abs(v - prev);
    prev = v;
  }
  return tv;
}

double max_axis_tv(const GridFunction& f) {
  const int d = f.dim();
  if (f.support().empty()) return 0.0;
  double worst = 0.0;
  if (d == 1) return axis_tv(f, 0, {});
  for (int axis = 0; axis < d; ++axis) {
    Box tbox{std::vector<std::int64_t>(), std::vector<std::int64_t>()};
    for (int i = 0; i < d; ++i) {
      if (i == axis) continue;
      tbox.lo.push_back(f.support().lo[i]);
      tbox.hi.push_back(f.support().hi[i]);
    }
    for_each_cell(tbox, [&](const std::vector<std::int64_t>& tc) {
      worst = std::max(worst, axis_tv(f, axis, tc));
    });
  }
  return worst;
}

double line_tv(const GridFunction& f, const Point& base, const Point& direction,
               double step) {
  const int d = f.dim();
  if (static_cast<int>(base.size()) != d ||
      static_cast<int>(direction.size()) != d)
    throw domain_error("line parameters do not match function dim");
  const double nd = vector_inf_norm(direction);
  if (!(nd > 0.0)) throw domain_error("line direction must be nonzero");
  if (!(step > 0.0) || step > f.cell_size() / (2.0 * nd) * (1.0 + 1e-12))
    throw domain_error("step must resolve cell crossings: step <= cell/(2 |dir|)");
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    const double wlo = std::ldexp(static_cast<double>(f.window().lo[i]),
                                  -f.resolution());
    const double whi = std::ldexp(static_cast<double>(f.window().hi[i]),
                                  -f.resolution());
    if (direction[i] == 0.0) {
      if (base[i] < wlo || base[i] >= whi) return 0.0;
      continue;
    }
    const double t1 = (wlo - base[i]) / direction[i];
    const double t2 = (whi - base[i]) / direction[i];
    tmin = std::max(tmin, std::min(t1, t2));
    tmax = std::min(tmax, std::max(t1, t2));
  }
  if (!(tmax > tmin)) return 0.0;
  double tv = 0.0;
  double prev = 0.0;
  Point x(d);
  const double start = tmin - 2.0 * step;
  const double stop = tmax + 2.0 * step;
  for (double t = start; t <= stop; t += step) {
    for (int i = 0; i < d; ++i) x[i] = base[i] + t * direction[i];
    const double v = f.value_at_point(x);
    tv += std::abs(v - prev);
    prev = v;
  }
  tv += std::abs(prev);
  return tv;
}

namespace {

nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json{{"lo", b.lo}, {"hi", b.hi}};
}

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("lo") || !j.contains("hi"))
    throw domain_error("box record must carry lo and hi arrays");
  Box b{j["lo"].get<std::vector<std::int64_t>>(),
        j["hi"].get<std::vector<std::int64_t>>()};
  if (b.lo.size() != b.hi.size())
    throw domain_error("box record corner sizes differ");
  return b;
}

} // namespace

void save_grid_function(const GridFunction& f, const std::string& base_path,
                        PayloadFormat format) {
  nlohmann::json j{
      {"dim", f.dim()},
      {"resolution", f.resolution()},
      {"window", box_to_json(f.window())},
      {"support", box_to_json(f.support())},
      {"format", format == PayloadFormat::binary ? "binary" : "csv"},
  };
  {
    std::ofstream out(base_path + ".json");
    if (!out) throw error("cannot write header: " + base_path + ".json");
    out << j.dump(2) << "\n";
  }
  if (format == PayloadFormat::binary) {
    std::ofstream out(base_path + ".bin", std::ios::binary);
    if (!out) throw error("cannot write payload: " + base_path + ".bin");
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * sizeof(double)));
  } else {
    std::ofstream out(base_path + ".csv");
    if (!out) throw error("cannot write payload: " + base_path + ".csv");
    char buf[40];
    for (double v : f.values()) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << "\n";
    }
  }
}

GridFunction load_grid_function(const std::string& base_path) {
  std::ifstream in(base_path + ".json");
  if (!in) throw error("cannot open header: " + base_path + ".json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw domain_error(std::string("malformed header: ") + e.what());
  }
  for (const char* key : {"dim", "resolution", "window", "support", "format"})
    if (!j.contains(key))
      throw domain_error(std::string("header misses field '") + key + "'");
  GridFunction g(j["dim"].get<int>(), j["resolution"].get<int>(),
                 box_from_json(j["window"]));
  const Box support = box_from_json(j["support"]);
  g.reset_support(support);
  const std::size_t count = g.values().size();
  std::vector<double> vals(count, 0.0);
  const std::string format = j["format"].get<std::string>();
  if (format == "binary") {
    std::ifstream pin(base_path + ".bin", std::ios::binary);
    if (!pin) throw error("cannot open payload: " + base_path + ".bin");
    pin.read(reinterpret_cast<char*>(vals.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(pin.gcount()) != count * sizeof(double))
      throw domain_error("payload size does not match the support box");
  } else if (format == "csv") {
    std::ifstream pin(base_path + ".csv");
    if (!pin) throw error("cannot open payload: " + base_path + ".csv");
    for (std::size_t i = 0; i < count; ++i)
      if (!(pin >> vals[i]))
        throw domain_error("payload has fewer values than the support box");
  } else {
    throw domain_error("unknown payload format: " + format);
  }
  g.values() = std::move(vals);
  return g;
}

} // namespace haarlab
