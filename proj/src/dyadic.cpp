#include "haarlab/dyadic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "haarlab/errors.hpp"

namespace haarlab {

namespace {

void check_cube(const DyadicCube& cube) {
  if (cube.dim < 1) throw domain_error("cube dim must be >= 1");
  if (static_cast<int>(cube.corner.size()) != cube.dim)
    throw domain_error("cube corner size does not match dim");
}

void check_index(const HaarIndex& index) {
  check_cube(index.cube);
  const unsigned count = 1u << index.cube.dim;
  if (index.k == 0 || index.k >= count)
    throw domain_error("haar index k must lie in [1, 2^dim - 1], got " +
                       std::to_string(index.k));
}

} // namespace

double DyadicCube::side_length() const { return std::ldexp(1.0, scale); }

double DyadicCube::volume() const { return std::ldexp(1.0, scale * dim); }

double DyadicCube::lower(int axis) const {
  return std::ldexp(static_cast<double>(corner[axis]), scale);
}

double DyadicCube::upper(int axis) const {
  return std::ldexp(static_cast<double>(corner[axis] + 1), scale);
}

double DyadicCube::center(int axis) const {
  return std::ldexp(static_cast<double>(corner[axis]) + 0.5, scale);
}

Point DyadicCube::center_point() const {
  Point c(dim);
  for (int i = 0; i < dim; ++i) c[i] = center(i);
  return c;
}

bool DyadicCube::contains(const Point& x) const {
  check_cube(*this);
  if (static_cast<int>(x.size()) != dim)
    throw domain_error("point dim does not match cube dim");
  for (int i = 0; i < dim; ++i)
    if (x[i] < lower(i) || x[i] >= upper(i)) return false;
  return true;
}

bool CubeLess::operator()(const DyadicCube& a, const DyadicCube& b) const {
  if (a.scale != b.scale) return a.scale > b.scale;  // coarse first
  return a.corner < b.corner;
}

DyadicCube unit_cube(int dim) {
  if (dim < 1) throw domain_error("dim must be >= 1");
  return DyadicCube{dim, 0, std::vector<std::int64_t>(dim, 0)};
}

std::vector<DyadicCube> children(const DyadicCube& cube) {
  check_cube(cube);
  const int d = cube.dim;
  std::vector<DyadicCube> out;
  out.reserve(1u << d);
  for (unsigned m = 0; m < (1u << d); ++m) {
    DyadicCube child{d, cube.scale - 1, std::vector<std::int64_t>(d)};
    for (int i = 0; i < d; ++i) {
      const std::int64_t bit = (m >> (d - 1 - i)) & 1u;  // axis 0 most significant
      child.corner[i] = 2 * cube.corner[i] + bit;
    }
    out.push_back(std::move(child));
  }
  return out;
}

double scale_factor(int scale, int dim) {
  const int e = -scale * dim;  // |Q|^{-1/2} = 2^{e/2}
  if (e % 2 == 0) return std::ldexp(1.0, e / 2);
  return std::ldexp(std::numbers::sqrt2, (e - 1) / 2);
}

double haar_eval(const HaarIndex& index, const Point& x) {
  check_index(index);
  const DyadicCube& q = index.cube;
  if (static_cast<int>(x.size()) != q.dim)
    throw domain_error("point dim does not match cube dim");
  int sign = 1;
  for (int i = 0; i < q.dim; ++i) {
    const double t = x[i];
    if (t < q.lower(i) || t >= q.upper(i)) return 0.0;
    if ((index.k >> i) & 1u) sign = (t < q.center(i)) ? sign : -sign;
  }
  return scale_factor(q.scale, q.dim) * sign;
}

std::vector<DyadicCube> cube_window(const DyadicCube& region, int min_scale) {
  check_cube(region);
  if (min_scale > region.scale)
    throw domain_error("min_scale exceeds the region scale: empty window");
  std::vector<DyadicCube> out;
  std::vector<DyadicCube> level{region};
  for (int s = region.scale; s >= min_scale; --s) {
    out.insert(out.end(), level.begin(), level.end());
    if (s == min_scale) break;
    std::vector<DyadicCube> next;
    next.reserve(level.size() << region.dim);
    for (const DyadicCube& q : level)
      for (DyadicCube& c : children(q)) next.push_back(std::move(c));
    level = std::move(next);
  }
  return out;
}

std::vector<HaarIndex> enumerate_window(const DyadicCube& region,
                                        int min_scale) {
  const std::vector<DyadicCube> cubes = cube_window(region, min_scale);
  const unsigned count = 1u << region.dim;
  std::vector<HaarIndex> out;
  out.reserve(cubes.size() * (count - 1));
  for (const DyadicCube& q : cubes)
    for (unsigned k = 1; k < count; ++k) out.push_back(HaarIndex{q, k});
  return out;
}

double self_similarity_check(const HaarIndex& index,
                             const std::vector<Point>& sample_points) {
  check_index(index);
  const DyadicCube& q = index.cube;
  const HaarIndex unit{unit_cube(q.dim), index.k};
  const double factor = scale_factor(q.scale, q.dim);
  double worst = 0.0;
  Point u(q.dim);
  for (const Point& x : sample_points) {
    if (static_cast<int>(x.size()) != q.dim)
      throw domain_error("sample point dim does not match cube dim");
    for (int i = 0; i < q.dim; ++i)
      u[i] = std::ldexp(x[i], -q.scale) - static_cast<double>(q.corner[i]);
    const double lhs = haar_eval(index, x);
    const double rhs = factor * haar_eval(unit, u);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

} // namespace haarlab
