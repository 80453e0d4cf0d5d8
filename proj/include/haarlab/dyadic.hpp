#ifndef HAARLAB_DYADIC_HPP
#define HAARLAB_DYADIC_HPP

#include <cstdint>
#include <vector>

namespace haarlab {

using Point = std::vector<double>;

// Axis-aligned dyadic cube: the product over axes of
// [corner[i]*2^scale, (corner[i]+1)*2^scale).  Geometry is exact: scales are
// integer exponents and corners integer coordinates, never floating point.
struct DyadicCube {
  int dim = 1;
  int scale = 0;                     // side length is 2^scale
  std::vector<std::int64_t> corner;  // one integer per axis

  double side_length() const;
  double volume() const;
  double lower(int axis) const;   // corner[axis] * 2^scale
  double upper(int axis) const;
  double center(int axis) const;
  Point center_point() const;

  // Half-open membership test, consistent with [a,b) throughout.
  bool contains(const Point& x) const;

  bool operator==(const DyadicCube& o) const = default;
};

// Strict total order (scale descending, then corners lexicographic); used to
// key maps and to fix deterministic iteration orders.
struct CubeLess {
  bool operator()(const DyadicCube& a, const DyadicCube& b) const;
};

DyadicCube unit_cube(int dim);

// The 2^dim children at scale-1, in lexicographic corner order (axis 0 most
// significant).
std::vector<DyadicCube> children(const DyadicCube& cube);

// Tensor Haar index on a cube.  Bit i of k (bit 0 = axis 0) selects the
// two-level Haar leg on that axis; a clear bit selects the indicator leg.
// k ranges over [1, 2^dim - 1]: k = 0 would be the plain indicator, which is
// not part of the system.
struct HaarIndex {
  DyadicCube cube;
  unsigned k = 1;

  bool operator==(const HaarIndex& o) const = default;
};

// L^2-normalizing factor |Q|^{-1/2} = 2^{-scale*dim/2}, via a single code
// path so that two-sided identity checks reproduce it bit for bit.
double scale_factor(int scale, int dim);

// Point evaluation of the normalized Haar function: the product of per-axis
// legs (+1 on the left half, -1 on the right half for Haar legs; +1 inside
// for indicator legs; 0 outside the cube) times |Q|^{-1/2}.
// Throws domain_error for k = 0 or k >= 2^dim.
double haar_eval(const HaarIndex& index, const Point& x);

// All dyadic sub-cubes Q of `region` with min_scale <= scale(Q) <=
// scale(region), ordered coarse to fine, lexicographic within a scale.
std::vector<DyadicCube> cube_window(const DyadicCube& region, int min_scale);

// All (Q, k) pairs over cube_window, k ascending within each cube.  The
// count is (2^d - 1) * sum_{s=0}^{scale(region)-min_scale} 2^{d*s}.
std::vector<HaarIndex> enumerate_window(const DyadicCube& region,
                                        int min_scale);

// Two-sided check of the rescaling identity
//   h_index(x) = |Q|^{-1/2} * h_unit(2^{-scale} x - corner):
// both sides are evaluated independently and the maximum absolute
// discrepancy over the sample points is returned.  It must be exactly 0.
double self_similarity_check(const HaarIndex& index,
                             const std::vector<Point>& sample_points);

} // namespace haarlab

#endif
