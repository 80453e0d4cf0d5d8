#ifndef HAARLAB_GRIDFN_HPP
#define HAARLAB_GRIDFN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "haarlab/affine.hpp"
#include "haarlab/dyadic.hpp"

namespace haarlab {

// Half-open integer cell box [lo, hi) at some resolution; hi[i] == lo[i]
// encodes an empty box.
struct Box {
  std::vector<std::int64_t> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  std::int64_t extent(int axis) const { return hi[axis] - lo[axis]; }
  std::int64_t cell_count() const;
  bool empty() const;
  bool contains(const Box& inner) const;
  bool operator==(const Box& o) const = default;
};

Box intersect(const Box& a, const Box& b);
Box bounding_union(const Box& a, const Box& b);

// Piecewise-constant function on the uniform mesh of cell size 2^-resolution.
// The window is the ambient box the function lives in (default [-1, 2)^d);
// values are stored densely over a tracked support box only, and the
// function is identically 0 outside the window.  Functions combine only at
// equal (dim, resolution, window); anything else throws alignment_error.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, int resolution, Box window);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  double cell_size() const;
  double cell_volume() const;
  const Box& window() const { return window_; }
  const Box& support() const { return support_; }
  const std::vector<double>& values() const { return values_; }
  // Writable cell storage, row-major over the support box.
  std::vector<double>& values() { return values_; }

  bool same_mesh(const GridFunction& other) const;

  // Cell accessors; reads outside the support return 0.
  double value_at_cell(const std::vector<std::int64_t>& cell) const;
  // Point lookup through the half-open cell convention (floor(x * 2^J)).
  double value_at_point(const Point& x) const;

  // Reshapes the support box (contents preserved on the overlap, new cells
  // zero).  The box must sit inside the window.
  void reset_support(const Box& support);
  double& cell_ref(const std::vector<std::int64_t>& cell);

  // Drops zero margins of the support box.
  void shrink_support();

  GridFunction& add_scaled(const GridFunction& other, double factor);
  GridFunction& scale(double factor);

  double integral() const;
  double l2_norm() const;

 private:
  int dim_ = 0;
  int resolution_ = 0;
  Box window_;
  Box support_;
  std::vector<double> values_;  // row-major over support_, last axis contiguous
};

// Default ambient window [-1, 2)^d in cells at the given resolution.
Box default_window(int dim, int resolution);
// Axis-aligned box with dyadic-rational corners, given in coordinates.
Box box_from_coords(const std::vector<double>& lo, const std::vector<double>& hi,
                    int resolution);
// Cell box covered by a dyadic cube; throws resolution_error if the cube is
// below mesh scale.
Box cube_cells(const DyadicCube& cube, int resolution);

// Exact rasterization of the normalized Haar function.  Requires the mesh to
// resolve child cubes (resolution + scale >= 1, alignment_error otherwise)
// and the cube to sit inside the window (window_overflow_error otherwise).
GridFunction from_haar(const HaarIndex& index, int resolution, Box window);

// Indicator of a cube as a grid function (exact).
GridFunction indicator(const DyadicCube& cube, int resolution, Box window);

// Composition with the perturbation map: result(x) = f(x_Q + A(l y + x - x_Q)),
// realized by mapping each cell midpoint and reading f there.  The preimage
// of f's support must fit inside the window (window_overflow_error).
GridFunction perturb(const GridFunction& f, const DyadicCube& cube,
                     const AffinePerturbation& p);

// Mollifier profile on [-1,1]^d.  Kinds: box (constant), bump
// ((1 - |x|_inf^2)_+), or a custom nonnegative sample table (m^d values on
// the centers of an m-per-axis partition of [-1,1]^d, nearest-sample lookup).
// Normalization to unit mass happens on the grid at use time.
struct MollifierSpec {
  enum class Kind { box, bump, custom };
  Kind kind = Kind::box;
  int samples_per_axis = 0;
  std::vector<double> table;

  static MollifierSpec box_kernel();
  static MollifierSpec bump_kernel();
  static MollifierSpec custom(int dim, int samples_per_axis,
                              std::vector<double> table);
  static MollifierSpec from_csv(const std::string& path, int dim);

  // Profile value at u in [-1,1]^d (0 outside).
  double evaluate(const Point& u, int dim) const;
  std::string name() const;
};

// Discrete convolution of f with the grid sampling of psi_delta
// (psi_delta(t) = delta^-d psi(t/delta)), weights renormalized to unit mass
// so the integral of f is preserved to rounding accuracy.  Support grows by
// at most delta per side.  Requires delta >= cell size (resolution_error)
// and the grown support to fit in the window (window_overflow_error).
GridFunction mollify(const GridFunction& f, const MollifierSpec& psi,
                     double delta);

// Exact quadrature sum_cells f*g * cellvolume over the support intersection.
double inner_product(const GridFunction& f, const GridFunction& g);

double l2_norm(const GridFunction& f);

// Total variation along the axis-parallel line through the given transverse
// cell (cell coordinates of the other axes, in axis order with `axis`
// removed).  Includes the entry and exit jumps against the surrounding 0.
double axis_tv(const GridFunction& f, int axis,
               const std::vector<std::int64_t>& transverse_cell);

// Max of axis_tv over every axis-parallel line meeting the support.
double max_axis_tv(const GridFunction& f);

// Sampled total variation along the line base + t*direction: a lower bound
// of the true line variation that is exact once the step resolves every
// cell crossing.  step <= 2^-J / (2 |direction|_inf) is enforced
// (domain_error otherwise).
double line_tv(const GridFunction& f, const Point& base, const Point& direction,
               double step);

// Serialization: JSON header (dim, resolution, window, support) next to a
// payload of cell values, either flat binary doubles or CSV.
enum class PayloadFormat { binary, csv };
void save_grid_function(const GridFunction& f, const std::string& base_path,
                        PayloadFormat format = PayloadFormat::binary);
GridFunction load_grid_function(const std::string& base_path);

} // namespace haarlab

#endif
