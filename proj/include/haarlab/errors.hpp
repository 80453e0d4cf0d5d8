#ifndef HAARLAB_ERRORS_HPP
#define HAARLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace haarlab {

// Base class for every error this library throws on precondition violations
// or numerical failure.  Callers that want blanket handling catch this one.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid index, scale range, matrix shape, or parameter outside its domain.
struct domain_error : error {
  using error::error;
};

// Two grid functions with different dim/resolution/window were combined,
// or a construction does not land on the mesh.
struct alignment_error : error {
  using error::error;
};

// The image (or preimage) of a support box does not fit inside the window.
struct window_overflow_error : error {
  using error::error;
};

// A kernel or cube is too small for the mesh to resolve.
struct resolution_error : error {
  using error::error;
};

// Pivot-free elimination hit a vanishing pivot.
struct factorization_error : error {
  using error::error;
};

// An iterative solver failed to converge within its budget.
struct convergence_error : error {
  using error::error;
};

// A perturbation degenerated on the grid (e.g. a mapped cube of measure 0).
struct degenerate_error : error {
  using error::error;
};

// Malformed or inconsistent experiment configuration.
struct config_error : error {
  using error::error;
};

// Every measurement in a sweep fell below the noise floor; nothing to fit.
struct underflow_error : error {
  using error::error;
};

} // namespace haarlab

#endif
