#ifndef SGL_ERROR_HPP
#define SGL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgl {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Thrown when an operation needs a connected graph.
class DisconnectedGraph : public Error {
 public:
  DisconnectedGraph(const std::string& what, std::size_t components)
      : Error(what + " (graph has " + std::to_string(components) + " connected components)"),
        components_(components) {}

  std::size_t components() const noexcept { return components_; }

 private:
  std::size_t components_;
};

/// Iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual, std::size_t iterations)
      : Error(what + " (best residual " + std::to_string(best_residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        best_residual_(best_residual),
        iterations_(iterations) {}

  double best_residual() const noexcept { return best_residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double best_residual_;
  std::size_t iterations_;
};

}  // namespace sgl

#endif  // SGL_ERROR_HPP
