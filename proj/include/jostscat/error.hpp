#pragma once

#include <stdexcept>
#include <string>

namespace jostscat {

// Base of every failure raised by the library. Numerical failures map to CLI
// exit code 1, validation_error to exit code 2.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (e.g. Riccati-Neumann at z = 0).
class domain_error : public error {
  public:
    using error::error;
};

// Energy coincides with a channel threshold.
class branch_point_error : public error {
  public:
    using error::error;
};

// Requested Jost matrix cannot be reached with the given rotation angle.
class unreachable_error : public error {
  public:
    using error::error;
};

// Iteration, integration or tail test failed to converge.
class convergence_error : public error {
  public:
    using error::error;
};

// Adaptive step collapsed below the representable resolution of the path.
class step_underflow_error : public convergence_error {
  public:
    using convergence_error::convergence_error;
};

// Malformed user input: model files, contours, grids, caches.
class validation_error : public error {
  public:
    using error::error;
};

// File could not be opened, read or written; the message carries the path.
class io_error : public error {
  public:
    using error::error;
};

} // namespace jostscat
