#pragma once

#include <stdexcept>

namespace vqpool {

/// Base class of every error thrown by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally invalid input: empty series, size mismatch, bad parameter value.
class invalid_input_error : public error {
 public:
  using error::error;
};

/// Input outside the mathematical domain of an operation (e.g. nonpositive
/// scores fed to the harmonic mean). Callers must rescale, never the library.
class domain_error : public error {
 public:
  using error::error;
};

/// A file did not conform to its grammar. Message carries the line number.
class parse_error : public error {
 public:
  using error::error;
};

/// Structurally valid files that do not fit together (unmatched ids,
/// inconsistent frame counts, wrong feature arity).
class data_error : public error {
 public:
  using error::error;
};

/// Correlation of a constant sequence is undefined.
class undefined_correlation_error : public error {
 public:
  using error::error;
};

}  // namespace vqpool
