#ifndef IBIA_ERRORS_HPP
#define IBIA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ibia {

// Base for all engine errors.  Subclasses map onto distinct process exit
// codes in the CLI front end.
struct engine_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (network, evidence or result).  Carries a location.
struct parse_error : engine_error {
  parse_error(const std::string& what, const std::string& file, long line)
      : engine_error(file + ":" + std::to_string(line) + ": " + what),
        file(file), line(line) {}
  std::string file;
  long line;
};

// Invalid configuration (bad bounds, CPD larger than the clique size cap, ...)
struct config_error : engine_error {
  using engine_error::engine_error;
};

// The approximation step could not reduce some clique below the soft bound
// without disconnecting evidence flow.
struct unsat_approx_error : engine_error {
  using engine_error::engine_error;
};

// Wall-clock deadline exceeded.
struct timeout_error : engine_error {
  using engine_error::engine_error;
};

// Table would exceed the dense-table capacity limit.
struct capacity_error : engine_error {
  using engine_error::engine_error;
};

// Numerical contract violation (nonzero divided by zero etc).
struct numerical_error : engine_error {
  using engine_error::engine_error;
};

// Internal invariant broke; indicates a bug, not bad input.
struct internal_error : engine_error {
  using engine_error::engine_error;
};

}  // namespace ibia

#endif
