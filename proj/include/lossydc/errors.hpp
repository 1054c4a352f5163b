#pragma once

#include <stdexcept>
#include <string>

namespace lossydc {

// Base class for everything this library throws on bad inputs.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Graph is disconnected, has self-loops, no/multiple slack buses, etc.
struct TopologyError : Error {
    using Error::Error;
};

// A branch whose effective susceptance weight V_i*V_j*B_ij is not positive.
// The method requires positive-definite branch weights.
struct NonInductiveBranchError : Error {
    using Error::Error;
};

// Case file could not be parsed. `line` is 1-based, 0 if unknown.
struct ParseError : Error {
    int line;
    explicit ParseError(const std::string& msg, int line_no = 0)
        : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
};

// Matrix handed to the SPD factorization was not positive definite.
struct IndefiniteError : Error {
    using Error::Error;
};

// A backsolve failed to meet its residual bound, or LU hit a singular matrix.
struct LinearSolveError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

// |psi| reached 1: the fixed-point map left its domain.
struct PsiOutOfRangeError : Error {
    using Error::Error;
};

// Certificate requested for a network violating the radial / equal-voltage /
// no-tap hypotheses. Refused rather than approximated.
struct HypothesisViolationError : Error {
    using Error::Error;
};

}  // namespace lossydc
