#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmca {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (model file, trace log, cache, expression). Line is 1-based, 0 if unknown.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// A model, box or cache that parses but violates a structural invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Evaluation failed: a parameter is unbound or a denominator vanishes.
class EvaluationError : public Error {
  public:
    using Error::Error;
};

/// A trace whose events do not chain, or that names unknown states/actions.
class ChainError : public Error {
  public:
    using Error::Error;
};

/// A catastrophic transition was observed for a parameter estimated under the failure-free regime.
class CbiRegimeViolated : public Error {
  public:
    using Error::Error;
};

}  // namespace pmca
