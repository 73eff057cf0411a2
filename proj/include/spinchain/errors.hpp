#pragma once

#include <stdexcept>
#include <string>

namespace spinchain {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// a Pauli-string site index outside [1, n_sites], or a duplicate site
struct InvalidSite : Error {
  using Error::Error;
};

// operator/state dimension mismatch
struct ShapeError : Error {
  using Error::Error;
};

// chain family and coupling arrays disagree
struct ModelError : Error {
  using Error::Error;
};

// requested Bessel weight outside the reachable range of the first branch
struct CalibrationError : Error {
  using Error::Error;
};

// (family, drive axis) pair with no known effective chain
struct UnsupportedTransform : Error {
  using Error::Error;
};

// non-Hermitian input, non-PSD density matrix, lost convergence
struct NumericalError : Error {
  using Error::Error;
};

// Hamiltonian does not commute with the total-z magnetization
struct NotExcitationConserving : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// scenario text rejected; carries line/field context in the message
struct ParseError : Error {
  ParseError(const std::string& msg, int line, const std::string& field)
      : Error("parse error at line " + std::to_string(line) +
              (field.empty() ? "" : " (key '" + field + "')") + ": " + msg),
        line_number(line),
        field(field) {}
  explicit ParseError(const std::string& msg) : Error(msg), line_number(0) {}
  int line_number;
  std::string field;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace spinchain
