#ifndef MLSTM_ERRORS_HPP
#define MLSTM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mlstm {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimensionality violations (mismatched operands, zero-length vectors).
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// NaN or Inf encountered in a forward value or a gradient.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Out-of-range token id, class label, or position.
struct IndexError : Error {
  explicit IndexError(const std::string& msg) : Error(msg) {}
};

// Structurally invalid input (all-false mask, empty corpus, empty sentence).
struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

// Malformed file contents; message carries the line number where known.
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace mlstm

#endif
