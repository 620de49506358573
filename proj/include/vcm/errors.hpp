#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcm {

// Invalid model specification: unknown names, violated preconditions,
// terms that cannot be combined.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with the data values themselves (CSV shape, non-finite cells,
// degenerate responses).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Formula text that does not parse. Carries the byte offset of the failure.
class FormulaError : public std::runtime_error {
 public:
  FormulaError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace vcm
