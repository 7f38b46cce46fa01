// Error types thrown by the library; the CLI maps these onto exit codes
// (validation problems -> 2, numerical failures -> 3).
#pragma once

#include <stdexcept>
#include <string>

namespace spatmht {

struct invalid_argument : std::invalid_argument {
  explicit invalid_argument(const std::string& msg) : std::invalid_argument(msg) {}
};

// Inputs are syntactically fine but too small/sparse for the requested operation.
struct insufficient_data : std::runtime_error {
  explicit insufficient_data(const std::string& msg) : std::runtime_error(msg) {}
};

// Sensor geometry does not admit a well-posed solve (duplicate/collinear sites).
struct degenerate_geometry : std::runtime_error {
  explicit degenerate_geometry(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed to produce a usable result.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spatmht
