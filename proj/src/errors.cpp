#include "ldl/errors.hpp"

namespace ldl {

ParseError::ParseError(std::string path, const std::string& what)
    : Error(what + " (at " + (path.empty() ? std::string("/") : path) + ")"), path_(std::move(path)) {}

std::string shape_string(long rows, long cols) {
  return "(" + std::to_string(rows) + " x " + std::to_string(cols) + ")";
}

}  // namespace ldl
