#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bimatch {

// Column/word positions everywhere share Eigen's signed index type.
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files; the message carries "path:line: ...".
class ParseError : public Error {
 public:
  using Error::Error;
};

// Raised when an EM iteration produces no aligned pairs to fit on.
class EmCollapse : public Error {
 public:
  EmCollapse(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace bimatch
