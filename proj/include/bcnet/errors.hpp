#pragma once

#include <stdexcept>
#include <string>

namespace bcnet {

// A FLOPs budget that no width of the space can meet.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bcnet
