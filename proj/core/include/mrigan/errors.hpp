#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mrigan {

// Incompatible tensor shapes or ranks.
class ShapeError : public std::invalid_argument {
public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid configuration value (unreachable mask target, bad window size, ...).
class ParamError : public std::invalid_argument {
public:
  explicit ParamError(const std::string& what) : std::invalid_argument(what) {}
};

// A caller broke an API contract (non-scalar loss, probability outside [0,1], ...).
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Iterative solver failed to make progress; carries the objective trace so far.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), objective_trace(std::move(trace)) {}
  std::vector<double> objective_trace;
};

// File format or filesystem failure.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mrigan
