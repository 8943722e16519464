#pragma once

#include <stdexcept>
#include <string>

namespace vmreg {

// Domain errors thrown across the library. Each one names the contract it
// guards rather than the module that noticed it.

struct DegenerateVector : std::runtime_error {
  explicit DegenerateVector(const std::string& msg) : std::runtime_error(msg) {}
};

struct NegativeConcentration : std::runtime_error {
  explicit NegativeConcentration(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResultantOutOfRange : std::runtime_error {
  explicit ResultantOutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyInput : std::runtime_error {
  explicit EmptyInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct LengthMismatch : std::runtime_error {
  explicit LengthMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidMixtureWeights : std::runtime_error {
  explicit InvalidMixtureWeights(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigMismatch : std::runtime_error {
  explicit ConfigMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedVersion : std::runtime_error {
  explicit UnsupportedVersion(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorruptFile : std::runtime_error {
  explicit CorruptFile(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vmreg
