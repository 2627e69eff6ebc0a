#pragma once

#include <iostream>
#include <stdexcept>
#include <string>

namespace putilt {

/// Invalid argument, option, or configuration value.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input outside the supported domain (e.g. a feature value not in [0,1]).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Non-finite intermediate or otherwise failed numeric computation.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All starts of the EM estimator failed.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too many bootstrap replicates failed.
struct InferenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rejection sampler exhausted its draw budget.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// PU masking produced an empty labeled set.
struct MaskingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a model requirement.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

}  // namespace putilt
