#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eqd {

using Nat = std::uint64_t;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A stage or horizon query went past what the object was built for.
struct BudgetExceeded : Error {
  using Error::Error;
};

// A staged search ran out of stages before certifying the next step.
// Subclasses carry the partial construction so callers can inspect it.
struct BudgetExhausted : Error {
  using Error::Error;
};

// A subset precondition (C inside A and the like) failed.
struct ContainmentError : Error {
  using Error::Error;
};

// Structured input fails validation (tables, schedules, declared metadata).
struct ValidationError : Error {
  using Error::Error;
};

// Scenario-level misuse: unknown ids, missing sections, unusable parameters.
struct ScenarioError : Error {
  using Error::Error;
};

}  // namespace eqd
