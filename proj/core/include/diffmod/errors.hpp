// Structured error taxonomy shared by all components.
//
// The coefficient field is pinned to Q. Any step that would need an algebraic
// extension fails with ExtensionRequired carrying the offending minimal
// polynomial, so callers can report exactly what was missing instead of
// approximating.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "diffmod/rat.hpp"

namespace diffmod {

struct DiffmodError : std::runtime_error {
  explicit DiffmodError(const std::string& msg) : std::runtime_error(msg) {}
};

// An exact step hit an irrational scalar. min_poly is integer-content
// normalized, listed from the constant coefficient up.
struct ExtensionRequired : DiffmodError {
  std::vector<Rat> min_poly;
  std::string context;
  ExtensionRequired(std::string ctx, std::vector<Rat> poly);
};

// A case the library deliberately does not cover (e.g. Deligne-Malgrange
// lattices through a ramified intersection).
struct UnsupportedGeneralCase : DiffmodError {
  explicit UnsupportedGeneralCase(const std::string& msg) : DiffmodError(msg) {}
};

// An iteration or search bound was exhausted before the theory-guaranteed
// terminal state was reached.
struct BudgetExhausted : DiffmodError {
  std::string budget;
  BudgetExhausted(std::string which, const std::string& msg);
};

// Malformed user input (CLI maps this to exit code 2, everything above to 1).
struct InputError : DiffmodError {
  explicit InputError(const std::string& msg) : DiffmodError(msg) {}
};

}  // namespace diffmod
