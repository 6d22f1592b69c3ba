// Exact rational scalars and small number-theoretic helpers.
//
// Every quantity in this library that the theory calls a norm, slope, weight,
// exponent or eigenvalue is carried as an exact rational. Norms in particular
// are stored as their logarithms (the tropical value), never as floats.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace diffmod {

// mpq_class keeps itself in lowest terms with positive denominator, which is
// exactly the canonical form the spec asks of Rat.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  Rat q(num, den);
  q.canonicalize();
  return q;
}

// Parses "p", "-p/q" or "p/q". Returns nullopt on malformed input.
std::optional<Rat> rat_from_string(const std::string& s);

// Canonical "p" or "p/q" rendering (denominator omitted when 1).
std::string rat_to_string(const Rat& q);

bool is_integer(const Rat& q);

// Largest integer <= q, as a Rat.
Rat rat_floor(const Rat& q);

// Smallest integer >= q.
Rat rat_ceil(const Rat& q);

// q - floor(q), in [0,1).
Rat rat_frac(const Rat& q);

// Denominator of q in lowest terms as long; nullopt if it does not fit.
std::optional<long> den_as_long(const Rat& q);
std::optional<long> num_as_long(const Rat& q);

long lcm_long(long a, long b);

// Rational roots of an integer-coefficient polynomial c0 + c1 T + ... + cn T^n
// given as rational coefficients (cleared internally). Multiplicities are
// respected: a double root appears twice. The remaining factor after deflating
// all rational roots is returned through `residual` (monic, may be constant 1).
std::vector<Rat> rational_roots(const std::vector<Rat>& coeffs,
                                std::vector<Rat>* residual = nullptr);

}  // namespace diffmod
