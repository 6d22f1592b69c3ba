// Sparse exact Laurent/Puiseux polynomials over Q in one or two variables,
// with tropical (Gauss-norm) evaluation and the substitutions the analysis
// layers compose: recentering y -> z(x) + u, ramification x -> x^(1/h'),
// and monomial coordinate changes for blowup charts.
#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diffmod/errors.hpp"
#include "diffmod/rat.hpp"

namespace diffmod {

// Exponent vector. Always stores two slots; arity-1 objects keep e[1] == 0.
struct Exp {
  std::array<Rat, 2> e{Rat(0), Rat(0)};

  Exp() = default;
  Exp(Rat a, Rat b) : e{std::move(a), std::move(b)} {}

  bool operator<(const Exp& o) const {
    if (e[0] != o.e[0]) return e[0] < o.e[0];
    return e[1] < o.e[1];
  }
  bool operator==(const Exp& o) const { return e == o.e; }
};

// Nonnegative weight r = (r_1, ..., r_arity) defining |x_i| = e^{-r_i}.
struct Weight {
  int arity = 2;
  std::array<Rat, 2> r{Rat(0), Rat(0)};

  Weight() = default;
  Weight(Rat r1) : arity(1), r{std::move(r1), Rat(0)} {}
  Weight(Rat r1, Rat r2) : arity(2), r{std::move(r1), std::move(r2)} {}

  bool is_zero() const { return r[0] == 0 && (arity < 2 || r[1] == 0); }
  bool interior() const { return r[0] > 0 && (arity < 2 || r[1] > 0); }
};

// Finite Q-linear combination of monomials x^e. Negative exponents are only
// allowed in pole-permitted variables; all exponent denominators divide h.
struct PuiseuxPoly {
  int arity = 1;
  long h = 1;
  std::array<bool, 2> pole_ok{false, false};
  std::map<Exp, Rat> terms;  // invariant: no zero coefficients stored

  bool is_zero() const { return terms.empty(); }
  bool is_constant() const;
  // The coefficient of x^0 (0 if absent).
  Rat constant_term() const;

  bool operator==(const PuiseuxPoly& o) const { return terms == o.terms; }
};

// Display names for the variables of a poly ("x","y" / "z" / "x","u").
struct VarNames {
  std::array<std::string, 2> v{"x", "y"};
};

PuiseuxPoly poly_zero(int arity = 1, std::array<bool, 2> pole_ok = {false, false},
                      long h = 1);
PuiseuxPoly poly_const(const Rat& c, int arity = 1,
                       std::array<bool, 2> pole_ok = {false, false});
PuiseuxPoly poly_monomial(const Rat& coeff, const Exp& e, int arity,
                          std::array<bool, 2> pole_ok, long h);

// Throws InputError when a term violates the pole permissions or h.
void poly_validate(const PuiseuxPoly& f);

PuiseuxPoly poly_add(const PuiseuxPoly& a, const PuiseuxPoly& b);
PuiseuxPoly poly_sub(const PuiseuxPoly& a, const PuiseuxPoly& b);
PuiseuxPoly poly_neg(const PuiseuxPoly& a);
PuiseuxPoly poly_mul(const PuiseuxPoly& a, const PuiseuxPoly& b);
PuiseuxPoly poly_scal(const Rat& c, const PuiseuxPoly& a);
PuiseuxPoly poly_pow(const PuiseuxPoly& a, unsigned k);

inline PuiseuxPoly operator+(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  return poly_add(a, b);
}
inline PuiseuxPoly operator-(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  return poly_sub(a, b);
}
inline PuiseuxPoly operator-(const PuiseuxPoly& a) { return poly_neg(a); }
inline PuiseuxPoly operator*(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  return poly_mul(a, b);
}

// log|f|_r = max over monomials of -(r . e); nullopt encodes f = 0 (-infty).
std::optional<Rat> gauss_log_norm(const PuiseuxPoly& f, const Weight& r);

// The submonomials achieving gauss_log_norm (the leading form's support).
std::vector<std::pair<Exp, Rat>> leading_form(const PuiseuxPoly& f,
                                              const Weight& r);

// x_i d/dx_i. Never introduces new pole orders.
PuiseuxPoly poly_theta(const PuiseuxPoly& f, int var);
// d/dx_i. Terms with zero exponent drop out, so poles are never created
// in a non-permitted variable.
PuiseuxPoly poly_partial(const PuiseuxPoly& f, int var);

// Minimum exponent of variable `var` over the support (0 for the zero poly).
Rat min_exponent(const PuiseuxPoly& f, int var);
Rat max_exponent(const PuiseuxPoly& f, int var);

// Same element viewed with ramification index lcm(h, h').
PuiseuxPoly ramify(const PuiseuxPoly& f, long h_prime);

// f(x, y) -> f(x, z(x) + u) for z with nonnegative exponents. The result
// lives in variables (x, u) with u never pole-permitted. Requires every
// y-exponent of f to be a nonnegative integer.
PuiseuxPoly substitute_center(const PuiseuxPoly& f, const PuiseuxPoly& z,
                              long h);

// Monomial substitution x -> x'^m00 y'^m01, y -> x'^m10 y'^m11 (blowup
// charts). Exponents transform linearly; pole flags of the target are given.
PuiseuxPoly substitute_monomial(const PuiseuxPoly& f,
                                const std::array<std::array<long, 2>, 2>& m,
                                std::array<bool, 2> target_pole_ok);

// Substitute x_var -> c * x_var for a nonzero rational c.
PuiseuxPoly substitute_scale(const PuiseuxPoly& f, int var, const Rat& c);

std::string poly_to_string(const PuiseuxPoly& f, const VarNames& names);

// Parses the CLI term syntax, e.g. "3/2*x^-2*y^3 + x^(1/2) - 1".
// Whitespace-insensitive. Unknown variables and malformed exponents raise
// InputError. h is grown as needed to host fractional exponents.
PuiseuxPoly poly_from_string(const std::string& s, int arity,
                             std::array<bool, 2> pole_ok,
                             const VarNames& names);

// ---- truncated series ----------------------------------------------------

// A polynomial known only below a total-degree cutoff: terms of weighted
// total degree >= prec are unknown. Total degree is e[0] + e[1].
struct TruncatedSeries {
  PuiseuxPoly body;
  Rat prec;  // exclusive cutoff

  bool operator==(const TruncatedSeries& o) const = delete;
};

Rat total_degree(const Exp& e);
// Minimum total degree over the support; prec when empty.
Rat series_order(const TruncatedSeries& f);

TruncatedSeries ts_make(const PuiseuxPoly& body, const Rat& prec);
TruncatedSeries ts_add(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries ts_mul(const TruncatedSeries& a, const TruncatedSeries& b);

// Multiplicative inverse to precision N. Requires a nonzero constant term
// and no negative exponents (units of the unramified power-series ring).
TruncatedSeries invert_unit(const TruncatedSeries& f, const Rat& N);

}  // namespace diffmod
