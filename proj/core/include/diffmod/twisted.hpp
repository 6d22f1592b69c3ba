#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffmod/matrix.hpp"
#include "diffmod/module.hpp"
#include "diffmod/puiseux.hpp"

namespace diffmod {

// Quotient of two Laurent polynomials, denominator nonzero. Kept lazily
// reduced; equality is decided by cross-multiplication.
struct RationalFunction {
  PuiseuxPoly num, den;

  RationalFunction() : num(poly_zero()), den(poly_const(Rat(1))) {}
  explicit RationalFunction(PuiseuxPoly n)
      : num(std::move(n)), den(poly_const(Rat(1))) {}
  RationalFunction(PuiseuxPoly n, PuiseuxPoly d);

  bool is_zero() const { return num.is_zero(); }
  bool is_one() const;
  bool operator==(const RationalFunction& o) const;
};

RationalFunction rf_add(const RationalFunction& a, const RationalFunction& b);
RationalFunction rf_sub(const RationalFunction& a, const RationalFunction& b);
RationalFunction rf_neg(const RationalFunction& a);
RationalFunction rf_mul(const RationalFunction& a, const RationalFunction& b);
RationalFunction rf_div(const RationalFunction& a, const RationalFunction& b);

inline RationalFunction operator+(const RationalFunction& a,
                                  const RationalFunction& b) {
  return rf_add(a, b);
}
inline RationalFunction operator-(const RationalFunction& a,
                                  const RationalFunction& b) {
  return rf_sub(a, b);
}
inline RationalFunction operator-(const RationalFunction& a) {
  return rf_neg(a);
}
inline RationalFunction operator*(const RationalFunction& a,
                                  const RationalFunction& b) {
  return rf_mul(a, b);
}
inline RationalFunction operator/(const RationalFunction& a,
                                  const RationalFunction& b) {
  return rf_div(a, b);
}

template <>
inline RationalFunction ring_one<RationalFunction>() {
  return RationalFunction(poly_const(Rat(1)));
}
template <>
inline bool ring_is_zero<RationalFunction>(const RationalFunction& x) {
  return x.is_zero();
}

// Cancel monomial content, normalize the denominator's lowest coefficient
// to 1, absorb monomial denominators, and divide out exact or univariate
// common factors where cheaply detectable.
RationalFunction rf_reduce(const RationalFunction& a);

// log |a|_r = log|num|_r - log|den|_r; nullopt for a = 0.
std::optional<Rat> rf_log_norm(const RationalFunction& a, const Weight& r);

// Exact quotient a / b over Laurent polynomials, or nullopt if b does not
// divide a (or the division does not terminate within a step budget).
std::optional<PuiseuxPoly> poly_div_exact(const PuiseuxPoly& a,
                                          const PuiseuxPoly& b);

// Determinant of a Laurent-polynomial matrix (fraction-free elimination;
// every internal division is exact).
PuiseuxPoly laurent_det(Mat<PuiseuxPoly> m);

// Drop terms whose first-variable exponent exceeds zcap.
PuiseuxPoly truncate_above(const PuiseuxPoly& f, const Rat& zcap);

// Laurent expansion of a rational function in z: non-monomial denominators
// are inverted as series, keeping z-exponents up to zcap.
PuiseuxPoly laurent_expand(const RationalFunction& a, const Rat& zcap);

// Coefficient of z^e (second exponent slot 0).
Rat laurent_coeff(const PuiseuxPoly& f, const Rat& e);

// A derivation D = coeff[0]*theta_1 + coeff[1]*theta_2 acting on the
// fraction field of the base ring (theta_i = x_i d/dx_i; over Kz the single
// theta is z d/dz). Norm cap: log-operator norm is 0 on every weight in the
// cone for any rational coefficients.
struct DerivationContext {
  BaseRing base;
  std::array<Rat, 2> coeff{Rat(1), Rat(0)};

  Rat cap() const { return Rat(0); }
  PuiseuxPoly apply(const PuiseuxPoly& f) const;
  RationalFunction apply(const RationalFunction& f) const;
  // Action matrix on a module over the same base: sum coeff_i x_i N_i.
  Mat<PuiseuxPoly> action_matrix(const DiffModule& m) const;
  bool operator==(const DerivationContext& o) const {
    return base == o.base && coeff == o.coeff;
  }
};

// Twisted polynomial sum c[i] T^i with left coefficients, under the
// commutation rule T r = r T + D(r).
struct TwistedPoly {
  std::vector<RationalFunction> c;
  DerivationContext ctx;

  int degree() const { return static_cast<int>(c.size()) - 1; }
  bool is_monic() const { return !c.empty() && c.back().is_one(); }
};

TwistedPoly twisted_make(std::vector<RationalFunction> coeffs,
                         DerivationContext ctx);
TwistedPoly twisted_add(const TwistedPoly& p, const TwistedPoly& q);
TwistedPoly twisted_mul(const TwistedPoly& p, const TwistedPoly& q);
// P(T + c) for a scalar c, via twisted powers of (T + c).
TwistedPoly twisted_shift(const TwistedPoly& p, const RationalFunction& c);

struct CyclicResult {
  std::vector<RationalFunction> v;  // cyclic vector in module coordinates
  TwistedPoly P;                    // monic annihilator of v
  PuiseuxPoly certificate;          // nonzero independence determinant
  std::vector<std::string> tried;   // candidate descriptions, in order
};

// Deterministic-then-randomized search for a cyclic vector for the context
// derivation; the certificate is checked exactly on every candidate.
CyclicResult cyclic_vector(const DiffModule& m, const DerivationContext& ctx,
                           std::uint64_t seed = 0);

struct NewtonPolygon {
  // (slope, multiplicity), slopes strictly increasing.
  std::vector<std::pair<Rat, int>> slopes;
  Weight r;
  Rat cap{0};
  bool capped = true;

  int total_multiplicity() const {
    int s = 0;
    for (const auto& [sl, m] : slopes) s += m;
    return s;
  }
};

// Lower hull of (-i, -log|P_i|_r), slopes clipped at the context cap.
NewtonPolygon newton_polygon(const TwistedPoly& p, const Weight& r);
// Same hull without clipping (used by the slope factorization).
NewtonPolygon newton_polygon_uncapped(const TwistedPoly& p, const Weight& r);

struct ScaleMultiset {
  Weight r;
  std::vector<Rat> logs;  // descending, size = rank, entries >= 0
};

// log-scale = cap - slope per multiplicity.
ScaleMultiset scale_multiset_from_polygon(const NewtonPolygon& np);

// Factor a monic twisted polynomial over Kz into left-to-right factors of
// strictly increasing single (capped) slope, to coefficient precision N.
std::vector<TwistedPoly> slope_factor(const TwistedPoly& p, long N);

}  // namespace diffmod
