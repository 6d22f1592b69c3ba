#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "diffmod/puiseux.hpp"
#include "diffmod/rat.hpp"

namespace diffmod {

// Affine functional r -> a1*r1 + a2*r2 + c on the weight cone.
struct AffineFunctional {
  Rat a1{0}, a2{0}, c{0};

  AffineFunctional() = default;
  AffineFunctional(Rat a1_, Rat a2_, Rat c_ = Rat(0))
      : a1(std::move(a1_)), a2(std::move(a2_)), c(std::move(c_)) {}

  Rat eval(const Weight& r) const { return a1 * r.r[0] + a2 * r.r[1] + c; }

  bool operator==(const AffineFunctional& o) const {
    return a1 == o.a1 && a2 == o.a2 && c == o.c;
  }
  bool operator<(const AffineFunctional& o) const {
    if (a1 != o.a1) return a1 < o.a1;
    if (a2 != o.a2) return a2 < o.a2;
    return c < o.c;
  }
};

// Subcone of [0,inf)^2 cut out by extra halfplanes h[0]*r1 + h[1]*r2 >= 0.
// An empty list means the full quadrant.
struct Cone {
  std::vector<std::array<Rat, 2>> halfplanes;
  std::string tag = "cone";
};

// Pointwise max of finitely many affine functionals on a cone.
struct PLFunction {
  std::vector<AffineFunctional> parts;
  Cone domain;
};

// Ordered difference pos - neg; not collapsible to a single max in general.
struct DiffPL {
  PLFunction pos, neg;
};

PLFunction pl_make(std::vector<AffineFunctional> parts, Cone domain = {});
PLFunction pl_const(const Rat& c, Cone domain = {});

Rat pl_eval(const PLFunction& f, const Weight& r);
Rat diffpl_eval(const DiffPL& f, const Weight& r);

PLFunction pl_sum(const PLFunction& f, const PLFunction& g);
PLFunction pl_max(const PLFunction& f, const PLFunction& g);
PLFunction pl_scale(const Rat& c, const PLFunction& f);  // c >= 0

// Minimal functional set with the same values on the domain. Dominance is
// decided exactly: a part is dropped iff its strict-win region against the
// rest is an empty polyhedron.
PLFunction pl_canonicalize(const PLFunction& f);

struct LinearityResult {
  bool linear = false;
  // The single surviving functional when linear.
  std::optional<AffineFunctional> functional;
  // Two domain points where distinct functionals strictly win, when not.
  std::array<Weight, 2> witness{};
};

LinearityResult is_linear_on_cone(const PLFunction& f);

// Exact pointwise equality on the (full-dimensional) domain: canonical
// minimal representations coincide iff the functions do.
bool pl_equal(const PLFunction& f, const PLFunction& g);

// Exact feasibility of {r in domain : strict[i] ? L_i(r) > 0 : L_i(r) >= 0},
// returning a rational point when nonempty. Domain constraints r1,r2 >= 0
// plus the subcone halfplanes are always included.
std::optional<Weight> cone_feasible_point(
    const Cone& domain, const std::vector<AffineFunctional>& constraints,
    const std::vector<bool>& strict);

// Continuous piecewise-affine function of one variable on [knots.front(),
// knots.back()], affine between consecutive knots.
struct Piecewise1D {
  std::vector<Rat> knots;   // strictly increasing, size >= 2
  std::vector<Rat> values;  // same size

  Rat eval(const Rat& t) const;
  // Slope on piece i = (values[i+1]-values[i]) / (knots[i+1]-knots[i]).
  std::vector<Rat> slopes() const;
  // Knots where the slope actually changes.
  std::vector<Rat> breakpoints() const;
};

// Restriction of f to the segment r(t) = a + (t-t0)/(t1-t0) * (b-a),
// reported in the caller's parameter t in [t0, t1]. Requires t0 < t1.
Piecewise1D restrict_to_segment(const PLFunction& f, const Weight& a,
                                const Weight& b, const Rat& t0 = Rat(0),
                                const Rat& t1 = Rat(1));
Piecewise1D restrict_to_segment(const DiffPL& f, const Weight& a,
                                const Weight& b, const Rat& t0 = Rat(0),
                                const Rat& t1 = Rat(1));

Piecewise1D pw_sub(const Piecewise1D& a, const Piecewise1D& b);
bool pw_equal(const Piecewise1D& a, const Piecewise1D& b);

}  // namespace diffmod
