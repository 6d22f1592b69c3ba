// Berkovich-disc layer over Q((x)): representable disc points, domination,
// degree, irregularity evaluated at points, subharmonicity certification,
// skeleton search, and the blowup plan extracted from skeleta.
//
// Points are seminorms alpha_{z,q} on Q((x))[y]: |y - z| = e^{-q} with
// |x| = e^{-1}. Only rational q is ever stored, so every stored point has
// type (ii); irrational radii arise solely as symbolic segment endpoints
// and are never materialized.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "diffmod/irregularity.hpp"
#include "diffmod/module.hpp"
#include "diffmod/pl.hpp"

namespace diffmod {

enum class PointType { ii, iii };

// alpha_{z, e^{-q}} in canonical form: the center keeps exactly the terms
// of Gauss norm exceeding the radius (x-exponent < q), which makes the
// representative minimal and unique.
struct DiscPoint {
  PuiseuxPoly z;  // terms in x only, exponents in [0, q)
  Rat q;          // radius e^{-q}, q >= 0
  PointType type = PointType::ii;
};

// Canonicalizing constructor. The center must use only the first variable,
// with nonnegative exponents; q must be nonnegative.
DiscPoint disc_point(const PuiseuxPoly& z, const Rat& q);
DiscPoint gauss_point();

bool same_point(const DiscPoint& a, const DiscPoint& b);

// alpha >= beta as seminorms: radius dominates and the centers are within
// the larger radius of each other.
bool dominates(const DiscPoint& a, const DiscPoint& b);

// Number of Galois conjugate lifts of the point over Q((x)): the lcm of the
// exponent denominators of the canonical center.
int degree(const DiscPoint& a);

// The unique point of radius e^{-q} dominating b (q <= q(b)): truncate the
// center at q.
DiscPoint path_point(const DiscPoint& b, const Rat& q);

std::string point_key(const DiscPoint& a);

// Irregularity of M at the completion of Frac(R21) under alpha: recenter
// y -> z(x) + u, then sum the log-scales at weight (1, q) in (x, u).
Rat eval_irreg_at(const DiffModule& m, const DiscPoint& alpha);

// Lazily evaluated nonnegative function on the disc, either
//   Poly:   f(alpha) = max{0, log |P|_alpha}
//   Module: f(alpha) = F_d(M, alpha), the irregularity at alpha.
// Module handles with an explicit twist presentation evaluate in closed
// form; the first few evaluations are cross-checked against the polygon
// route when the rank allows it. Evaluation is memoized per handle; a
// handle is single-threaded.
struct MISFunction {
  enum class Kind { Poly, Module };
  Kind kind = Kind::Poly;
  PuiseuxPoly P;
  DiffModule M;
  std::uint64_t seed = 0;
  mutable int crosscheck_budget = 3;
  mutable std::map<std::string, Rat> cache;
};

MISFunction mis_from_poly(const PuiseuxPoly& p);
MISFunction mis_from_module(const DiffModule& m);
Rat mis_eval(const MISFunction& f, const DiscPoint& alpha);

// One-sided slopes of f at a type (ii) point with q > 0: the left slope
// along the path from the Gauss point, and the right slope toward each
// branch representative. Slopes are certified exactly (dyadic refinement
// until a midpoint witnesses affinity) and must come out integral.
struct StarSlopes {
  Rat incoming;
  std::vector<Rat> outgoing;
};

StarSlopes star_slopes(const MISFunction& f, const DiscPoint& alpha,
                       const std::vector<PuiseuxPoly>& branch_centers);

// incoming slope <= sum of outgoing slopes over the given star.
bool subharmonic_check(const MISFunction& f, const DiscPoint& alpha,
                       const std::vector<PuiseuxPoly>& branch_centers);

// Dominant-coefficient residual of a Laurent polynomial W(x, u) at
// alpha_{0, e^{-q}}: collect the terms of maximal log-norm at weight (1, q)
// and return their coefficients indexed by u-degree (dense, low to high).
// Its roots c are the continuation coefficients z -> z + c x^q along which
// log |W| strictly decreases, with multiplicity equal to the slope drop.
std::vector<Rat> residual_polynomial(const PuiseuxPoly& w, const Rat& q);

enum class NodeRole { Head, Joint, Extremity };

struct SkeletonNode {
  DiscPoint p;
  NodeRole role = NodeRole::Head;
  int deg = 1;
  Rat value;  // f at the node
};

struct EdgePiece {
  Rat q0, q1;
  Rat slope;  // nonpositive integer
};

struct SkeletonEdge {
  int from = 0, to = 0;  // node indices, from dominates to
  std::vector<EdgePiece> pieces;
};

// nodes[0] is the head. complete == false means the descent hit q_max
// before every branch stabilized; the note says where.
struct Skeleton {
  std::vector<SkeletonNode> nodes;
  std::vector<SkeletonEdge> edges;
  bool complete = true;
  std::string note;
};

struct SkeletonOptions {
  Rat q_max = Rat(64);
  int branch_budget = 16;
  long max_evals = 4000;
  std::uint64_t seed = 0;
};

// Depth-first descent from the Gauss point: reconstruct the exact convex
// piecewise-affine restriction of f along each fixed-center path, then
// discover descending branches at slope-change points from the rational
// roots of the residual polynomial. Irrational residual roots raise
// ExtensionRequired with the deflated minimal polynomial.
Skeleton skeleton(const MISFunction& f, const SkeletonOptions& opts = {});

struct DivisorialValuation {
  DiscPoint p;
  std::string role;    // "joint" or "extremity"
  std::string source;  // "F_d", "F_d2(End)", or "both"
};

// Primitive integer direction (d1, d2) of a weight ray where a toric
// profile changes slope.
struct ToroidalRay {
  long d1 = 0, d2 = 0;
  std::string source;
};

// Point blowups as divisorial valuations (ancestors first), toroidal rays
// for R22 inputs, and the crossing strata that need their own stratum.
struct BlowupPlan {
  std::vector<DivisorialValuation> points;
  std::vector<ToroidalRay> rays;
  std::vector<std::string> strata_hints;
  bool complete = true;
  std::string note;
};

// R21: joints and extremities of the skeleta of F_d(M, .) and
// F_{d^2}(End M, .). R22: slope-change rays of the top partial sums of the
// profile of M and End M; point data only when the module is y-regular
// enough to restate over R21.
BlowupPlan blowup_plan(const DiffModule& m, const SkeletonOptions& opts = {});

// The two standard charts of the origin blowup: (x, y) = (x', x'y') and
// (x, y) = (x'y', y'). The first keeps only the exceptional divisor x' = 0
// for R21 inputs; the second sees the crossing with the strict transform.
std::array<DiffModule, 2> blowup_origin_charts(const DiffModule& m);

}  // namespace diffmod
