// Exact piecewise-linear partial-irregularity functions F_i(M, r) on the
// weight cone [0,inf)^2, the cross-derivation consistency check, and the
// good-decomposition numerical criterion.
//
// Conventions. A weight r = (r_1, r_2) >= 0 fixes |x_i| = e^{-r_i}. For a
// direction with primitive integer vector (q_1, q_2) the adapted derivation
// is q_1 theta_1 + q_2 theta_2 (theta_i = x_i d/dx_i); its capped Newton
// polygon at r yields the absolute scale multiset of M there. F_i(M, r) is
// the sum of the i largest log-scales; F_d is the irregularity.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "diffmod/module.hpp"
#include "diffmod/pl.hpp"
#include "diffmod/twisted.hpp"

namespace diffmod {

// Partial sums along the capped Newton polygon of one coordinate derivation,
// assembled as global piecewise-linear data from a single symbolic polygon.
// Equals the absolute F_i on the axis ray where that derivation generates
// the adapted one; recorded with the subcone tag the interface asks for.
// Construction needs a cyclic vector for that derivation; when the search
// budget or the rank bound rules it out the family is marked unavailable
// and `note` says why.
struct PolygonFamily {
  std::string derivation;  // "x1*d1" or "x2*d2"
  bool available = false;
  std::string note;
  Cone valid;
  std::vector<DiffPL> F;  // F[i-1] = i-th partial polygon sum
};

struct IrregularityProfile {
  std::string label;
  int rank = 0;
  bool presented = false;  // closed-form path (explicit sum of twists)
  std::vector<PLFunction> F;  // F[i-1] = F_i, exact on the closed cone
  std::vector<DiffPL> f;      // f[i-1] = F_i - F_{i-1}
  std::array<PolygonFamily, 2> families;
};

struct ProfileOptions {
  bool with_families = true;
  // Convex-reconstruction guard for modules without an explicit twist
  // presentation; larger ranks need the presented fast path.
  int raw_rank_max = 8;
  int max_evals = 800;  // scale-multiset evaluations per profile
  long q_max = 64;      // breakpoint denominator certificate
  int consistency_samples = 20;
  std::uint64_t seed = 0;
};

// Absolute scale multiset of M (x) F_r, logs descending. Interior weights
// are evaluated under both scalings of the adapted derivation (coefficient
// vectors (1, q2/q1) and (q1/q2, 1)) and the two multisets must agree; a
// boundary weight uses the surviving coordinate derivation alone.
ScaleMultiset scale_multiset_at(const DiffModule& m, const Weight& r,
                                std::uint64_t seed = 0);

IrregularityProfile irregularity_profile(const DiffModule& m,
                                         const ProfileOptions& opts = {});

enum class CriterionFlag { GoodAfterPullback, Fails };

// Numerical criterion: good decomposition after pullback exactly when
// F_d(M, .) and F_{d^2}(End M, .) are both linear on the cone. Witnesses
// ride along in the LinearityResults (single functional when linear, a
// separating weight pair when not); per-index statuses are kept for
// diagnostics.
struct CriterionVerdict {
  CriterionFlag flag = CriterionFlag::Fails;
  LinearityResult top;       // F_d(M, .)
  LinearityResult end_top;   // F_{d^2}(End M, .)
  std::vector<LinearityResult> statuses;      // all F_i of M
  std::vector<LinearityResult> end_statuses;  // all F_i of End M
  IrregularityProfile profile;
  IrregularityProfile end_profile;
};

CriterionVerdict criterion_check(const DiffModule& m,
                                 const ProfileOptions& opts = {});

// For an explicit direct sum with linear total F_d, every summand's top
// partial irregularity must be linear too; `verdict` is that conjunction,
// with the precondition reported rather than assumed.
struct DropAffineReport {
  bool precondition_linear = false;  // F_d of the direct sum is linear
  bool all_summands_linear = false;
  LinearityResult total;
  std::vector<LinearityResult> summands;
  bool verdict = false;
};

DropAffineReport drop_affine_check(const std::vector<DiffModule>& summands,
                                   const ProfileOptions& opts = {});

// max{0, log|phi|_r} on the quadrant: the constituent log-scale of a twist
// E(phi) (x) regular.
PLFunction twist_log_scale(const PuiseuxPoly& phi);

}  // namespace diffmod
