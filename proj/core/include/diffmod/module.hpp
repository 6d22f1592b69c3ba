#pragma once

#include <string>
#include <vector>

#include "diffmod/matrix.hpp"
#include "diffmod/puiseux.hpp"

namespace diffmod {

enum class RingKind { R21, R22, Kz };

// R21 = Q[[x,y]][1/x], R22 = Q[[x,y]][1/x,1/y], Kz = Q((z)).
// The stored derivations are d/dx, d/dy for the 2-variable rings and
// z d/dz for Kz.
struct BaseRing {
  RingKind kind = RingKind::R21;
  long h = 1;  // ramification index

  int arity() const { return kind == RingKind::Kz ? 1 : 2; }
  int num_derivations() const { return arity(); }
  std::array<bool, 2> pole_ok() const {
    switch (kind) {
      case RingKind::R21: return {true, false};
      case RingKind::R22: return {true, true};
      default: return {true, false};
    }
  }
  VarNames var_names() const {
    if (kind == RingKind::Kz) return VarNames{{"z", ""}};
    return VarNames{{"x", "y"}};
  }
  bool operator==(const BaseRing& o) const {
    return kind == o.kind && h == o.h;
  }
};

std::string ring_kind_name(RingKind k);

// Finite free differential module presented by connection matrices:
// the i-th derivation sends e_j to sum_i N[i](i,j) e_i (column convention).
struct DiffModule {
  BaseRing base;
  int rank = 0;
  std::vector<Mat<PuiseuxPoly>> N;
  std::string label;

  // Provenance for fast paths: when built as a direct sum of twists
  // E(phi_j) (x) regular, the phis are recorded here, one per summand,
  // along with the summand ranks. Empty when unknown.
  std::vector<PuiseuxPoly> sum_phis;
  std::vector<int> sum_ranks;
};

// Rank-1 module with derivation action d(v) = d(phi) v.
DiffModule e_phi(const PuiseuxPoly& phi, const BaseRing& base);

DiffModule construct_tensor(const DiffModule& a, const DiffModule& b);
DiffModule construct_dual(const DiffModule& a);
DiffModule construct_end(const DiffModule& a);
DiffModule construct_direct_sum(const DiffModule& a, const DiffModule& b);

// Commutation of the two derivation actions, exact. Always true over Kz.
bool check_flat(const DiffModule& m);

// Same module viewed with ramification index lcm(h, h'): exponents stay
// the same rationals, denominators up to the merged index become legal.
DiffModule pullback_ramified(const DiffModule& m, long h_prime);

// Recentering y -> z(x) + u over R21. The second variable of the result
// is the new coordinate u; d_u = d_y and d_x gains z'(x) d_y.
DiffModule pullback_center(const DiffModule& m, const PuiseuxPoly& z, long h);

// Monomial substitution x = x'^m00 y'^m01, y = x'^m10 y'^m11 with
// det(m) = ±1 (blowup charts); target ring supplied by the caller.
DiffModule pullback_monomial(const DiffModule& m,
                             const std::array<std::array<long, 2>, 2>& mat,
                             const BaseRing& target);

// x_i N_i: the action matrix of theta_i = x_i d_i (or of z d/dz over Kz).
Mat<PuiseuxPoly> theta_matrix(const DiffModule& m, int var);

}  // namespace diffmod
