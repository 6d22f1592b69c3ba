// One-variable structure theory over Q((z)) and its ramified covers
// Q((z^(1/h))): regularity with regulating lattices, shearing, exponents,
// the Levelt recursion to a full formal decomposition, Deligne-Malgrange
// lattices, fundamental solutions, and the lattice-growth irregularity
// oracle. Everything is exact; steps that would need an algebraic extension
// of Q raise ExtensionRequired instead of approximating.
#pragma once

#include <optional>
#include <vector>

#include "diffmod/matrix.hpp"
#include "diffmod/module.hpp"
#include "diffmod/puiseux.hpp"
#include "diffmod/rat.hpp"
#include "diffmod/twisted.hpp"

namespace diffmod {

// o_F-lattice in a module over Kz, presented by basis columns in module
// coordinates. Entries are the exact bodies of series known to precision N
// (every constructor in this library produces exact Laurent data; N records
// the declared working precision). Invariant: B invertible over the series
// field, i.e. laurent_det(B) != 0.
struct Lattice {
  Mat<PuiseuxPoly> B;
  Rat N{32};
};

// The lattice spanned by the module's own frame.
Lattice standard_lattice(const DiffModule& m, const Rat& N = Rat(32));

// Multiset of exponents, ascending. mod_z marks representatives taken
// mod Z in [0,1) (attached to a module); exact eigenvalues otherwise
// (attached to a lattice).
struct ExponentMultiset {
  std::vector<Rat> values;
  bool mod_z = false;
};

// No nonzero integer occurs as an element or as a difference of elements.
bool is_prepared(const std::vector<Rat>& values);

// The fractional-part section lambda -> lambda - floor(lambda), the one
// admissible section available over Q. tau(0) = 0.
struct AdmissibleSection {
  Rat operator()(const Rat& lambda) const { return rat_frac(lambda); }
};

// Verifies tau(lambda) - lambda == ceil((tau(a lambda) - a lambda) / a),
// the compatibility a section must satisfy under ramification of index a.
bool tau_check(const Rat& lambda, long a);

// theta_z written on the lattice basis: A = B^{-1} (theta_z(B) + N0 B)
// where N0 is the module's theta_z matrix.
Mat<RationalFunction> lattice_action(const DiffModule& m, const Lattice& w);

// True when every entry of the action has nonnegative z-valuation, i.e.
// the lattice is stable under theta_z.
bool lattice_theta_stable(const DiffModule& m, const Lattice& w);

// Constant term of the action of the uniformizer-normalized derivation
// h * theta_z = w d/dw for w = z^(1/h). Requires a theta-stable lattice.
Mat<Rat> lattice_residue(const DiffModule& m, const Lattice& w);

// Residue eigenvalues with multiplicity, ascending. ExtensionRequired when
// the characteristic polynomial has an irrational root.
std::vector<Rat> exponents_of_lattice(const DiffModule& m, const Lattice& w);

struct RegularityResult {
  bool regular = false;
  // Regulating lattice: theta-stable with prepared residue eigenvalues.
  std::optional<Lattice> W;
};

// Decides regularity by the Newton polygon of a cyclic vector (all slopes
// at the cap); on success builds a regulating lattice from the cyclic chain
// by iterated shearing.
RegularityResult is_regular(const DiffModule& m);

// New lattice whose residue eigenvalues are those of w except that each
// alpha in S moves to alpha + 1 (shear_down: to alpha - 1). Values in S
// that are not eigenvalues are ignored; S empty returns w unchanged.
Lattice shear(const Lattice& w, const DiffModule& m,
              const std::vector<Rat>& S);
Lattice shear_down(const Lattice& w, const DiffModule& m,
                   const std::vector<Rat>& S);

// Exponents of a regular module: residue eigenvalues of any regulating
// lattice, reduced mod Z to [0,1). Independent of the lattice choice.
ExponentMultiset exponents(const DiffModule& m);

// One summand of the formal decomposition: after pullback to the z^(1/h)
// grid, the original module acquires a direct summand E(phi) (x) R with R
// regular. phi is a pure principal part in z^(-1/h) Q[z^(-1/h)].
struct HLTSummand {
  PuiseuxPoly phi;
  DiffModule regular_part;
  int rank = 0;
  long h = 1;  // lcm of the exponent denominators of phi
};

struct HLTResult {
  std::vector<HLTSummand> summands;
  long h = 1;  // lcm over all summands
};

struct HLTBudget {
  long h_max = 12;  // largest ramification index the recursion may take
  long N = 32;      // coefficient precision for factorization steps
};

// Levelt's recursion: repeatedly split the cyclic polynomial along its
// Newton polygon, remove the leading root of the residual equation by an
// exponential twist, and ramify when a slope has a denominator. Each
// returned regular part is verified by twisting back. Summand ranks sum to
// the rank of m.
HLTResult hlt_decompose(const DiffModule& m, const HLTBudget& budget = {});

// Horizontal frame for a regulating lattice: U with U_0 = I and
// A U + theta_w(U) = U R0 exactly mod z^N, solved order by order from the
// Sylvester systems i U_i = U_i R0 - R0 U_i - sum_j A_j U_{i-j}. A singular
// system means the lattice exponents are not prepared; the error names the
// first bad order, which equals the offending integer eigenvalue gap.
Mat<TruncatedSeries> fundamental_solution(const DiffModule& m,
                                          const Lattice& w, const Rat& N);

// Deligne-Malgrange lattice: the regulating lattice whose exponents land in
// the image of tau ([0,1) here). Regular and twist-regular modules are fully
// supported; direct sums with visibly block-diagonal action decompose
// blockwise; anything needing ramification or a hidden splitting raises
// UnsupportedGeneralCase.
Lattice dm_lattice(const DiffModule& m, const AdmissibleSection& tau,
                   const HLTBudget& budget = {});

// Length of Delta^s(w) / w where Delta(W) = W + theta_z(W), in uniformizer
// units. The first difference in s stabilizes to the irregularity.
long irreg_lattice_oracle(const DiffModule& m, const Lattice& w, int s);

// Irregularity read off the capped Newton polygon of a cyclic vector:
// sum of multiplicity * (cap - slope) at weight 1.
Rat polygon_irregularity(const DiffModule& m);

// Companion module of a monic twisted polynomial over Kz whose coefficients
// have constant denominators: theta(b_j) = b_{j+1}, theta(b_{d-1}) =
// -sum c_i b_i.
DiffModule companion_module(const TwistedPoly& p);

}  // namespace diffmod
