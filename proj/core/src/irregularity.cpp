#include "diffmod/irregularity.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "diffmod/errors.hpp"

namespace diffmod {

namespace {

void require_surface_base(const DiffModule& m, const char* who) {
  if (m.base.kind == RingKind::Kz)
    throw InputError(std::string(who) + " needs a 2-variable base ring");
}

// r = lambda * (q1, q2) with coprime nonnegative integer (q1, q2).
std::array<long, 2> primitive_direction(const Weight& r) {
  if (r.arity != 2 || r.r[0] < 0 || r.r[1] < 0 || r.is_zero())
    throw InputError("weight must be a nonzero point of the closed quadrant");
  auto d0 = den_as_long(r.r[0]), d1 = den_as_long(r.r[1]);
  if (!d0 || !d1) throw InputError("weight denominator too large");
  long l = lcm_long(*d0, *d1);
  auto a = num_as_long(r.r[0] * Rat(l));
  auto b = num_as_long(r.r[1] * Rat(l));
  if (!a || !b) throw InputError("weight numerator too large");
  long g = std::gcd(*a, *b);
  return {*a / g, *b / g};
}

ScaleMultiset polygon_scales(const DiffModule& m, const DerivationContext& ctx,
                             const Weight& r, std::uint64_t seed) {
  CyclicResult cy = cyclic_vector(m, ctx, seed);
  ScaleMultiset sm = scale_multiset_from_polygon(newton_polygon(cy.P, r));
  sm.r = r;
  return sm;
}

}  // namespace

ScaleMultiset scale_multiset_at(const DiffModule& m, const Weight& r,
                                std::uint64_t seed) {
  require_surface_base(m, "scale_multiset_at");
  auto q = primitive_direction(r);
  if (q[0] == 0 || q[1] == 0) {
    DerivationContext ctx{m.base,
                          {Rat(q[0] == 0 ? 0 : 1), Rat(q[0] == 0 ? 1 : 0)}};
    return polygon_scales(m, ctx, r, seed);
  }
  // Two scalings of the adapted derivation; scales ignore scalar factors,
  // so disagreement means a computation bug, not a math ambiguity.
  DerivationContext c1{m.base, {Rat(1), rat(q[1], q[0])}};
  DerivationContext c2{m.base, {rat(q[0], q[1]), Rat(1)}};
  ScaleMultiset s1 = polygon_scales(m, c1, r, seed);
  ScaleMultiset s2 = polygon_scales(m, c2, r, seed);
  if (s1.logs != s2.logs) {
    std::ostringstream os;
    os << "adapted-derivation scalings disagree at r = ("
       << rat_to_string(r.r[0]) << ", " << rat_to_string(r.r[1]) << ")";
    throw DiffmodError(os.str());
  }
  return s1;
}

PLFunction twist_log_scale(const PuiseuxPoly& phi) {
  std::vector<AffineFunctional> parts{AffineFunctional(Rat(0), Rat(0))};
  for (const auto& [e, c] : phi.terms)
    parts.emplace_back(-e.e[0], -e.e[1]);
  return pl_make(std::move(parts));
}

namespace {

// ---- presented fast path -------------------------------------------------

// F_i = max over constituent selections of size i of the summed log-scales.
// All constituents are >= 0, so the bounded-multiplicity max-plus DP over
// "size <= i" computes the same function.
std::vector<PLFunction> presented_partial_sums(const DiffModule& m) {
  int d = m.rank;
  std::vector<PLFunction> dp(static_cast<std::size_t>(d) + 1,
                             pl_const(Rat(0)));
  for (std::size_t j = 0; j < m.sum_phis.size(); ++j) {
    PLFunction g = twist_log_scale(m.sum_phis[j]);
    int mult = m.sum_ranks[j];
    std::vector<PLFunction> next = dp;
    for (int i = d; i >= 1; --i) {
      std::vector<AffineFunctional> parts = next[i].parts;
      for (int k = 1; k <= std::min(mult, i); ++k) {
        PLFunction cand = pl_sum(dp[i - k], pl_scale(Rat(k), g));
        parts.insert(parts.end(), cand.parts.begin(), cand.parts.end());
      }
      next[i] = pl_make(std::move(parts));
    }
    dp = std::move(next);
  }
  dp.erase(dp.begin());
  return dp;
}

// ---- convex reconstruction ----------------------------------------------

// Shared evaluation cache along the segment r(t) = (1-t, t), t in [0,1].
struct SegmentOracle {
  const DiffModule& m;
  std::uint64_t seed;
  int budget;
  int used = 0;
  std::map<Rat, std::vector<Rat>> cache;  // t -> partial sums F_1..F_d

  const std::vector<Rat>& sums(const Rat& t) {
    auto it = cache.find(t);
    if (it != cache.end()) return it->second;
    if (used >= budget)
      throw BudgetExhausted(
          "irregularity_profile",
          "scale evaluation budget exhausted during convex reconstruction; "
          "raise max_evals or present the module as an explicit direct sum "
          "of twists");
    ++used;
    ScaleMultiset sm = scale_multiset_at(m, Weight(Rat(1) - t, t), seed);
    std::vector<Rat> ps;
    Rat acc(0);
    for (const Rat& v : sm.logs) {
      acc += v;
      ps.push_back(acc);
    }
    return cache.emplace(t, std::move(ps)).first->second;
  }
  Rat at(int i, const Rat& t) { return sums(t)[static_cast<std::size_t>(i) - 1]; }
};

struct SegPiece {
  Rat a, b;          // parameter interval
  Rat slope, icpt;   // value = slope * t + icpt
};

// Reconstructs one convex F_i along the segment. The midpoint certificate is
// exact: a convex function that meets its chord at the midpoint is linear on
// the whole subinterval. Failing intervals are split at the crossing of the
// two exact end-piece lines, which strictly separates the outermost pieces,
// so the recursion terminates with true breakpoints surviving the merge.
class FiReconstructor {
 public:
  FiReconstructor(SegmentOracle& o, int i) : o_(o), i_(i) {}

  std::vector<SegPiece> run() {
    std::vector<SegPiece> pieces;
    recurse(Rat(0), Rat(1), pieces);
    std::vector<SegPiece> out;
    for (const auto& p : pieces) {
      if (!out.empty() && out.back().slope == p.slope &&
          out.back().icpt == p.icpt)
        out.back().b = p.b;
      else
        out.push_back(p);
    }
    return out;
  }

 private:
  bool chord_mid(const Rat& a, const Rat& b) {
    return Rat(2) * o_.at(i_, (a + b) / 2) == o_.at(i_, a) + o_.at(i_, b);
  }
  SegPiece line_through(const Rat& a, const Rat& b) {
    Rat fa = o_.at(i_, a), fb = o_.at(i_, b);
    Rat s = (fb - fa) / (b - a);
    return {a, b, s, fa - s * a};
  }
  // Exact line of the piece touching `anchor`; the dyadic shrink passes the
  // certificate as soon as it lands inside that piece.
  SegPiece end_line(const Rat& anchor, Rat far) {
    while (true) {
      far = (anchor + far) / 2;
      if (chord_mid(anchor, far)) return line_through(anchor, far);
    }
  }
  void recurse(const Rat& a, const Rat& b, std::vector<SegPiece>& out) {
    if (chord_mid(a, b)) {
      out.push_back(line_through(a, b));
      return;
    }
    SegPiece left = end_line(a, b);
    SegPiece right = end_line(b, a);
    if (!(left.slope < right.slope))
      throw DiffmodError("convex reconstruction: end slopes out of order");
    Rat tstar = (right.icpt - left.icpt) / (left.slope - right.slope);
    if (!(a < tstar && tstar < b))
      throw DiffmodError("convex reconstruction: crossing left the interval");
    recurse(a, tstar, out);
    recurse(tstar, b, out);
  }

  SegmentOracle& o_;
  int i_;
};

// Homogenize segment pieces to cone functionals: value c + s*t on the
// segment lifts to c*r1 + (c+s)*r2.
PLFunction pieces_to_pl(const std::vector<SegPiece>& pieces, long quantum,
                        long q_max) {
  std::vector<AffineFunctional> parts;
  for (const auto& p : pieces) {
    Rat a1 = p.icpt, a2 = p.icpt + p.slope;
    if (!is_integer(a1 * Rat(quantum)) || !is_integer(a2 * Rat(quantum)))
      throw DiffmodError(
          "reconstructed functional fails the 1/(d! h) quantum certificate");
    parts.emplace_back(a1, a2);
  }
  for (std::size_t k = 0; k + 1 < pieces.size(); ++k)
    if (pieces[k].b.get_den() > q_max)
      throw BudgetExhausted("irregularity_profile",
                            "breakpoint denominator exceeds q_max");
  return pl_make(std::move(parts));
}

std::vector<PLFunction> reconstructed_partial_sums(const DiffModule& m,
                                                   const ProfileOptions& opts) {
  SegmentOracle oracle{m, opts.seed, opts.max_evals, 0, {}};
  long quantum = m.base.h;
  for (int k = 2; k <= m.rank; ++k) quantum *= k;
  std::vector<PLFunction> out;
  for (int i = 1; i <= m.rank; ++i) {
    FiReconstructor rec(oracle, i);
    out.push_back(pieces_to_pl(rec.run(), quantum, opts.q_max));
  }
  // Every sampled weight must lie exactly on the reconstruction.
  for (const auto& [t, sums] : oracle.cache) {
    Weight r(Rat(1) - t, t);
    for (int i = 1; i <= m.rank; ++i)
      if (pl_eval(out[i - 1], r) != sums[i - 1])
        throw DiffmodError("reconstructed profile fails at a sampled weight");
  }
  return out;
}

// ---- per-derivation polygon families --------------------------------------

// Lower hull of the points (-j, -log|c_j|_r) evaluated at integer abscissas
// as a min over straddling point pairs; the i-th partial sum of capped
// log-scales is then a max of pair interpolations against the leading
// coefficient, one global DiffPL per i. Denominators are cleared first so
// every coefficient norm is a plain max of monomial functionals (a common
// denominator shifts all points equally and cancels from the hull).
PolygonFamily build_family(const DiffModule& m, int var, std::uint64_t seed) {
  PolygonFamily fam;
  fam.derivation = var == 0 ? "x1*d1" : "x2*d2";
  fam.valid.halfplanes = {
      {var == 0 ? Rat(1) : Rat(0), var == 0 ? Rat(0) : Rat(1)}};
  fam.valid.tag = var == 0 ? "r1>0" : "r2>0";
  DerivationContext ctx{
      m.base, {Rat(var == 0 ? 1 : 0), Rat(var == 0 ? 0 : 1)}};
  CyclicResult cy;
  try {
    cy = cyclic_vector(m, ctx, seed);
  } catch (const BudgetExhausted&) {
    fam.note = "no cyclic vector for this coordinate derivation";
    return fam;
  }

  int d = m.rank;
  PuiseuxPoly common = poly_const(Rat(1), 2, m.base.pole_ok());
  for (const auto& c : cy.P.c) {
    if (c.den.is_constant()) continue;
    if (poly_div_exact(common, c.den)) continue;
    common = poly_mul(common, c.den);
  }
  std::vector<PLFunction> logC(static_cast<std::size_t>(d) + 1,
                               pl_const(Rat(0)));
  std::vector<bool> present(static_cast<std::size_t>(d) + 1, false);
  for (int j = 0; j <= d; ++j) {
    const RationalFunction& c = cy.P.c[j];
    if (c.is_zero()) continue;
    auto cofactor = poly_div_exact(common, c.den);
    if (!cofactor)
      throw DiffmodError("polygon family: denominator clearing failed");
    PuiseuxPoly cleared = poly_mul(c.num, *cofactor);
    std::vector<AffineFunctional> parts;
    for (const auto& [e, coef] : cleared.terms)
      parts.emplace_back(-e.e[0], -e.e[1]);
    logC[j] = pl_make(std::move(parts));
    present[j] = true;
  }
  if (!present[d])
    throw DiffmodError("polygon family: leading coefficient vanished");

  for (int i = 1; i <= d; ++i) {
    std::vector<AffineFunctional> pos = logC[d].parts;
    for (int mm = std::max(0, d - i); mm <= d; ++mm) {
      for (int j = mm; j <= d; ++j) {
        if (!present[j]) continue;
        for (int k = 0; k <= mm; ++k) {
          if (!present[k]) continue;
          if (j == k) {
            if (j != mm) continue;
            pos.insert(pos.end(), logC[mm].parts.begin(),
                       logC[mm].parts.end());
            continue;
          }
          PLFunction interp =
              pl_sum(pl_scale(rat(mm - k, j - k), logC[j]),
                     pl_scale(rat(j - mm, j - k), logC[k]));
          pos.insert(pos.end(), interp.parts.begin(), interp.parts.end());
        }
      }
    }
    fam.F.push_back(DiffPL{pl_make(std::move(pos)), logC[d]});
  }
  fam.available = true;
  return fam;
}

// ---- consistency sampling -------------------------------------------------

void consistency_check(const DiffModule& m, const IrregularityProfile& prof,
                       const ProfileOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<int> num(1, 6), den(1, 3);
  for (int s = 0; s < opts.consistency_samples; ++s) {
    Weight r(rat(num(rng), den(rng)), rat(num(rng), den(rng)));
    std::vector<Rat> expect;
    if (!prof.presented || m.rank <= opts.raw_rank_max) {
      ScaleMultiset sm = scale_multiset_at(m, r, opts.seed);
      Rat acc(0);
      for (const Rat& v : sm.logs) {
        acc += v;
        expect.push_back(acc);
      }
    } else {
      // Oversized presented module: constituent norms straight from the
      // twists, independent of the PL assembly.
      std::vector<Rat> logs;
      for (std::size_t j = 0; j < m.sum_phis.size(); ++j) {
        auto g = gauss_log_norm(m.sum_phis[j], r);
        Rat v = g ? std::max(Rat(0), *g) : Rat(0);
        for (int k = 0; k < m.sum_ranks[j]; ++k) logs.push_back(v);
      }
      std::sort(logs.rbegin(), logs.rend());
      Rat acc(0);
      for (const Rat& v : logs) {
        acc += v;
        expect.push_back(acc);
      }
    }
    for (int i = 1; i <= m.rank; ++i)
      if (pl_eval(prof.F[i - 1], r) != expect[i - 1]) {
        std::ostringstream os;
        os << "profile disagrees with direct evaluation at r = ("
           << rat_to_string(r.r[0]) << ", " << rat_to_string(r.r[1])
           << "), index " << i;
        throw DiffmodError(os.str());
      }
  }
}

}  // namespace

IrregularityProfile irregularity_profile(const DiffModule& m,
                                         const ProfileOptions& opts) {
  require_surface_base(m, "irregularity_profile");
  if (m.rank < 1) throw InputError("irregularity_profile needs rank >= 1");
  if (!check_flat(m))
    throw InputError("irregularity_profile needs a flat module");

  IrregularityProfile prof;
  prof.label = m.label;
  prof.rank = m.rank;
  int total = 0;
  for (int rk : m.sum_ranks) total += rk;
  prof.presented = !m.sum_phis.empty() &&
                   m.sum_phis.size() == m.sum_ranks.size() &&
                   total == m.rank;

  if (prof.presented) {
    prof.F = presented_partial_sums(m);
  } else {
    if (m.rank > opts.raw_rank_max) {
      std::ostringstream os;
      os << "rank " << m.rank << " exceeds the raw-profile bound "
         << opts.raw_rank_max
         << "; present the module as an explicit direct sum of twists";
      throw BudgetExhausted("irregularity_profile", os.str());
    }
    prof.F = reconstructed_partial_sums(m, opts);
  }

  PLFunction prev = pl_const(Rat(0));
  for (const auto& F : prof.F) {
    prof.f.push_back(DiffPL{F, prev});
    prev = F;
  }

  for (int var = 0; var < 2; ++var) {
    if (!opts.with_families) {
      prof.families[var].derivation = var == 0 ? "x1*d1" : "x2*d2";
      prof.families[var].note = "not requested";
    } else if (m.rank > opts.raw_rank_max) {
      // Symbolic cyclic vectors blow up combinatorially with rank; the
      // profile values above stay exact without the families.
      prof.families[var].derivation = var == 0 ? "x1*d1" : "x2*d2";
      prof.families[var].note = "rank exceeds the polygon-family budget";
    } else {
      prof.families[var] = build_family(m, var, opts.seed);
    }
  }

  consistency_check(m, prof, opts);
  return prof;
}

CriterionVerdict criterion_check(const DiffModule& m,
                                 const ProfileOptions& opts) {
  CriterionVerdict v;
  v.profile = irregularity_profile(m, opts);

  DiffModule em = construct_end(m);
  em.label = m.label.empty() ? "End" : "End(" + m.label + ")";
  ProfileOptions eo = opts;
  eo.with_families = false;  // quadratic rank; families add nothing here
  v.end_profile = irregularity_profile(em, eo);

  for (const auto& F : v.profile.F) v.statuses.push_back(is_linear_on_cone(F));
  for (const auto& F : v.end_profile.F)
    v.end_statuses.push_back(is_linear_on_cone(F));
  v.top = v.statuses.back();
  v.end_top = v.end_statuses.back();
  v.flag = v.top.linear && v.end_top.linear ? CriterionFlag::GoodAfterPullback
                                            : CriterionFlag::Fails;
  return v;
}

DropAffineReport drop_affine_check(const std::vector<DiffModule>& summands,
                                   const ProfileOptions& opts) {
  if (summands.empty())
    throw InputError("drop_affine_check needs at least one summand");
  ProfileOptions po = opts;
  po.with_families = false;

  DiffModule total = summands.front();
  for (std::size_t j = 1; j < summands.size(); ++j)
    total = construct_direct_sum(total, summands[j]);

  DropAffineReport rep;
  rep.total = is_linear_on_cone(irregularity_profile(total, po).F.back());
  rep.precondition_linear = rep.total.linear;
  rep.all_summands_linear = true;
  for (const auto& mj : summands) {
    rep.summands.push_back(
        is_linear_on_cone(irregularity_profile(mj, po).F.back()));
    if (!rep.summands.back().linear) rep.all_summands_linear = false;
  }
  rep.verdict = rep.precondition_linear && rep.all_summands_linear;
  return rep;
}

}  // namespace diffmod
