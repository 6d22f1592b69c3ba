#include "diffmod/irregularity.hpp"

#include <algorithm>
#include <random>
#include <vector>

#include "diffmod/errors.hpp"
#include "diffmod/hlt.hpp"
#include "diffmod/twisted.hpp"
#include "doctest.h"

using namespace diffmod;

namespace {

BaseRing r21() { return BaseRing{RingKind::R21, 1}; }
BaseRing r22() { return BaseRing{RingKind::R22, 1}; }

PuiseuxPoly xp(const std::string& s, const BaseRing& base) {
  return poly_from_string(s, 2, base.pole_ok(), base.var_names());
}

DiffModule ephi(const std::string& s, const BaseRing& base) {
  DiffModule m = e_phi(xp(s, base), base);
  m.label = "E(" + s + ")";
  return m;
}

// Forgets the twist presentation so the profile takes the raw path.
DiffModule stripped(DiffModule m) {
  m.sum_phis.clear();
  m.sum_ranks.clear();
  return m;
}

// R21 module from string entries of N_x; the y-derivation acts by zero.
DiffModule xmod(const std::vector<std::vector<std::string>>& rows) {
  DiffModule m;
  m.base = r21();
  m.rank = static_cast<int>(rows.size());
  Mat<PuiseuxPoly> n0(m.rank, m.rank);
  long h = 1;
  for (int i = 0; i < m.rank; ++i)
    for (int j = 0; j < m.rank; ++j) {
      n0.at(i, j) = xp(rows[i][j], m.base);
      h = lcm_long(h, n0.at(i, j).h);
    }
  m.base.h = h;
  Mat<PuiseuxPoly> n1(m.rank, m.rank);
  for (int i = 0; i < m.rank; ++i)
    for (int j = 0; j < m.rank; ++j)
      n1.at(i, j) = poly_zero(2, m.base.pole_ok(), h);
  m.N = {std::move(n0), std::move(n1)};
  return m;
}

AffineFunctional af(long a1, long a2) {
  return AffineFunctional(Rat(a1), Rat(a2));
}

// The paper-sized 4-summand module whose End has nonlinear middle partial
// sums while the top ones stay linear.
DiffModule four_summand() {
  DiffModule m = construct_direct_sum(
      construct_direct_sum(ephi("x^-3*y^-3", r22()),
                           ephi("x^-3*y^-3 + x^-1", r22())),
      construct_direct_sum(ephi("x^-2*y^-2", r22()),
                           ephi("x^-2*y^-2 + y^-1", r22())));
  m.label = "four-summand";
  return m;
}

// Independent oracle: capped Gauss norms of the recorded twists, sorted
// descending, one entry per unit of rank.
std::vector<Rat> constituent_partial_sums(const DiffModule& m,
                                          const Weight& r) {
  std::vector<Rat> logs;
  for (std::size_t j = 0; j < m.sum_phis.size(); ++j) {
    auto g = gauss_log_norm(m.sum_phis[j], r);
    Rat v = g ? std::max(Rat(0), *g) : Rat(0);
    for (int k = 0; k < m.sum_ranks[j]; ++k) logs.push_back(v);
  }
  std::sort(logs.rbegin(), logs.rend());
  std::vector<Rat> ps;
  Rat acc(0);
  for (const Rat& v : logs) {
    acc += v;
    ps.push_back(acc);
  }
  return ps;
}

Weight rnd_weight(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(1, 8), den(1, 4);
  return Weight(rat(num(rng), den(rng)), rat(num(rng), den(rng)));
}

// Kz restriction of an R21 module whose matrices only involve x.
DiffModule axis_restriction(const DiffModule& m) {
  Mat<PuiseuxPoly> theta = theta_matrix(m, 0);
  DiffModule out;
  out.base = BaseRing{RingKind::Kz, m.base.h};
  out.rank = m.rank;
  Mat<PuiseuxPoly> n(m.rank, m.rank);
  for (int i = 0; i < m.rank; ++i)
    for (int j = 0; j < m.rank; ++j) {
      PuiseuxPoly f = poly_zero(1, {true, false}, theta.at(i, j).h);
      for (const auto& [e, c] : theta.at(i, j).terms) {
        REQUIRE(e.e[1] == 0);
        f.terms[Exp(e.e[0], Rat(0))] = c;
      }
      n.at(i, j) = f;
    }
  out.N = {std::move(n)};
  return out;
}

}  // namespace

TEST_CASE("twist log scale is the capped gauss norm") {
  PLFunction g = twist_log_scale(xp("x^-3*y^-3 + x^-1", r22()));
  CHECK(g.parts == std::vector<AffineFunctional>{af(3, 3)});

  PLFunction h = twist_log_scale(xp("x^-1*y", r21()));
  CHECK(h.parts == std::vector<AffineFunctional>{af(0, 0), af(1, -1)});
  CHECK(pl_eval(h, Weight(Rat(1), Rat(0))) == 1);
  CHECK(pl_eval(h, Weight(Rat(0), Rat(1))) == 0);

  CHECK(twist_log_scale(poly_zero(2, {true, true})).parts ==
        std::vector<AffineFunctional>{af(0, 0)});
}

TEST_CASE("scale multiset at single weights") {
  ScaleMultiset s = scale_multiset_at(ephi("x^-3*y^-3", r22()),
                                      Weight(Rat(1), Rat(1)));
  CHECK(s.logs == std::vector<Rat>{Rat(6)});

  // Regular twists scale trivially everywhere.
  for (const Weight& r : {Weight(Rat(1), Rat(1)), Weight(Rat(2), Rat(0)),
                          Weight(rat(1, 3), Rat(5))}) {
    CHECK(scale_multiset_at(ephi("x^2 + y", r21()), r).logs ==
          std::vector<Rat>{Rat(0)});
  }

  // Oracle first: blockwise capped gauss norms, sorted descending.
  DiffModule sum =
      construct_direct_sum(ephi("x^-1", r22()), ephi("y^-1", r22()));
  Weight r23(Rat(2), Rat(3));
  std::vector<Rat> expect{*gauss_log_norm(xp("y^-1", r22()), r23),
                          *gauss_log_norm(xp("x^-1", r22()), r23)};
  CHECK(expect == std::vector<Rat>{Rat(3), Rat(2)});
  CHECK(scale_multiset_at(sum, r23).logs == expect);

  // Boundary weights fall back to the surviving coordinate derivation.
  CHECK(scale_multiset_at(ephi("y^-1", r22()), Weight(Rat(1), Rat(0))).logs ==
        std::vector<Rat>{Rat(0)});
  CHECK(scale_multiset_at(ephi("x^-1", r22()), Weight(Rat(1), Rat(0))).logs ==
        std::vector<Rat>{Rat(1)});

  CHECK_THROWS_AS(scale_multiset_at(sum, Weight(Rat(0), Rat(0))), InputError);
  CHECK_THROWS_AS(scale_multiset_at(sum, Weight(Rat(-1), Rat(2))), InputError);
  DiffModule kz = e_phi(poly_from_string("z^-1", 1, {true, false},
                                         VarNames{{"z", ""}}),
                        BaseRing{RingKind::Kz, 1});
  CHECK_THROWS_AS(scale_multiset_at(kz, Weight(Rat(1), Rat(1))), InputError);
}

TEST_CASE("adapted derivation scalings agree at random interior weights") {
  std::vector<DiffModule> corpus;
  corpus.push_back(ephi("x^-3*y^-3 + x^-1", r22()));
  corpus.push_back(ephi("x^-1*y", r21()));
  corpus.push_back(xmod({{"0", "1"}, {"x^-2", "0"}}));
  std::mt19937_64 rng(20250815);
  for (const DiffModule& m : corpus) {
    for (int s = 0; s < 10; ++s) {
      Weight r = rnd_weight(rng);
      // The library hard-asserts both scalings internally; also check
      // positive homogeneity against a doubled weight.
      ScaleMultiset a = scale_multiset_at(m, r);
      ScaleMultiset b =
          scale_multiset_at(m, Weight(r.r[0] * 2, r.r[1] * 2));
      REQUIRE(a.logs.size() == b.logs.size());
      for (std::size_t i = 0; i < a.logs.size(); ++i)
        CHECK(b.logs[i] == a.logs[i] * 2);
    }
  }
}

TEST_CASE("profile of a single twist keeps the dominant functional") {
  IrregularityProfile p = irregularity_profile(ephi("x^-3*y^-3 + x^-1", r22()));
  CHECK(p.presented);
  REQUIRE(p.F.size() == 1);
  CHECK(p.F[0].parts == std::vector<AffineFunctional>{af(3, 3)});
  CHECK(pl_equal(p.f[0].pos, p.F[0]));
  CHECK(pl_eval(p.f[0].neg, Weight(Rat(7), Rat(2))) == 0);
}

TEST_CASE("four-summand module: profile matches the constituent oracle") {
  DiffModule m = four_summand();
  IrregularityProfile p = irregularity_profile(m);
  CHECK(p.presented);
  REQUIRE(p.F.size() == 4);

  std::mt19937_64 rng(41);
  for (int s = 0; s < 12; ++s) {
    Weight r = rnd_weight(rng);
    std::vector<Rat> oracle = constituent_partial_sums(m, r);
    for (int i = 1; i <= 4; ++i)
      CHECK(pl_eval(p.F[i - 1], r) == oracle[i - 1]);
  }

  CHECK(p.F[0].parts == std::vector<AffineFunctional>{af(3, 3)});
  CHECK(p.F[3].parts == std::vector<AffineFunctional>{af(10, 10)});
  LinearityResult top = is_linear_on_cone(p.F[3]);
  CHECK(top.linear);
  CHECK(*top.functional == af(10, 10));
}

TEST_CASE("four-summand End: first nonlinear partial sum sits at index 9") {
  DiffModule m = four_summand();
  DiffModule em = construct_end(m);
  REQUIRE(em.rank == 16);
  REQUIRE(em.sum_phis.size() == 16);

  // Brute-force oracle over the 16 pairwise differences at a generic weight.
  Weight g(Rat(1), Rat(2));
  std::vector<Rat> logs;
  for (const PuiseuxPoly& phi : em.sum_phis) {
    auto v = gauss_log_norm(phi, g);
    logs.push_back(v ? std::max(Rat(0), *v) : Rat(0));
  }
  std::sort(logs.rbegin(), logs.rend());
  std::vector<Rat> freq9(8, Rat(9));
  CHECK(std::vector<Rat>(logs.begin(), logs.begin() + 8) == freq9);
  CHECK(std::vector<Rat>(logs.begin() + 8, logs.end()) ==
        std::vector<Rat>{Rat(2), Rat(2), Rat(1), Rat(1), Rat(0), Rat(0),
                         Rat(0), Rat(0)});

  IrregularityProfile p = irregularity_profile(em);
  CHECK(p.presented);
  REQUIRE(p.F.size() == 16);
  // Families back off above the rank budget instead of hanging on a
  // symbolic rank-16 cyclic vector search.
  CHECK_FALSE(p.families[0].available);
  CHECK(p.families[0].note.find("budget") != std::string::npos);

  std::mt19937_64 rng(42);
  for (int s = 0; s < 10; ++s) {
    Weight r = rnd_weight(rng);
    std::vector<Rat> oracle = constituent_partial_sums(em, r);
    for (int i = 1; i <= 16; ++i)
      CHECK(pl_eval(p.F[i - 1], r) == oracle[i - 1]);
  }

  CHECK(p.F[7].parts == std::vector<AffineFunctional>{af(24, 24)});
  CHECK(p.F[8].parts ==
        (std::vector<AffineFunctional>{af(24, 25), af(25, 24)}));
  for (int i = 12; i <= 16; ++i)
    CHECK(p.F[i - 1].parts == std::vector<AffineFunctional>{af(26, 26)});

  std::vector<int> nonlinear;
  for (int i = 1; i <= 16; ++i)
    if (!is_linear_on_cone(p.F[i - 1]).linear) nonlinear.push_back(i);
  CHECK(nonlinear == std::vector<int>{9, 10, 11});

  // The nonlinearity value at index 9 is 24(r1+r2) + max{r1,r2}; the fifth
  // partial sum is plainly 15(r1+r2) and nothing max-shaped.
  CHECK(p.F[4].parts == std::vector<AffineFunctional>{af(15, 15)});
  CHECK_FALSE(pl_equal(p.F[4], pl_make({af(4, 3), af(3, 4)})));
}

TEST_CASE("criterion verdicts") {
  CriterionVerdict good = criterion_check(four_summand());
  CHECK(good.flag == CriterionFlag::GoodAfterPullback);
  CHECK(good.top.linear);
  CHECK(*good.top.functional == af(10, 10));
  CHECK(good.end_top.linear);
  CHECK(*good.end_top.functional == af(26, 26));
  // The verdict survives a nonlinear middle partial sum of End.
  CHECK_FALSE(good.end_statuses[8].linear);

  CriterionVerdict bad = criterion_check(ephi("x^-1*y", r21()));
  CHECK(bad.flag == CriterionFlag::Fails);
  CHECK_FALSE(bad.top.linear);
  CHECK(bad.profile.F[0].parts ==
        (std::vector<AffineFunctional>{af(0, 0), af(1, -1)}));
  // Witnesses pick weights where distinct functionals win strictly: one
  // value sits on r1 - r2 with slack, the other on the zero branch.
  std::array<Rat, 2> wv;
  std::array<Rat, 2> diff;
  for (int k = 0; k < 2; ++k) {
    wv[k] = pl_eval(bad.profile.F[0], bad.top.witness[k]);
    diff[k] = bad.top.witness[k].r[0] - bad.top.witness[k].r[1];
  }
  CHECK(((wv[0] == diff[0] && wv[0] > 0 && wv[1] == 0 && diff[1] < 0) ||
         (wv[1] == diff[1] && wv[1] > 0 && wv[0] == 0 && diff[0] < 0)));

  CriterionVerdict reg = criterion_check(xmod({{"0", "1"}, {"0", "0"}}));
  CHECK(reg.flag == CriterionFlag::GoodAfterPullback);
  CHECK(*reg.top.functional == af(0, 0));
  CHECK(*reg.end_top.functional == af(0, 0));
}

TEST_CASE("raw reconstruction agrees with the presented fast path") {
  std::vector<DiffModule> mods;
  mods.push_back(four_summand());
  mods.push_back(construct_direct_sum(ephi("x^-3", r22()), ephi("y^-2", r22())));
  mods.push_back(ephi("x^-1*y", r21()));
  for (const DiffModule& m : mods) {
    IrregularityProfile fast = irregularity_profile(m);
    IrregularityProfile raw = irregularity_profile(stripped(m));
    CHECK(fast.presented);
    CHECK_FALSE(raw.presented);
    REQUIRE(fast.F.size() == raw.F.size());
    for (std::size_t i = 0; i < fast.F.size(); ++i)
      CHECK(pl_equal(fast.F[i], raw.F[i]));
  }

  // The interior breakpoint of max{3 r1, 2 r2} must be recovered exactly.
  IrregularityProfile p = irregularity_profile(
      stripped(construct_direct_sum(ephi("x^-3", r22()), ephi("y^-2", r22()))));
  CHECK(p.F[0].parts == (std::vector<AffineFunctional>{af(0, 2), af(3, 0)}));
  CHECK(p.F[1].parts == std::vector<AffineFunctional>{af(3, 2)});
}

TEST_CASE("profile invariants on a corpus") {
  std::vector<DiffModule> corpus;
  corpus.push_back(four_summand());
  corpus.push_back(construct_direct_sum(ephi("x^-3", r22()), ephi("y^-2", r22())));
  corpus.push_back(ephi("x^-1*y", r21()));
  corpus.push_back(xmod({{"0", "1"}, {"0", "0"}}));
  corpus.push_back(xmod({{"0", "x^-2"}, {"0", "0"}}));

  std::mt19937_64 rng(7);
  for (const DiffModule& m : corpus) {
    IrregularityProfile p = irregularity_profile(m);
    int d = m.rank;
    long quantum = m.base.h;
    for (int k = 2; k <= d; ++k) quantum *= k;
    for (int i = 0; i < d; ++i) {
      // d! h times any functional is integral, and values vanish at 0.
      for (const AffineFunctional& a : p.F[i].parts) {
        CHECK(is_integer(a.a1 * Rat(quantum)));
        CHECK(is_integer(a.a2 * Rat(quantum)));
        CHECK(a.c == 0);
      }
    }
    for (int s = 0; s < 8; ++s) {
      Weight r = rnd_weight(rng);
      Weight q = rnd_weight(rng);
      Rat lam = rat(3, 2);
      for (int i = 0; i < d; ++i) {
        Rat fr = pl_eval(p.F[i], r);
        // positive homogeneity
        CHECK(pl_eval(p.F[i], Weight(r.r[0] * lam, r.r[1] * lam)) == fr * lam);
        // convexity at midpoints
        Weight mid((r.r[0] + q.r[0]) / 2, (r.r[1] + q.r[1]) / 2);
        CHECK(Rat(2) * pl_eval(p.F[i], mid) <= fr + pl_eval(p.F[i], q));
        // sorted multiset: increments are nonincreasing in i
        if (i + 1 < d)
          CHECK(diffpl_eval(p.f[i], r) >= diffpl_eval(p.f[i + 1], r));
      }
      if (m.base.kind == RingKind::R21) {
        // nonincreasing in the pole-free direction
        Weight up(r.r[0], r.r[1] + rat(5, 3));
        for (int i = 0; i < d; ++i)
          CHECK(pl_eval(p.F[i], up) <= pl_eval(p.F[i], r));
      }
    }
  }
}

TEST_CASE("linear top sum splits the spectrum at a single index") {
  // With F_d linear the positive increments come first: f_i > 0 on the
  // interior up to some j, and f_i vanishes identically beyond it.
  std::vector<DiffModule> mods;
  mods.push_back(four_summand());                                   // j = 4
  mods.push_back(construct_direct_sum(ephi("x^-1*y^-1", r22()),
                                      ephi("0", r22())));           // j = 1
  mods.push_back(xmod({{"0", "1"}, {"0", "0"}}));                   // j = 0
  for (const DiffModule& m : mods) {
    IrregularityProfile p = irregularity_profile(m);
    REQUIRE(is_linear_on_cone(p.F.back()).linear);
    int j = 0;
    for (int i = m.rank; i >= 1; --i) {
      PLFunction prev = i >= 2 ? p.F[i - 2] : pl_const(Rat(0));
      if (!pl_equal(p.F[i - 1], prev)) {
        j = i;
        break;
      }
    }
    for (int i = 1; i <= j; ++i)
      CHECK(diffpl_eval(p.f[i - 1], Weight(Rat(1), Rat(1))) > 0);
    for (int i = j + 1; i <= m.rank; ++i) {
      PLFunction prev = i >= 2 ? p.F[i - 2] : pl_const(Rat(0));
      CHECK(pl_equal(p.F[i - 1], prev));
    }
  }
}

TEST_CASE("polygon families are exact on their axes") {
  DiffModule m = construct_direct_sum(ephi("x^-3", r22()), ephi("y^-2", r22()));
  IrregularityProfile p = irregularity_profile(m);
  REQUIRE(p.families[0].available);
  REQUIRE(p.families[1].available);
  CHECK(p.families[0].valid.tag == "r1>0");
  CHECK(p.families[1].valid.tag == "r2>0");

  for (const Rat& c : {Rat(1), Rat(2), rat(5, 2)}) {
    Weight ax(c, Rat(0)), ay(Rat(0), c);
    for (int i = 0; i < m.rank; ++i) {
      CHECK(diffpl_eval(p.families[0].F[i], ax) == pl_eval(p.F[i], ax));
      CHECK(diffpl_eval(p.families[1].F[i], ay) == pl_eval(p.F[i], ay));
    }
  }
  // Off its axis a single-derivation polygon can undershoot the truth.
  CHECK(diffpl_eval(p.families[0].F[0], Weight(Rat(0), Rat(1))) == 0);
  CHECK(pl_eval(p.F[0], Weight(Rat(0), Rat(1))) == 2);

  // A zero matrix action still admits a cyclic vector through coefficients
  // ((1, y) works), and the resulting polygon family vanishes identically.
  IrregularityProfile q = irregularity_profile(xmod({{"0", "1"}, {"0", "0"}}));
  CHECK(q.families[0].available);
  CHECK(q.families[1].available);
  for (const DiffPL& F : q.families[1].F)
    CHECK(diffpl_eval(F, Weight(Rat(0), Rat(3))) == 0);
}

TEST_CASE("drop affine check") {
  std::vector<DiffModule> parts{
      ephi("x^-3*y^-3", r22()), ephi("x^-3*y^-3 + x^-1", r22()),
      ephi("x^-2*y^-2", r22()), ephi("x^-2*y^-2 + y^-1", r22())};
  DropAffineReport rep = drop_affine_check(parts);
  CHECK(rep.precondition_linear);
  CHECK(rep.all_summands_linear);
  CHECK(rep.verdict);
  REQUIRE(rep.summands.size() == 4);
  CHECK(*rep.summands[0].functional == af(3, 3));
  CHECK(*rep.summands[2].functional == af(2, 2));

  // Single summand restates top-sum linearity.
  DropAffineReport one = drop_affine_check(
      {construct_direct_sum(ephi("x^-3", r22()), ephi("y^-2", r22()))});
  CHECK(one.precondition_linear);
  CHECK(one.verdict);
  CHECK(*one.total.functional == af(3, 2));

  // Nonlinear input violates the precondition and is reported, not hidden.
  DropAffineReport bad = drop_affine_check({ephi("x^-1*y", r21())});
  CHECK_FALSE(bad.precondition_linear);
  CHECK_FALSE(bad.verdict);

  CHECK_THROWS_AS(drop_affine_check({}), InputError);
}

TEST_CASE("f1 vanishes exactly when the axis restriction is regular") {
  std::vector<DiffModule> mods;
  mods.push_back(xmod({{"0", "1"}, {"0", "0"}}));
  mods.push_back(xmod({{"0", "x^-2"}, {"0", "0"}}));
  mods.push_back(stripped(ephi("x^-2", r21())));
  mods.push_back(stripped(ephi("x^2", r21())));
  for (const DiffModule& m : mods) {
    IrregularityProfile p = irregularity_profile(m);
    bool f1_zero = pl_equal(p.F[0], pl_const(Rat(0)));
    bool axis_regular = is_regular(axis_restriction(m)).regular;
    CHECK(f1_zero == axis_regular);
  }
}

TEST_CASE("block triangular glue over regular blocks stays regular") {
  // Extensions of regular modules are regular even with polar glue.
  for (const auto& rows : std::vector<std::vector<std::vector<std::string>>>{
           {{"0", "x^-1"}, {"0", "0"}},
           {{"0", "1", "x^-1"}, {"0", "0", "x^-2"}, {"0", "0", "0"}}}) {
    DiffModule m = xmod(rows);
    IrregularityProfile p = irregularity_profile(m);
    for (const PLFunction& F : p.F) CHECK(pl_equal(F, pl_const(Rat(0))));
  }
}

TEST_CASE("reconstruction guards") {
  DiffModule wide = stripped(four_summand());
  ProfileOptions tight;
  tight.raw_rank_max = 2;
  CHECK_THROWS_WITH_AS(irregularity_profile(wide, tight),
                       doctest::Contains("direct sum"), BudgetExhausted);

  DiffModule two =
      stripped(construct_direct_sum(ephi("x^-3", r22()), ephi("y^-2", r22())));
  ProfileOptions starving;
  starving.max_evals = 2;
  CHECK_THROWS_AS(irregularity_profile(two, starving), BudgetExhausted);

  ProfileOptions coarse;
  coarse.q_max = 2;  // the true breakpoint lives at t = 3/5
  CHECK_THROWS_WITH_AS(irregularity_profile(two, coarse),
                       doctest::Contains("q_max"), BudgetExhausted);
}

TEST_CASE("profile input validation") {
  DiffModule skew;
  skew.base = r21();
  skew.rank = 1;
  Mat<PuiseuxPoly> a(1, 1), b(1, 1);
  a.at(0, 0) = xp("y", r21());
  b.at(0, 0) = poly_zero(2, r21().pole_ok());
  skew.N = {a, b};
  CHECK_THROWS_WITH_AS(irregularity_profile(skew), doctest::Contains("flat"),
                       InputError);

  DiffModule kz = e_phi(poly_from_string("z^-1", 1, {true, false},
                                         VarNames{{"z", ""}}),
                        BaseRing{RingKind::Kz, 1});
  CHECK_THROWS_AS(irregularity_profile(kz), InputError);
}
