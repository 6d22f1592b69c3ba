#include "diffmod/hlt.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "diffmod/errors.hpp"

namespace diffmod {

namespace {

RationalFunction rf_wrap(const PuiseuxPoly& f) { return RationalFunction(f); }

PuiseuxPoly theta_z(const PuiseuxPoly& f) { return poly_theta(f, 0); }

void require_kz(const DiffModule& m, const char* who) {
  if (m.base.kind != RingKind::Kz)
    throw InputError(std::string(who) + " expects a module over Kz");
  if (m.rank == 0) throw InputError(std::string(who) + ": zero module");
}

// z-valuation of a nonzero rational function.
Rat rf_valuation(const RationalFunction& f) {
  return min_exponent(f.num, 0) - min_exponent(f.den, 0);
}

// Constant term of the series expansion; requires nonnegative valuation.
Rat rf_series_constant(const RationalFunction& f) {
  if (f.is_zero()) return Rat(0);
  Rat vn = min_exponent(f.num, 0), vd = min_exponent(f.den, 0);
  if (vn < vd)
    throw InputError("lattice action has a pole; not stable under theta");
  if (vn > vd) return Rat(0);
  return laurent_coeff(f.num, vn) / laurent_coeff(f.den, vd);
}

Mat<PuiseuxPoly> theta_columns(const DiffModule& m,
                               const Mat<PuiseuxPoly>& b) {
  return map_entries(b, theta_z) + theta_matrix(m, 0) * b;
}

// Distinct values preserving no particular order beyond first occurrence.
std::vector<Rat> distinct_values(const std::vector<Rat>& v) {
  std::vector<Rat> out;
  for (const Rat& x : v)
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  return out;
}

Mat<Rat> mat_pow(const Mat<Rat>& a, int k) {
  Mat<Rat> out = Mat<Rat>::identity(a.rows);
  for (int i = 0; i < k; ++i) out = out * a;
  return out;
}

// Shared shear core: twist the generalized eigenspaces of S by w^(+1/-1),
// w the uniformizer z^(1/h). Cross blocks of the action vanish at order 0,
// so the twisted action stays integral either way.
Lattice shear_impl(const Lattice& w, const DiffModule& m,
                   const std::vector<Rat>& S, bool up) {
  if (S.empty()) return w;
  Mat<Rat> R = lattice_residue(m, w);
  int d = R.rows;
  std::vector<Rat> residual;
  std::vector<Rat> roots = rational_roots(char_poly(R), &residual);
  if (static_cast<int>(roots.size()) != d)
    throw ExtensionRequired("shear", residual);
  auto in_s = [&](const Rat& a) {
    return std::find(S.begin(), S.end(), a) != S.end();
  };
  std::vector<std::vector<Rat>> cols_x, cols_y;
  for (const Rat& a : distinct_values(roots)) {
    Mat<Rat> shifted = R;
    for (int i = 0; i < d; ++i) shifted.at(i, i) -= a;
    for (const auto& v : nullspace(mat_pow(shifted, d)))
      (in_s(a) ? cols_x : cols_y).push_back(v);
  }
  if (static_cast<int>(cols_x.size() + cols_y.size()) != d)
    throw DiffmodError("shear: generalized eigenspaces do not fill the space");
  if (cols_x.empty()) return w;
  long h = m.base.h;
  Mat<PuiseuxPoly> c(d, d);
  int col = 0;
  auto place = [&](const std::vector<Rat>& v) {
    for (int i = 0; i < d; ++i)
      c.at(i, col) = poly_const(v[i], 1, m.base.pole_ok());
    ++col;
  };
  for (const auto& v : cols_x) place(v);
  for (const auto& v : cols_y) place(v);
  Mat<PuiseuxPoly> b = w.B * c;
  Rat step = up ? rat(1, h) : rat(-1, h);
  PuiseuxPoly wpow =
      poly_monomial(Rat(1), Exp(step, Rat(0)), 1, m.base.pole_ok(), h);
  for (std::size_t k = 0; k < cols_x.size(); ++k)
    for (int i = 0; i < d; ++i)
      b.at(i, static_cast<int>(k)) = poly_mul(b.at(i, static_cast<int>(k)),
                                              wpow);
  return Lattice{std::move(b), w.N};
}

// Iterated shearing toward per-eigenvalue integer targets. target receives
// the eigenvalue and the full current multiset; it must be constant on each
// class mod Z and stay fixed across iterations, which bounds the loop by
// the largest initial integer gap.
using TargetFn = std::function<Rat(const Rat&, const std::vector<Rat>&)>;

Lattice prepare_lattice(const DiffModule& m, Lattice w,
                        const TargetFn& target) {
  for (int guard = 0; guard < 4096; ++guard) {
    std::vector<Rat> evs = exponents_of_lattice(m, w);
    std::vector<Rat> up, down;
    for (const Rat& a : distinct_values(evs)) {
      Rat t = target(a, evs);
      if (t - a >= 1)
        up.push_back(a);
      else if (a - t >= 1)
        down.push_back(a);
    }
    if (up.empty() && down.empty()) return w;
    w = up.empty() ? shear_down(w, m, down) : shear(w, m, up);
  }
  throw BudgetExhausted("shearing", "eigenvalue preparation did not settle");
}

// Regulating target: within a class mod Z, everything moves to the class
// maximum; the integer class moves to 0.
Rat regulating_target(const Rat& a, const std::vector<Rat>& evs) {
  Rat f = rat_frac(a);
  if (f == 0) return Rat(0);
  Rat best = a;
  for (const Rat& b : evs)
    if (rat_frac(b) == f && b > best) best = b;
  return best;
}

Rat tau_target(const Rat& a, const std::vector<Rat>&) { return rat_frac(a); }

// Cyclic chain v, theta v, ..., theta^(d-1) v as lattice columns. The
// cyclic vector is cleared to a polynomial first; scaling a cyclic vector
// by a nonzero function keeps it cyclic and the chain span theta-stable.
Lattice chain_lattice(const DiffModule& m, const CyclicResult& cyc) {
  int d = m.rank;
  PuiseuxPoly scale = poly_const(Rat(1), 1, m.base.pole_ok());
  std::vector<RationalFunction> red(d);
  for (int i = 0; i < d; ++i) {
    red[i] = rf_reduce(cyc.v[i]);
    if (!red[i].den.is_constant() &&
        !poly_div_exact(scale, red[i].den).has_value())
      scale = poly_mul(scale, red[i].den);
  }
  std::vector<PuiseuxPoly> v(d);
  for (int i = 0; i < d; ++i) {
    RationalFunction r = rf_reduce(rf_mul(red[i], RationalFunction(scale)));
    if (!r.den.is_constant())
      throw DiffmodError("chain_lattice: denominator did not clear");
    v[i] = poly_scal(Rat(1) / r.den.constant_term(), r.num);
  }
  Mat<PuiseuxPoly> n0 = theta_matrix(m, 0);
  Mat<PuiseuxPoly> b(d, d);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < d; ++i) b.at(i, k) = v[i];
    if (k + 1 == d) break;
    std::vector<PuiseuxPoly> next(d);
    for (int i = 0; i < d; ++i) {
      next[i] = theta_z(v[i]);
      for (int j = 0; j < d; ++j)
        next[i] = poly_add(next[i], poly_mul(n0.at(i, j), v[j]));
    }
    v = std::move(next);
  }
  return Lattice{std::move(b), Rat(32)};
}

}  // namespace

Lattice standard_lattice(const DiffModule& m, const Rat& N) {
  return Lattice{Mat<PuiseuxPoly>::identity(m.rank), N};
}

bool is_prepared(const std::vector<Rat>& values) {
  for (const Rat& a : values)
    if (a != 0 && is_integer(a)) return false;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] != values[j] && is_integer(values[i] - values[j]))
        return false;
  return true;
}

bool tau_check(const Rat& lambda, long a) {
  if (a < 1) throw InputError("tau_check: a must be >= 1");
  AdmissibleSection tau;
  Rat lhs = tau(lambda) - lambda;
  Rat rhs = rat_ceil((tau(Rat(a) * lambda) - Rat(a) * lambda) / Rat(a));
  return lhs == rhs;
}

Mat<RationalFunction> lattice_action(const DiffModule& m, const Lattice& w) {
  require_kz(m, "lattice_action");
  if (w.B.rows != m.rank || w.B.cols != m.rank)
    throw InputError("lattice_action: basis shape does not match the rank");
  Mat<RationalFunction> brf = map_entries(w.B, rf_wrap);
  auto inv = mat_inverse(brf);
  if (!inv) throw InputError("lattice_action: basis is singular");
  return *inv * map_entries(theta_columns(m, w.B), rf_wrap);
}

bool lattice_theta_stable(const DiffModule& m, const Lattice& w) {
  Mat<RationalFunction> a = lattice_action(m, w);
  for (const RationalFunction& f : a.a)
    if (!f.is_zero() && rf_valuation(f) < 0) return false;
  return true;
}

Mat<Rat> lattice_residue(const DiffModule& m, const Lattice& w) {
  Mat<RationalFunction> a = lattice_action(m, w);
  Rat h(m.base.h);
  Mat<Rat> out(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      out.at(i, j) = h * rf_series_constant(a.at(i, j));
  return out;
}

std::vector<Rat> exponents_of_lattice(const DiffModule& m, const Lattice& w) {
  Mat<Rat> r = lattice_residue(m, w);
  std::vector<Rat> residual;
  std::vector<Rat> roots = rational_roots(char_poly(r), &residual);
  if (static_cast<int>(roots.size()) != r.rows)
    throw ExtensionRequired("exponents_of_lattice", residual);
  std::sort(roots.begin(), roots.end());
  return roots;
}

RegularityResult is_regular(const DiffModule& m) {
  require_kz(m, "is_regular");
  DerivationContext ctx{m.base, {Rat(1), Rat(0)}};
  CyclicResult cyc = cyclic_vector(m, ctx);
  NewtonPolygon np = newton_polygon(cyc.P, Weight(Rat(1)));
  if (np.slopes.size() != 1 || np.slopes[0].first != 0) return {};
  Lattice w = chain_lattice(m, cyc);
  // Independent confirmation: the chain span must be theta-stable exactly
  // when all slopes sit at the cap.
  if (!lattice_theta_stable(m, w))
    throw DiffmodError("is_regular: polygon and chain stability disagree");
  return {true, prepare_lattice(m, std::move(w), regulating_target)};
}

Lattice shear(const Lattice& w, const DiffModule& m,
              const std::vector<Rat>& S) {
  return shear_impl(w, m, S, true);
}

Lattice shear_down(const Lattice& w, const DiffModule& m,
                   const std::vector<Rat>& S) {
  return shear_impl(w, m, S, false);
}

ExponentMultiset exponents(const DiffModule& m) {
  RegularityResult rr = is_regular(m);
  if (!rr.regular) throw InputError("exponents: module is not regular");
  std::vector<Rat> vals = exponents_of_lattice(m, *rr.W);
  for (Rat& v : vals) v = rat_frac(v);
  std::sort(vals.begin(), vals.end());
  return ExponentMultiset{std::move(vals), true};
}

DiffModule companion_module(const TwistedPoly& p) {
  if (p.ctx.base.kind != RingKind::Kz)
    throw InputError("companion_module expects Kz");
  if (p.ctx.coeff != std::array<Rat, 2>{Rat(1), Rat(0)})
    throw InputError("companion_module expects the plain theta_z derivation");
  if (!p.is_monic()) throw InputError("companion_module: not monic");
  int d = p.degree();
  if (d == 0) throw InputError("companion_module: degree zero");
  DiffModule m;
  m.base = p.ctx.base;
  long h = m.base.h;
  std::vector<PuiseuxPoly> coeff(d);
  for (int i = 0; i < d; ++i) {
    RationalFunction c = rf_reduce(p.c[i]);
    if (!c.den.is_constant())
      throw InputError("companion_module: coefficient has a series "
                       "denominator; expand it first");
    coeff[i] = poly_scal(Rat(1) / c.den.constant_term(), c.num);
    h = lcm_long(h, coeff[i].h);
  }
  m.base.h = h;
  Mat<PuiseuxPoly> n(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) n.at(i, j) = poly_zero(1, m.base.pole_ok(), h);
  for (int j = 0; j + 1 < d; ++j)
    n.at(j + 1, j) = poly_const(Rat(1), 1, m.base.pole_ok());
  for (int i = 0; i < d; ++i) {
    PuiseuxPoly e = poly_neg(coeff[i]);
    e.h = h;
    n.at(i, d - 1) = e;
  }
  m.rank = d;
  m.N.push_back(std::move(n));
  return m;
}

Rat polygon_irregularity(const DiffModule& m) {
  require_kz(m, "polygon_irregularity");
  DerivationContext ctx{m.base, {Rat(1), Rat(0)}};
  CyclicResult cyc = cyclic_vector(m, ctx);
  NewtonPolygon np = newton_polygon(cyc.P, Weight(Rat(1)));
  Rat irr(0);
  for (const auto& [s, mult] : np.slopes) irr += Rat(mult) * (np.cap - s);
  return irr;
}

// ---- Levelt recursion -----------------------------------------------------

namespace {

struct LeveltFrame {
  TwistedPoly P;
  PuiseuxPoly phi;
};

// Re-grid a frame onto the z^(1/h) lattice of exponents.
void regrid(LeveltFrame& fr, long h) {
  fr.P.ctx.base.h = h;
  for (RationalFunction& c : fr.P.c) {
    c.num = ramify(c.num, h);
    c.den = ramify(c.den, h);
  }
  fr.phi = ramify(fr.phi, h);
}

// Keep coefficients as plain Laurent data below the working cap.
void clamp(LeveltFrame& fr, const Rat& zcap) {
  for (RationalFunction& c : fr.P.c)
    c = RationalFunction(laurent_expand(c, zcap));
}

// Least h with all first-slot exponents in (1/h)Z.
long tight_grid(const PuiseuxPoly& f) {
  long h = 1;
  for (const auto& [e, c] : f.terms) {
    auto d = den_as_long(e.e[0]);
    if (!d) throw BudgetExhausted("hlt_decompose", "exponent denominator "
                                                   "overflow");
    h = lcm_long(h, *d);
  }
  return h;
}

}  // namespace

HLTResult hlt_decompose(const DiffModule& m, const HLTBudget& budget) {
  require_kz(m, "hlt_decompose");
  DerivationContext ctx{m.base, {Rat(1), Rat(0)}};
  CyclicResult cyc = cyclic_vector(m, ctx);
  int d0 = m.rank;
  NewtonPolygon np0 = newton_polygon(cyc.P, Weight(Rat(1)));
  Rat irr(0), smin(0);
  for (const auto& [s, mult] : np0.slopes) {
    irr += Rat(mult) * (np0.cap - s);
    if (s < smin) smin = s;
  }
  long twist_budget = *num_as_long(rat_ceil(Rat(d0) * irr)) + d0 + 1;
  Rat zcap = Rat(budget.N) + rat_ceil(Rat(d0) * (-smin)) + 2;

  LeveltFrame root{cyc.P, poly_zero(1, m.base.pole_ok(), m.base.h)};
  clamp(root, zcap);
  std::vector<LeveltFrame> stack{std::move(root)};
  std::vector<HLTSummand> out;
  long twists = 0;

  while (!stack.empty()) {
    LeveltFrame fr = std::move(stack.back());
    stack.pop_back();
    int d = fr.P.degree();
    if (d == 0) continue;
    NewtonPolygon np = newton_polygon(fr.P, Weight(Rat(1)));

    if (np.slopes.size() > 1) {
      // Headroom for the twists still to come inside each factor.
      Rat local = np.cap - np.slopes.front().first;
      long ncall =
          budget.N + *num_as_long(rat_ceil(Rat(d) * local)) + 2;
      std::vector<TwistedPoly> fs = slope_factor(fr.P, ncall);
      for (auto it = fs.rbegin(); it != fs.rend(); ++it)
        stack.push_back(LeveltFrame{*it, fr.phi});
      continue;
    }

    Rat s = np.slopes[0].first;
    if (s == 0) {
      // Regular piece: emit E(phi) (x) companion(P) on the tight grid, so
      // unramified summands come back with h = 1 regardless of the grids
      // visited along the way.
      HLTSummand sm;
      sm.rank = d;
      TwistedPoly pt = fr.P;
      long hj = tight_grid(fr.phi);
      for (RationalFunction& c : pt.c) {
        PuiseuxPoly e =
            truncate_above(laurent_expand(c, zcap), Rat(budget.N));
        hj = lcm_long(hj, tight_grid(e));
        c = RationalFunction(std::move(e));
      }
      sm.h = hj;
      sm.phi = fr.phi;
      sm.phi.h = hj;
      pt.ctx.base.h = hj;
      for (RationalFunction& c : pt.c) {
        c.num.h = hj;
        c.den.h = hj;
      }
      sm.regular_part = companion_module(pt);
      out.push_back(std::move(sm));
      continue;
    }

    // Single negative slope: remove the leading residual root by a twist.
    auto delta = den_as_long(s);
    if (!delta)
      throw BudgetExhausted("hlt_decompose", "slope denominator overflow");
    long hq = lcm_long(fr.P.ctx.base.h, *delta);
    if (hq > budget.h_max) {
      std::ostringstream os;
      os << "ramification index " << hq << " exceeds h_max "
         << budget.h_max;
      throw BudgetExhausted("hlt_decompose", os.str());
    }
    if (hq != fr.P.ctx.base.h) regrid(fr, hq);

    std::vector<Rat> q(static_cast<std::size_t>(d) + 1);
    for (int j = 0; j <= d; ++j) {
      PuiseuxPoly cj = laurent_expand(fr.P.c[j], zcap);
      q[j] = laurent_coeff(cj, s * Rat(d - j));
    }
    assert(q[d] == 1 && q[0] != 0);
    std::vector<Rat> roots = rational_roots(q);
    if (roots.empty()) throw ExtensionRequired("hlt_decompose", q);
    Rat c0 = *std::min_element(roots.begin(), roots.end());

    if (++twists > twist_budget)
      throw BudgetExhausted("hlt_decompose",
                            "slope-improvement loop exceeded its bound");
    PuiseuxPoly rstar =
        poly_monomial(c0, Exp(s, Rat(0)), 1, m.base.pole_ok(), hq);
    fr.P = twisted_shift(fr.P, RationalFunction(rstar));
    clamp(fr, zcap);
    fr.phi = poly_add(fr.phi, poly_monomial(c0 / s, Exp(s, Rat(0)), 1,
                                            m.base.pole_ok(), hq));
    stack.push_back(std::move(fr));
  }

  HLTResult res;
  res.summands = std::move(out);
  int ranksum = 0;
  for (const HLTSummand& sm : res.summands) {
    ranksum += sm.rank;
    res.h = lcm_long(res.h, sm.h);
  }
  if (ranksum != d0)
    throw BudgetExhausted("hlt_decompose",
                          "summand ranks do not sum to the rank; raise the "
                          "precision budget");
  for (const HLTSummand& sm : res.summands) {
    const BaseRing& rb = sm.regular_part.base;
    DiffModule summand =
        construct_tensor(e_phi(sm.phi, rb), sm.regular_part);
    DiffModule back =
        construct_tensor(e_phi(poly_neg(sm.phi), rb), summand);
    if (!is_regular(back).regular)
      throw BudgetExhausted("hlt_decompose",
                            "twist-back verification failed; raise the "
                            "precision budget");
  }
  return res;
}

// ---- fundamental solutions ------------------------------------------------

Mat<TruncatedSeries> fundamental_solution(const DiffModule& m,
                                          const Lattice& w, const Rat& N) {
  require_kz(m, "fundamental_solution");
  if (N < 1) throw InputError("fundamental_solution: precision must be >= 1");
  long h = m.base.h;
  int d = m.rank;
  Mat<RationalFunction> act = lattice_action(m, w);
  for (const RationalFunction& f : act.a)
    if (!f.is_zero() && rf_valuation(f) < 0)
      throw InputError("fundamental_solution: lattice is not theta-stable");
  long orders = *num_as_long(rat_ceil(N * Rat(h)));
  // Slices of the w d/dw action, w = z^(1/h): A = h * (theta_z action).
  std::vector<Mat<Rat>> ak(static_cast<std::size_t>(orders), Mat<Rat>(d, d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      PuiseuxPoly e = poly_scal(Rat(h), laurent_expand(act.at(i, j), N));
      for (long k = 0; k < orders; ++k)
        ak[static_cast<std::size_t>(k)].at(i, j) =
            laurent_coeff(e, rat(k, h));
    }
  const Mat<Rat>& r0 = ak[0];
  Mat<Rat> id = Mat<Rat>::identity(d);
  Mat<Rat> syl = kron(r0, id) - kron(id, transpose(r0));
  std::vector<Mat<Rat>> u(static_cast<std::size_t>(orders));
  u[0] = id;
  for (long i = 1; i < orders; ++i) {
    Mat<Rat> rhs(d, d);
    for (long j = 1; j <= i; ++j)
      if (!ak[static_cast<std::size_t>(j)].is_zero())
        rhs = rhs - ak[static_cast<std::size_t>(j)] *
                        u[static_cast<std::size_t>(i - j)];
    Mat<Rat> sys = syl;
    for (int p = 0; p < d * d; ++p) sys.at(p, p) += Rat(i);
    std::vector<Rat> b(static_cast<std::size_t>(d) * d);
    for (int p = 0; p < d; ++p)
      for (int qq = 0; qq < d; ++qq)
        b[static_cast<std::size_t>(p) * d + qq] = rhs.at(p, qq);
    auto x = solve_linear(sys, b);
    if (!x)
      throw InputError("fundamental_solution: singular system at order " +
                       rat_to_string(rat(i, h)) +
                       "; lattice exponents are not prepared");
    Mat<Rat> ui(d, d);
    for (int p = 0; p < d; ++p)
      for (int qq = 0; qq < d; ++qq)
        ui.at(p, qq) = (*x)[static_cast<std::size_t>(p) * d + qq];
    u[static_cast<std::size_t>(i)] = std::move(ui);
  }
  Mat<TruncatedSeries> outm(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      PuiseuxPoly body = poly_zero(1, m.base.pole_ok(), h);
      for (long k = 0; k < orders; ++k) {
        const Rat& c = u[static_cast<std::size_t>(k)].at(i, j);
        if (c != 0)
          body = poly_add(body, poly_monomial(c, Exp(rat(k, h), Rat(0)), 1,
                                              m.base.pole_ok(), h));
      }
      outm.at(i, j) = ts_make(body, N);
    }
  return outm;
}

// ---- Deligne-Malgrange lattices -------------------------------------------

namespace {

// Connected components of the symmetrized nonzero pattern.
std::vector<std::vector<int>> diagonal_blocks(const Mat<PuiseuxPoly>& n) {
  int d = n.rows;
  std::vector<int> parent(static_cast<std::size_t>(d));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x)
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(
              x)])];
    return x;
  };
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && (!n.at(i, j).is_zero() || !n.at(j, i).is_zero()))
        parent[static_cast<std::size_t>(find(i))] = find(j);
  std::vector<std::vector<int>> comps;
  std::vector<int> where(static_cast<std::size_t>(d), -1);
  for (int i = 0; i < d; ++i) {
    int r = find(i);
    if (where[static_cast<std::size_t>(r)] < 0) {
      where[static_cast<std::size_t>(r)] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(where[static_cast<std::size_t>(r)])]
        .push_back(i);
  }
  return comps;
}

}  // namespace

Lattice dm_lattice(const DiffModule& m, const AdmissibleSection& tau,
                   const HLTBudget& budget) {
  require_kz(m, "dm_lattice");
  (void)tau;  // the fractional section is the only one available over Q
  RegularityResult rr = is_regular(m);
  if (rr.regular) return prepare_lattice(m, *rr.W, tau_target);

  if (is_regular(construct_end(m)).regular) {
    // Twist-regular: one exponential class over Kz itself.
    HLTResult hr = hlt_decompose(m, budget);
    if (hr.h != 1)
      throw UnsupportedGeneralCase(
          "dm_lattice: decomposition needs ramification; the ramified "
          "intersection is not supported");
    DiffModule tw = construct_tensor(
        e_phi(poly_neg(hr.summands.front().phi), m.base), m);
    RegularityResult r2 = is_regular(tw);
    if (!r2.regular)
      throw BudgetExhausted("dm_lattice",
                            "twist by the detected exponential part did not "
                            "regularize; raise the precision budget");
    return prepare_lattice(tw, *r2.W, tau_target);
  }

  std::vector<std::vector<int>> comps = diagonal_blocks(theta_matrix(m, 0));
  if (comps.size() > 1) {
    Mat<PuiseuxPoly> n0 = theta_matrix(m, 0);
    Mat<PuiseuxPoly> b(m.rank, m.rank);
    for (const std::vector<int>& comp : comps) {
      int k = static_cast<int>(comp.size());
      DiffModule sub;
      sub.base = m.base;
      sub.rank = k;
      Mat<PuiseuxPoly> nn(k, k);
      for (int a = 0; a < k; ++a)
        for (int bb = 0; bb < k; ++bb)
          nn.at(a, bb) = n0.at(comp[static_cast<std::size_t>(a)],
                               comp[static_cast<std::size_t>(bb)]);
      sub.N.push_back(std::move(nn));
      Lattice lw = dm_lattice(sub, tau, budget);
      for (int a = 0; a < k; ++a)
        for (int bb = 0; bb < k; ++bb)
          b.at(comp[static_cast<std::size_t>(a)],
               comp[static_cast<std::size_t>(bb)]) = lw.B.at(a, bb);
    }
    return Lattice{std::move(b), Rat(budget.N)};
  }

  HLTResult hr = hlt_decompose(m, budget);
  if (hr.h > 1)
    throw UnsupportedGeneralCase(
        "dm_lattice: the module needs ramification (h = " +
        std::to_string(hr.h) + "); the ramified intersection is not "
        "supported");
  throw UnsupportedGeneralCase(
      "dm_lattice: non-split sum of distinct exponential classes; present "
      "the module block-diagonally");
}

// ---- lattice-growth oracle ------------------------------------------------

long irreg_lattice_oracle(const DiffModule& m, const Lattice& w, int s) {
  require_kz(m, "irreg_lattice_oracle");
  if (s < 0) throw InputError("irreg_lattice_oracle: s must be >= 0");
  int d = m.rank;
  PuiseuxPoly det0 = laurent_det(w.B);
  if (det0.is_zero())
    throw InputError("irreg_lattice_oracle: basis is singular");
  Rat vbase = min_exponent(det0, 0);
  if (s == 0) return 0;
  // Generators of Delta^s(W): theta^k applied to the basis, k = 0..s.
  std::vector<std::vector<PuiseuxPoly>> cols;
  Mat<PuiseuxPoly> cur = w.B;
  for (int k = 0; k <= s; ++k) {
    for (int j = 0; j < d; ++j) {
      std::vector<PuiseuxPoly> c(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] =
          cur.at(i, j);
      cols.push_back(std::move(c));
    }
    if (k < s) cur = theta_columns(m, cur);
  }
  int n = static_cast<int>(cols.size());
  mpz_class total;
  mpz_bin_uiui(total.get_mpz_t(), static_cast<unsigned long>(n),
               static_cast<unsigned long>(d));
  if (total > 200000)
    throw BudgetExhausted("irreg_lattice_oracle",
                          "too many minors; lower s or the rank");
  // Lattice determinant of a spanning set: least valuation over maximal
  // minors (Cauchy-Binet against any honest basis).
  std::optional<Rat> best;
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    Mat<PuiseuxPoly> sub(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i)
        sub.at(i, j) = cols[static_cast<std::size_t>(
            idx[static_cast<std::size_t>(j)])][static_cast<std::size_t>(i)];
    PuiseuxPoly det = laurent_det(sub);
    if (!det.is_zero()) {
      Rat v = min_exponent(det, 0);
      if (!best || v < *best) best = v;
    }
    int i = d - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - d + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)]
          + 1;
  }
  if (!best)
    throw InputError("irreg_lattice_oracle: generators are degenerate");
  Rat len = (vbase - *best) * Rat(m.base.h);
  if (!is_integer(len) || len < 0)
    throw DiffmodError("irreg_lattice_oracle: non-integral length");
  return *num_as_long(len);
}

}  // namespace diffmod
