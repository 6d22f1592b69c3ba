#include "diffmod/twisted.hpp"

#include <algorithm>
#include <cassert>
#include <random>
#include <sstream>

#include "diffmod/errors.hpp"

namespace diffmod {

namespace {

PuiseuxPoly loosen(const PuiseuxPoly& f) {
  PuiseuxPoly out = poly_zero(std::max(f.arity, 1), {true, true}, f.h);
  out.arity = 2;
  out.terms = f.terms;
  return out;
}

// Divide both polynomials by their joint monomial content and normalize
// the denominator's lowest coefficient to one.
void strip_content(PuiseuxPoly& n, PuiseuxPoly& d) {
  if (n.is_zero()) {
    d = poly_const(Rat(1));
    return;
  }
  Exp m;
  for (int i = 0; i < 2; ++i)
    m.e[i] = std::min(min_exponent(n, i), min_exponent(d, i));
  if (!(m == Exp())) {
    Exp inv(-m.e[0], -m.e[1]);
    long h = lcm_long(n.h, d.h);
    PuiseuxPoly mono = poly_monomial(Rat(1), inv, 2, {true, true}, h);
    n = poly_mul(n, mono);
    d = poly_mul(d, mono);
  }
  Rat c = d.terms.begin()->second;
  if (c != 1) {
    n = poly_scal(Rat(1) / c, n);
    d = poly_scal(Rat(1) / c, d);
  }
}

// Variable usage: -1 none, 0 or 1 single variable, 2 mixed.
int vars_used(const PuiseuxPoly& f) {
  bool u0 = false, u1 = false;
  for (const auto& [e, c] : f.terms) {
    if (e.e[0] != 0) u0 = true;
    if (e.e[1] != 0) u1 = true;
  }
  if (u0 && u1) return 2;
  if (u0) return 0;
  if (u1) return 1;
  return -1;
}

// Dense coefficients of a one-variable Laurent polynomial with nonnegative
// h-scaled exponents.
std::vector<Rat> to_univariate(const PuiseuxPoly& f, int var, long h) {
  long deg = 0;
  for (const auto& [e, c] : f.terms) {
    Rat scaled = e.e[var] * Rat(h);
    deg = std::max(deg, scaled.get_num().get_si());
  }
  std::vector<Rat> out(static_cast<std::size_t>(deg) + 1);
  for (const auto& [e, c] : f.terms) {
    Rat scaled = e.e[var] * Rat(h);
    out[static_cast<std::size_t>(scaled.get_num().get_si())] = c;
  }
  return out;
}

PuiseuxPoly from_univariate(const std::vector<Rat>& c, int var, long h) {
  PuiseuxPoly out = poly_zero(2, {true, true}, h);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    Exp e;
    e.e[var] = Rat(static_cast<long>(i)) / h;
    out = poly_add(out, poly_monomial(c[i], e, 2, {true, true}, h));
  }
  return out;
}

void poly_trim(std::vector<Rat>& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

// Euclidean remainder over Q[t].
std::vector<Rat> poly_rem(std::vector<Rat> a, const std::vector<Rat>& b) {
  while (a.size() >= b.size() && !a.empty()) {
    Rat f = a.back() / b.back();
    std::size_t off = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[off + i] -= f * b[i];
    poly_trim(a);
  }
  return a;
}

std::vector<Rat> poly_gcd_uni(std::vector<Rat> a, std::vector<Rat> b) {
  poly_trim(a);
  poly_trim(b);
  while (!b.empty()) {
    std::vector<Rat> r = poly_rem(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty() && a.back() != 1) {
    Rat lead = a.back();
    for (Rat& x : a) x /= lead;
  }
  return a;
}

std::vector<Rat> poly_quo_uni(std::vector<Rat> a, const std::vector<Rat>& b) {
  std::vector<Rat> q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0);
  while (a.size() >= b.size() && !a.empty()) {
    Rat f = a.back() / b.back();
    std::size_t off = a.size() - b.size();
    q[off] = f;
    for (std::size_t i = 0; i < b.size(); ++i) a[off + i] -= f * b[i];
    poly_trim(a);
  }
  return q;
}

}  // namespace

RationalFunction::RationalFunction(PuiseuxPoly n, PuiseuxPoly d)
    : num(std::move(n)), den(std::move(d)) {
  if (den.is_zero()) throw InputError("zero denominator");
}

bool RationalFunction::is_one() const { return num == den; }

bool RationalFunction::operator==(const RationalFunction& o) const {
  return poly_mul(num, o.den) == poly_mul(o.num, den);
}

RationalFunction rf_add(const RationalFunction& a, const RationalFunction& b) {
  return rf_reduce(RationalFunction(
      poly_add(poly_mul(a.num, b.den), poly_mul(b.num, a.den)),
      poly_mul(a.den, b.den)));
}

RationalFunction rf_sub(const RationalFunction& a, const RationalFunction& b) {
  return rf_add(a, rf_neg(b));
}

RationalFunction rf_neg(const RationalFunction& a) {
  return RationalFunction(poly_neg(a.num), a.den);
}

RationalFunction rf_mul(const RationalFunction& a, const RationalFunction& b) {
  return rf_reduce(
      RationalFunction(poly_mul(a.num, b.num), poly_mul(a.den, b.den)));
}

RationalFunction rf_div(const RationalFunction& a, const RationalFunction& b) {
  if (b.is_zero()) throw InputError("division by zero rational function");
  return rf_reduce(
      RationalFunction(poly_mul(a.num, b.den), poly_mul(a.den, b.num)));
}

RationalFunction rf_reduce(const RationalFunction& a) {
  PuiseuxPoly n = loosen(a.num), d = loosen(a.den);
  strip_content(n, d);
  if (n.is_zero() || d.is_constant())
    return RationalFunction(std::move(n), std::move(d));

  int vn = vars_used(n), vd = vars_used(d);
  if (vd >= 0 && vd < 2 && (vn < 0 || vn == vd)) {
    int var = vd;
    long h = lcm_long(n.h, d.h);
    std::vector<Rat> un = to_univariate(n, var, h);
    std::vector<Rat> ud = to_univariate(d, var, h);
    std::vector<Rat> g = poly_gcd_uni(un, ud);
    if (g.size() > 1) {
      n = from_univariate(poly_quo_uni(un, g), var, h);
      d = from_univariate(poly_quo_uni(ud, g), var, h);
      strip_content(n, d);
    }
    if (d.is_constant()) return RationalFunction(std::move(n), std::move(d));
  }
  if (auto q = poly_div_exact(n, d))
    return RationalFunction(std::move(*q), poly_const(Rat(1)));
  return RationalFunction(std::move(n), std::move(d));
}

std::optional<Rat> rf_log_norm(const RationalFunction& a, const Weight& r) {
  auto nn = gauss_log_norm(a.num, r);
  if (!nn) return std::nullopt;
  auto nd = gauss_log_norm(a.den, r);
  return *nn - *nd;
}

std::optional<PuiseuxPoly> poly_div_exact(const PuiseuxPoly& a,
                                          const PuiseuxPoly& b) {
  if (b.is_zero()) return std::nullopt;
  long h = lcm_long(a.h, b.h);
  if (a.is_zero()) return poly_zero(2, {true, true}, h);
  // Exponent box of any exact quotient: the lowest and highest slices of a
  // product never cancel, so per variable min and max subtract exactly. A
  // candidate term outside the box proves the division inexact; inside it,
  // the strictly decreasing leading terms live on a finite grid, so the
  // loop terminates without an artificial step cap.
  Rat lo[2], hi[2];
  for (int i = 0; i < 2; ++i) {
    lo[i] = min_exponent(a, i) - min_exponent(b, i);
    hi[i] = max_exponent(a, i) - max_exponent(b, i);
  }
  PuiseuxPoly r = loosen(a);
  PuiseuxPoly q = poly_zero(2, {true, true}, h);
  const auto& ltb = *b.terms.rbegin();
  while (!r.is_zero()) {
    const auto& ltr = *r.terms.rbegin();
    Exp e(ltr.first.e[0] - ltb.first.e[0], ltr.first.e[1] - ltb.first.e[1]);
    if (e.e[0] < lo[0] || e.e[0] > hi[0] || e.e[1] < lo[1] || e.e[1] > hi[1])
      return std::nullopt;
    PuiseuxPoly t = poly_monomial(ltr.second / ltb.second, e, 2, {true, true},
                                  lcm_long(r.h, b.h));
    q = poly_add(q, t);
    r = poly_sub(r, poly_mul(t, b));
  }
  return q;
}

PuiseuxPoly laurent_det(Mat<PuiseuxPoly> m) {
  if (m.rows != m.cols) throw InputError("det of a non-square matrix");
  int n = m.rows;
  if (n == 0) return poly_const(Rat(1));
  bool negate = false;
  PuiseuxPoly prev = poly_const(Rat(1));
  for (int k = 0; k < n - 1; ++k) {
    int sel = -1;
    for (int i = k; i < n; ++i)
      if (!m.at(i, k).is_zero()) {
        sel = i;
        break;
      }
    if (sel < 0) return poly_zero(2, {true, true});
    if (sel != k) {
      for (int j = 0; j < n; ++j) std::swap(m.at(sel, j), m.at(k, j));
      negate = !negate;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        PuiseuxPoly t = poly_sub(poly_mul(m.at(i, j), m.at(k, k)),
                                 poly_mul(m.at(i, k), m.at(k, j)));
        auto qq = poly_div_exact(t, prev);
        assert(qq);  // Bareiss divisions are exact
        m.at(i, j) = std::move(*qq);
      }
    prev = m.at(k, k);
  }
  PuiseuxPoly det = m.at(n - 1, n - 1);
  return negate ? poly_neg(det) : det;
}

PuiseuxPoly DerivationContext::apply(const PuiseuxPoly& f) const {
  PuiseuxPoly out = poly_scal(coeff[0], poly_theta(f, 0));
  if (base.arity() == 2)
    out = poly_add(out, poly_scal(coeff[1], poly_theta(f, 1)));
  return out;
}

RationalFunction DerivationContext::apply(const RationalFunction& f) const {
  // quotient rule: D(n/d) = (D(n) d - n D(d)) / d^2
  PuiseuxPoly dn = apply(f.num), dd = apply(f.den);
  return rf_reduce(RationalFunction(
      poly_sub(poly_mul(dn, f.den), poly_mul(f.num, dd)),
      poly_mul(f.den, f.den)));
}

Mat<PuiseuxPoly> DerivationContext::action_matrix(const DiffModule& m) const {
  Mat<PuiseuxPoly> out = map_entries(theta_matrix(m, 0), [&](const PuiseuxPoly& f) {
    return poly_scal(coeff[0], f);
  });
  if (base.arity() == 2)
    out = out + map_entries(theta_matrix(m, 1), [&](const PuiseuxPoly& f) {
            return poly_scal(coeff[1], f);
          });
  return out;
}

TwistedPoly twisted_make(std::vector<RationalFunction> coeffs,
                         DerivationContext ctx) {
  while (!coeffs.empty() && coeffs.back().is_zero()) coeffs.pop_back();
  return TwistedPoly{std::move(coeffs), std::move(ctx)};
}

TwistedPoly twisted_add(const TwistedPoly& p, const TwistedPoly& q) {
  std::vector<RationalFunction> c(std::max(p.c.size(), q.c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i < p.c.size()) c[i] = c[i] + p.c[i];
    if (i < q.c.size()) c[i] = c[i] + q.c[i];
  }
  return twisted_make(std::move(c), p.ctx);
}

TwistedPoly twisted_mul(const TwistedPoly& p, const TwistedPoly& q) {
  if (p.c.empty() || q.c.empty()) return twisted_make({}, p.ctx);
  int dp = p.degree(), dq = q.degree();
  std::vector<RationalFunction> r(dp + dq + 1);
  for (int j = 0; j <= dq; ++j) {
    if (q.c[j].is_zero()) continue;
    RationalFunction der = q.c[j];  // D^s applied as s grows
    for (int s = 0; s <= dp; ++s) {
      if (!der.is_zero()) {
        for (int i = s; i <= dp; ++i) {
          if (p.c[i].is_zero()) continue;
          mpz_class binom;
          mpz_bin_uiui(binom.get_mpz_t(), i, s);
          RationalFunction term =
              p.c[i] * RationalFunction(poly_const(Rat(binom))) * der;
          r[i - s + j] = r[i - s + j] + term;
        }
      }
      if (s < dp) der = p.ctx.apply(der);
    }
  }
  return twisted_make(std::move(r), p.ctx);
}

TwistedPoly twisted_shift(const TwistedPoly& p, const RationalFunction& c) {
  TwistedPoly base = twisted_make(
      {c, RationalFunction(poly_const(Rat(1)))}, p.ctx);
  TwistedPoly power = twisted_make({RationalFunction(poly_const(Rat(1)))},
                                   p.ctx);
  TwistedPoly out = twisted_make({}, p.ctx);
  for (int i = 0; i <= p.degree(); ++i) {
    if (!p.c[i].is_zero()) {
      std::vector<RationalFunction> scaled = power.c;
      for (auto& x : scaled) x = p.c[i] * x;
      out = twisted_add(out, twisted_make(std::move(scaled), p.ctx));
    }
    if (i < p.degree()) power = twisted_mul(power, base);
  }
  return out;
}

// ---- cyclic vectors --------------------------------------------------

namespace {

using PolyVec = std::vector<PuiseuxPoly>;

PolyVec apply_derivation(const DerivationContext& ctx,
                         const Mat<PuiseuxPoly>& A, const PolyVec& v) {
  PolyVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = ctx.apply(v[i]);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (A.at(static_cast<int>(i), static_cast<int>(j)).is_zero() ||
          v[j].is_zero())
        continue;
      out[i] = poly_add(
          out[i], poly_mul(A.at(static_cast<int>(i), static_cast<int>(j)),
                           v[j]));
    }
  }
  return out;
}

}  // namespace

CyclicResult cyclic_vector(const DiffModule& m, const DerivationContext& ctx,
                           std::uint64_t seed) {
  int d = m.rank;
  Mat<PuiseuxPoly> A = ctx.action_matrix(m);
  std::vector<std::string> tried;

  auto attempt = [&](const PolyVec& v,
                     const std::string& name) -> std::optional<CyclicResult> {
    tried.push_back(name);
    // Columns v, Dv, ..., D^{d-1}v plus the next derivative for the relation.
    std::vector<PolyVec> chain{v};
    for (int k = 1; k <= d; ++k)
      chain.push_back(apply_derivation(ctx, A, chain.back()));
    Mat<PuiseuxPoly> W(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) W.at(i, j) = chain[j][i];
    PuiseuxPoly det = laurent_det(W);
    if (det.is_zero()) return std::nullopt;

    // Cramer: coefficients of D^d v against the chain basis.
    std::vector<RationalFunction> rel(d + 1);
    for (int i = 0; i < d; ++i) {
      Mat<PuiseuxPoly> Wi = W;
      for (int row = 0; row < d; ++row) Wi.at(row, i) = chain[d][row];
      rel[i] = rf_reduce(RationalFunction(poly_neg(laurent_det(Wi)), det));
    }
    rel[d] = RationalFunction(poly_const(Rat(1)));

    CyclicResult res;
    res.v.reserve(d);
    for (const auto& x : v) res.v.emplace_back(x);
    res.P = twisted_make(std::move(rel), ctx);
    res.certificate = det;
    res.tried = tried;
    return res;
  };

  auto mono = [&](const Rat& c, long e0, long e1) {
    Exp e{Rat(e0), Rat(e1)};
    if (m.base.arity() == 1) e.e[1] = 0;
    return poly_monomial(c, e, m.base.arity(), {true, true}, m.base.h);
  };

  // Basis vectors first.
  for (int i = 0; i < d; ++i) {
    PolyVec v(d, poly_zero(m.base.arity(), {true, true}, m.base.h));
    v[i] = poly_const(Rat(1), m.base.arity(), {true, true});
    if (auto r = attempt(v, "e" + std::to_string(i))) return *r;
  }
  if (d > 1) {
    // Deterministic ladders.
    struct Ladder {
      const char* name;
      long e0, e1;
    };
    const Ladder ladders[] = {
        {"ones", 0, 0}, {"x-ladder", 1, 0}, {"x2-ladder", 2, 0},
        {"y-ladder", 0, 1}};
    for (const auto& lad : ladders) {
      if (lad.e1 != 0 && m.base.arity() < 2) continue;
      PolyVec v(d);
      for (int j = 0; j < d; ++j) v[j] = mono(Rat(1), lad.e0 * j, lad.e1 * j);
      if (auto r = attempt(v, lad.name)) return *r;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coef(-3, 3), expo(0, 2);
    for (int t = 0; t < 60; ++t) {
      PolyVec v(d);
      for (int j = 0; j < d; ++j) {
        int c = coef(rng);
        v[j] = mono(Rat(c), expo(rng), m.base.arity() == 2 ? expo(rng) : 0);
      }
      if (auto r = attempt(v, "random-" + std::to_string(t))) return *r;
    }
  }
  std::ostringstream os;
  os << "no candidate gave an invertible chain; tried:";
  for (const auto& s : tried) os << " " << s;
  throw BudgetExhausted("cyclic_vector", os.str());
}

// ---- Newton polygons ---------------------------------------------------

namespace {

NewtonPolygon polygon_impl(const TwistedPoly& p, const Weight& r, bool cap) {
  if (!p.is_monic()) throw InputError("newton_polygon needs a monic input");
  if (r.r[0] < 0 || (r.arity > 1 && r.r[1] < 0))
    throw InputError("newton_polygon: weight outside the cone");
  int d = p.degree();
  // Points (x, y) = (-i, v_i) with v_i = -log|P_i|_r, lower hull.
  std::vector<std::pair<Rat, Rat>> pts;
  int i_min = d;
  for (int i = 0; i <= d; ++i) {
    if (p.c[i].is_zero()) continue;
    i_min = std::min(i_min, i);
    auto nu = rf_log_norm(p.c[i], r);
    pts.emplace_back(Rat(-i), -*nu);
  }
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Andrew scan for the lower hull.
  std::vector<std::pair<Rat, Rat>> hull;
  for (const auto& pt : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      Rat cross = (b.first - a.first) * (pt.second - a.second) -
                  (b.second - a.second) * (pt.first - a.first);
      if (cross <= 0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(pt);
  }

  NewtonPolygon np;
  np.r = r;
  np.cap = Rat(0);
  np.capped = cap;
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    Rat dx = hull[k + 1].first - hull[k].first;
    Rat dy = hull[k + 1].second - hull[k].second;
    Rat slope = dy / dx;
    int mult = static_cast<int>(dx.get_num().get_si());
    if (cap && slope > np.cap) slope = np.cap;
    if (!np.slopes.empty() && np.slopes.back().first == slope)
      np.slopes.back().second += mult;
    else
      np.slopes.emplace_back(slope, mult);
  }
  if (cap && i_min > 0) {
    // Missing low coefficients act like factors of infinite slope.
    if (!np.slopes.empty() && np.slopes.back().first == np.cap)
      np.slopes.back().second += i_min;
    else
      np.slopes.emplace_back(np.cap, i_min);
  }
  return np;
}

}  // namespace

NewtonPolygon newton_polygon(const TwistedPoly& p, const Weight& r) {
  return polygon_impl(p, r, true);
}

NewtonPolygon newton_polygon_uncapped(const TwistedPoly& p, const Weight& r) {
  return polygon_impl(p, r, false);
}

ScaleMultiset scale_multiset_from_polygon(const NewtonPolygon& np) {
  ScaleMultiset out;
  out.r = np.r;
  for (const auto& [slope, mult] : np.slopes)
    for (int i = 0; i < mult; ++i) out.logs.push_back(np.cap - slope);
  std::sort(out.logs.begin(), out.logs.end(), std::greater<Rat>());
  return out;
}

// ---- slope factorization over Kz ---------------------------------------

PuiseuxPoly truncate_above(const PuiseuxPoly& f, const Rat& zcap) {
  PuiseuxPoly out = f;
  for (auto it = out.terms.begin(); it != out.terms.end();)
    it = it->first.e[0] > zcap ? out.terms.erase(it) : std::next(it);
  return out;
}

PuiseuxPoly laurent_expand(const RationalFunction& a, const Rat& zcap) {
  RationalFunction red = rf_reduce(a);
  if (red.num.is_zero()) return red.num;
  if (red.den.is_constant())
    return poly_scal(Rat(1) / red.den.constant_term(), red.num);
  if (red.den.terms.size() == 1) {
    const auto& [e, c] = *red.den.terms.begin();
    PuiseuxPoly inv = poly_monomial(Rat(1) / c, Exp(-e.e[0], -e.e[1]), 2,
                                    {true, true}, red.den.h);
    return poly_mul(red.num, inv);
  }
  // den = z^a u with u(0) = 1 after reduction; invert the unit part.
  Rat aord = min_exponent(red.den, 0);
  PuiseuxPoly shift = poly_monomial(Rat(1), Exp(-aord, Rat(0)), 2,
                                    {true, true}, red.den.h);
  PuiseuxPoly u = poly_mul(red.den, shift);
  PuiseuxPoly numsh = poly_mul(red.num, shift);
  Rat prec = zcap - min_exponent(numsh, 0) + 1;
  if (prec < 1) prec = 1;
  TruncatedSeries uinv = invert_unit(ts_make(u, prec), prec);
  return truncate_above(poly_mul(numsh, uinv.body), zcap);
}

Rat laurent_coeff(const PuiseuxPoly& f, const Rat& e) {
  auto it = f.terms.find(Exp(e, Rat(0)));
  return it == f.terms.end() ? Rat(0) : it->second;
}

namespace {

// Twisted product on Laurent coefficient vectors over Kz (D = theta_z),
// truncating z-exponents above zcap.
std::vector<PuiseuxPoly> mul_laurent(const std::vector<PuiseuxPoly>& p,
                                     const std::vector<PuiseuxPoly>& q,
                                     const Rat& zcap) {
  int dp = static_cast<int>(p.size()) - 1, dq = static_cast<int>(q.size()) - 1;
  std::vector<PuiseuxPoly> r(dp + dq + 1, poly_zero(1, {true, false}));
  for (int j = 0; j <= dq; ++j) {
    if (q[j].is_zero()) continue;
    PuiseuxPoly der = q[j];
    for (int s = 0; s <= dp; ++s) {
      if (!der.is_zero()) {
        for (int i = s; i <= dp; ++i) {
          if (p[i].is_zero()) continue;
          mpz_class binom;
          mpz_bin_uiui(binom.get_mpz_t(), i, s);
          r[i - s + j] = poly_add(
              r[i - s + j],
              truncate_above(poly_scal(Rat(binom), poly_mul(p[i], der)), zcap));
        }
      }
      if (s < dp) der = poly_theta(der, 0);
    }
  }
  return r;
}

}  // namespace

std::vector<TwistedPoly> slope_factor(const TwistedPoly& p, long N) {
  if (p.ctx.base.kind != RingKind::Kz)
    throw InputError("slope_factor works over Kz");
  if (!p.is_monic()) throw InputError("slope_factor needs a monic input");
  int d = p.degree();
  Weight r1(Rat(1));
  NewtonPolygon np = newton_polygon(p, r1);
  if (np.slopes.size() <= 1) return {p};

  Rat s1 = np.slopes.front().first;  // most negative, exact despite the cap
  int k = np.slopes.front().second;
  assert(s1 < 0);
  long delta = 1;
  if (auto dl = den_as_long(s1)) delta = *dl;
  long h = lcm_long(p.ctx.base.h, delta);
  Rat zcap = Rat(N) + (-s1) * d + 2;

  std::vector<PuiseuxPoly> P(d + 1);
  for (int i = 0; i <= d; ++i) {
    P[i] = laurent_expand(p.c[i], zcap);
    P[i].h = lcm_long(P[i].h, h);
  }

  // Initial forms: A from the lowest hull segment, B = T^{d-k}.
  auto zmono = [&](const Rat& c, const Rat& e) {
    return poly_monomial(c, Exp(e, Rat(0)), 1, {true, false}, h);
  };
  std::vector<Rat> abar(k + 1);
  std::vector<PuiseuxPoly> A(k + 1, poly_zero(1, {true, false}, h));
  for (int t = 0; t <= k; ++t) {
    int i = d - k + t;
    Rat line = s1 * (d - i);  // hull value v at index i
    abar[t] = laurent_coeff(P[i], line);
    if (abar[t] != 0) A[t] = zmono(abar[t], line);
  }
  assert(abar[k] == 1 && abar[0] != 0);
  std::vector<PuiseuxPoly> B(d - k + 1, poly_zero(1, {true, false}, h));
  B[d - k] = poly_const(Rat(1));

  // Graded Sylvester matrix of (In(A), T^{d-k}); constant across levels.
  Mat<Rat> syl(d, d);
  for (int t = 0; t < d; ++t) {
    for (int u = 0; u < d - k; ++u) {
      int idx = t - u;
      if (idx >= 0 && idx <= k) syl.at(t, u) = abar[idx];
    }
    int v = t - (d - k);
    if (v >= 0 && v < k) syl.at(t, (d - k) + v) = Rat(1);
  }

  Rat g0 = s1 * d;
  long steps = *num_as_long(rat_ceil((Rat(N) + (-s1) * d + 1) * delta));
  for (long step = 1; step <= steps; ++step) {
    Rat ell = Rat(step) / delta;
    std::vector<PuiseuxPoly> AB = mul_laurent(A, B, zcap);
    std::vector<Rat> e(d);
    bool any = false;
    for (int t = 0; t < d; ++t) {
      PuiseuxPoly diff = poly_sub(P[t], AB[t]);
      e[t] = laurent_coeff(diff, g0 + ell - s1 * t);
      if (e[t] != 0) any = true;
    }
    if (!any) continue;
    auto sol = solve_linear(syl, e);
    assert(sol);
    for (int u = 0; u < d - k; ++u)
      if ((*sol)[u] != 0)
        B[u] = poly_add(B[u], zmono((*sol)[u], s1 * (d - k - u) + ell));
    for (int v = 0; v < k; ++v)
      if ((*sol)[(d - k) + v] != 0)
        A[v] = poly_add(A[v], zmono((*sol)[(d - k) + v], s1 * (k - v) + ell));
  }

  // Verify the split to precision N.
  std::vector<PuiseuxPoly> AB = mul_laurent(A, B, zcap);
  for (int t = 0; t <= d; ++t) {
    PuiseuxPoly diff = poly_sub(P[t], AB[t]);
    for (const auto& [ex, c] : diff.terms)
      if (ex.e[0] < N)
        throw BudgetExhausted("slope_factor",
                              "precision " + std::to_string(N) +
                                  " too low for a clean split");
  }

  auto to_twisted = [&](const std::vector<PuiseuxPoly>& c) {
    std::vector<RationalFunction> rf;
    rf.reserve(c.size());
    for (const auto& f : c) rf.emplace_back(f);
    DerivationContext ctx = p.ctx;
    ctx.base.h = lcm_long(ctx.base.h, h);
    return twisted_make(std::move(rf), ctx);
  };
  std::vector<TwistedPoly> out{to_twisted(A)};
  for (TwistedPoly& f : slope_factor(to_twisted(B), N))
    out.push_back(std::move(f));
  return out;
}

}  // namespace diffmod
