#include "diffmod/pl.hpp"

#include <algorithm>
#include <cassert>

#include "diffmod/errors.hpp"

namespace diffmod {

PLFunction pl_make(std::vector<AffineFunctional> parts, Cone domain) {
  if (parts.empty()) throw InputError("PLFunction needs at least one part");
  PLFunction f{std::move(parts), std::move(domain)};
  return pl_canonicalize(f);
}

PLFunction pl_const(const Rat& c, Cone domain) {
  return PLFunction{{AffineFunctional(Rat(0), Rat(0), c)}, std::move(domain)};
}

Rat pl_eval(const PLFunction& f, const Weight& r) {
  Rat best = f.parts.front().eval(r);
  for (std::size_t i = 1; i < f.parts.size(); ++i)
    best = std::max(best, f.parts[i].eval(r));
  return best;
}

Rat diffpl_eval(const DiffPL& f, const Weight& r) {
  return pl_eval(f.pos, r) - pl_eval(f.neg, r);
}

PLFunction pl_sum(const PLFunction& f, const PLFunction& g) {
  std::vector<AffineFunctional> parts;
  parts.reserve(f.parts.size() * g.parts.size());
  for (const auto& p : f.parts)
    for (const auto& q : g.parts)
      parts.emplace_back(p.a1 + q.a1, p.a2 + q.a2, p.c + q.c);
  return pl_make(std::move(parts), f.domain);
}

PLFunction pl_max(const PLFunction& f, const PLFunction& g) {
  std::vector<AffineFunctional> parts = f.parts;
  parts.insert(parts.end(), g.parts.begin(), g.parts.end());
  return pl_make(std::move(parts), f.domain);
}

PLFunction pl_scale(const Rat& c, const PLFunction& f) {
  if (c < 0) throw InputError("pl_scale needs a nonnegative scalar");
  if (c == 0) return pl_const(Rat(0), f.domain);
  std::vector<AffineFunctional> parts;
  for (const auto& p : f.parts) parts.emplace_back(c * p.a1, c * p.a2, c * p.c);
  return PLFunction{std::move(parts), f.domain};
}

// ---- exact feasibility ------------------------------------------------

namespace {

struct Bound {
  bool has = false;
  Rat value{0};
  bool strict = false;
};

// Tighten a lower bound.
void raise(Bound& b, const Rat& v, bool strict) {
  if (!b.has || v > b.value) {
    b.has = true;
    b.value = v;
    b.strict = strict;
  } else if (v == b.value && strict) {
    b.strict = true;
  }
}

// Tighten an upper bound.
void lower(Bound& b, const Rat& v, bool strict) {
  if (!b.has || v < b.value) {
    b.has = true;
    b.value = v;
    b.strict = strict;
  } else if (v == b.value && strict) {
    b.strict = true;
  }
}

// Point of the 1-D set {lo <? t <? hi}, if any.
std::optional<Rat> interval_point(const Bound& lo, const Bound& hi) {
  if (lo.has && hi.has) {
    if (lo.value > hi.value) return std::nullopt;
    if (lo.value == hi.value) {
      if (lo.strict || hi.strict) return std::nullopt;
      return lo.value;
    }
    return (lo.value + hi.value) / 2;
  }
  if (lo.has) return lo.strict ? Rat(lo.value + 1) : lo.value;
  if (hi.has) return hi.strict ? Rat(hi.value - 1) : hi.value;
  return Rat(0);
}

// One-variable affine constraint p*t + q >= 0 (or > 0).
struct Lin1 {
  Rat p, q;
  bool strict;
};

std::optional<Rat> solve_1d(const std::vector<Lin1>& cons) {
  Bound lo, hi;
  for (const auto& c : cons) {
    if (c.p == 0) {
      if (c.strict ? !(c.q > 0) : !(c.q >= 0)) return std::nullopt;
      continue;
    }
    Rat bound = -c.q / c.p;
    if (c.p > 0)
      raise(lo, bound, c.strict);
    else
      lower(hi, bound, c.strict);
  }
  return interval_point(lo, hi);
}

}  // namespace

std::optional<Weight> cone_feasible_point(
    const Cone& domain, const std::vector<AffineFunctional>& constraints,
    const std::vector<bool>& strict) {
  assert(constraints.size() == strict.size());
  struct Row {
    Rat a1, a2, c;
    bool strict;
  };
  std::vector<Row> rows;
  rows.push_back({Rat(1), Rat(0), Rat(0), false});  // r1 >= 0
  rows.push_back({Rat(0), Rat(1), Rat(0), false});  // r2 >= 0
  for (const auto& h : domain.halfplanes)
    rows.push_back({h[0], h[1], Rat(0), false});
  for (std::size_t i = 0; i < constraints.size(); ++i)
    rows.push_back({constraints[i].a1, constraints[i].a2, constraints[i].c,
                    strict[i]});

  // Eliminate r2. Bound lines are r2-bounds as affine functions of r1.
  struct Line {
    Rat slope, icpt;
    bool strict;
  };
  std::vector<Line> lowers, uppers;
  std::vector<Lin1> one_d;
  for (const auto& r : rows) {
    if (r.a2 == 0) {
      one_d.push_back({r.a1, r.c, r.strict});
      continue;
    }
    Line l{-r.a1 / r.a2, -r.c / r.a2, r.strict};
    if (r.a2 > 0)
      lowers.push_back(l);
    else
      uppers.push_back(l);
  }
  for (const auto& lo : lowers)
    for (const auto& up : uppers)
      one_d.push_back({up.slope - lo.slope, up.icpt - lo.icpt,
                       lo.strict || up.strict});

  auto r1 = solve_1d(one_d);
  if (!r1) return std::nullopt;

  Bound lo, hi;
  for (const auto& l : lowers) raise(lo, l.slope * *r1 + l.icpt, l.strict);
  for (const auto& u : uppers) lower(hi, u.slope * *r1 + u.icpt, u.strict);
  auto r2 = interval_point(lo, hi);
  if (!r2) return std::nullopt;  // cannot happen after elimination
  return Weight(*r1, *r2);
}

// ---- canonical form ----------------------------------------------------

namespace {

// Point where `part` strictly beats every functional in `others`, or nullopt.
std::optional<Weight> strict_win_point(
    const Cone& domain, const AffineFunctional& part,
    const std::vector<AffineFunctional>& others) {
  std::vector<AffineFunctional> cons;
  std::vector<bool> strict;
  for (const auto& g : others) {
    cons.emplace_back(part.a1 - g.a1, part.a2 - g.a2, part.c - g.c);
    strict.push_back(true);
  }
  return cone_feasible_point(domain, cons, strict);
}

}  // namespace

PLFunction pl_canonicalize(const PLFunction& f) {
  std::vector<AffineFunctional> parts = f.parts;
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  if (parts.size() <= 1) return PLFunction{std::move(parts), f.domain};

  std::vector<bool> kept(parts.size(), true);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::vector<AffineFunctional> others;
    for (std::size_t j = 0; j < parts.size(); ++j)
      if (j != i && kept[j]) others.push_back(parts[j]);
    if (others.empty()) break;
    if (!strict_win_point(f.domain, parts[i], others)) kept[i] = false;
  }
  std::vector<AffineFunctional> out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (kept[i]) out.push_back(parts[i]);
  return PLFunction{std::move(out), f.domain};
}

LinearityResult is_linear_on_cone(const PLFunction& f) {
  PLFunction c = pl_canonicalize(f);
  LinearityResult res;
  if (c.parts.size() == 1) {
    res.linear = true;
    res.functional = c.parts.front();
    return res;
  }
  res.linear = false;
  // Each survivor has a nonempty strict-win region; exhibit two of them.
  for (int k = 0; k < 2; ++k) {
    std::vector<AffineFunctional> others;
    for (std::size_t j = 0; j < c.parts.size(); ++j)
      if (j != static_cast<std::size_t>(k)) others.push_back(c.parts[j]);
    auto w = strict_win_point(c.domain, c.parts[k], others);
    assert(w);
    res.witness[k] = *w;
  }
  return res;
}

bool pl_equal(const PLFunction& f, const PLFunction& g) {
  PLFunction cf = pl_canonicalize(f), cg = pl_canonicalize(g);
  return cf.parts == cg.parts;
}

// ---- segment restriction -------------------------------------------------

Rat Piecewise1D::eval(const Rat& t) const {
  if (t < knots.front() || t > knots.back())
    throw InputError("Piecewise1D::eval outside the parameter range");
  std::size_t i = 0;
  while (i + 2 < knots.size() && t >= knots[i + 1]) ++i;
  const Rat& t0 = knots[i];
  const Rat& t1 = knots[i + 1];
  return values[i] + (values[i + 1] - values[i]) * (t - t0) / (t1 - t0);
}

std::vector<Rat> Piecewise1D::slopes() const {
  std::vector<Rat> out;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    out.push_back((values[i + 1] - values[i]) / (knots[i + 1] - knots[i]));
  return out;
}

std::vector<Rat> Piecewise1D::breakpoints() const {
  std::vector<Rat> out;
  auto s = slopes();
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i] != s[i + 1]) out.push_back(knots[i + 1]);
  return out;
}

namespace {

struct EnvLine {
  Rat slope, icpt;
  Rat at(const Rat& t) const { return slope * t + icpt; }
};

// Upper envelope of lines over [t0, t1], exact.
Piecewise1D upper_envelope(std::vector<EnvLine> lines, const Rat& t0,
                           const Rat& t1) {
  // Per slope keep only the highest intercept.
  std::sort(lines.begin(), lines.end(), [](const EnvLine& a, const EnvLine& b) {
    if (a.slope != b.slope) return a.slope < b.slope;
    return a.icpt > b.icpt;
  });
  lines.erase(std::unique(lines.begin(), lines.end(),
                          [](const EnvLine& a, const EnvLine& b) {
                            return a.slope == b.slope;
                          }),
              lines.end());

  Piecewise1D out;
  // Active line at t0: max value, ties to the larger slope (wins just after).
  std::size_t cur = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    Rat vi = lines[i].at(t0), vc = lines[cur].at(t0);
    if (vi > vc || (vi == vc && lines[i].slope > lines[cur].slope)) cur = i;
  }
  Rat t = t0;
  out.knots.push_back(t0);
  out.values.push_back(lines[cur].at(t0));
  while (true) {
    // Earliest overtake by a steeper line.
    std::optional<Rat> next;
    std::size_t who = cur;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].slope <= lines[cur].slope) continue;
      Rat cross = (out.values.back() - lines[i].at(t)) /
                  (lines[i].slope - lines[cur].slope);
      Rat tc = t + cross;
      if (tc <= t || tc >= t1) continue;
      if (!next || tc < *next ||
          (tc == *next && lines[i].slope > lines[who].slope)) {
        next = tc;
        who = i;
      }
    }
    if (!next) break;
    t = *next;
    out.knots.push_back(t);
    out.values.push_back(lines[who].at(t));
    cur = who;
  }
  out.knots.push_back(t1);
  out.values.push_back(lines[cur].at(t1));
  return out;
}

Piecewise1D drop_collinear(const Piecewise1D& f) {
  Piecewise1D out;
  std::size_t n = f.knots.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && i + 1 < n) {
      Rat left = (f.values[i] - f.values[i - 1]) / (f.knots[i] - f.knots[i - 1]);
      Rat right =
          (f.values[i + 1] - f.values[i]) / (f.knots[i + 1] - f.knots[i]);
      if (left == right) continue;
    }
    out.knots.push_back(f.knots[i]);
    out.values.push_back(f.values[i]);
  }
  return out;
}

std::vector<EnvLine> segment_lines(const PLFunction& f, const Weight& a,
                                   const Weight& b, const Rat& t0,
                                   const Rat& t1) {
  std::vector<EnvLine> lines;
  Rat span = t1 - t0;
  for (const auto& p : f.parts) {
    Rat va = p.eval(a), vb = p.eval(b);
    Rat slope = (vb - va) / span;
    lines.push_back({slope, va - slope * t0});
  }
  return lines;
}

}  // namespace

Piecewise1D restrict_to_segment(const PLFunction& f, const Weight& a,
                                const Weight& b, const Rat& t0,
                                const Rat& t1) {
  if (!(t0 < t1)) throw InputError("restrict_to_segment needs t0 < t1");
  return drop_collinear(upper_envelope(segment_lines(f, a, b, t0, t1), t0, t1));
}

Piecewise1D restrict_to_segment(const DiffPL& f, const Weight& a,
                                const Weight& b, const Rat& t0,
                                const Rat& t1) {
  return pw_sub(restrict_to_segment(f.pos, a, b, t0, t1),
                restrict_to_segment(f.neg, a, b, t0, t1));
}

Piecewise1D pw_sub(const Piecewise1D& a, const Piecewise1D& b) {
  if (a.knots.front() != b.knots.front() || a.knots.back() != b.knots.back())
    throw InputError("pw_sub needs matching parameter ranges");
  std::vector<Rat> knots = a.knots;
  knots.insert(knots.end(), b.knots.begin(), b.knots.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  Piecewise1D out;
  out.knots = knots;
  for (const Rat& t : knots) out.values.push_back(a.eval(t) - b.eval(t));
  return drop_collinear(out);
}

bool pw_equal(const Piecewise1D& a, const Piecewise1D& b) {
  Piecewise1D ca = drop_collinear(a), cb = drop_collinear(b);
  return ca.knots == cb.knots && ca.values == cb.values;
}

}  // namespace diffmod
