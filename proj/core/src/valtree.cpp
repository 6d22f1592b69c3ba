#include "diffmod/valtree.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>

#include "diffmod/errors.hpp"
#include "diffmod/twisted.hpp"

namespace diffmod {

namespace {

constexpr int kRawEvalRankMax = 8;

Rat rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }

long exponent_denominator(const Rat& e) {
  auto d = den_as_long(e);
  if (!d) throw InputError("denominator exceeds the machine range");
  return *d;
}

PuiseuxPoly x_monomial(const Rat& c, const Rat& e) {
  return poly_monomial(c, Exp(e, Rat(0)), 2, {false, false},
                       exponent_denominator(e));
}

// R22 shell around y-regular data, restated over R21.
DiffModule restate_r21(const DiffModule& m) {
  DiffModule out = m;
  out.base.kind = RingKind::R21;
  auto reshape = [&](PuiseuxPoly f) {
    f.pole_ok = out.base.pole_ok();
    return f;
  };
  for (auto& n : out.N)
    n = map_entries(n, [&](const PuiseuxPoly& f) { return reshape(f); });
  for (auto& phi : out.sum_phis) phi = reshape(phi);
  return out;
}

bool y_regular(const DiffModule& m) {
  for (const auto& n : m.N)
    for (const PuiseuxPoly& entry : n.a)
      for (const auto& [e, c] : entry.terms)
        if (e.e[1] < 0) return false;
  for (const auto& phi : m.sum_phis)
    for (const auto& [e, c] : phi.terms)
      if (e.e[1] < 0) return false;
  return true;
}

bool is_presented(const DiffModule& m) {
  if (m.sum_phis.empty() || m.sum_phis.size() != m.sum_ranks.size())
    return false;
  int total = 0;
  for (int r : m.sum_ranks) total += r;
  return total == m.rank;
}


}  // namespace

DiscPoint disc_point(const PuiseuxPoly& z, const Rat& q) {
  if (q < 0) throw InputError("disc point radius parameter must be nonnegative");
  DiscPoint out;
  out.q = q;
  long h = 1;
  std::map<Exp, Rat> kept;
  for (const auto& [e, c] : z.terms) {
    if (c == 0) continue;
    if (z.arity == 2 && e.e[1] != 0)
      throw InputError("disc point centers involve x only");
    if (e.e[0] < 0)
      throw InputError("disc point centers must have nonnegative exponents");
    // |c x^e| = e^{-e} <= r exactly when e >= q: such terms do not move the
    // seminorm and are dropped for the minimal representative.
    if (e.e[0] >= q) continue;
    kept[Exp(e.e[0], Rat(0))] = c;
    h = lcm_long(h, exponent_denominator(e.e[0]));
  }
  out.z = poly_zero(2, {false, false}, h);
  out.z.terms = std::move(kept);
  return out;
}

DiscPoint gauss_point() {
  return disc_point(poly_zero(2, {false, false}, 1), Rat(0));
}

bool same_point(const DiscPoint& a, const DiscPoint& b) {
  return a.q == b.q && a.z.terms == b.z.terms;
}

bool dominates(const DiscPoint& a, const DiscPoint& b) {
  if (a.q > b.q) return false;
  PuiseuxPoly diff = poly_sub(b.z, a.z);
  return diff.is_zero() || min_exponent(diff, 0) >= a.q;
}

int degree(const DiscPoint& a) {
  long d = 1;
  for (const auto& [e, c] : a.z.terms)
    d = lcm_long(d, exponent_denominator(e.e[0]));
  return static_cast<int>(d);
}

DiscPoint path_point(const DiscPoint& b, const Rat& q) {
  if (q > b.q)
    throw InputError("path points live at radius at least the target's");
  return disc_point(b.z, q);
}

std::string point_key(const DiscPoint& a) {
  return poly_to_string(a.z, VarNames{{"x", "y"}}) + "@" + rat_to_string(a.q);
}

Rat eval_irreg_at(const DiffModule& m, const DiscPoint& alpha) {
  if (m.base.kind != RingKind::R21)
    throw InputError("disc evaluation needs an R21 module");
  DiffModule rec =
      pullback_center(m, alpha.z, lcm_long(m.base.h, alpha.z.h));
  ScaleMultiset sm = scale_multiset_at(rec, Weight(Rat(1), alpha.q));
  Rat total(0);
  for (const Rat& v : sm.logs) total += v;
  return total;
}

MISFunction mis_from_poly(const PuiseuxPoly& p) {
  for (const auto& [e, c] : p.terms)
    if (p.arity == 2 && (!is_integer(e.e[1]) || e.e[1] < 0))
      throw InputError(
          "disc handles need nonnegative integer y-exponents");
  MISFunction f;
  f.kind = MISFunction::Kind::Poly;
  f.P = p;
  return f;
}

MISFunction mis_from_module(const DiffModule& m) {
  if (m.base.kind != RingKind::R21)
    throw InputError("disc evaluation needs an R21 module");
  if (!check_flat(m)) throw InputError("disc evaluation needs a flat module");
  if (!is_presented(m) && m.rank > kRawEvalRankMax) {
    std::ostringstream os;
    os << "rank " << m.rank << " exceeds the raw disc-evaluation bound "
       << kRawEvalRankMax
       << "; present the module as an explicit direct sum of twists";
    throw BudgetExhausted("mis_from_module", os.str());
  }
  MISFunction f;
  f.kind = MISFunction::Kind::Module;
  f.M = m;
  return f;
}

Rat mis_eval(const MISFunction& f, const DiscPoint& alpha) {
  std::string key = point_key(alpha);
  auto it = f.cache.find(key);
  if (it != f.cache.end()) return it->second;
  Rat v(0);
  if (f.kind == MISFunction::Kind::Poly) {
    PuiseuxPoly w =
        substitute_center(f.P, alpha.z, lcm_long(f.P.h, alpha.z.h));
    auto g = gauss_log_norm(w, Weight(Rat(1), alpha.q));
    if (g && *g > 0) v = *g;
  } else if (is_presented(f.M)) {
    for (std::size_t j = 0; j < f.M.sum_phis.size(); ++j) {
      PuiseuxPoly w = substitute_center(f.M.sum_phis[j], alpha.z,
                                        lcm_long(f.M.base.h, alpha.z.h));
      auto g = gauss_log_norm(w, Weight(Rat(1), alpha.q));
      if (g && *g > 0) v += Rat(f.M.sum_ranks[j]) * *g;
    }
    if (f.crosscheck_budget > 0 && f.M.rank <= kRawEvalRankMax) {
      --f.crosscheck_budget;
      if (eval_irreg_at(f.M, alpha) != v)
        throw DiffmodError(
            "presented disc evaluation disagrees with the polygon route at " +
            key);
    }
  } else {
    v = eval_irreg_at(f.M, alpha);
  }
  f.cache.emplace(std::move(key), v);
  return v;
}

std::vector<Rat> residual_polynomial(const PuiseuxPoly& w, const Rat& q) {
  if (w.is_zero()) return {};
  std::optional<Rat> best;
  for (const auto& [e, c] : w.terms) {
    Rat val = -e.e[0] - e.e[1] * q;
    if (!best || val > *best) best = val;
  }
  std::map<long, Rat> by_deg;
  long top = 0;
  for (const auto& [e, c] : w.terms) {
    if (-e.e[0] - e.e[1] * q != *best) continue;
    if (!is_integer(e.e[1]) || e.e[1] < 0)
      throw InputError("residual extraction needs integer y-exponents");
    auto jn = num_as_long(e.e[1]);
    if (!jn) throw InputError("residual y-degree exceeds the machine range");
    long j = *jn;
    by_deg[j] += c;
    top = std::max(top, j);
  }
  std::vector<Rat> coeffs(static_cast<std::size_t>(top) + 1, Rat(0));
  for (const auto& [j, c] : by_deg) coeffs[static_cast<std::size_t>(j)] = c;
  return coeffs;
}

namespace {

// Exact slope machinery along a fixed center. The restriction of an MIS
// function to such a path is convex and piecewise affine with nonpositive
// integer slopes, so a midpoint sitting on a chord certifies affinity and
// dyadic shrinking certifies one-sided slopes.
struct PathEval {
  const MISFunction& f;
  long cap;
  long used = 0;
  int branch_cap = 0;
  int branches = 0;

  Rat at(const PuiseuxPoly& z, const Rat& q) {
    if (++used > cap)
      throw BudgetExhausted("skeleton",
                            "evaluation budget exhausted; raise max_evals");
    return mis_eval(f, disc_point(z, q));
  }
};

void require_slope(const Rat& s) {
  if (!is_integer(s) || s > 0)
    throw DiffmodError(
        "path restriction slope " + rat_to_string(s) +
        " is not a nonpositive integer; the handle is not monotone integral "
        "subharmonic");
}

bool affine_on(PathEval& ev, const PuiseuxPoly& z, const Rat& a, const Rat& b,
               const Rat& fa, const Rat& fb) {
  return ev.at(z, (a + b) / 2) * 2 == fa + fb;
}

Rat right_slope(PathEval& ev, const PuiseuxPoly& z, const Rat& a,
                const Rat& reach, const Rat& fa) {
  Rat delta = reach - a;
  Rat fd = ev.at(z, a + delta);
  while (!affine_on(ev, z, a, a + delta, fa, fd)) {
    delta /= 2;
    fd = ev.at(z, a + delta);
  }
  Rat s = (fd - fa) / delta;
  require_slope(s);
  return s;
}

Rat left_slope(PathEval& ev, const PuiseuxPoly& z, const Rat& reach,
               const Rat& b, const Rat& fb) {
  Rat delta = b - reach;
  Rat fd = ev.at(z, b - delta);
  while (!affine_on(ev, z, b - delta, b, fd, fb)) {
    delta /= 2;
    fd = ev.at(z, b - delta);
  }
  Rat s = (fb - fd) / delta;
  require_slope(s);
  return s;
}

void push_piece(std::vector<EdgePiece>& out, const Rat& a, const Rat& b,
                const Rat& s) {
  if (!out.empty() && out.back().slope == s && out.back().q1 == a) {
    out.back().q1 = b;
    return;
  }
  out.push_back(EdgePiece{a, b, s});
}

// Exact convex reconstruction on [a, b]: certify affinity by a midpoint,
// otherwise intersect the two supporting end lines; the function value at
// the crossing either closes a two-piece answer or splits the interval at
// an interior point that strictly separates the outer true breakpoints.
void reconstruct(PathEval& ev, const PuiseuxPoly& z, const Rat& a,
                 const Rat& b, const Rat& fa, const Rat& fb,
                 std::vector<EdgePiece>& out) {
  if (a == b) return;
  if (affine_on(ev, z, a, b, fa, fb)) {
    Rat s = (fb - fa) / (b - a);
    require_slope(s);
    push_piece(out, a, b, s);
    return;
  }
  Rat sa = right_slope(ev, z, a, b, fa);
  Rat sb = left_slope(ev, z, a, b, fb);
  if (!(sa < sb))
    throw DiffmodError("convex reconstruction found non-increasing slopes");
  Rat t = ((fb - sb * b) - (fa - sa * a)) / (sa - sb);
  if (!(a < t && t < b))
    throw DiffmodError("convex reconstruction lost its bracketing");
  Rat ft = ev.at(z, t);
  Rat cross = fa + sa * (t - a);
  if (ft == cross) {
    push_piece(out, a, t, sa);
    push_piece(out, t, b, sb);
    return;
  }
  reconstruct(ev, z, a, t, fa, ft, out);
  reconstruct(ev, z, t, b, ft, fb, out);
}

struct EdgeProfile {
  std::vector<EdgePiece> pieces;  // strictly decreasing part only
  Rat q_end;
  Rat v_end;
  bool truncated = false;
};

// Follow one fixed center downward from q_from. Unit steps find the first
// certified flat stretch (equal values plus convexity force constancy from
// there on); the decreasing prefix is then reconstructed exactly and
// verified at an interior sample of every piece.
EdgeProfile walk_edge(PathEval& ev, const PuiseuxPoly& z, const Rat& q_from,
                      const Rat& v_from, const Rat& q_max) {
  EdgeProfile out;
  out.q_end = q_from;
  out.v_end = v_from;
  // f >= 0 and nonincreasing downward, so value 0 certifies constancy.
  if (v_from == 0) return out;
  if (q_from >= q_max) {
    out.truncated = true;
    return out;
  }
  Rat q = q_from, v = v_from;
  Rat q_hi;
  bool settled = false;
  while (q < q_max) {
    Rat qn = rat_min(q + 1, q_max);
    Rat vn = ev.at(z, qn);
    if (vn > v)
      throw DiffmodError(
          "handle increases along a descending path; not monotone integral "
          "subharmonic");
    if (vn == v) {
      settled = true;
      q_hi = qn;
      break;
    }
    q = qn;
    v = vn;
  }
  if (!settled) q_hi = q_max;
  std::vector<EdgePiece> pieces;
  reconstruct(ev, z, q_from, q_hi, v_from, ev.at(z, q_hi), pieces);
  // interior sample per piece
  Rat run = v_from;
  for (const EdgePiece& pc : pieces) {
    Rat probe = pc.q0 + (pc.q1 - pc.q0) / 3;
    if (ev.at(z, probe) != run + pc.slope * (probe - pc.q0))
      throw DiffmodError("edge restriction fails verification at q = " +
                         rat_to_string(probe));
    run += pc.slope * (pc.q1 - pc.q0);
  }
  // Convexity makes slopes nondecreasing, so a flat piece can only close
  // the stretch, and any flat piece certifies constancy from its start on.
  bool flat_tail = !pieces.empty() && pieces.back().slope == 0;
  if (flat_tail) pieces.pop_back();
  for (const EdgePiece& pc : pieces) {
    if (pc.slope == 0)
      throw DiffmodError("flat piece inside a decreasing stretch");
    out.v_end += pc.slope * (pc.q1 - pc.q0);
    out.q_end = pc.q1;
  }
  if (!settled && !flat_tail && out.v_end > 0) out.truncated = true;
  out.pieces = std::move(pieces);
  return out;
}

// Continuation coefficients c at (z, q): rational roots of the residual of
// every Laurent numerator that governs the handle's value there. Covers all
// strictly decreasing branches: a drop in the handle forces a drop in the
// governing coefficient norm, whose residual then vanishes at c.
std::vector<Rat> branch_candidates(const MISFunction& f, const PuiseuxPoly& z,
                                   const Rat& q, std::uint64_t seed) {
  std::vector<PuiseuxPoly> ws;
  long h = 1;
  for (const auto& [e, c] : z.terms)
    h = lcm_long(h, exponent_denominator(e.e[0]));
  if (f.kind == MISFunction::Kind::Poly) {
    ws.push_back(substitute_center(f.P, z, lcm_long(f.P.h, h)));
  } else if (is_presented(f.M)) {
    for (const PuiseuxPoly& phi : f.M.sum_phis) {
      PuiseuxPoly w = substitute_center(phi, z, lcm_long(f.M.base.h, h));
      auto g = gauss_log_norm(w, Weight(Rat(1), q));
      if (g && *g > 0) ws.push_back(std::move(w));
    }
  } else {
    DiffModule rec = pullback_center(f.M, z, lcm_long(f.M.base.h, h));
    ScaleMultiset sm = scale_multiset_at(rec, Weight(Rat(1), q));
    int big = 0;
    for (const Rat& s : sm.logs)
      if (s > 0) ++big;
    if (big == 0) return {};
    DerivationContext ctx{rec.base, {Rat(1), q}};
    CyclicResult cy = cyclic_vector(rec, ctx, seed);
    ws.push_back(cy.P.c[static_cast<std::size_t>(rec.rank - big)].num);
  }
  std::vector<Rat> cands;
  for (const PuiseuxPoly& w : ws) {
    std::vector<Rat> coeffs = residual_polynomial(w, q);
    if (coeffs.size() <= 1) continue;
    std::vector<Rat> leftover;
    std::vector<Rat> roots = rational_roots(coeffs, &leftover);
    if (leftover.size() > 1) {
      DiscPoint at = disc_point(z, q);
      throw ExtensionRequired("branch discovery at " + point_key(at),
                              leftover);
    }
    for (const Rat& r : roots)
      if (r != 0) cands.push_back(r);
  }
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  return cands;
}

struct SkeletonBuilder {
  const MISFunction& f;
  SkeletonOptions opts;
  PathEval ev;
  Skeleton sk;

  int add_node(const DiscPoint& p, NodeRole role, const Rat& value) {
    sk.nodes.push_back(SkeletonNode{p, role, degree(p), value});
    return static_cast<int>(sk.nodes.size()) - 1;
  }

  void truncate_note(const PuiseuxPoly& z, const Rat& q) {
    sk.complete = false;
    DiscPoint at = disc_point(z, q);
    if (!sk.note.empty()) sk.note += "; ";
    sk.note += "descent still active at q_max near " + point_key(at);
  }

  // Walks one fixed-center path and recurses into decreasing branches at
  // every slope-change point. Returns whether f strictly decreased.
  bool explore(int from_node, const PuiseuxPoly& z, const Rat& q_from,
               const Rat& v_from) {
    EdgeProfile prof = walk_edge(ev, z, q_from, v_from, opts.q_max);
    if (prof.pieces.empty()) {
      if (prof.truncated) truncate_note(z, q_from);
      return false;
    }
    int cur = from_node;
    Rat v = v_from;
    for (std::size_t i = 0; i < prof.pieces.size(); ++i) {
      const EdgePiece& pc = prof.pieces[i];
      v += pc.slope * (pc.q1 - pc.q0);
      bool last = i + 1 == prof.pieces.size();
      int node = add_node(disc_point(z, pc.q1), NodeRole::Extremity, v);
      sk.edges.push_back(SkeletonEdge{cur, node, {pc}});
      bool descended = false;
      if (last && prof.truncated) {
        truncate_note(z, pc.q1);
      } else if (v > 0) {
        for (const Rat& c : branch_candidates(f, z, pc.q1, opts.seed)) {
          if (++ev.branches > ev.branch_cap)
            throw BudgetExhausted(
                "skeleton", "branch budget exhausted; raise branch_budget");
          PuiseuxPoly zc = poly_add(z, x_monomial(c, pc.q1));
          if (explore(node, zc, pc.q1, v)) descended = true;
        }
      }
      if (!last || descended) sk.nodes[node].role = NodeRole::Joint;
      cur = node;
    }
    return true;
  }
};

}  // namespace

StarSlopes star_slopes(const MISFunction& f, const DiscPoint& alpha,
                       const std::vector<PuiseuxPoly>& branch_centers) {
  if (alpha.q <= 0) throw InputError("slopes at the head are undefined");
  for (std::size_t i = 0; i < branch_centers.size(); ++i) {
    if (!same_point(disc_point(branch_centers[i], alpha.q), alpha))
      throw InputError("branch representative does not pass through the point");
    for (std::size_t j = 0; j < i; ++j) {
      PuiseuxPoly diff = poly_sub(branch_centers[i], branch_centers[j]);
      if (diff.is_zero() || min_exponent(diff, 0) > alpha.q)
        throw InputError("branch representatives must lie on distinct branches");
    }
  }
  PathEval ev{f, 512, 0, 0, 0};
  Rat fq = ev.at(alpha.z, alpha.q);
  StarSlopes out;
  out.incoming =
      left_slope(ev, alpha.z, alpha.q - rat_min(alpha.q, Rat(1)), alpha.q, fq);
  for (const PuiseuxPoly& zc : branch_centers)
    out.outgoing.push_back(right_slope(ev, zc, alpha.q, alpha.q + 1, fq));
  return out;
}

bool subharmonic_check(const MISFunction& f, const DiscPoint& alpha,
                       const std::vector<PuiseuxPoly>& branch_centers) {
  StarSlopes s = star_slopes(f, alpha, branch_centers);
  Rat total(0);
  for (const Rat& o : s.outgoing) total += o;
  return s.incoming <= total;
}

Skeleton skeleton(const MISFunction& f, const SkeletonOptions& opts) {
  SkeletonBuilder b{
      f, opts, PathEval{f, opts.max_evals, 0, opts.branch_budget, 0}, {}};
  PuiseuxPoly z0 = poly_zero(2, {false, false}, 1);
  Rat v0 = b.ev.at(z0, Rat(0));
  int head = b.add_node(gauss_point(), NodeRole::Head, v0);
  b.explore(head, z0, Rat(0), v0);
  return std::move(b.sk);
}

namespace {

void collect_rays(const PLFunction& F, const std::string& src,
                  std::vector<ToroidalRay>& out) {
  PLFunction c = pl_canonicalize(F);
  for (std::size_t i = 0; i < c.parts.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      if (c.parts[i].c != c.parts[j].c) continue;
      Rat d1 = c.parts[i].a2 - c.parts[j].a2;
      Rat d2 = c.parts[j].a1 - c.parts[i].a1;
      if (d1 == 0 || d2 == 0 || (d1 > 0) != (d2 > 0)) continue;
      if (d1 < 0) {
        d1 = -d1;
        d2 = -d2;
      }
      long den = lcm_long(exponent_denominator(d1), exponent_denominator(d2));
      long n1 = *num_as_long(Rat(d1 * den));
      long n2 = *num_as_long(Rat(d2 * den));
      long g = std::gcd(n1, n2);
      n1 /= g;
      n2 /= g;
      // keep only rays where the tie is actually achieved
      Weight w{Rat(n1), Rat(n2)};
      if (pl_eval(c, w) != c.parts[i].eval(w)) continue;
      bool dup = false;
      for (auto& r : out)
        if (r.d1 == n1 && r.d2 == n2) {
          if (r.source.find(src) == std::string::npos) r.source += "+" + src;
          dup = true;
        }
      if (!dup) out.push_back(ToroidalRay{n1, n2, src});
    }
}

struct PlanEntry {
  DiscPoint p;
  std::string role;
  std::string source;
};

void collect_skeleton_points(const Skeleton& sk, const std::string& src,
                             std::map<std::string, PlanEntry>& out) {
  for (const SkeletonNode& n : sk.nodes) {
    if (n.role == NodeRole::Head) continue;
    std::string key = point_key(n.p);
    auto it = out.find(key);
    if (it == out.end()) {
      out.emplace(key,
                  PlanEntry{n.p,
                            n.role == NodeRole::Joint ? "joint" : "extremity",
                            src});
    } else if (it->second.source != src) {
      it->second.source = "both";
      if (n.role == NodeRole::Joint) it->second.role = "joint";
    }
  }
}

}  // namespace

BlowupPlan blowup_plan(const DiffModule& m, const SkeletonOptions& opts) {
  if (m.base.kind == RingKind::Kz)
    throw InputError("blowup planning needs a 2-variable base");
  if (!check_flat(m)) throw InputError("blowup planning needs a flat module");
  BlowupPlan plan;

  DiffModule base_mod = m;
  bool have_points = true;
  if (m.base.kind == RingKind::R22) {
    ProfileOptions po;
    po.with_families = false;
    IrregularityProfile p = irregularity_profile(m, po);
    IrregularityProfile pe = irregularity_profile(construct_end(m), po);
    collect_rays(p.F.back(), "F_d", plan.rays);
    collect_rays(pe.F.back(), "F_d2(End)", plan.rays);
    if (y_regular(m)) {
      base_mod = restate_r21(m);
    } else {
      have_points = false;
      plan.note =
          "module has y-poles; point analysis proceeds per chart after the "
          "toroidal step";
    }
  }

  if (have_points) {
    std::map<std::string, PlanEntry> found;
    for (int pass = 0; pass < 2; ++pass) {
      DiffModule target =
          pass == 0 ? base_mod : construct_end(base_mod);
      MISFunction h = mis_from_module(target);
      Skeleton sk = skeleton(h, opts);
      if (!sk.complete) {
        plan.complete = false;
        if (!plan.note.empty()) plan.note += "; ";
        plan.note += sk.note;
      }
      collect_skeleton_points(sk, pass == 0 ? "F_d" : "F_d2(End)", found);
    }
    std::vector<PlanEntry> entries;
    for (auto& [key, e] : found) entries.push_back(e);
    std::sort(entries.begin(), entries.end(),
              [](const PlanEntry& a, const PlanEntry& b) {
                if (a.p.q != b.p.q) return a.p.q < b.p.q;
                return point_key(a.p) < point_key(b.p);
              });
    for (const PlanEntry& e : entries) {
      plan.points.push_back(DivisorialValuation{e.p, e.role, e.source});
      plan.strata_hints.push_back(
          "own stratum at crossings of the exceptional divisor for " +
          point_key(e.p));
    }
  }
  return plan;
}

std::array<DiffModule, 2> blowup_origin_charts(const DiffModule& m) {
  if (m.base.kind == RingKind::Kz)
    throw InputError("blowup charts need a 2-variable base");
  BaseRing ta{m.base.kind, m.base.h};
  DiffModule a =
      pullback_monomial(m, {{{1, 0}, {1, 1}}}, ta);
  a.label = m.label + " [chart x=x', y=x'y']";
  BaseRing tb{RingKind::R22, m.base.h};
  DiffModule b =
      pullback_monomial(m, {{{1, 1}, {0, 1}}}, tb);
  b.label = m.label + " [chart x=x'y', y=y']";
  return {std::move(a), std::move(b)};
}

}  // namespace diffmod
