#include "diffmod/module.hpp"

#include "diffmod/errors.hpp"

namespace diffmod {

std::string ring_kind_name(RingKind k) {
  switch (k) {
    case RingKind::R21: return "R21";
    case RingKind::R22: return "R22";
    default: return "Kz";
  }
}

namespace {

// Rebuild a polynomial under the shape of `base`, validating pole use.
PuiseuxPoly with_ring_shape(const PuiseuxPoly& f, const BaseRing& base) {
  PuiseuxPoly out = poly_zero(base.arity(), base.pole_ok(),
                              lcm_long(f.h, base.h));
  out.terms = f.terms;
  poly_validate(out);
  return out;
}

Mat<PuiseuxPoly> derive_entrywise(const Mat<PuiseuxPoly>& m, int var,
                                  bool theta) {
  return map_entries(m, [&](const PuiseuxPoly& f) {
    return theta ? poly_theta(f, var) : poly_partial(f, var);
  });
}

void require_same_base(const DiffModule& a, const DiffModule& b) {
  if (!(a.base == b.base)) throw InputError("base ring mismatch");
}

}  // namespace

DiffModule e_phi(const PuiseuxPoly& phi, const BaseRing& base) {
  DiffModule m;
  m.base = base;
  m.base.h = lcm_long(base.h, phi.h);
  m.rank = 1;
  PuiseuxPoly f = with_ring_shape(phi, m.base);
  if (base.kind == RingKind::Kz) {
    Mat<PuiseuxPoly> n(1, 1);
    n.at(0, 0) = poly_theta(f, 0);
    m.N.push_back(std::move(n));
  } else {
    for (int i = 0; i < 2; ++i) {
      Mat<PuiseuxPoly> n(1, 1);
      n.at(0, 0) = poly_partial(f, i);
      m.N.push_back(std::move(n));
    }
  }
  m.sum_phis = {f};
  m.sum_ranks = {1};
  return m;
}

DiffModule construct_tensor(const DiffModule& a, const DiffModule& b) {
  require_same_base(a, b);
  DiffModule m;
  m.base = a.base;
  m.rank = a.rank * b.rank;
  Mat<PuiseuxPoly> ia = Mat<PuiseuxPoly>::identity(a.rank);
  Mat<PuiseuxPoly> ib = Mat<PuiseuxPoly>::identity(b.rank);
  for (std::size_t i = 0; i < a.N.size(); ++i)
    m.N.push_back(kron(a.N[i], ib) + kron(ia, b.N[i]));
  if (!a.sum_phis.empty() && !b.sum_phis.empty()) {
    for (std::size_t i = 0; i < a.sum_phis.size(); ++i)
      for (std::size_t j = 0; j < b.sum_phis.size(); ++j) {
        m.sum_phis.push_back(poly_add(a.sum_phis[i], b.sum_phis[j]));
        m.sum_ranks.push_back(a.sum_ranks[i] * b.sum_ranks[j]);
      }
  }
  return m;
}

DiffModule construct_dual(const DiffModule& a) {
  DiffModule m;
  m.base = a.base;
  m.rank = a.rank;
  for (const auto& n : a.N) m.N.push_back(-transpose(n));
  for (const auto& phi : a.sum_phis) m.sum_phis.push_back(poly_neg(phi));
  m.sum_ranks = a.sum_ranks;
  return m;
}

DiffModule construct_end(const DiffModule& a) {
  return construct_tensor(construct_dual(a), a);
}

DiffModule construct_direct_sum(const DiffModule& a, const DiffModule& b) {
  require_same_base(a, b);
  DiffModule m;
  m.base = a.base;
  m.rank = a.rank + b.rank;
  for (std::size_t i = 0; i < a.N.size(); ++i)
    m.N.push_back(block_diag<PuiseuxPoly>({a.N[i], b.N[i]}));
  if (!a.sum_phis.empty() && !b.sum_phis.empty()) {
    m.sum_phis = a.sum_phis;
    m.sum_phis.insert(m.sum_phis.end(), b.sum_phis.begin(), b.sum_phis.end());
    m.sum_ranks = a.sum_ranks;
    m.sum_ranks.insert(m.sum_ranks.end(), b.sum_ranks.begin(),
                       b.sum_ranks.end());
  }
  return m;
}

bool check_flat(const DiffModule& m) {
  if (m.base.kind == RingKind::Kz) return true;
  Mat<PuiseuxPoly> lhs = derive_entrywise(m.N[1], 0, false) -
                         derive_entrywise(m.N[0], 1, false) +
                         m.N[0] * m.N[1] - m.N[1] * m.N[0];
  return lhs.is_zero();
}

DiffModule pullback_ramified(const DiffModule& m, long h_prime) {
  if (h_prime < 1) throw InputError("ramification index must be >= 1");
  DiffModule out = m;
  out.base.h = lcm_long(m.base.h, h_prime);
  for (auto& n : out.N)
    n = map_entries(n, [&](const PuiseuxPoly& f) {
      return diffmod::ramify(f, out.base.h);
    });
  for (auto& phi : out.sum_phis) phi = diffmod::ramify(phi, out.base.h);
  return out;
}

DiffModule pullback_center(const DiffModule& m, const PuiseuxPoly& z, long h) {
  if (m.base.kind != RingKind::R21)
    throw InputError("recentering is defined over R21");
  DiffModule out;
  out.base = m.base;
  out.base.h = lcm_long(lcm_long(m.base.h, z.h), h);
  out.rank = m.rank;
  auto sub = [&](const PuiseuxPoly& f) {
    return substitute_center(f, z, out.base.h);
  };
  Mat<PuiseuxPoly> n1 = map_entries(m.N[0], sub);
  Mat<PuiseuxPoly> n2 = map_entries(m.N[1], sub);
  PuiseuxPoly zp = poly_partial(z, 0);
  out.N.push_back(n1 + map_entries(n2, [&](const PuiseuxPoly& f) {
                    return poly_mul(zp, f);
                  }));
  out.N.push_back(n2);
  out.label = m.label;
  for (const auto& phi : m.sum_phis) out.sum_phis.push_back(sub(phi));
  out.sum_ranks = m.sum_ranks;
  return out;
}

DiffModule pullback_monomial(const DiffModule& m,
                             const std::array<std::array<long, 2>, 2>& mat,
                             const BaseRing& target) {
  if (m.base.kind == RingKind::Kz)
    throw InputError("monomial pullback needs a 2-variable base");
  long det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0];
  if (det != 1 && det != -1)
    throw InputError("monomial substitution must be unimodular");
  auto sub = [&](const PuiseuxPoly& f) {
    return substitute_monomial(f, mat, {true, true});
  };
  // theta matrices transform by integer combinations.
  Mat<PuiseuxPoly> t1 = map_entries(theta_matrix(m, 0), sub);
  Mat<PuiseuxPoly> t2 = map_entries(theta_matrix(m, 1), sub);
  auto comb = [&](long c1, long c2) {
    return map_entries(t1, [&](const PuiseuxPoly& f) {
             return poly_scal(Rat(c1), f);
           }) +
           map_entries(t2, [&](const PuiseuxPoly& f) {
             return poly_scal(Rat(c2), f);
           });
  };
  Mat<PuiseuxPoly> tp1 = comb(mat[0][0], mat[1][0]);
  Mat<PuiseuxPoly> tp2 = comb(mat[0][1], mat[1][1]);

  DiffModule out;
  out.base = target;
  out.base.h = lcm_long(target.h, m.base.h);
  out.rank = m.rank;
  for (int var = 0; var < 2; ++var) {
    Exp e;
    e.e[var] = Rat(-1);
    PuiseuxPoly inv = poly_monomial(Rat(1), e, 2, {true, true}, 1);
    const Mat<PuiseuxPoly>& t = var == 0 ? tp1 : tp2;
    out.N.push_back(map_entries(t, [&](const PuiseuxPoly& f) {
      return with_ring_shape(poly_mul(f, inv), out.base);
    }));
  }
  for (const auto& phi : m.sum_phis) out.sum_phis.push_back(sub(phi));
  out.sum_ranks = m.sum_ranks;
  return out;
}

Mat<PuiseuxPoly> theta_matrix(const DiffModule& m, int var) {
  if (m.base.kind == RingKind::Kz) {
    if (var != 0) throw InputError("Kz has a single derivation");
    return m.N[0];  // stored action already is z d/dz
  }
  Exp e;
  e.e[var] = Rat(1);
  PuiseuxPoly xi = poly_monomial(Rat(1), e, 2, m.base.pole_ok(), 1);
  return map_entries(m.N[var],
                     [&](const PuiseuxPoly& f) { return poly_mul(xi, f); });
}

}  // namespace diffmod
