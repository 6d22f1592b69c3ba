#include "diffmod/rat.hpp"

#include <numeric>

#include "diffmod/errors.hpp"

namespace diffmod {

ExtensionRequired::ExtensionRequired(std::string ctx, std::vector<Rat> poly)
    : DiffmodError("extension of Q required in " + ctx),
      min_poly(std::move(poly)),
      context(std::move(ctx)) {}

BudgetExhausted::BudgetExhausted(std::string which, const std::string& msg)
    : DiffmodError("budget '" + which + "' exhausted: " + msg),
      budget(std::move(which)) {}

std::optional<Rat> rat_from_string(const std::string& s) {
  if (s.empty()) return std::nullopt;
  // mpq set_str accepts forms like "3/4" and "-12"; reject anything with
  // whitespace or an empty numerator/denominator ourselves first.
  std::string t;
  t.reserve(s.size());
  for (char c : s) {
    if (c == ' ' || c == '\t') continue;
    t.push_back(c);
  }
  if (t.empty()) return std::nullopt;
  std::size_t slash = t.find('/');
  auto digits_ok = [](const std::string& part, bool sign_ok) {
    if (part.empty()) return false;
    std::size_t i = 0;
    if (sign_ok && (part[0] == '-' || part[0] == '+')) i = 1;
    if (i == part.size()) return false;
    for (; i < part.size(); ++i)
      if (part[i] < '0' || part[i] > '9') return false;
    return true;
  };
  if (slash == std::string::npos) {
    if (!digits_ok(t, true)) return std::nullopt;
  } else {
    if (!digits_ok(t.substr(0, slash), true)) return std::nullopt;
    if (!digits_ok(t.substr(slash + 1), false)) return std::nullopt;
  }
  Rat q;
  if (q.set_str(t, 10) != 0) return std::nullopt;
  if (q.get_den() == 0) return std::nullopt;
  q.canonicalize();
  return q;
}

std::string rat_to_string(const Rat& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

bool is_integer(const Rat& q) { return q.get_den() == 1; }

Rat rat_floor(const Rat& q) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return Rat(f);
}

Rat rat_ceil(const Rat& q) {
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return Rat(c);
}

Rat rat_frac(const Rat& q) { return q - rat_floor(q); }

std::optional<long> den_as_long(const Rat& q) {
  if (!q.get_den().fits_slong_p()) return std::nullopt;
  return q.get_den().get_si();
}

std::optional<long> num_as_long(const Rat& q) {
  if (!q.get_num().fits_slong_p()) return std::nullopt;
  return q.get_num().get_si();
}

long lcm_long(long a, long b) { return std::lcm(a, b); }

namespace {

// Evaluate integer polynomial at p/q scaled by q^deg: sum c_i p^i q^(n-i).
mpz_class eval_scaled(const std::vector<mpz_class>& c, const mpz_class& p,
                      const mpz_class& q) {
  mpz_class acc = 0;
  mpz_class qpow = 1;
  std::vector<mpz_class> qpows(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    qpows[c.size() - 1 - i] = qpow;
    qpow *= q;
  }
  mpz_class ppow = 1;
  for (std::size_t i = 0; i < c.size(); ++i) {
    acc += c[i] * ppow * qpows[i];
    ppow *= p;
  }
  return acc;
}

std::vector<mpz_class> divisors(mpz_class n) {
  n = abs(n);
  std::vector<mpz_class> out;
  if (n == 0) return out;
  for (mpz_class d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      if (d * d != n) out.push_back(n / d);
    }
    // Guard against huge constant terms: fall back to small divisors only.
    if (out.size() > 4096) break;
  }
  return out;
}

}  // namespace

std::vector<Rat> rational_roots(const std::vector<Rat>& coeffs,
                                std::vector<Rat>* residual) {
  // Strip leading zeros (highest-degree side).
  std::vector<Rat> c = coeffs;
  while (!c.empty() && c.back() == 0) c.pop_back();
  std::vector<Rat> roots;
  if (c.size() <= 1) {
    if (residual) *residual = {Rat(1)};
    return roots;
  }
  // Factor out T^k for trailing zero coefficients: roots at 0.
  std::size_t k = 0;
  while (k < c.size() && c[k] == 0) ++k;
  for (std::size_t i = 0; i < k; ++i) roots.push_back(Rat(0));
  c.erase(c.begin(), c.begin() + static_cast<long>(k));

  while (c.size() > 1) {
    // Clear denominators and content to a primitive integer polynomial.
    mpz_class den_lcm = 1;
    for (const Rat& q : c)
      mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(),
              q.get_den().get_mpz_t());
    std::vector<mpz_class> ic(c.size());
    mpz_class content = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      Rat scaled = c[i] * Rat(den_lcm);
      ic[i] = scaled.get_num();
      mpz_gcd(content.get_mpz_t(), content.get_mpz_t(), ic[i].get_mpz_t());
    }
    if (content > 1)
      for (auto& z : ic) z /= content;

    bool found = false;
    for (const mpz_class& p0 : divisors(ic.front())) {
      if (found) break;
      for (const mpz_class& q0 : divisors(ic.back())) {
        if (found) break;
        for (int sign = 1; sign >= -1; sign -= 2) {
          mpz_class p = p0 * sign;
          mpz_class g;
          mpz_gcd(g.get_mpz_t(), p.get_mpz_t(), q0.get_mpz_t());
          if (g != 1) continue;
          if (eval_scaled(ic, p, q0) == 0) {
            Rat root(p, q0);
            root.canonicalize();
            roots.push_back(root);
            // Synthetic division of c by (T - root), exact.
            std::vector<Rat> next(c.size() - 1);
            Rat carry = c.back();
            for (std::size_t i = c.size() - 1; i >= 1; --i) {
              next[i - 1] = carry;
              carry = c[i - 1] + carry * root;
            }
            // carry is the remainder; a true root leaves zero.
            c = std::move(next);
            found = true;
            break;
          }
        }
      }
    }
    if (!found) break;
  }

  if (residual) {
    // Normalize the residual to monic form.
    std::vector<Rat> r = c;
    if (!r.empty() && r.back() != 0 && r.back() != 1) {
      Rat lead = r.back();
      for (auto& q : r) q /= lead;
    }
    if (r.empty()) r = {Rat(1)};
    *residual = r;
  }
  return roots;
}

}  // namespace diffmod
