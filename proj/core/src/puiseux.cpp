#include "diffmod/puiseux.hpp"

#include <algorithm>
#include <sstream>

namespace diffmod {

namespace {

struct Shape {
  int arity;
  long h;
  std::array<bool, 2> pole_ok;
};

Shape unify(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  return Shape{std::max(a.arity, b.arity), lcm_long(a.h, b.h),
               {a.pole_ok[0] || b.pole_ok[0], a.pole_ok[1] || b.pole_ok[1]}};
}

void insert_term(PuiseuxPoly& f, const Exp& e, const Rat& c) {
  if (c == 0) return;
  auto [it, fresh] = f.terms.emplace(e, c);
  if (!fresh) {
    it->second += c;
    if (it->second == 0) f.terms.erase(it);
  }
}

bool divides_h(const Rat& e, long h) {
  Rat scaled = e * Rat(h);
  return is_integer(scaled);
}

}  // namespace

bool PuiseuxPoly::is_constant() const {
  if (terms.empty()) return true;
  return terms.size() == 1 && terms.begin()->first == Exp();
}

Rat PuiseuxPoly::constant_term() const {
  auto it = terms.find(Exp());
  return it == terms.end() ? Rat(0) : it->second;
}

PuiseuxPoly poly_zero(int arity, std::array<bool, 2> pole_ok, long h) {
  PuiseuxPoly f;
  f.arity = arity;
  f.h = h;
  f.pole_ok = pole_ok;
  return f;
}

PuiseuxPoly poly_const(const Rat& c, int arity, std::array<bool, 2> pole_ok) {
  PuiseuxPoly f = poly_zero(arity, pole_ok);
  insert_term(f, Exp(), c);
  return f;
}

PuiseuxPoly poly_monomial(const Rat& coeff, const Exp& e, int arity,
                          std::array<bool, 2> pole_ok, long h) {
  PuiseuxPoly f = poly_zero(arity, pole_ok, h);
  insert_term(f, e, coeff);
  poly_validate(f);
  return f;
}

void poly_validate(const PuiseuxPoly& f) {
  for (const auto& [e, c] : f.terms) {
    if (c == 0) throw InputError("zero coefficient stored");
    for (int i = 0; i < 2; ++i) {
      if (i >= f.arity && e.e[i] != 0)
        throw InputError("exponent in absent variable");
      if (e.e[i] < 0 && !f.pole_ok[i])
        throw InputError("pole in a non-permitted variable");
      if (!divides_h(e.e[i], f.h))
        throw InputError("exponent denominator does not divide h");
    }
  }
}

PuiseuxPoly poly_add(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  Shape s = unify(a, b);
  PuiseuxPoly out = poly_zero(s.arity, s.pole_ok, s.h);
  out.terms = a.terms;
  for (const auto& [e, c] : b.terms) insert_term(out, e, c);
  return out;
}

PuiseuxPoly poly_sub(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  return poly_add(a, poly_neg(b));
}

PuiseuxPoly poly_neg(const PuiseuxPoly& a) {
  PuiseuxPoly out = a;
  for (auto& [e, c] : out.terms) c = -c;
  return out;
}

PuiseuxPoly poly_mul(const PuiseuxPoly& a, const PuiseuxPoly& b) {
  Shape s = unify(a, b);
  PuiseuxPoly out = poly_zero(s.arity, s.pole_ok, s.h);
  for (const auto& [ea, ca] : a.terms)
    for (const auto& [eb, cb] : b.terms)
      insert_term(out, Exp(ea.e[0] + eb.e[0], ea.e[1] + eb.e[1]), ca * cb);
  return out;
}

PuiseuxPoly poly_scal(const Rat& c, const PuiseuxPoly& a) {
  PuiseuxPoly out = poly_zero(a.arity, a.pole_ok, a.h);
  if (c == 0) return out;
  out.terms = a.terms;
  for (auto& [e, v] : out.terms) v *= c;
  return out;
}

PuiseuxPoly poly_pow(const PuiseuxPoly& a, unsigned k) {
  PuiseuxPoly out = poly_const(Rat(1), a.arity, a.pole_ok);
  out.h = a.h;
  PuiseuxPoly base = a;
  while (k > 0) {
    if (k & 1u) out = poly_mul(out, base);
    k >>= 1u;
    if (k) base = poly_mul(base, base);
  }
  return out;
}

std::optional<Rat> gauss_log_norm(const PuiseuxPoly& f, const Weight& r) {
  std::optional<Rat> best;
  for (const auto& [e, c] : f.terms) {
    Rat v = -(r.r[0] * e.e[0] + r.r[1] * e.e[1]);
    if (!best || v > *best) best = v;
  }
  return best;
}

std::vector<std::pair<Exp, Rat>> leading_form(const PuiseuxPoly& f,
                                              const Weight& r) {
  std::vector<std::pair<Exp, Rat>> out;
  auto norm = gauss_log_norm(f, r);
  if (!norm) return out;
  for (const auto& [e, c] : f.terms)
    if (-(r.r[0] * e.e[0] + r.r[1] * e.e[1]) == *norm) out.emplace_back(e, c);
  return out;
}

PuiseuxPoly poly_theta(const PuiseuxPoly& f, int var) {
  PuiseuxPoly out = poly_zero(f.arity, f.pole_ok, f.h);
  for (const auto& [e, c] : f.terms) insert_term(out, e, c * e.e[var]);
  return out;
}

PuiseuxPoly poly_partial(const PuiseuxPoly& f, int var) {
  PuiseuxPoly out = poly_zero(f.arity, f.pole_ok, f.h);
  for (const auto& [e, c] : f.terms) {
    Rat factor = e.e[var];
    if (factor == 0) continue;
    Exp shifted = e;
    shifted.e[var] -= 1;
    insert_term(out, shifted, c * factor);
  }
  return out;
}

Rat min_exponent(const PuiseuxPoly& f, int var) {
  std::optional<Rat> best;
  for (const auto& [e, c] : f.terms)
    if (!best || e.e[var] < *best) best = e.e[var];
  return best.value_or(Rat(0));
}

Rat max_exponent(const PuiseuxPoly& f, int var) {
  std::optional<Rat> best;
  for (const auto& [e, c] : f.terms)
    if (!best || e.e[var] > *best) best = e.e[var];
  return best.value_or(Rat(0));
}

PuiseuxPoly ramify(const PuiseuxPoly& f, long h_prime) {
  if (h_prime < 1) throw InputError("ramification index must be >= 1");
  PuiseuxPoly out = f;
  out.h = lcm_long(f.h, h_prime);
  return out;
}

PuiseuxPoly substitute_center(const PuiseuxPoly& f, const PuiseuxPoly& z,
                              long h) {
  if (!z.terms.empty() && (min_exponent(z, 0) < 0 || min_exponent(z, 1) < 0))
    throw InputError("center must have nonnegative exponents");
  long hh = lcm_long(lcm_long(f.h, z.h), h);
  PuiseuxPoly out = poly_zero(2, {f.pole_ok[0], false}, hh);
  for (const auto& [e, c] : f.terms) {
    const Rat& ydeg = e.e[1];
    if (!is_integer(ydeg) || ydeg < 0)
      throw InputError("recentering requires nonnegative integer y-exponents");
    unsigned b = static_cast<unsigned>(ydeg.get_num().get_ui());
    // (z + u)^b expanded exactly; u is the fresh second variable.
    for (unsigned k = 0; k <= b; ++k) {
      mpz_class binom;
      mpz_bin_uiui(binom.get_mpz_t(), b, k);
      PuiseuxPoly zpow = poly_pow(z, b - k);
      for (const auto& [ez, cz] : zpow.terms) {
        Exp target(e.e[0] + ez.e[0], Rat(static_cast<long>(k)));
        insert_term(out, target, c * cz * Rat(binom));
      }
    }
  }
  return out;
}

PuiseuxPoly substitute_monomial(const PuiseuxPoly& f,
                                const std::array<std::array<long, 2>, 2>& m,
                                std::array<bool, 2> target_pole_ok) {
  PuiseuxPoly out = poly_zero(2, target_pole_ok, f.h);
  for (const auto& [e, c] : f.terms) {
    Exp t(e.e[0] * Rat(m[0][0]) + e.e[1] * Rat(m[1][0]),
          e.e[0] * Rat(m[0][1]) + e.e[1] * Rat(m[1][1]));
    insert_term(out, t, c);
  }
  poly_validate(out);
  return out;
}

PuiseuxPoly substitute_scale(const PuiseuxPoly& f, int var, const Rat& c) {
  if (c == 0) throw InputError("substitute_scale needs a nonzero scalar");
  PuiseuxPoly out = poly_zero(f.arity, f.pole_ok, f.h);
  for (const auto& [e, v] : f.terms) {
    // c^exponent is rational only for integer exponents.
    if (!is_integer(e.e[var]))
      throw InputError("substitute_scale on a fractional exponent");
    long k = static_cast<long>(e.e[var].get_num().get_si());
    Rat factor(1);
    Rat base = k >= 0 ? c : Rat(1) / c;
    for (long i = 0; i < (k >= 0 ? k : -k); ++i) factor *= base;
    insert_term(out, e, v * factor);
  }
  return out;
}

namespace {

std::string exponent_to_string(const Rat& e) {
  if (is_integer(e)) return rat_to_string(e);
  return "(" + rat_to_string(e) + ")";
}

}  // namespace

std::string poly_to_string(const PuiseuxPoly& f, const VarNames& names) {
  if (f.terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  // Largest exponent first reads like a polynomial in falling powers.
  for (auto it = f.terms.rbegin(); it != f.terms.rend(); ++it) {
    const Exp& e = it->first;
    Rat c = it->second;
    bool neg = c < 0;
    if (first) {
      if (neg) os << "-";
    } else {
      os << (neg ? " - " : " + ");
    }
    first = false;
    Rat mag = neg ? Rat(-c) : c;
    std::vector<std::string> factors;
    if (mag != 1 || (e.e[0] == 0 && e.e[1] == 0))
      factors.push_back(rat_to_string(mag));
    for (int i = 0; i < f.arity; ++i) {
      if (e.e[i] == 0) continue;
      if (e.e[i] == 1)
        factors.push_back(names.v[i]);
      else
        factors.push_back(names.v[i] + "^" + exponent_to_string(e.e[i]));
    }
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (i) os << "*";
      os << factors[i];
    }
  }
  return os.str();
}

namespace {

struct Token {
  enum Kind { Number, Name, Star, Caret, Plus, Minus, LParen, RParen, End };
  Kind kind;
  Rat value;
  std::string text;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    if (c >= '0' && c <= '9') {
      std::size_t j = i;
      while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
      std::string num = s.substr(i, j - i);
      if (j < s.size() && s[j] == '/') {
        std::size_t k = j + 1;
        while (k < s.size() && s[k] >= '0' && s[k] <= '9') ++k;
        if (k == j + 1) throw InputError("malformed rational in polynomial");
        num = s.substr(i, k - i);
        j = k;
      }
      auto q = rat_from_string(num);
      if (!q) throw InputError("malformed number '" + num + "'");
      out.push_back({Token::Number, *q, num});
      i = j;
      continue;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      std::size_t j = i;
      while (j < s.size() && ((s[j] >= 'a' && s[j] <= 'z') ||
                              (s[j] >= 'A' && s[j] <= 'Z')))
        ++j;
      out.push_back({Token::Name, Rat(0), s.substr(i, j - i)});
      i = j;
      continue;
    }
    switch (c) {
      case '*': out.push_back({Token::Star, Rat(0), "*"}); break;
      case '^': out.push_back({Token::Caret, Rat(0), "^"}); break;
      case '+': out.push_back({Token::Plus, Rat(0), "+"}); break;
      case '-': out.push_back({Token::Minus, Rat(0), "-"}); break;
      case '(': out.push_back({Token::LParen, Rat(0), "("}); break;
      case ')': out.push_back({Token::RParen, Rat(0), ")"}); break;
      default:
        throw InputError(std::string("unexpected character '") + c +
                         "' in polynomial");
    }
    ++i;
  }
  out.push_back({Token::End, Rat(0), ""});
  return out;
}

class TermParser {
 public:
  TermParser(std::vector<Token> toks, int arity,
             std::array<bool, 2> pole_ok, const VarNames& names)
      : toks_(std::move(toks)), arity_(arity), pole_ok_(pole_ok),
        names_(names) {}

  PuiseuxPoly parse() {
    PuiseuxPoly acc = poly_zero(arity_, pole_ok_);
    bool negate = false;
    // Optional leading sign.
    if (peek().kind == Token::Minus) {
      negate = true;
      next();
    } else if (peek().kind == Token::Plus) {
      next();
    }
    while (true) {
      PuiseuxPoly term = parse_term();
      acc = poly_add(acc, negate ? poly_neg(term) : term);
      if (peek().kind == Token::Plus) {
        negate = false;
        next();
      } else if (peek().kind == Token::Minus) {
        negate = true;
        next();
      } else if (peek().kind == Token::End) {
        break;
      } else {
        throw InputError("expected '+' or '-' near '" + peek().text + "'");
      }
    }
    poly_validate(acc);
    return acc;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  PuiseuxPoly parse_term() {
    PuiseuxPoly prod = poly_const(Rat(1), arity_, pole_ok_);
    bool expect_factor = true;
    while (expect_factor) {
      prod = poly_mul(prod, parse_factor());
      if (peek().kind == Token::Star) {
        next();
        continue;
      }
      expect_factor = false;
    }
    return prod;
  }

  PuiseuxPoly parse_factor() {
    const Token& t = next();
    if (t.kind == Token::Number)
      return poly_const(t.value, arity_, pole_ok_);
    if (t.kind != Token::Name)
      throw InputError("expected a coefficient or variable, got '" + t.text +
                       "'");
    int var = -1;
    for (int i = 0; i < arity_; ++i)
      if (t.text == names_.v[i]) var = i;
    if (var < 0) throw InputError("unknown variable '" + t.text + "'");
    Rat expo(1);
    if (peek().kind == Token::Caret) {
      next();
      expo = parse_exponent();
    }
    long h = 1;
    if (!is_integer(expo)) {
      auto d = den_as_long(expo);
      if (!d) throw InputError("exponent denominator too large");
      h = *d;
    }
    Exp e;
    e.e[var] = expo;
    return poly_monomial(Rat(1), e, arity_, pole_ok_, h);
  }

  Rat parse_exponent() {
    bool paren = false;
    if (peek().kind == Token::LParen) {
      paren = true;
      next();
    }
    bool neg = false;
    if (peek().kind == Token::Minus) {
      neg = true;
      next();
    }
    const Token& t = next();
    if (t.kind != Token::Number)
      throw InputError("expected a numeric exponent, got '" + t.text + "'");
    if (paren) {
      if (next().kind != Token::RParen)
        throw InputError("missing ')' in exponent");
    }
    return neg ? Rat(-t.value) : t.value;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int arity_;
  std::array<bool, 2> pole_ok_;
  VarNames names_;
};

}  // namespace

PuiseuxPoly poly_from_string(const std::string& s, int arity,
                             std::array<bool, 2> pole_ok,
                             const VarNames& names) {
  TermParser p(tokenize(s), arity, pole_ok, names);
  return p.parse();
}

// ---- truncated series ----------------------------------------------------

Rat total_degree(const Exp& e) { return e.e[0] + e.e[1]; }

Rat series_order(const TruncatedSeries& f) {
  std::optional<Rat> best;
  for (const auto& [e, c] : f.body.terms) {
    Rat d = total_degree(e);
    if (!best || d < *best) best = d;
  }
  return best.value_or(f.prec);
}

TruncatedSeries ts_make(const PuiseuxPoly& body, const Rat& prec) {
  TruncatedSeries out{body, prec};
  for (auto it = out.body.terms.begin(); it != out.body.terms.end();) {
    if (total_degree(it->first) >= prec)
      it = out.body.terms.erase(it);
    else
      ++it;
  }
  return out;
}

TruncatedSeries ts_add(const TruncatedSeries& a, const TruncatedSeries& b) {
  Rat prec = std::min(a.prec, b.prec);
  return ts_make(poly_add(a.body, b.body), prec);
}

TruncatedSeries ts_mul(const TruncatedSeries& a, const TruncatedSeries& b) {
  Rat prec = std::min(series_order(a) + b.prec, series_order(b) + a.prec);
  return ts_make(poly_mul(a.body, b.body), prec);
}

TruncatedSeries invert_unit(const TruncatedSeries& f, const Rat& N) {
  Rat c = f.body.constant_term();
  if (c == 0) throw InputError("invert_unit: not a unit (zero constant term)");
  for (const auto& [e, v] : f.body.terms)
    if (e.e[0] < 0 || e.e[1] < 0)
      throw InputError("invert_unit: negative exponents present");
  PuiseuxPoly g = poly_const(Rat(1) / c, f.body.arity, f.body.pole_ok);
  g.h = f.body.h;
  Rat achieved(1);
  // Newton iteration g <- g(2 - f g); precision doubles each pass.
  const PuiseuxPoly two = poly_const(Rat(2), f.body.arity, f.body.pole_ok);
  while (achieved < N) {
    achieved = achieved * 2;
    Rat step = std::min(achieved, N);
    TruncatedSeries gs = ts_make(g, step);
    TruncatedSeries fg = ts_mul(ts_make(f.body, step), gs);
    PuiseuxPoly corr = poly_sub(two, fg.body);
    g = ts_make(poly_mul(g, corr), step).body;
  }
  return ts_make(g, N);
}

}  // namespace diffmod
