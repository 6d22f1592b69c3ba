#include "doctest.h"

#include <random>

#include "diffmod/puiseux.hpp"

using namespace diffmod;

namespace {

PuiseuxPoly P(const std::string& s, int arity = 2,
              std::array<bool, 2> pole_ok = {true, true}) {
  return poly_from_string(s, arity, pole_ok, VarNames{});
}

// Small random Laurent polynomial; pole-permitted in both variables.
PuiseuxPoly random_poly(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nterms(1, 5), expo(-4, 4), coef(-6, 6);
  PuiseuxPoly f = poly_zero(2, {true, true});
  for (int t = nterms(rng); t > 0; --t) {
    int c = coef(rng);
    if (c == 0) c = 1;
    Exp e(Rat(expo(rng)), Rat(expo(rng)));
    f = poly_add(f, poly_monomial(Rat(c), e, 2, {true, true}, 1));
  }
  if (f.is_zero()) f = poly_const(Rat(1), 2, {true, true});
  return f;
}

Weight random_weight(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(0, 9), den(1, 5);
  return Weight(Rat(num(rng)) / den(rng), Rat(num(rng)) / den(rng));
}

}  // namespace

TEST_CASE("monomial algebra") {
  CHECK(poly_mul(P("x^-1 + y"), P("x")) == P("1 + x*y"));
  PuiseuxPoly f = P("2*x^3*y^-1 - 5 + x^-2");
  CHECK(poly_add(f, poly_neg(f)).is_zero());
  CHECK(poly_mul(P("x^-3*y^-3"), P("x*y")) == P("x^-2*y^-2"));
}

TEST_CASE("pole permission is enforced") {
  CHECK_THROWS_AS(P("x^-1", 2, {false, true}), InputError);
  CHECK_NOTHROW(P("x^-1", 2, {true, false}));
  // Products may not sneak a pole past the flags either.
  PuiseuxPoly ok = P("x", 1, {false, false});
  CHECK_THROWS_AS(poly_validate(poly_monomial(Rat(1), Exp(Rat(-1), Rat(0)), 1,
                                              {false, false}, 1)),
                  InputError);
  (void)ok;
}

TEST_CASE("gauss log norm") {
  PuiseuxPoly f = P("x^-3*y^-3 + x^-1");
  // max(3 r1 + 3 r2, r1) probed at weights on both sides of the crease.
  CHECK(*gauss_log_norm(f, Weight(Rat(1), Rat(1))) == Rat(6));
  CHECK(*gauss_log_norm(f, Weight(Rat(1), Rat(0))) == Rat(3));
  CHECK(*gauss_log_norm(f, Weight(rat(1, 4), Rat(0))) == rat(3, 4));
  CHECK(*gauss_log_norm(f, Weight(Rat(1), Rat(5))) == Rat(18));
  CHECK(*gauss_log_norm(f, Weight(rat(1, 2), rat(1, 3))) == rat(5, 2));

  CHECK(*gauss_log_norm(P("x^-2", 1), Weight(Rat(1))) == Rat(2));
  CHECK(!gauss_log_norm(poly_zero(2, {true, true}), Weight(Rat(1), Rat(1))));
}

TEST_CASE("gauss norm multiplicativity") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    PuiseuxPoly f = random_poly(rng), g = random_poly(rng);
    Weight r = random_weight(rng);
    auto nf = gauss_log_norm(f, r), ng = gauss_log_norm(g, r);
    auto nfg = gauss_log_norm(poly_mul(f, g), r);
    REQUIRE(nf);
    REQUIRE(ng);
    REQUIRE(nfg);
    CHECK(*nfg == *nf + *ng);
  }
}

TEST_CASE("ultrametric inequality") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    PuiseuxPoly f = random_poly(rng), g = random_poly(rng);
    Weight r = random_weight(rng);
    PuiseuxPoly s = poly_add(f, g);
    auto ns = gauss_log_norm(s, r);
    if (!ns) continue;
    Rat bound = std::max(gauss_log_norm(f, r).value_or(*ns),
                         gauss_log_norm(g, r).value_or(*ns));
    CHECK(*ns <= bound);
  }
  // Equality when the maxima live on disjoint monomials.
  PuiseuxPoly f = P("x^-2"), g = P("y^-3");
  Weight r(Rat(1), Rat(1));
  CHECK(*gauss_log_norm(poly_add(f, g), r) == Rat(3));
}

TEST_CASE("gauss norm homogeneity") {
  std::mt19937_64 rng(5150);
  for (int i = 0; i < 100; ++i) {
    PuiseuxPoly f = random_poly(rng);
    Weight r = random_weight(rng);
    Rat lambda = rat(std::uniform_int_distribution<int>(0, 7)(rng),
                     std::uniform_int_distribution<int>(1, 4)(rng));
    Weight lr(lambda * r.r[0], lambda * r.r[1]);
    CHECK(*gauss_log_norm(f, lr) == lambda * *gauss_log_norm(f, r));
  }
}

TEST_CASE("invert unit") {
  TruncatedSeries one_plus_x = ts_make(P("1 + x", 1, {false, false}), Rat(3));
  TruncatedSeries inv = invert_unit(one_plus_x, Rat(3));
  CHECK(inv.body == P("1 - x + x^2", 1, {false, false}));

  TruncatedSeries two = ts_make(P("2", 1, {false, false}), Rat(5));
  CHECK(invert_unit(two, Rat(5)).body == P("1/2", 1, {false, false}));

  TruncatedSeries x = ts_make(P("x", 1, {false, false}), Rat(5));
  CHECK_THROWS_AS(invert_unit(x, Rat(5)), InputError);
}

TEST_CASE("invert unit against product check") {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> coef(-5, 5);
  for (int i = 0; i < 30; ++i) {
    PuiseuxPoly f = poly_const(Rat(coef(rng) * 2 + 1));
    for (int d = 1; d <= 4; ++d)
      f = poly_add(f, poly_monomial(Rat(coef(rng)), Exp(Rat(d), Rat(0)), 1,
                                    {false, false}, 1));
    Rat N(9);
    TruncatedSeries inv = invert_unit(ts_make(f, N), N);
    TruncatedSeries prod = ts_mul(ts_make(f, N), inv);
    CHECK(prod.body == poly_const(Rat(1)));
    CHECK(prod.prec >= N);
  }
}

TEST_CASE("substitute center") {
  // z = 0 renames y to the second slot of the new pair.
  PuiseuxPoly f = P("y*x^-1");
  PuiseuxPoly g = substitute_center(f, poly_zero(1, {false, false}), 1);
  CHECK(g == P("y*x^-1"));  // textual y now stands for u

  PuiseuxPoly y = P("y", 2, {false, false});
  PuiseuxPoly z32 = poly_monomial(Rat(1), Exp(rat(3, 2), Rat(0)), 1,
                                  {false, false}, 2);
  CHECK(substitute_center(y, z32, 2) ==
        poly_from_string("x^(3/2) + y", 2, {false, false}, VarNames{}));

  CHECK(substitute_center(P("y^2", 2, {false, false}),
                          P("x", 1, {false, false}), 1) ==
        P("x^2 + 2*x*y + y^2", 2, {false, false}));
}

TEST_CASE("substitute center identity property") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> expo(0, 4), xexpo(-3, 3), coef(-4, 4);
  for (int i = 0; i < 50; ++i) {
    PuiseuxPoly f = poly_zero(2, {true, false});
    for (int t = 0; t < 4; ++t) {
      int c = coef(rng);
      if (c == 0) continue;
      f = poly_add(f, poly_monomial(Rat(c), Exp(Rat(xexpo(rng)), Rat(expo(rng))),
                                    2, {true, false}, 1));
    }
    CHECK(substitute_center(f, poly_zero(1, {false, false}), 1) == f);
  }
}

TEST_CASE("ramify") {
  PuiseuxPoly f = ramify(P("x^-1", 1), 2);
  CHECK(f.h == 2);
  CHECK(f == P("x^-1", 1));  // exponents unchanged as rationals

  PuiseuxPoly g = poly_monomial(Rat(1), Exp(rat(1, 2), Rat(0)), 1,
                                {false, false}, 2);
  CHECK(ramify(g, 3).h == 6);
  CHECK(ramify(poly_zero(1, {false, false}), 7).is_zero());
}

TEST_CASE("parser round trip") {
  const char* inputs[] = {"3/2*x^-2*y^3", "x^(1/2)", "1", "0",
                          "x^-3*y^-3 + x^-1", "-x + 2*y - 7/3"};
  for (const char* s : inputs) {
    PuiseuxPoly f = P(s);
    CHECK(P(poly_to_string(f, VarNames{})) == f);
  }
  // Whitespace-insensitive.
  CHECK(P("  3/2 * x^-2 *y^3 ") == P("3/2*x^-2*y^3"));
  CHECK(P("x ^ ( 1/2 )") == P("x^(1/2)"));
  CHECK(P("x^(1/2)").h == 2);

  CHECK_THROWS_AS(P("x + $"), InputError);
  CHECK_THROWS_AS(P("w^2"), InputError);
  CHECK_THROWS_AS(P("x^^2"), InputError);
}

TEST_CASE("theta and partial derivatives") {
  PuiseuxPoly f = P("x^-3*y^-3 + x^-1");
  CHECK(poly_theta(f, 0) == P("-3*x^-3*y^-3 - x^-1"));
  CHECK(poly_theta(f, 1) == P("-3*x^-3*y^-3"));
  // d/dy drops y-free terms rather than inventing a pole.
  PuiseuxPoly g = P("x^2 + x*y", 2, {false, false});
  CHECK(poly_partial(g, 1) == P("x", 2, {false, false}));
  CHECK(poly_partial(g, 0) == P("2*x + y", 2, {false, false}));
}

TEST_CASE("truncated series respects precision") {
  TruncatedSeries a = ts_make(P("1 + x + x^3", 1, {false, false}), Rat(3));
  CHECK(a.body == P("1 + x", 1, {false, false}));
  TruncatedSeries b = ts_make(P("x", 1, {false, false}), Rat(3));
  TruncatedSeries ab = ts_mul(a, b);
  // a has order 0, so the unknown tail of b caps the product at degree 3.
  CHECK(ab.prec == Rat(3));
  CHECK(ab.body == P("x + x^2", 1, {false, false}));
  // A factor of positive order shifts the attainable precision up.
  TruncatedSeries c = ts_mul(b, b);
  CHECK(c.prec == Rat(4));
  CHECK(c.body == P("x^2", 1, {false, false}));
}
