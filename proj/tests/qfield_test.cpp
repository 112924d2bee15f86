#include "minpoint/qfield.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace minpoint;

namespace {

QuadFieldElement el(long a, long b, long c, long d) {
  return QuadFieldElement(mpz_class(a), mpz_class(b), mpz_class(c),
                          mpz_class(d));
}

QuadFieldElement rand_el(std::mt19937& rng, long d) {
  std::uniform_int_distribution<long> coef(-12, 12), den(1, 9);
  return el(coef(rng), coef(rng), den(rng), d);
}

bool contains_q(const RealInterval& x, const mpq_class& q) {
  return mpfr_cmp_q(x.lo_raw(), q.get_mpq_t()) <= 0 &&
         mpfr_cmp_q(x.hi_raw(), q.get_mpq_t()) >= 0;
}

}  // namespace

TEST(QField, CanonicalRepresentation) {
  // (2 + 2 sqrt(8)) / 4 = (1 + 2 sqrt(2)) / 2.
  QuadFieldElement z = el(2, 2, 4, 8);
  EXPECT_EQ(z.d(), 2);
  EXPECT_EQ(z.a(), 1);
  EXPECT_EQ(z.b(), 2);
  EXPECT_EQ(z.c(), 2);
  EXPECT_EQ(z, el(1, 2, 2, 2));
  // b = 0 collapses to the rationals whatever d said.
  QuadFieldElement r = el(6, 0, 4, 5);
  EXPECT_TRUE(r.is_rational());
  EXPECT_EQ(r.rational_value(), mpq_class(3, 2));
  EXPECT_EQ(r, QuadFieldElement::from_rational(mpq_class(3, 2)));
  // Square factors of d migrate into b; negative c normalizes away.
  EXPECT_EQ(el(0, 1, 1, 12), el(0, 2, 1, 3));
  EXPECT_EQ(el(1, 1, -2, 3), el(-1, -1, 2, 3));
  EXPECT_THROW(el(1, 1, 0, 3), std::invalid_argument);
}

TEST(QField, FieldAxioms) {
  std::mt19937 rng(23);
  for (long d : {-1L, 2L, -3L, 5L, -7L}) {
    for (int i = 0; i < 60; ++i) {
      QuadFieldElement x = rand_el(rng, d), y = rand_el(rng, d),
                       z = rand_el(rng, d);
      EXPECT_EQ((x + y) + z, x + (y + z));
      EXPECT_EQ((x * y) * z, x * (y * z));
      EXPECT_EQ(x * (y + z), x * y + x * z);
      EXPECT_EQ(x + y, y + x);
      EXPECT_EQ(x * y, y * x);
      EXPECT_EQ(x - x, QuadFieldElement::zero());
      if (!x.is_zero()) {
        EXPECT_EQ(x / x, QuadFieldElement::from_int(1));
        EXPECT_EQ((y / x) * x, y);
      }
    }
  }
}

TEST(QField, MixedRationalArithmetic) {
  QuadFieldElement s2 = el(0, 1, 1, 2);
  QuadFieldElement half = QuadFieldElement::from_rational(mpq_class(1, 2));
  QuadFieldElement sum = s2 + half;
  EXPECT_EQ(sum, el(1, 2, 2, 2));
  EXPECT_EQ(sum - s2, half);
  EXPECT_EQ(s2 * s2, QuadFieldElement::from_int(2));
}

TEST(QField, ConjugateTraceNorm) {
  std::mt19937 rng(31);
  for (long d : {-1L, 2L, -3L, 5L}) {
    for (int i = 0; i < 40; ++i) {
      QuadFieldElement x = rand_el(rng, d);
      QuadFieldElement tr = x + x.conjugate();
      QuadFieldElement nm = x * x.conjugate();
      EXPECT_TRUE(tr.is_rational());
      EXPECT_TRUE(nm.is_rational());
      // Conjugation is a field automorphism.
      QuadFieldElement y = rand_el(rng, d);
      EXPECT_EQ((x * y).conjugate(), x.conjugate() * y.conjugate());
      EXPECT_EQ((x + y).conjugate(), x.conjugate() + y.conjugate());
    }
  }
  EXPECT_EQ(el(1, 1, 2, 5).conjugate(), el(1, -1, 2, 5));
}

TEST(QField, MinPolyHasElementAsRoot) {
  std::mt19937 rng(37);
  for (long d : {-1L, 2L, -3L, 5L, -20L}) {
    for (int i = 0; i < 40; ++i) {
      QuadFieldElement x = rand_el(rng, d);
      auto mp = x.min_poly();
      EXPECT_EQ(mp.degree, x.degree());
      QuadFieldElement val =
          QuadFieldElement::from_rational(mpq_class(mp.A)) * x * x +
          QuadFieldElement::from_rational(mpq_class(mp.B)) * x +
          QuadFieldElement::from_rational(mpq_class(mp.C));
      if (mp.degree == 2) {
        EXPECT_TRUE(val.is_zero());
        EXPECT_EQ(gcd3(mp.A, mp.B, mp.C), 1);
        EXPECT_GT(mp.A, 0);
        mpz_class disc = mp.B * mp.B - 4 * mp.A * mp.C;
        EXPECT_FALSE(is_perfect_square(disc));
      } else {
        EXPECT_EQ(mpq_class(mp.A) * x.rational_value() + mpq_class(mp.B), 0);
      }
    }
  }
}

TEST(QField, WeilHeightMatchesMahler) {
  // Rational p/q in lowest terms: h = log max(|p|, q).
  EXPECT_TRUE(contains_q(
      weil_height(QuadFieldElement::from_rational(mpq_class(7, 2)), 96).exp(),
      mpq_class(7)));
  EXPECT_TRUE(contains_q(
      weil_height(QuadFieldElement::from_rational(mpq_class(-2, 9)), 96).exp(),
      mpq_class(9)));
  EXPECT_EQ(weil_height(QuadFieldElement::from_int(1), 96).hi_d(), 0.0);
  EXPECT_EQ(weil_height(QuadFieldElement::zero(), 96).hi_d(), 0.0);

  // Quadratic: 2h = log Mahler(min poly), Mahler = A max(1,|r1|) max(1,|r2|)
  // computed from the embeddings.
  std::mt19937 rng(41);
  for (long d : {-1L, 2L, -3L, 5L, -20L}) {
    for (int i = 0; i < 30; ++i) {
      QuadFieldElement x = rand_el(rng, d);
      if (x.is_rational()) continue;
      auto mp = x.min_poly();
      RealInterval mahler = RealInterval::from_mpz(mp.A, 128);
      RealInterval one = RealInterval::exact(1, 128);
      if (d > 0) {
        mahler = mahler * max(one, x.real_embedding(0, 128).abs()) *
                 max(one, x.real_embedding(1, 128).abs());
      } else {
        RealInterval m = x.complex_embedding(128).abs();
        mahler = mahler * max(one, m) * max(one, m);
      }
      RealInterval lhs = weil_height(x, 128) * RealInterval::exact(2, 128);
      RealInterval rhs = mahler.log();
      EXPECT_TRUE(lhs.overlaps(rhs)) << x.str();
      EXPECT_LT(lhs.width() + rhs.width(), 1e-20);
    }
  }
}

TEST(QField, SqrtInField) {
  QuadField q2(mpz_class(2)), q3(mpz_class(3)), qi(mpz_class(-1));
  auto r = sqrt_in_field(q2, QuadFieldElement::from_int(2));
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(*r * *r, QuadFieldElement::from_int(2));
  EXPECT_FALSE(sqrt_in_field(q3, QuadFieldElement::from_int(2)).has_value());
  auto im = sqrt_in_field(qi, QuadFieldElement::from_int(-1));
  ASSERT_TRUE(im.has_value());
  EXPECT_EQ(*im * *im, QuadFieldElement::from_int(-1));
  // Generic squares always split.
  std::mt19937 rng(43);
  for (long d : {-1L, 2L, -3L, 5L}) {
    QuadField F{mpz_class(d)};
    for (int i = 0; i < 25; ++i) {
      QuadFieldElement x = rand_el(rng, d);
      auto s = sqrt_in_field(F, x * x);
      ASSERT_TRUE(s.has_value());
      EXPECT_TRUE(*s == x || *s == -x);
    }
  }
}

TEST(QField, ParseElementRoundTrip) {
  std::mt19937 rng(47);
  for (long d : {-1L, 2L, -3L, 5L, -20L}) {
    for (int i = 0; i < 30; ++i) {
      QuadFieldElement x = rand_el(rng, d);
      EXPECT_EQ(parse_element(x.str()), x) << x.str();
    }
  }
  EXPECT_EQ(parse_element("(1+1*sqrt(-3))/2"), el(1, 1, 2, -3));
  EXPECT_EQ(parse_element("-5/3"),
            QuadFieldElement::from_rational(mpq_class(-5, 3)));
  EXPECT_THROW(parse_element("sqrt()"), std::invalid_argument);
}

TEST(QField, EnumerateFieldsByDiscriminant) {
  // Everything with |disc| <= 20, rationals first, |disc| ascending,
  // positive before negative on ties.
  std::vector<long> want = {1,  -3, -4, 5,   -7, 8,  -8,
                            -11, 12, 13, -15, 17, -19, -20};
  auto fields = enumerate_fields(mpz_class(20));
  ASSERT_EQ(fields.size(), want.size());
  for (size_t i = 0; i < want.size(); ++i)
    EXPECT_EQ(fields[i].disc(), want[i]) << i;

  // Independent brute force over squarefree d.
  for (long cap : {2L, 7L, 15L, 40L}) {
    std::vector<long> brute = {1};
    for (long ad = 1; ad <= cap; ++ad) {
      for (long d : {ad, -ad}) {
        if (d == 1) continue;
        auto [sf, sq] = squarefree_decompose(mpz_class(d));
        if (sf != d) continue;
        long disc = (((d % 4) + 4) % 4 == 1) ? d : 4 * d;
        if (std::labs(disc) <= cap) brute.push_back(disc);
      }
    }
    std::sort(brute.begin(), brute.end(), [](long a, long b) {
      if (std::labs(a) != std::labs(b)) return std::labs(a) < std::labs(b);
      return a > b;
    });
    auto got = enumerate_fields(mpz_class(cap));
    ASSERT_EQ(got.size(), brute.size()) << cap;
    for (size_t i = 0; i < brute.size(); ++i)
      EXPECT_EQ(got[i].disc(), brute[i]) << cap << " " << i;
  }
  // A cutoff below every quadratic discriminant leaves only the rationals.
  auto only_q = enumerate_fields(mpz_class(2));
  ASSERT_EQ(only_q.size(), 1u);
  EXPECT_TRUE(only_q[0].is_rational());
}
