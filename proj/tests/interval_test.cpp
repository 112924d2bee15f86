#include "minpoint/interval.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace minpoint;

namespace {

bool contains_q(const RealInterval& x, const mpq_class& q) {
  return mpfr_cmp_q(x.lo_raw(), q.get_mpq_t()) <= 0 &&
         mpfr_cmp_q(x.hi_raw(), q.get_mpq_t()) >= 0;
}

mpq_class rand_q(std::mt19937& rng) {
  std::uniform_int_distribution<long> num(-1000, 1000), den(1, 60);
  mpq_class q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

}  // namespace

TEST(Interval, ConstructorsEnclose) {
  mpq_class third(1, 3);
  RealInterval t = RealInterval::from_mpq(third, 64);
  EXPECT_TRUE(contains_q(t, third));
  // 1/3 is not a binary float, so the enclosure is strict but tight.
  EXPECT_LT(t.lo_d(), t.hi_d());
  EXPECT_LT(t.width(), 1e-17);

  RealInterval e = RealInterval::exact(-7, 64);
  EXPECT_EQ(e.lo_d(), -7);
  EXPECT_EQ(e.hi_d(), -7);
  EXPECT_EQ(e.width(), 0);

  RealInterval d = RealInterval::from_double(0.125, 64);
  EXPECT_EQ(d.lo_d(), 0.125);
  EXPECT_EQ(d.hi_d(), 0.125);
}

TEST(Interval, ArithmeticEnclosesRationals) {
  std::mt19937 rng(7);
  for (int i = 0; i < 400; ++i) {
    mpq_class a = rand_q(rng), b = rand_q(rng);
    RealInterval ia = RealInterval::from_mpq(a, 64);
    RealInterval ib = RealInterval::from_mpq(b, 64);
    EXPECT_TRUE(contains_q(ia + ib, a + b));
    EXPECT_TRUE(contains_q(ia - ib, a - b));
    EXPECT_TRUE(contains_q(ia * ib, a * b));
    if (b != 0 && !ib.contains_zero())
      EXPECT_TRUE(contains_q(ia / ib, mpq_class(a / b)));
    EXPECT_TRUE(contains_q(ia.abs(), mpq_class(abs(a))));
    EXPECT_TRUE(contains_q(ia.square(), mpq_class(a * a)));
    EXPECT_TRUE(contains_q(ia.mul_2exp(3), mpq_class(a * 8)));
    EXPECT_TRUE(contains_q(ia.mul_2exp(-4), mpq_class(a / 16)));
    EXPECT_TRUE(contains_q(max(ia, ib), std::max(a, b)));
    EXPECT_TRUE(contains_q(min(ia, ib), std::min(a, b)));
    EXPECT_TRUE(contains_q(hull_of(ia, ib), a));
    EXPECT_TRUE(contains_q(hull_of(ia, ib), b));
  }
}

TEST(Interval, LogExp) {
  RealInterval one = RealInterval::exact(1, 96);
  EXPECT_TRUE(contains_q(one.log(), mpq_class(0)));
  EXPECT_TRUE(contains_q(RealInterval::exact(0, 96).exp(), mpq_class(1)));
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    mpq_class a = abs(rand_q(rng)) + 1;
    RealInterval ia = RealInterval::from_mpq(a, 96);
    // exp(log a) must still contain a.
    EXPECT_TRUE(contains_q(ia.log().exp(), a));
    EXPECT_TRUE(ia.log().hi_d() >= 0.0);
  }
  // log is monotone: enclosure of a larger number lies weakly to the right.
  RealInterval l2 = RealInterval::exact(2, 96).log();
  RealInterval l3 = RealInterval::exact(3, 96).log();
  EXPECT_TRUE(l2.certainly_less(l3));
}

TEST(Interval, Predicates) {
  RealInterval a = RealInterval::hull(1.0, 2.0, 64);
  RealInterval b = RealInterval::hull(2.5, 3.0, 64);
  EXPECT_TRUE(a.certainly_positive());
  EXPECT_TRUE(a.certainly_less(b));
  EXPECT_FALSE(b.certainly_less(a));
  EXPECT_TRUE(a.certainly_leq(b));
  EXPECT_FALSE(a.overlaps(b));
  EXPECT_TRUE(a.overlaps(RealInterval::hull(1.5, 1.6, 64)));
  EXPECT_TRUE((-a).certainly_negative());
  EXPECT_TRUE((a - a).contains_zero());
  EXPECT_TRUE(a.join_zero().contains_zero());
}

TEST(Interval, SqrtEncloses) {
  for (long v : {0L, 1L, 2L, 3L, 49L, 1000L}) {
    RealInterval r = RealInterval::exact(v, 96).sqrt();
    EXPECT_TRUE(contains_q(r.square(), mpq_class(v))) << v;
  }
}

TEST(Interval, ComplexAbs) {
  // |3 + 4i| = 5.
  ComplexInterval z(RealInterval::exact(3, 96), RealInterval::exact(4, 96));
  EXPECT_TRUE(contains_q(z.abs(), mpq_class(5)));
  ComplexInterval w = z * z;
  EXPECT_TRUE(contains_q(w.abs(), mpq_class(25)));
  EXPECT_TRUE(contains_q(w.re, mpq_class(-7)));
  EXPECT_TRUE(contains_q(w.im, mpq_class(24)));
  ComplexInterval q = w / z;
  EXPECT_TRUE(contains_q(q.re, mpq_class(3)));
  EXPECT_TRUE(contains_q(q.im, mpq_class(4)));
}

TEST(Interval, DefaultPrecisionIsUsed) {
  mpfr_prec_t saved = default_interval_precision();
  default_interval_precision() = 200;
  RealInterval x = RealInterval::exact(5);
  EXPECT_EQ(x.prec(), 200);
  default_interval_precision() = saved;
}
