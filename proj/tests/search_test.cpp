#include "minpoint/search.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace minpoint;

namespace {

std::shared_ptr<const CurveModel> curve(const std::string& s) {
  return std::make_shared<const CurveModel>(parse_curve(s));
}

CurvePoint pt(std::shared_ptr<const CurveModel> E, long x, long y) {
  return CurvePoint(E, QuadFieldElement::from_int(x),
                    QuadFieldElement::from_int(y));
}

std::set<std::string> strs(const std::vector<QuadFieldElement>& v) {
  std::set<std::string> out;
  for (const auto& x : v) out.insert(x.str());
  return out;
}

// Direct coefficient-box scan with the same acceptance predicate the
// enumerator uses; completeness reference.
std::vector<QuadFieldElement> brute_enumerate(const QuadField& F, double cutoff) {
  std::vector<QuadFieldElement> out;
  if (F.is_rational()) {
    mpz_class cap = detail::height_cap_integer(cutoff);
    for (mpz_class q = 1; q <= cap; ++q)
      for (mpz_class p = -cap; p <= cap; ++p) {
        if (gcd(p, q) != 1) continue;
        out.push_back(QuadFieldElement::from_rational(mpq_class(p, q)));
      }
    return out;
  }
  const mpz_class& d = F.d();
  mpq_class U = detail::mahler_cap(cutoff);
  mpz_class Amax = detail::floor_q(U);
  mpz_class Bcap = detail::floor_q(2 * U);
  for (mpz_class A = 1; A <= Amax; ++A)
    for (mpz_class B = -Bcap; B <= Bcap; ++B)
      for (mpz_class C = -Amax; C <= Amax; ++C) {
        mpz_class disc = B * B - 4 * A * C;
        if (disc <= 0 && d > 0) continue;
        if (disc >= 0 && d < 0) continue;
        if (disc == 0) continue;
        auto [sf, t] = squarefree_decompose(disc);
        if (sf != d) continue;
        if (gcd(gcd(A, B), C) != 1) continue;
        if (!detail::quadratic_mahler_leq(A, B, C, t, d, U)) continue;
        out.push_back(QuadFieldElement(-B, t, 2 * A, d));
        out.push_back(QuadFieldElement(-B, -t, 2 * A, d));
      }
  return out;
}

}  // namespace

TEST(Search, AllSqrtModExhaustive) {
  for (long m = 1; m <= 300; ++m) {
    std::vector<std::set<long>> brute(m);
    for (long x = 0; x < m; ++x) brute[(x * x) % m].insert(x);
    for (long a = 0; a < m; ++a) {
      auto got = detail::all_sqrt_mod(mpz_class(a), mpz_class(m));
      std::set<long> got_set;
      for (const auto& r : got) got_set.insert(r.get_si());
      ASSERT_EQ(got_set, brute[a]) << "a=" << a << " m=" << m;
      ASSERT_TRUE(std::is_sorted(got.begin(), got.end()));
    }
  }
  EXPECT_THROW(detail::all_sqrt_mod(mpz_class(1), mpz_class(0)), std::domain_error);
}

TEST(Search, BoundedSquarefreePart) {
  using detail::bounded_squarefree_part;
  EXPECT_EQ(bounded_squarefree_part(mpq_class(12), 100).value(), 3);
  EXPECT_EQ(bounded_squarefree_part(mpq_class(-18), 100).value(), -2);
  EXPECT_EQ(bounded_squarefree_part(mpq_class(49, 4), 100).value(), 1);
  // 5/8 ~ 40 = 2^2 * 10: class 10.
  EXPECT_EQ(bounded_squarefree_part(mpq_class(5, 8), 100).value(), 10);
  // Large prime to an odd power exceeds the bound.
  EXPECT_FALSE(bounded_squarefree_part(mpq_class(101), 50).has_value());
  // ... unless it only appears squared.
  EXPECT_EQ(bounded_squarefree_part(mpq_class(101 * 101), 50).value(), 1);
  EXPECT_EQ(bounded_squarefree_part(mpq_class(-3 * 101 * 101), 50).value(), -3);
  EXPECT_THROW(bounded_squarefree_part(mpq_class(0), 50), std::domain_error);

  // Agreement with the full factorization on smooth inputs; nullopt exactly
  // when the true squarefree part exceeds the bound.
  std::mt19937_64 rng(7);
  int agreed = 0;
  for (int i = 0; i < 200; ++i) {
    mpz_class n = 1, den = 1;
    long smooth[] = {2, 3, 5, 7, 11, 13};
    for (long p : smooth) {
      for (int k = rng() % 3; k > 0; --k) n *= p;
      for (int k = rng() % 2; k > 0; --k) den *= p;
    }
    if (rng() % 2) n = -n;
    mpq_class r(n, den);
    r.canonicalize();
    auto got = bounded_squarefree_part(r, 13);
    mpz_class want = squarefree_decompose(r.get_num() * r.get_den()).first;
    if (abs(want) > 13) {
      EXPECT_FALSE(got.has_value()) << r.get_str();
    } else {
      ASSERT_TRUE(got.has_value()) << r.get_str();
      EXPECT_EQ(*got, want);
      ++agreed;
    }
  }
  EXPECT_GE(agreed, 10);
}

TEST(Search, QuadraticMahlerMatchesNumeric) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 4000; ++i) {
    mpz_class A = 1 + (long)(rng() % 8);
    mpz_class B = (long)(rng() % 17) - 8;
    mpz_class C = (long)(rng() % 17) - 8;
    mpz_class disc = B * B - 4 * A * C;
    if (disc == 0) continue;
    if (mpz_perfect_square_p(disc.get_mpz_t())) continue;
    auto [d, t] = squarefree_decompose(disc);
    mpq_class U(1 + (long)(rng() % 40), 1 + (long)(rng() % 4));
    U.canonicalize();

    // Numeric Mahler measure: A * max(1,|r1|) * max(1,|r2|).
    double a = A.get_d(), b = B.get_d(), c = C.get_d();
    double m;
    if (disc < 0) {
      // conjugate pair: |r1| = |r2| = sqrt(C/A), so M = max(A, C)
      m = std::max(a, c);
    } else {
      double s = std::sqrt(disc.get_d());
      double r1 = (-b + s) / (2 * a), r2 = (-b - s) / (2 * a);
      m = a * std::max(1.0, std::abs(r1)) * std::max(1.0, std::abs(r2));
    }
    double u = U.get_d();
    if (std::abs(m - u) < 1e-9 * std::max(1.0, u)) continue;  // knife edge
    EXPECT_EQ(detail::quadratic_mahler_leq(A, B, C, t, d, U), m <= u)
        << A << "x^2+" << B << "x+" << C << " vs " << U;
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(Search, EnumerateXSpecExamples) {
  auto r0 = enumerate_x(QuadField::rationals(), 0.0);
  EXPECT_EQ(strs(r0), (std::set<std::string>{"0", "1", "-1"}));

  auto r2 = enumerate_x(QuadField::rationals(), std::log(2.0));
  EXPECT_EQ(r2.size(), 7u);
  EXPECT_EQ(strs(r2),
            (std::set<std::string>{"0", "1", "-1", "2", "-2", "1/2", "-1/2"}));

  // Height-1 elements of Q(sqrt -3): the primitive 3rd and 6th roots of 1.
  auto c0 = enumerate_x(QuadField(mpz_class(-3)), 0.0);
  EXPECT_EQ(c0.size(), 4u);
  EXPECT_EQ(strs(c0), (std::set<std::string>{
                          "(1+1*sqrt(-3))/2", "(1-1*sqrt(-3))/2",
                          "(-1+1*sqrt(-3))/2", "(-1-1*sqrt(-3))/2"}));
}

TEST(Search, EnumerateXMatchesBruteForce) {
  for (long d : {-3L, 5L, -20L}) {
    QuadField F((mpz_class(d)));
    auto fast = enumerate_x(F, 1.2);
    auto slow = brute_enumerate(F, 1.2);
    EXPECT_EQ(fast.size(), slow.size()) << "d=" << d;
    EXPECT_EQ(strs(fast), strs(slow)) << "d=" << d;
  }
  auto fastq = enumerate_x(QuadField::rationals(), 1.2);
  auto slowq = brute_enumerate(QuadField::rationals(), 1.2);
  EXPECT_EQ(strs(fastq), strs(slowq));
}

TEST(Search, TaskChunkingPreservesOrderAndContent) {
  for (const QuadField& F : {QuadField::rationals(), QuadField(mpz_class(-3)),
                             QuadField(mpz_class(5))}) {
    auto whole = enumerate_x(F, 1.3);
    // No duplicates, deterministic.
    std::set<std::string> seen = strs(whole);
    EXPECT_EQ(seen.size(), whole.size());
    for (long pieces : {2L, 5L}) {
      auto tasks = make_tasks(F, 1.3, pieces);
      EXPECT_LE(tasks.size(), static_cast<size_t>(pieces));
      std::vector<QuadFieldElement> cat;
      for (const auto& t : tasks) {
        auto part = run_task(t);
        cat.insert(cat.end(), part.begin(), part.end());
      }
      ASSERT_EQ(cat.size(), whole.size());
      for (size_t i = 0; i < cat.size(); ++i)
        EXPECT_EQ(cat[i], whole[i]) << F.str() << " piece " << pieces;
    }
  }
}

TEST(Search, XClassKey) {
  QuadField F((mpz_class(5)));
  QuadFieldElement rt = QuadFieldElement::sqrt_generator(F);
  QuadFieldElement x = (QuadFieldElement::from_int(1) + rt) /
                       QuadFieldElement::from_int(2);
  EXPECT_EQ(detail::x_class_key(x), detail::x_class_key(x.conjugate()));
  EXPECT_NE(detail::x_class_key(x), detail::x_class_key(x + QuadFieldElement::from_int(1)));
  EXPECT_EQ(detail::x_class_key(QuadFieldElement::from_rational(mpq_class(3, 2))),
            "r:3/2");
  // Same minimal polynomial over different representations.
  QuadFieldElement y = (QuadFieldElement::from_int(2) + rt * QuadFieldElement::from_int(2)) /
                       QuadFieldElement::from_int(4);
  EXPECT_EQ(detail::x_class_key(x), detail::x_class_key(y));
}

TEST(Search, SameHeightClass) {
  auto E = curve("65a1:[1,0,0,-1,0]");
  CurvePoint P = pt(E, 1, 0);
  CurvePoint T = pt(E, 0, 0);
  ASSERT_TRUE(T.is_torsion());
  ASSERT_FALSE(P.is_torsion());
  EXPECT_TRUE(detail::same_height_class(P, P));
  EXPECT_TRUE(detail::same_height_class(P, -P));
  EXPECT_TRUE(detail::same_height_class(P, P + T));
  EXPECT_FALSE(detail::same_height_class(P, P + P));

  // Galois conjugates agree; distinct fields never do.
  auto E37 = curve("37a1:[0,0,1,-1,0]");
  auto q = lift_x(E37, QuadField(mpz_class(97)), QuadFieldElement::from_int(3));
  ASSERT_EQ(q.size(), 2u);
  EXPECT_TRUE(detail::same_height_class(q[0], q[1]));
  CurvePoint P37 = pt(E37, 0, 0);
  EXPECT_FALSE(detail::same_height_class(q[0], P37));
  EXPECT_TRUE(detail::same_height_class(CurvePoint(E37), CurvePoint(E37)));
  EXPECT_FALSE(detail::same_height_class(CurvePoint(E37), P37));
}

TEST(Search, InitialSearchFindsWitness) {
  SearchConfig cfg;
  InitialSearchResult r = initial_search(parse_curve("37a1:[0,0,1,-1,0]"), cfg);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.degree, 1);
  EXPECT_EQ(r.witness->x().rational_value(), 0);
  EXPECT_NEAR(r.d_prime, 0.051111408239968833533, 1e-9);
}

TEST(Search, CertifyProvedAndReplay) {
  CurveModel E = parse_curve("37a1:[0,0,1,-1,0]");
  SearchConfig cfg;
  SearchCertificate cert = certify_minimum(E, cfg);
  EXPECT_EQ(cert.status, SearchStatus::Proved);
  ASSERT_TRUE(cert.winner.has_value());
  EXPECT_EQ(cert.winner->x().rational_value(), 0);
  EXPECT_EQ(cert.winner_degree, 1);
  EXPECT_NEAR(cert.winner_height.value(), 0.051111408239968833533, 1e-12);
  EXPECT_FALSE(cert.winner->is_torsion());

  // Dominance: winner score <= witness score, equality when same point.
  ASSERT_TRUE(cert.min_height_times_degree.has_value());
  EXPECT_LE(*cert.min_height_times_degree, *cert.d_prime + 1e-12);

  // Field reduction is reproducible from the recorded cutoff.
  auto expect_fields = enumerate_fields(mpz_class(*cert.delta_cutoff));
  ASSERT_EQ(cert.fields_searched.size(), expect_fields.size());
  for (size_t i = 0; i < expect_fields.size(); ++i)
    EXPECT_EQ(cert.fields_searched[i], expect_fields[i]);
  EXPECT_LT(*cert.delta_cutoff, cfg.delta_max);

  // Bit-identical replay.
  SearchCertificate again = replay_certificate(E, cert, cfg);
  EXPECT_EQ(cert.json(), again.json());

  // Worker count changes nothing.
  SearchConfig cfg3 = cfg;
  cfg3.workers = 3;
  SearchCertificate c3 = certify_minimum(E, cfg3);
  EXPECT_EQ(cert.json(), c3.json());
}

TEST(Search, NoPointFoundWithinEffort) {
  SearchConfig cfg;
  cfg.initial_effort_height = 0;
  cfg.initial_effort_fields = 0;
  SearchCertificate cert = certify_minimum(parse_curve("[0,0,0,0,6]"), cfg);
  EXPECT_EQ(cert.status, SearchStatus::NoPointFound);
  EXPECT_FALSE(cert.winner.has_value());
  EXPECT_FALSE(cert.witness.has_value());
  EXPECT_FALSE(cert.d_prime.has_value());
  ASSERT_EQ(cert.fields_searched.size(), 1u);
  EXPECT_TRUE(cert.fields_searched[0].is_rational());
  EXPECT_NE(cert.json().find("NO_POINT_FOUND"), std::string::npos);
}

TEST(Search, HeuristicFallback) {
  SearchConfig cfg;
  cfg.heuristic_disc_cap = 50;
  CurveModel E = parse_curve("11a1:[0,-1,1,-10,-20]");
  SearchCertificate cert = certify_minimum(E, cfg);
  EXPECT_EQ(cert.status, SearchStatus::Heuristic);
  EXPECT_GE(*cert.delta_cutoff, cfg.delta_max);

  auto expect_fields = enumerate_fields(mpz_class(50));
  ASSERT_EQ(cert.fields_searched.size(), expect_fields.size());
  for (size_t i = 0; i < expect_fields.size(); ++i)
    EXPECT_EQ(cert.fields_searched[i], expect_fields[i]);

  // The known smallest point: rational x = -6 over Q(sqrt -7).
  ASSERT_TRUE(cert.winner.has_value());
  EXPECT_EQ(cert.winner_degree, 2);
  EXPECT_EQ(cert.winner->x().rational_value(), -6);
  EXPECT_EQ(cert.winner->field().d(), -7);
  EXPECT_GT(cert.winner_height.value(), 0.01);
  EXPECT_LT(cert.winner_height.value(), 0.5);
  EXPECT_LE(*cert.min_height_times_degree, *cert.d_prime + 1e-12);
  EXPECT_NE(cert.json().find("HEURISTIC"), std::string::npos);
}

TEST(Search, AmbiguousTieIsSurfaced) {
  // Halving the generator (1, 0) lands at height hhat/4 over both Q(sqrt 5)
  // and Q(sqrt 13); no precision separates an exact cross-field tie, and the
  // certificate must refuse to pick.
  SearchConfig cfg;
  CurveModel E = parse_curve("65a1:[1,0,0,-1,0]");
  try {
    certify_minimum(E, cfg);
    FAIL() << "expected AmbiguousMinimum";
  } catch (const AmbiguousMinimum& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("AMBIGUOUS_MINIMUM"), std::string::npos);
    bool has5 = msg.find("sqrt(5)") != std::string::npos;
    bool has13 = msg.find("sqrt(13)") != std::string::npos;
    EXPECT_TRUE(has5 && has13) << msg;
    EXPECT_NE(e.first, e.second);
  }
}

TEST(Search, NonMinimalInputModel) {
  // Same curve twice: once minimal, once scaled by u = 2.  Enumeration runs
  // on the minimal model either way, so the certificates agree numerically
  // and the winner comes back in the caller's coordinates.
  SearchConfig cfg;
  CurveModel Emin = parse_curve("37a1:[0,0,1,-1,0]");
  CurveModel Ebig = parse_curve("[0,0,8,-16,0]");
  SearchCertificate a = certify_minimum(Emin, cfg);
  SearchCertificate b = certify_minimum(Ebig, cfg);
  EXPECT_EQ(b.status, SearchStatus::Proved);
  EXPECT_EQ(*a.delta_cutoff, *b.delta_cutoff);
  EXPECT_EQ(*a.d_prime, *b.d_prime);
  EXPECT_EQ(a.b_e, b.b_e);
  ASSERT_TRUE(b.winner.has_value());
  EXPECT_TRUE(b.winner->curve_ptr()->same_equation(Ebig));
  EXPECT_EQ(b.winner->str(), "(0, 0)");
  EXPECT_EQ(b.winner_height.value(), a.winner_height.value());

  SearchCertificate r = replay_certificate(Ebig, b, cfg);
  EXPECT_EQ(r.json(), b.json());
}
