#pragma once
// Bounded-height x-coordinate enumeration over Q and quadratic fields, the
// initial small-point search, and the certified-minimum pipeline.
//
// A certificate is only as strong as the enumeration behind it, so the
// stream layer is written against exact predicates: integer coefficient
// boxes, exact Mahler-measure comparisons, and congruence conditions solved
// by modular square roots.  Floating point only enters through the cutoff
// caps, which are rounded upward (enumerating slightly too much is safe).

#include <gmpxx.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "minpoint/bounds.hpp"
#include "minpoint/config.hpp"
#include "minpoint/curve.hpp"
#include "minpoint/heights.hpp"
#include "minpoint/interval.hpp"
#include "minpoint/numeric.hpp"
#include "minpoint/qfield.hpp"

namespace minpoint {

namespace detail {

// -------- modular square roots --------

inline mpz_class powm(const mpz_class& b, const mpz_class& e, const mpz_class& m) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

// One square root of a modulo an odd prime p (Tonelli-Shanks), assuming a is
// a nonzero quadratic residue.
inline mpz_class sqrt_mod_odd_prime(const mpz_class& a, const mpz_class& p) {
  if (p % 4 == 3) return powm(a, (p + 1) / 4, p);
  mpz_class q = p - 1;
  long s = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++s;
  }
  mpz_class z = 2;
  while (kronecker(z, p) != -1) ++z;
  mpz_class c = powm(z, q, p);
  mpz_class t = powm(a, q, p);
  mpz_class r = powm(a, (q + 1) / 2, p);
  long m = s;
  while (t != 1) {
    mpz_class t2 = t;
    long i = 0;
    while (t2 != 1) {
      t2 = t2 * t2 % p;
      ++i;
      if (i == m) throw std::logic_error("sqrt_mod_odd_prime: nonresidue input");
    }
    mpz_class b = c;
    for (long j = 0; j < m - i - 1; ++j) b = b * b % p;
    m = i;
    c = b * b % p;
    t = t * c % p;
    r = r * b % p;
  }
  return r;
}

// Square roots of a unit u modulo p^k, p odd.  0 or 2 values.
inline std::vector<mpz_class> sqrt_mod_odd_unit(const mpz_class& u,
                                                const mpz_class& p, long k,
                                                const mpz_class& pk) {
  if (kronecker(u % p, p) != 1) return {};
  mpz_class s = sqrt_mod_odd_prime(u % p, p);
  mpz_class pj = p;
  for (long j = 1; j < k; ++j) {
    // lift s^2 = u (mod p^j) to mod p^{j+1}
    mpz_class pj1 = pj * p;
    mpz_class num = ((u - s * s) / pj) % p;
    if (num < 0) num += p;
    mpz_class inv;
    mpz_class twos = 2 * s % p;
    mpz_invert(inv.get_mpz_t(), twos.get_mpz_t(), p.get_mpz_t());
    s = (s + num * inv % p * pj) % pj1;
    pj = pj1;
  }
  std::vector<mpz_class> out{s, (pk - s) % pk};
  std::sort(out.begin(), out.end());
  return out;
}

// Square roots of a unit u modulo 2^k.  0, 1, 2, or 4 values.
inline std::vector<mpz_class> sqrt_mod_two_unit(const mpz_class& u, long k,
                                                const mpz_class& pk) {
  if (k == 1) return {mpz_class(1)};
  if (k == 2) {
    if (u % 4 == 1) return {mpz_class(1), mpz_class(3)};
    return {};
  }
  if (u % 8 != 1) return {};
  mpz_class s = 1;
  for (long j = 3; j < k; ++j) {
    mpz_class r = (s * s - u) >> j;
    if (mpz_odd_p(r.get_mpz_t())) s += mpz_class(1) << (j - 1);
  }
  mpz_class half = mpz_class(1) << (k - 1);
  std::set<mpz_class> vals{s % pk, (pk - s) % pk, (s + half) % pk,
                           (pk - s + half) % pk};
  return std::vector<mpz_class>(vals.begin(), vals.end());
}

// Square roots of n modulo p^k.
inline std::vector<mpz_class> sqrt_mod_prime_power(const mpz_class& n,
                                                   const mpz_class& p, long k) {
  mpz_class pk = 1;
  for (long j = 0; j < k; ++j) pk *= p;
  mpz_class a = n % pk;
  if (a < 0) a += pk;
  if (a == 0) {
    // r must be divisible by p^ceil(k/2)
    mpz_class step = 1;
    for (long j = 0; j < (k + 1) / 2; ++j) step *= p;
    std::vector<mpz_class> out;
    for (mpz_class r = 0; r < pk; r += step) out.push_back(r);
    return out;
  }
  long v = ord_p(a, p);
  if (v % 2 != 0) return {};
  mpz_class pv = 1, phalf = 1;
  for (long j = 0; j < v; ++j) pv *= p;
  for (long j = 0; j < v / 2; ++j) phalf *= p;
  mpz_class u = a / pv;
  long ku = k - v;
  mpz_class pku = pk / pv;
  std::vector<mpz_class> unit = (p == 2) ? sqrt_mod_two_unit(u, ku, pku)
                                         : sqrt_mod_odd_unit(u, p, ku, pku);
  if (unit.empty()) return {};
  // r = p^{v/2} (s + t p^{k-v}) for t in [0, p^{v/2})
  std::vector<mpz_class> out;
  for (const mpz_class& s : unit)
    for (mpz_class t = 0; t < phalf; ++t) out.push_back(phalf * (s + t * pku) % pk);
  std::sort(out.begin(), out.end());
  return out;
}

// All r in [0, m) with r^2 = n (mod m), for m >= 1.
inline std::vector<mpz_class> all_sqrt_mod(const mpz_class& n, const mpz_class& m) {
  if (m <= 0) throw std::domain_error("all_sqrt_mod: modulus must be positive");
  if (m == 1) return {mpz_class(0)};
  auto fac = factorize(m);
  std::vector<mpz_class> sols{mpz_class(0)};
  mpz_class mod_so_far = 1;
  for (const auto& [p, e] : fac) {
    mpz_class pe = 1;
    for (long j = 0; j < e; ++j) pe *= p;
    auto part = sqrt_mod_prime_power(n, p, e);
    if (part.empty()) return {};
    // CRT: combine sols (mod mod_so_far) with part (mod pe)
    std::vector<mpz_class> next;
    mpz_class inv_m, inv_pe;
    mpz_class nm = mod_so_far * pe;
    mpz_invert(inv_m.get_mpz_t(), mod_so_far.get_mpz_t(), pe.get_mpz_t());
    for (const mpz_class& r1 : sols)
      for (const mpz_class& r2 : part) {
        mpz_class k = (r2 - r1) % pe * inv_m % pe;
        if (k < 0) k += pe;
        next.push_back((r1 + k * mod_so_far) % nm);
      }
    sols = std::move(next);
    mod_so_far = nm;
  }
  std::sort(sols.begin(), sols.end());
  return sols;
}

// -------- exact Mahler acceptance --------

// Decides M(A x^2 + B x + C) <= U for an irreducible quadratic with A > 0
// and B^2 - 4AC = t^2 d (t > 0, d squarefree).  Exact rational arithmetic;
// M itself may be irrational when d > 0.
inline bool quadratic_mahler_leq(const mpz_class& A, const mpz_class& B,
                                 const mpz_class& C, const mpz_class& t,
                                 const mpz_class& d, const mpq_class& U) {
  if (A > U) return false;
  if (d < 0) return mpq_class(C) <= U;  // conjugate pair: M = max(A, C), C > 0
  mpz_class aB = abs(B);
  mpz_class t2d = t * t * d;
  // |largest root| >= 1  iff  aB + t sqrt(d) >= 2A
  bool big_max = (2 * A - aB <= 0) || (t2d >= (2 * A - aB) * (2 * A - aB));
  // |smallest root| >= 1  iff  2|C| >= aB + t sqrt(d)
  mpz_class twoC = 2 * abs(C);
  bool big_min = (twoC - aB >= 0) && ((twoC - aB) * (twoC - aB) >= t2d);
  if (big_max && big_min) return mpq_class(abs(C)) <= U;
  if (!big_max) return true;  // M = A, already checked
  // mixed: M = (aB + t sqrt(d)) / 2 <= U  iff  t sqrt(d) <= 2U - aB
  mpq_class rhs = 2 * U - mpq_class(aB);
  if (rhs < 0) return false;
  return mpq_class(t2d) <= rhs * rhs;
}

// -------- cutoff caps --------

// floor(exp(c)) with a one-part-in-2^32 upward allowance, so that intended
// boundary candidates (max(|p|,|q|) = 2 at cutoff log 2, say) land inside
// regardless of how the caller's double rounded.
inline mpz_class height_cap_integer(double cutoff) {
  double u = RealInterval::from_double(cutoff, 96).exp().hi_d();
  u *= 1.0 + std::ldexp(1.0, -32);
  if (!(u >= 1.0)) return 0;
  if (u > 1e300) throw std::overflow_error("enumeration cap overflows");
  return mpz_class(u);
}

// Upper rational cap on the Mahler measure at the given absolute-height
// cutoff for degree-2 elements: exp(2 * cutoff), same upward allowance.
inline mpq_class mahler_cap(double cutoff) {
  double u = RealInterval::from_double(2 * cutoff, 96).exp().hi_d();
  u *= 1.0 + std::ldexp(1.0, -32);
  if (!(u >= 0)) return 0;
  if (u > 1e300) throw std::overflow_error("enumeration cap overflows");
  return mpq_class(u);
}

inline mpz_class floor_q(const mpq_class& q) {
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

inline mpz_class fdiv(const mpz_class& a, const mpz_class& b) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

inline mpz_class cdiv(const mpz_class& a, const mpz_class& b) {
  mpz_class q;
  mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

// -------- residue tables --------

// Per-worker scratch: for small leading coefficients A the square roots
// modulo 4A are tabulated once and shared across fields and t values.
struct ResidueScratch {
  static constexpr long kTableCap = 1 << 20;
  std::map<long, std::vector<std::vector<long>>> tables;

  const std::vector<std::vector<long>>* table_for(const mpz_class& A) {
    if (!A.fits_slong_p()) return nullptr;
    long m = 4 * A.get_si();
    if (m <= 0 || m > kTableCap) return nullptr;
    auto it = tables.find(m);
    if (it == tables.end()) {
      std::vector<std::vector<long>> t(m);
      for (long r = 0; r < m; ++r) t[(r * r) % m].push_back(r);
      it = tables.emplace(m, std::move(t)).first;
    }
    return &it->second;
  }
};

}  // namespace detail

// A contiguous slice of one field's enumeration: the denominator range for
// rational x, the leading-coefficient range for quadratic x.  Slices with
// identical field and cutoff partition the stream exactly.
struct EnumerationTask {
  QuadField field;
  double weil_cutoff = 0;
  mpz_class lo, hi;  // inclusive
};

namespace detail {

// Canonical order: rationals by (q, p) ascending; quadratic minimal
// polynomials by (A, t, B) ascending, within one polynomial the +sqrt(d)
// root before its conjugate.
template <class Fn>
void scan_rational_task(const EnumerationTask& task, Fn&& fn) {
  mpz_class cap = height_cap_integer(task.weil_cutoff);
  mpz_class qlo = std::max(mpz_class(1), task.lo);
  mpz_class qhi = std::min(cap, task.hi);
  for (mpz_class q = qlo; q <= qhi; ++q)
    for (mpz_class p = -cap; p <= cap; ++p) {
      if (gcd(p, q) != 1) continue;
      mpq_class x(p, q);
      x.canonicalize();
      fn(x);
    }
}

template <class Fn>
void scan_quadratic_task(const EnumerationTask& task, ResidueScratch& scratch,
                         Fn&& fn) {
  const mpz_class& d = task.field.d();
  mpq_class U = mahler_cap(task.weil_cutoff);
  mpz_class Amax = floor_q(U);
  mpz_class Bcap = floor_q(2 * U);
  mpz_class tmax = sqrt(floor_q(4 * U * U / mpq_class(abs(d))));
  mpz_class Alo = std::max(mpz_class(1), task.lo);
  mpz_class Ahi = std::min(Amax, task.hi);
  std::vector<mpz_class> bs;
  auto push_bs = [&](const mpz_class& r, const mpz_class& fourA) {
    // B = r + k * 4A within |B| <= Bcap
    mpz_class kmin = cdiv(-Bcap - r, fourA);
    mpz_class kmax = fdiv(Bcap - r, fourA);
    for (mpz_class k = kmin; k <= kmax; ++k) bs.push_back(r + k * fourA);
  };
  for (mpz_class A = Alo; A <= Ahi; ++A) {
    mpz_class fourA = 4 * A;
    const auto* table = scratch.table_for(A);
    for (mpz_class t = 1; t <= tmax; ++t) {
      mpz_class t2d = t * t * d;
      if (d < 0 && -t2d > fourA * Amax) break;  // C >= |t^2 d|/4A > floor(U)
      mpz_class res = t2d % fourA;
      if (res < 0) res += fourA;
      bs.clear();
      if (table) {
        for (long r : (*table)[res.get_si()]) push_bs(r, fourA);
      } else {
        for (const mpz_class& r : all_sqrt_mod(res, fourA)) push_bs(r, fourA);
      }
      std::sort(bs.begin(), bs.end());
      for (const mpz_class& B : bs) {
        mpz_class C = (B * B - t2d) / fourA;
        if (gcd(gcd(A, B), C) != 1) continue;
        if (!quadratic_mahler_leq(A, B, C, t, d, U)) continue;
        fn(A, B, C, t);
      }
    }
  }
}

}  // namespace detail

// Splits one field's enumeration into at most `pieces` contiguous tasks.
inline std::vector<EnumerationTask> make_tasks(const QuadField& F, double cutoff,
                                               long pieces) {
  mpz_class top = F.is_rational()
                      ? detail::height_cap_integer(cutoff)
                      : detail::floor_q(detail::mahler_cap(cutoff));
  std::vector<EnumerationTask> out;
  if (top < 1 || pieces < 1) {
    if (top >= 1) out.push_back({F, cutoff, 1, top});
    return out;
  }
  mpz_class chunk = (top + pieces - 1) / pieces;
  for (mpz_class lo = 1; lo <= top; lo += chunk) {
    mpz_class hi = lo + chunk - 1;
    if (hi > top) hi = top;
    out.push_back({F, cutoff, lo, hi});
  }
  return out;
}

// Every x in the task's slice, in canonical order.
inline std::vector<QuadFieldElement> run_task(const EnumerationTask& task) {
  std::vector<QuadFieldElement> out;
  if (task.field.is_rational()) {
    detail::scan_rational_task(task, [&](const mpq_class& x) {
      out.push_back(QuadFieldElement::from_rational(x));
    });
  } else {
    detail::ResidueScratch scratch;
    const mpz_class& d = task.field.d();
    detail::scan_quadratic_task(
        task, scratch,
        [&](const mpz_class& A, const mpz_class& B, const mpz_class&,
            const mpz_class& t) {
          out.push_back(QuadFieldElement(-B, t, 2 * A, d));
          out.push_back(QuadFieldElement(-B, -t, 2 * A, d));
        });
  }
  return out;
}

// All x in F with absolute Weil height <= cutoff: rationals p/q with
// max(|p|, |q|) <= exp(cutoff), or quadratic elements of F with Mahler
// measure of the primitive minimal polynomial <= exp(2 cutoff).  No
// duplicates, deterministic order.
inline std::vector<QuadFieldElement> enumerate_x(const QuadField& F, double cutoff) {
  auto tasks = make_tasks(F, cutoff, 1);
  std::vector<QuadFieldElement> out;
  for (const auto& t : tasks) {
    auto part = run_task(t);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

namespace detail {

// Squarefree part of a nonzero rational, provided it is `bound`-smooth up to
// a perfect square: strips primes <= bound, then requires the residual to be
// a square.  nullopt means the squarefree part certainly exceeds bound.
inline std::optional<mpz_class> bounded_squarefree_part(const mpq_class& r,
                                                        long bound) {
  // not thread safe; only the sequential rational sweep calls this
  static std::map<long, std::vector<long>> prime_cache;
  std::vector<long>& primes = prime_cache[bound];
  if (primes.empty()) {
    std::vector<bool> sieve(bound + 1, true);
    for (long i = 2; i <= bound; ++i) {
      if (!sieve[i]) continue;
      primes.push_back(i);
      for (long j = 2 * i; j <= bound; j += i) sieve[j] = false;
    }
  }
  mpz_class n = r.get_num() * r.get_den();
  if (n == 0) throw std::domain_error("bounded_squarefree_part: zero");
  int sign = (n < 0) ? -1 : 1;
  n = abs(n);
  mpz_class sf = 1;
  for (long p : primes) {
    if (mpz_class(p) * p > n) break;
    long e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e % 2 == 1) sf *= p;
  }
  if (n > 1) {
    if (n <= bound) {
      sf *= n;  // n is prime here: no factor <= bound remains and n <= bound
    } else if (mpz_perfect_square_p(n.get_mpz_t())) {
      // square residual contributes nothing
    } else {
      return std::nullopt;  // residual's squarefree part exceeds bound
    }
  }
  if (sf > bound) return std::nullopt;
  return sign * sf;
}

// Minimal-polynomial class key: P, -P, Galois conjugates of either, and any
// point sharing their x all map to one key.
inline std::string x_class_key(const QuadFieldElement& x) {
  if (x.is_rational()) return "r:" + x.rational_value().get_str();
  mpq_class tr(2 * x.a(), x.c());
  mpq_class nm(x.a() * x.a() - x.b() * x.b() * x.d(), x.c() * x.c());
  tr.canonicalize();
  nm.canonicalize();
  mpz_class L = lcm(tr.get_den(), nm.get_den());
  mpz_class A = L, B = -mpz_class(tr.get_num() * (L / tr.get_den()));
  mpz_class C = nm.get_num() * (L / nm.get_den());
  mpz_class g = gcd(gcd(A, B), C);
  if (g > 1) {
    A /= g;
    B /= g;
    C /= g;
  }
  return "q:" + A.get_str() + "," + B.get_str() + "," + C.get_str();
}

inline std::string quadratic_class_key(const mpz_class& A, const mpz_class& B,
                                       const mpz_class& C) {
  return "q:" + A.get_str() + "," + B.get_str() + "," + C.get_str();
}

// True when P and Q certainly share a canonical height: equal x classes,
// or differing by sign, Galois conjugation, or a torsion translate.
inline bool same_height_class(const CurvePoint& P, const CurvePoint& Q) {
  if (P.is_infinity() || Q.is_infinity()) return P.is_infinity() && Q.is_infinity();
  if (x_class_key(P.x()) == x_class_key(Q.x())) return true;
  QuadField fp = P.field(), fq = Q.field();
  if (!fp.is_rational() && !fq.is_rational() && fp != fq) return false;
  std::vector<CurvePoint> shifts{Q - P, Q + P};
  if (!fp.is_rational()) {
    CurvePoint Pc(P.curve_ptr(), P.x().conjugate(), P.y().conjugate());
    shifts.push_back(Q - Pc);
    shifts.push_back(Q + Pc);
  }
  for (const auto& R : shifts)
    if (R.is_torsion()) return true;
  return false;
}

struct Candidate {
  CurvePoint point;
  int degree;
  HeightValue height;
  size_t order;
};

// Sequential evaluation pipeline shared by the initial search and the main
// sweeps.  Pruning is certified: a candidate is dropped only when the
// doubling oracle places hhat * degree strictly above the budget.
class SearchDriver {
 public:
  SearchDriver(std::shared_ptr<const CurveModel> curve, HeightEngine& engine,
               double b_e, mpfr_prec_t prec)
      : curve_(std::move(curve)),
        engine_(engine),
        be_(RealInterval::from_double(b_e, 96)),
        prec_(prec) {}

  void set_budget(double budget, bool dynamic) {
    budget_ = budget;
    dynamic_ = dynamic;
  }
  double budget() const { return budget_; }

  const std::vector<Candidate>& kept() const { return kept_; }
  std::vector<Candidate>& kept() { return kept_; }

  // Direct candidate (known point or replay seed).
  void offer_point(const CurvePoint& P) {
    if (P.is_infinity()) return;
    std::string key = x_class_key(P.x());
    if (!seen_.insert(key).second) return;
    evaluate(P);
  }

  // Rational x: lift over Q, else over the residue field of its
  // y-quadratic when that field is in `allowed` (keys are squarefree d).
  void offer_rational(const mpq_class& xq, const std::set<mpz_class>& allowed,
                      long sf_bound) {
    std::string key = "r:" + xq.get_str();
    if (seen_.count(key)) return;
    QuadFieldElement x = QuadFieldElement::from_rational(xq);
    auto lifts = lift_x(curve_, QuadField::rationals(), x);
    if (lifts.empty()) {
      mpq_class lin = curve_->a1() * xq + curve_->a3();
      mpq_class rhs = xq * xq * xq + curve_->a2() * xq * xq +
                      curve_->a4() * xq + curve_->a6();
      mpq_class delta = lin * lin + 4 * rhs;
      if (delta == 0) return;  // double root lifts rationally; unreachable
      auto sf = bounded_squarefree_part(delta, sf_bound);
      if (!sf || *sf == 1 || !allowed.count(*sf)) return;
      lifts = lift_x(curve_, QuadField(*sf), x);
      if (lifts.empty()) throw std::logic_error("offer_rational: lift vanished");
    }
    seen_.insert(key);
    evaluate(lifts.front());
  }

  // Quadratic x given by its primitive minimal polynomial over the field of d.
  void offer_quadratic(const mpz_class& A, const mpz_class& B, const mpz_class& C,
                       const mpz_class& t, const QuadField& F) {
    if (!seen_.insert(quadratic_class_key(A, B, C)).second) return;
    QuadFieldElement x(-B, t, 2 * A, F.d());
    auto lifts = lift_x(curve_, F, x);
    if (lifts.empty()) return;
    evaluate(lifts.front());
  }

  bool x_seen(const std::string& key) const { return seen_.count(key) != 0; }
  void mark_seen(const std::string& key) { seen_.insert(key); }

 private:
  void evaluate(const CurvePoint& P) {
    int deg = P.field().degree();
    for (int n = 0; n <= 3; ++n) {
      try {
        RealInterval iv = engine_.limit_oracle(P, n, be_, 96);
        if (iv.lo_d() * deg > budget_) return;
      } catch (const OracleUnavailable&) {
        break;
      }
    }
    if (P.is_torsion()) return;
    HeightValue h = engine_.canonical_height(P, prec_);
    if (h.exact_zero) return;
    double score = h.interval.hi_d() * deg;
    if (dynamic_ && score < budget_) budget_ = score;
    kept_.push_back(Candidate{P, deg, h, order_++});
  }

  std::shared_ptr<const CurveModel> curve_;
  HeightEngine& engine_;
  RealInterval be_;
  mpfr_prec_t prec_;
  std::set<std::string> seen_;
  std::vector<Candidate> kept_;
  double budget_ = std::numeric_limits<double>::infinity();
  bool dynamic_ = false;
  size_t order_ = 0;
};

// Lifted survivor of a worker scan, merged in deterministic task order.
struct LiftedX {
  std::string key;
  CurvePoint point;
};

inline std::vector<LiftedX> lift_task(const EnumerationTask& task,
                                      const std::shared_ptr<const CurveModel>& curve,
                                      ResidueScratch& scratch) {
  std::vector<LiftedX> out;
  scan_quadratic_task(task, scratch,
                      [&](const mpz_class& A, const mpz_class& B,
                          const mpz_class& C, const mpz_class& t) {
                        QuadFieldElement x(-B, t, 2 * A, task.field.d());
                        auto lifts = lift_x(curve, task.field, x);
                        if (lifts.empty()) return;
                        out.push_back(
                            LiftedX{quadratic_class_key(A, B, C), lifts.front()});
                      });
  return out;
}

// Runs the degree-2 stream of each field through the driver, fanning the
// per-field tasks across `workers` threads.  Workers only enumerate and
// lift; evaluation stays on this thread, in task order, so results do not
// depend on the worker count.
inline void sweep_quadratic_fields(SearchDriver& drv,
                                   const std::shared_ptr<const CurveModel>& curve,
                                   const std::vector<QuadField>& fields,
                                   double cutoff, long workers) {
  std::vector<EnumerationTask> tasks;
  for (const auto& F : fields) {
    if (F.is_rational()) continue;
    long pieces = workers > 1 ? 2 * workers : 1;
    auto part = make_tasks(F, cutoff, pieces);
    tasks.insert(tasks.end(), part.begin(), part.end());
  }
  std::vector<std::vector<LiftedX>> results(tasks.size());
  if (workers > 1 && tasks.size() > 1) {
    std::atomic<size_t> next{0};
    auto body = [&]() {
      ResidueScratch scratch;
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= tasks.size()) break;
        results[i] = lift_task(tasks[i], curve, scratch);
      }
    };
    std::vector<std::thread> pool;
    for (long w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  } else {
    ResidueScratch scratch;
    for (size_t i = 0; i < tasks.size(); ++i)
      results[i] = lift_task(tasks[i], curve, scratch);
  }
  for (const auto& part : results)
    for (const auto& lx : part) {
      if (drv.x_seen(lx.key)) continue;
      // offer_point re-derives the same key from x and inserts it
      drv.offer_point(lx.point);
    }
}

inline void sweep_rationals(SearchDriver& drv, double cutoff,
                            const std::vector<QuadField>& allowed_fields) {
  std::set<mpz_class> allowed;
  long sf_bound = 2;
  for (const auto& F : allowed_fields)
    if (!F.is_rational()) {
      allowed.insert(F.d());
      mpz_class a = abs(F.d());
      if (a.fits_slong_p() && a.get_si() > sf_bound) sf_bound = a.get_si();
    }
  EnumerationTask task{QuadField::rationals(), cutoff, 1,
                       height_cap_integer(cutoff)};
  scan_rational_task(task, [&](const mpq_class& x) {
    drv.offer_rational(x, allowed, sf_bound);
  });
}

// The quadratic fields of smallest |disc|, in enumeration order.
inline std::vector<QuadField> initial_field_list(long count) {
  std::vector<QuadField> out;
  mpz_class cap = 64;
  for (;;) {
    out.clear();
    for (const auto& F : enumerate_fields(cap))
      if (!F.is_rational()) out.push_back(F);
    if ((long)out.size() >= count) {
      out.resize(count);
      return out;
    }
    cap *= 2;
  }
}

inline std::vector<CurvePoint> load_known_points(
    const std::shared_ptr<const CurveModel>& curve, const std::string& path) {
  std::vector<CurvePoint> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("known points: cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = trim_copy(line);
    if (body.empty()) continue;
    out.push_back(parse_point(curve, body));
  }
  return out;
}

// The finite-reduction cutoffs bound x-heights on the global minimal model,
// so every enumeration and lift runs there; seeds and results cross the
// bridge in the caller's coordinates.
struct MinimalBridge {
  std::shared_ptr<const CurveModel> input;
  std::shared_ptr<const CurveModel> search;
  Transform to_min;
  bool trivial = true;

  explicit MinimalBridge(const CurveModel& E)
      : input(std::make_shared<const CurveModel>(E)) {
    auto mm = E.minimal_model();
    trivial = mm.first.same_equation(E);
    if (trivial) {
      search = input;
    } else {
      search = std::make_shared<const CurveModel>(mm.first);
      to_min = mm.second;
    }
  }

  CurvePoint to_search(const CurvePoint& P) const {
    return trivial ? P : P.mapped(to_min, search);
  }
  CurvePoint to_input(const CurvePoint& P) const {
    return trivial ? P : P.mapped(to_min.inverse(), input);
  }
};

}  // namespace detail

enum class SearchStatus { Proved, Heuristic, NoPointFound };

inline const char* status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::Proved: return "PROVED";
    case SearchStatus::Heuristic: return "HEURISTIC";
    default: return "NO_POINT_FOUND";
  }
}

// Two candidates whose height intervals cannot be separated at the highest
// working precision; the caller must not assert an argmin.
struct AmbiguousMinimum : std::runtime_error {
  std::string first, second;
  AmbiguousMinimum(const std::string& a, const std::string& b)
      : std::runtime_error("AMBIGUOUS_MINIMUM: cannot separate " + a + " from " + b),
        first(a),
        second(b) {}
};

struct InitialSearchResult {
  std::optional<CurvePoint> witness;
  HeightValue height;
  int degree = 0;
  double d_prime = 0;  // certified upper bound on hhat(witness) * degree
};

struct SearchCertificate {
  std::string curve;
  SearchStatus status = SearchStatus::NoPointFound;
  std::optional<CurvePoint> witness;
  HeightValue witness_height;
  int witness_degree = 0;
  std::optional<double> d_prime;
  BoundTier tier = BoundTier::GlobalSilverman;
  double b_e = 0;
  std::optional<double> delta_cutoff;       // Theorem-2 field cutoff at D'
  std::optional<double> weil_cutoff_deg1;   // x-height cutoffs the sweep used
  std::optional<double> weil_cutoff_deg2;
  std::vector<QuadField> fields_searched;
  double delta_max = 0, weil_max = 0;
  long heuristic_disc_cap = 0;
  std::optional<CurvePoint> winner;
  HeightValue winner_height;
  int winner_degree = 0;
  std::optional<double> min_height_times_degree;
  std::string normalization = kHeightNormalizationTag;

  std::string json() const;
};

namespace detail {

inline void json_opt(std::string& s, const std::optional<double>& v) {
  if (v)
    s += json_double(*v);
  else
    s += "null";
}

inline void json_point(std::string& s, const std::optional<CurvePoint>& P,
                       const HeightValue& h, int degree) {
  if (!P) {
    s += "null";
    return;
  }
  s += "{\"point\":\"" + P->str() + "\",\"field_disc\":" +
       P->field().disc().get_str() + ",\"degree\":" + std::to_string(degree) +
       ",\"height\":" + json_double(h.value()) + "}";
}

}  // namespace detail

inline std::string SearchCertificate::json() const {
  std::string s = "{\"curve\":\"" + curve + "\",\"status\":\"";
  s += status_name(status);
  s += "\",\"witness\":";
  detail::json_point(s, witness, witness_height, witness_degree);
  s += ",\"d_prime\":";
  detail::json_opt(s, d_prime);
  s += ",\"b_e\":{\"tier\":\"";
  s += tier_name(tier);
  s += "\",\"value\":" + detail::json_double(b_e) + "}";
  s += ",\"delta_cutoff\":";
  detail::json_opt(s, delta_cutoff);
  s += ",\"weil_cutoff\":{\"deg1\":";
  detail::json_opt(s, weil_cutoff_deg1);
  s += ",\"deg2\":";
  detail::json_opt(s, weil_cutoff_deg2);
  s += "},\"fields_searched\":[";
  for (size_t i = 0; i < fields_searched.size(); ++i) {
    if (i) s += ",";
    s += fields_searched[i].disc().get_str();
  }
  s += "],\"caps\":{\"delta_max\":" + detail::json_double(delta_max) +
       ",\"weil_max\":" + detail::json_double(weil_max) +
       ",\"heuristic_disc_cap\":" + std::to_string(heuristic_disc_cap) + "}";
  s += ",\"winner\":";
  detail::json_point(s, winner, winner_height, winner_degree);
  s += ",\"min_height_times_degree\":";
  detail::json_opt(s, min_height_times_degree);
  s += ",\"normalization\":\"" + normalization + "\"}";
  return s;
}

namespace detail {

// Certified argmin of hhat over the in-budget candidates.  Equal-height
// classes merge to their earliest representative; genuinely distinct
// overlaps escalate through the precision ladder and then surface as
// AmbiguousMinimum.
struct Selection {
  size_t winner_index;
  double min_score;
};

inline Selection select_winner(std::vector<Candidate>& kept, double d_prime,
                               HeightEngine& engine,
                               const std::vector<mpfr_prec_t>& ladder) {
  auto lo_score = [](const Candidate& c) {
    return c.height.interval.lo_d() * c.degree;
  };
  auto hi_score = [](const Candidate& c) {
    return c.height.interval.hi_d() * c.degree;
  };
  std::vector<size_t> in, straddle;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (hi_score(kept[i]) <= d_prime)
      in.push_back(i);
    else if (lo_score(kept[i]) <= d_prime)
      straddle.push_back(i);
  }
  // membership of straddlers: escalate until the interval clears D'
  std::vector<size_t> unresolved;
  for (size_t i : straddle) {
    bool placed = false;
    for (size_t li = 1; li < ladder.size() && !placed; ++li) {
      kept[i].height = engine.canonical_height(kept[i].point, ladder[li]);
      if (hi_score(kept[i]) <= d_prime) {
        in.push_back(i);
        placed = true;
      } else if (lo_score(kept[i]) > d_prime) {
        placed = true;  // certified outside
      }
    }
    if (!placed && lo_score(kept[i]) <= d_prime) unresolved.push_back(i);
  }
  if (in.empty()) throw std::logic_error("select_winner: empty budget region");
  std::sort(in.begin(), in.end(), [&](size_t a, size_t b) {
    double ha = kept[a].height.interval.hi_d();
    double hb = kept[b].height.interval.hi_d();
    if (ha != hb) return ha < hb;
    return kept[a].order < kept[b].order;
  });
  std::vector<size_t> live(in);
  for (size_t round = 0; round <= ladder.size(); ++round) {
    size_t wi = live[0];
    for (size_t i : live)
      if (kept[i].height.interval.hi_d() < kept[wi].height.interval.hi_d() ||
          (kept[i].height.interval.hi_d() == kept[wi].height.interval.hi_d() &&
           kept[i].order < kept[wi].order))
        wi = i;
    // merge equal-height classes into the earliest representative
    std::vector<size_t> next;
    std::vector<size_t> conflicts;
    for (size_t i : live) {
      if (i == wi) continue;
      if (kept[i].height.interval.lo_d() >= kept[wi].height.interval.hi_d()) {
        next.push_back(i);
        continue;
      }
      if (same_height_class(kept[wi].point, kept[i].point)) {
        if (kept[i].order < kept[wi].order) std::swap(wi, i);
        continue;  // drop the later member of the class
      }
      conflicts.push_back(i);
    }
    if (conflicts.empty()) {
      // the winner is certified <= every surviving candidate
      for (size_t i : unresolved)
        if (kept[i].height.interval.lo_d() < kept[wi].height.interval.hi_d())
          throw AmbiguousMinimum(kept[wi].point.str() + " " +
                                     kept[wi].height.str(),
                                 kept[i].point.str() + " " + kept[i].height.str());
      double min_score = std::numeric_limits<double>::infinity();
      for (size_t i : in)
        min_score =
            std::min(min_score, kept[i].height.value() * kept[i].degree);
      return Selection{wi, min_score};
    }
    if (round + 1 >= ladder.size())
      throw AmbiguousMinimum(
          kept[wi].point.str() + " " + kept[wi].height.str(),
          kept[conflicts[0]].point.str() + " " + kept[conflicts[0]].height.str());
    kept[wi].height = engine.canonical_height(kept[wi].point, ladder[round + 1]);
    for (size_t i : conflicts)
      kept[i].height = engine.canonical_height(kept[i].point, ladder[round + 1]);
    next.push_back(wi);
    next.insert(next.end(), conflicts.begin(), conflicts.end());
    std::sort(next.begin(), next.end());
    live = std::move(next);
  }
  throw std::logic_error("select_winner: escalation did not terminate");
}

inline std::vector<mpfr_prec_t> precision_ladder(long base) {
  return {static_cast<mpfr_prec_t>(base), static_cast<mpfr_prec_t>(2 * base),
          static_cast<mpfr_prec_t>(4 * base)};
}

}  // namespace detail

// Best witness from known points plus bounded scans of Q and the smallest
// quadratic fields.  Deterministic given the config.
inline InitialSearchResult initial_search(const CurveModel& E,
                                          const SearchConfig& cfg,
                                          const std::string& known_points_path = "") {
  detail::MinimalBridge bridge(E);
  HeightEngine engine(*bridge.search);
  HeightDifferenceBound be = best_height_difference_bound(*bridge.search);
  detail::SearchDriver drv(bridge.search, engine, be.value, cfg.precision_bits);
  drv.set_budget(std::numeric_limits<double>::infinity(), true);
  for (const auto& P : detail::load_known_points(bridge.input, known_points_path))
    drv.offer_point(bridge.to_search(P));
  auto fields = detail::initial_field_list(cfg.initial_effort_fields);
  detail::sweep_rationals(drv, cfg.initial_effort_height, fields);
  detail::sweep_quadratic_fields(drv, bridge.search, fields,
                                 cfg.initial_effort_height / 2, 1);
  InitialSearchResult out;
  const detail::Candidate* best = nullptr;
  for (const auto& c : drv.kept()) {
    double score = c.height.interval.hi_d() * c.degree;
    if (!best || score < best->height.interval.hi_d() * best->degree)
      best = &c;
  }
  if (!best) return out;
  out.witness = bridge.to_input(best->point);
  out.height = best->height;
  out.degree = best->degree;
  out.d_prime = best->height.interval.hi_d() * best->degree;
  return out;
}

// Full pipeline: initial search, height-difference bound, Theorem-2 field
// reduction, exhaustive per-field enumeration (or the capped heuristic
// sweep), certified argmin.
inline SearchCertificate certify_minimum(const CurveModel& E,
                                         const SearchConfig& cfg,
                                         const std::string& known_points_path = "",
                                         std::optional<BoundTier> force_tier = {}) {
  detail::MinimalBridge bridge(E);
  HeightEngine engine(*bridge.search);
  HeightDifferenceBound be = force_tier
                                 ? height_difference_bound(*bridge.search, *force_tier)
                                 : best_height_difference_bound(*bridge.search);
  SearchCertificate cert;
  cert.curve = E.str();
  cert.tier = be.tier;
  cert.b_e = be.value;
  cert.delta_max = cfg.delta_max;
  cert.weil_max = cfg.weil_max;
  cert.heuristic_disc_cap = cfg.heuristic_disc_cap;

  detail::SearchDriver drv(bridge.search, engine, be.value, cfg.precision_bits);
  drv.set_budget(std::numeric_limits<double>::infinity(), true);
  for (const auto& P : detail::load_known_points(bridge.input, known_points_path))
    drv.offer_point(bridge.to_search(P));
  auto initial_fields = detail::initial_field_list(cfg.initial_effort_fields);
  detail::sweep_rationals(drv, cfg.initial_effort_height, initial_fields);
  detail::sweep_quadratic_fields(drv, bridge.search, initial_fields,
                                 cfg.initial_effort_height / 2, 1);

  const detail::Candidate* best = nullptr;
  for (const auto& c : drv.kept()) {
    double score = c.height.interval.hi_d() * c.degree;
    if (!best || score < best->height.interval.hi_d() * best->degree)
      best = &c;
  }
  if (!best) {
    cert.status = SearchStatus::NoPointFound;
    cert.fields_searched.push_back(QuadField::rationals());
    cert.fields_searched.insert(cert.fields_searched.end(),
                                initial_fields.begin(), initial_fields.end());
    return cert;
  }
  double d_prime = best->height.interval.hi_d() * best->degree;
  cert.witness = bridge.to_input(best->point);
  cert.witness_height = best->height;
  cert.witness_degree = best->degree;
  cert.d_prime = d_prime;

  double delta_cut = discriminant_cutoff(d_prime, be.value, 2, 1).hi_d();
  double wc1 = weil_cutoff(d_prime, be.value, 1);
  double wc2 = weil_cutoff(d_prime, be.value, 2);
  cert.delta_cutoff = delta_cut;
  bool proved = delta_cut < cfg.delta_max && std::max(wc1, wc2) < cfg.weil_max;

  double sweep1, sweep2;
  if (proved) {
    cert.status = SearchStatus::Proved;
    cert.fields_searched = enumerate_fields(mpz_class(delta_cut));
    sweep1 = wc1;
    sweep2 = wc2;
  } else {
    cert.status = SearchStatus::Heuristic;
    cert.fields_searched = enumerate_fields(mpz_class(cfg.heuristic_disc_cap));
    sweep1 = cfg.initial_effort_height;
    sweep2 = cfg.initial_effort_height / 2;
  }
  cert.weil_cutoff_deg1 = sweep1;
  cert.weil_cutoff_deg2 = sweep2;

  drv.set_budget(d_prime, false);
  detail::sweep_rationals(drv, sweep1, cert.fields_searched);
  detail::sweep_quadratic_fields(drv, bridge.search, cert.fields_searched, sweep2,
                                 cfg.workers);

  auto ladder = detail::precision_ladder(cfg.precision_bits);
  auto sel = detail::select_winner(drv.kept(), d_prime, engine, ladder);
  const detail::Candidate& w = drv.kept()[sel.winner_index];
  cert.winner = bridge.to_input(w.point);
  cert.winner_height = w.height;
  cert.winner_degree = w.degree;
  cert.min_height_times_degree = sel.min_score;
  return cert;
}

// Re-runs the sweep from a certificate's recorded operating point: same
// cutoffs, same field list, the recorded witness as the only seed.  A PROVED
// certificate reproduces its winner bit-for-bit.
inline SearchCertificate replay_certificate(const CurveModel& E,
                                            const SearchCertificate& prior,
                                            const SearchConfig& cfg) {
  if (!prior.witness)
    throw std::invalid_argument("replay: certificate has no witness");
  detail::MinimalBridge bridge(E);
  HeightEngine engine(*bridge.search);
  SearchCertificate cert = prior;
  detail::SearchDriver drv(bridge.search, engine, prior.b_e, cfg.precision_bits);
  drv.set_budget(*prior.d_prime, false);
  drv.offer_point(bridge.to_search(
      CurvePoint(bridge.input, prior.witness->x(), prior.witness->y())));
  detail::sweep_rationals(drv, *prior.weil_cutoff_deg1, prior.fields_searched);
  detail::sweep_quadratic_fields(drv, bridge.search, prior.fields_searched,
                                 *prior.weil_cutoff_deg2, cfg.workers);
  auto ladder = detail::precision_ladder(cfg.precision_bits);
  auto sel = detail::select_winner(drv.kept(), *prior.d_prime, engine, ladder);
  const detail::Candidate& w = drv.kept()[sel.winner_index];
  cert.winner = bridge.to_input(w.point);
  cert.winner_height = w.height;
  cert.winner_degree = w.degree;
  cert.min_height_times_degree = sel.min_score;
  return cert;
}

}  // namespace minpoint
