// Canonical height via local decomposition with certified interval error,
// plus the slow limit-definition oracle used to cross-check it.
//
// Normalization used everywhere: hhat(P) = lim 4^{-n} h(x(2^n P)) with h the
// full absolute Weil height of the x-coordinate (twice the convention that
// halves x-heights).
#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "minpoint/curve.hpp"
#include "minpoint/interval.hpp"
#include "minpoint/localdata.hpp"
#include "minpoint/numeric.hpp"
#include "minpoint/qfield.hpp"

namespace minpoint {

inline constexpr const char* kHeightNormalizationTag =
    "quarter-limit-of-full-x-height";

struct PrecisionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A certified enclosure of a height; exact_zero marks torsion points.
struct HeightValue {
  RealInterval interval;
  bool exact_zero = false;
  std::string normalization = kHeightNormalizationTag;

  double value() const { return exact_zero ? 0.0 : interval.mid(); }
  double certified_error() const {
    return exact_zero ? 0.0 : interval.width() / 2;
  }
  std::string str(int digits = 20) const {
    if (exact_zero) return "0 (exact) [" + normalization + "]";
    std::ostringstream os;
    os.precision(digits);
    os << value() << " +- ";
    os.precision(4);
    os << certified_error() << " [" << normalization << "]";
    return os.str();
  }
};

// -------- exact polynomial helpers (coefficients ascending) --------

namespace detail {

using PolyQ = std::vector<mpq_class>;

inline void poly_trim(PolyQ& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline int poly_deg(const PolyQ& p) { return static_cast<int>(p.size()) - 1; }

inline PolyQ poly_sub(const PolyQ& a, const PolyQ& b) {
  PolyQ r(std::max(a.size(), b.size()), mpq_class(0));
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  poly_trim(r);
  return r;
}

inline PolyQ poly_mul(const PolyQ& a, const PolyQ& b) {
  if (a.empty() || b.empty()) return {};
  PolyQ r(a.size() + b.size() - 1, mpq_class(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  poly_trim(r);
  return r;
}

inline std::pair<PolyQ, PolyQ> poly_divmod(PolyQ a, const PolyQ& b) {
  if (b.empty()) throw std::domain_error("poly_divmod: division by zero poly");
  PolyQ q(a.size() > b.size() ? a.size() - b.size() + 1 : 1, mpq_class(0));
  while (poly_deg(a) >= poly_deg(b)) {
    int shift = poly_deg(a) - poly_deg(b);
    mpq_class f = a.back() / b.back();
    q[shift] += f;
    for (size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    poly_trim(a);
    if (a.empty()) break;
  }
  poly_trim(q);
  return {q, a};
}

// Extended gcd for coprime u, w: returns (A, B, r) with A u + B w = r, r a
// nonzero rational constant.  Throws if the gcd is nonconstant.
struct BezoutData {
  PolyQ A, B;
  mpq_class r;
};

inline BezoutData poly_ext_gcd_constant(const PolyQ& u, const PolyQ& w) {
  PolyQ r0 = u, r1 = w;
  PolyQ s0{mpq_class(1)}, s1{};
  PolyQ t0{}, t1{mpq_class(1)};
  poly_trim(r0);
  poly_trim(r1);
  while (!r1.empty() && poly_deg(r1) > 0) {
    auto [q, rem] = poly_divmod(r0, r1);
    PolyQ s2 = poly_sub(s0, poly_mul(q, s1));
    PolyQ t2 = poly_sub(t0, poly_mul(q, t1));
    r0 = std::move(r1);
    r1 = std::move(rem);
    s0 = std::move(s1);
    s1 = std::move(s2);
    t0 = std::move(t1);
    t1 = std::move(t2);
  }
  if (r1.empty()) {
    if (poly_deg(r0) != 0)
      throw std::logic_error("poly_ext_gcd_constant: nonconstant gcd");
    return BezoutData{s0, t0, r0[0]};
  }
  return BezoutData{s1, t1, r1[0]};
}

// sum |c_i| R^i, an upper bound for |p(z)| on |z| <= R.
inline mpq_class poly_box_bound(const PolyQ& p, long R) {
  mpq_class s = 0;
  mpq_class pw = 1;
  for (const auto& c : p) {
    s += abs(c) * pw;
    pw *= R;
  }
  return s;
}

template <class Ring>
Ring horner(const std::vector<Ring>& coeffs, const Ring& z) {
  Ring acc = coeffs.back();
  for (size_t i = coeffs.size() - 1; i-- > 0;) acc = acc * z + coeffs[i];
  return acc;
}

}  // namespace detail

// -------- archimedean local height --------

// Duplication in projective x-line coordinates: x(2P) = u(x)/w(x) with
//   u(x) = x^4 - b4 x^2 - 2 b6 x - b8     (new X)
//   w(x) = 4x^3 + b2 x^2 + 2 b4 x + b6    (new Z; w = psi_2^2)
// plus the reversed chart in t = 1/x (both homogenize to quartics):
//   ut(t) = 1 - b4 t^2 - 2 b6 t^3 - b8 t^4,
//   wt(t) = 4t + b2 t^2 + 2 b4 t^3 + b6 t^4.
// Renormalizing by the larger of |u|, |w| after each step keeps the chart
// variable in |z| <= 1 up to rounding, and
//   lambda(P) = log+ |x| + sum_k 4^{-(k+1)} log m_k
// where m_k is whichever of |u|, |w| the step divided by.  The identity
// holds for any divisor choice as long as the renormalized pair stays
// bounded; the |z| <= 2 check below enforces that, and also forces the
// chosen divisor to be >= max(|u|,|w|) / 2.  Tail constants are certified
// on the box |z| <= 2.
struct ArchContext {
  detail::PolyQ u, w, ut, wt;
  // |log m_k| <= series_bound on either chart's box.
  double series_bound;

  explicit ArchContext(const CurveModel& E) {
    const mpq_class &b2 = E.b2(), &b4 = E.b4(), &b6 = E.b6(), &b8 = E.b8();
    u = {-b8, -2 * b6, -b4, 0, 1};
    w = {b6, 2 * b4, b2, 4};
    ut = {1, 0, -b4, -2 * b6, -b8};
    wt = {0, 4, b2, 2 * b4, b6};
    detail::poly_trim(u);
    detail::poly_trim(w);
    detail::poly_trim(ut);
    detail::poly_trim(wt);
    // Upper: coefficient sums.  Lower: A u + B w = r forces
    // max(|u|,|w|) >= |r| / (bound(A) + bound(B)) pointwise, and the
    // divisor actually chosen is at least half the max.
    const long R = 2;
    mpq_class up = std::max(
        std::max(detail::poly_box_bound(u, R), detail::poly_box_bound(w, R)),
        std::max(detail::poly_box_bound(ut, R), detail::poly_box_bound(wt, R)));
    auto bz_x = detail::poly_ext_gcd_constant(u, w);
    auto bz_t = detail::poly_ext_gcd_constant(ut, wt);
    mpq_class low_x = abs(bz_x.r) / (detail::poly_box_bound(bz_x.A, R) +
                                     detail::poly_box_bound(bz_x.B, R));
    mpq_class low_t = abs(bz_t.r) / (detail::poly_box_bound(bz_t.A, R) +
                                     detail::poly_box_bound(bz_t.B, R));
    mpq_class low = std::min(low_x, low_t) / 2;
    RealInterval lg_up = RealInterval::from_mpq(up, 96).log();
    RealInterval lg_low = RealInterval::from_mpq(low, 96).log();
    series_bound = std::max({std::abs(lg_up.hi_d()), std::abs(lg_low.lo_d()),
                             std::abs(lg_low.hi_d()), 1.0});
  }

  long terms_for(double eps) const {
    // Smallest N with 4^{-N}/3 * series_bound <= eps (plus margin).
    eps = std::max(eps, 1e-300);
    double n = std::log2(series_bound / (3.0 * eps)) / 2.0;
    long N = static_cast<long>(std::ceil(n)) + 2;
    return std::max(N, 4L);
  }
};

namespace detail {

inline RealInterval ci_abs(const RealInterval& x) { return x.abs(); }
inline RealInterval ci_abs(const ComplexInterval& x) { return x.abs(); }

template <class CI>
CI ci_from_real(const RealInterval& r);
template <>
inline RealInterval ci_from_real<RealInterval>(const RealInterval& r) {
  return r;
}
template <>
inline ComplexInterval ci_from_real<ComplexInterval>(const RealInterval& r) {
  return ComplexInterval::real(r);
}

template <class CI>
std::vector<CI> lift_coeffs(const PolyQ& p, mpfr_prec_t prec) {
  std::vector<CI> out;
  out.reserve(p.size());
  for (const auto& c : p)
    out.push_back(ci_from_real<CI>(RealInterval::from_mpq(c, prec)));
  return out;
}

// Certified enclosure of sum_{k < terms} 4^{-(k+1)} log m_k starting from
// the given chart variable, m_k being the divisor chosen at step k.  Valid
// for every point of a box input as long as no step throws.
template <class CI>
RealInterval arch_series_sum(const ArchContext& ctx, bool on_x_chart, CI z,
                             mpfr_prec_t prec, long terms) {
  auto u = lift_coeffs<CI>(ctx.u, prec);
  auto w = lift_coeffs<CI>(ctx.w, prec);
  auto ut = lift_coeffs<CI>(ctx.ut, prec);
  auto wt = lift_coeffs<CI>(ctx.wt, prec);

  RealInterval sum = RealInterval::exact(0, prec);
  for (long k = 0; k < terms; ++k) {
    CI pu = horner(on_x_chart ? u : ut, z);
    CI pw = horner(on_x_chart ? w : wt, z);
    RealInterval au = ci_abs(pu), aw = ci_abs(pw);
    // Divide by (approximately) the larger coordinate; the summand is the
    // log of the divisor actually used.  u is always the next X and w the
    // next Z, so dividing by w lands on the x chart and dividing by u on
    // the t chart, whatever the current chart was.
    bool next_on_x = au.mid() <= aw.mid();
    const RealInterval& aden = next_on_x ? aw : au;
    if (!aden.certainly_positive())
      throw PrecisionError("archimedean series: divisor not separated from 0");
    sum = sum + aden.log().mul_2exp(-2 * (k + 1));
    CI num = next_on_x ? pu : pw;
    CI den = next_on_x ? pw : pu;
    CI next = num / den;
    if (!(ci_abs(next).hi_d() <= 2.0))
      throw PrecisionError("archimedean series: iterate escaped its chart box");
    z = next;
    on_x_chart = next_on_x;
  }
  return sum;
}

// Core iteration, shared by the real and complex embeddings.
template <class CI>
RealInterval arch_lambda_impl(const ArchContext& ctx, const CI& x0,
                              mpfr_prec_t prec, long terms) {
  RealInterval one = RealInterval::exact(1, prec);
  RealInterval ax0 = ci_abs(x0);
  RealInterval base = max(ax0, one).log();
  bool on_x_chart = !(ax0.mid() > 1.0);
  CI z = x0;
  if (!on_x_chart) z = ci_from_real<CI>(one) / x0;
  RealInterval sum = arch_series_sum(ctx, on_x_chart, z, prec, terms);
  // Geometric tail: |sum_{k>=N}| <= 4^{-N}/3 * series_bound.
  RealInterval tail =
      RealInterval::from_double(ctx.series_bound, prec).mul_2exp(-2 * terms) /
      RealInterval::exact(3, prec);
  return base + sum + hull_of(-tail, tail);
}

}  // namespace detail

// Unweighted archimedean local height of P at the given embedding of its
// field, on the model P.curve() as written.
inline RealInterval archimedean_local_height(const CurvePoint& P,
                                             const Place& sigma,
                                             mpfr_prec_t prec = 0) {
  if (sigma.is_finite())
    throw std::domain_error("archimedean_local_height: finite place");
  if (prec == 0) prec = default_interval_precision();
  if (P.is_infinity()) return RealInterval::exact(0, prec);
  ArchContext ctx(P.curve());
  double eps = std::ldexp(1.0, -static_cast<int>(prec / 2) - 4);
  long terms = ctx.terms_for(eps);
  if (sigma.kind() == PlaceKind::ComplexPair) {
    ComplexInterval x0 = P.x().complex_embedding(prec);
    return detail::arch_lambda_impl<ComplexInterval>(ctx, x0, prec, terms);
  }
  RealInterval x0 = P.x().real_embedding(sigma.conj_index(), prec);
  return detail::arch_lambda_impl<RealInterval>(ctx, x0, prec, terms);
}

// -------- non-archimedean local height --------

namespace detail {

// rho with lambda_v = rho log(p)/e_v, computed on a v-minimal model (with
// the point already mapped there).  Exact rational output.
inline mpq_class finite_rho_on_minimal(const LocalModel& M, const Place& v,
                                       const QuadFieldElement& x,
                                       const QuadFieldElement& y) {
  auto I = [](long k) { return QuadFieldElement::from_int(k); };
  long ordx = v.ord(x);
  long N = v.ord(M.disc);
  // va = ord(3x^2 + 2 a2 x + a4 - a1 y), vb = ord(2y + a1 x + a3),
  // vc = ord(3x^4 + b2 x^3 + 3 b4 x^2 + 3 b6 x + b8).
  QuadFieldElement qa = I(3) * x * x + I(2) * M.a2 * x + M.a4 - M.a1 * y;
  QuadFieldElement qb = I(2) * y + M.a1 * x + M.a3;
  long va = v.ord(qa);
  long vb = v.ord(qb);
  if (va <= 0 || vb <= 0) {
    // P avoids the singular locus of the special fiber.
    return mpq_class(std::max(0L, -ordx));
  }
  if (v.ord(M.c4) == 0) {
    // Multiplicative: component n = min(vb, N/2), rho = -n(N-n)/N.
    mpq_class n(std::min(2 * vb, N), 2);
    n.canonicalize();
    mpq_class rho = -n * (mpq_class(N) - n) / N;
    rho.canonicalize();
    return rho;
  }
  QuadFieldElement qc = I(3) * x * x * x * x + M.b2 * x * x * x +
                        I(3) * M.b4 * x * x + I(3) * M.b6 * x + M.b8;
  long vc = v.ord(qc);
  mpq_class rho = (vc >= 3 * vb) ? mpq_class(-2 * vb, 3) : mpq_class(-vc, 4);
  rho.canonicalize();
  return rho;
}

// rho for an integral model E that is Q-minimal at v.p(), given its local
// minimalization at v: compute there, then shift back by the excess:
// lambda^E = lambda^{v-min} - (1/6) ord_v(disc_E / disc_min) log(p)/e_v.
inline mpq_class finite_rho(const LocalMinimalization& lm, const Place& v,
                            const QuadFieldElement& x,
                            const QuadFieldElement& y) {
  auto [xm, ym] = lm.tr.apply_point(x, y);
  mpq_class rho = finite_rho_on_minimal(lm.model, v, xm, ym);
  if (lm.delta_drop != 0) rho -= mpq_class(lm.delta_drop, 6);
  rho.canonicalize();
  return rho;
}

}  // namespace detail

// Total contribution of the places above p: sum over v | p of
// w_v lambda_v(P), evaluated on the global minimal model of P's curve.
inline RealInterval nonarchimedean_local_height(const CurvePoint& P,
                                                const mpz_class& p,
                                                mpfr_prec_t prec = 0) {
  if (prec == 0) prec = default_interval_precision();
  if (P.is_infinity()) return RealInterval::exact(0, prec);
  auto [Emin, tr] = P.curve().minimal_model();
  auto eminp = std::make_shared<const CurveModel>(Emin);
  CurvePoint Q = P.mapped(tr, eminp);
  mpq_class total = 0;
  for (const Place& v : places_above(Q.field(), p)) {
    LocalMinimalization lm = v_minimal_model(*eminp, v);
    mpq_class rho = detail::finite_rho(lm, v, Q.x(), Q.y());
    total += v.weight() * rho / v.e();
  }
  total.canonicalize();
  return RealInterval::from_mpq(total, prec) *
         RealInterval::from_mpz(p, prec).log();
}

// -------- canonical height --------

// Per-curve cache: global minimal model, its bad primes, arch series data,
// per-place minimal models.  Not thread-safe; use one engine per thread.
class HeightEngine {
 public:
  explicit HeightEngine(const CurveModel& E) : source_(E) {
    auto [Emin, tr] = E.minimal_model();
    emin_ = std::make_shared<const CurveModel>(Emin);
    to_min_ = tr;
    arch_ = std::make_unique<ArchContext>(*emin_);
    mpz_class D = abs(mpz_class(emin_->disc().get_num()));
    for (const auto& [q, e] : factorize(D)) {
      (void)e;
      bad_primes_.push_back(q);
    }
    std::sort(bad_primes_.begin(), bad_primes_.end());
  }

  const CurveModel& minimal_model() const { return *emin_; }
  std::shared_ptr<const CurveModel> minimal_model_ptr() const { return emin_; }
  const Transform& transform_to_minimal() const { return to_min_; }
  const std::vector<mpz_class>& bad_primes() const { return bad_primes_; }
  const ArchContext& arch_context() const { return *arch_; }

  // hhat(P) with certified_error <= 2^{-precision/2}; exact 0 for torsion.
  HeightValue canonical_height(const CurvePoint& P,
                               mpfr_prec_t precision = 0) const {
    if (precision == 0) precision = default_interval_precision();
    if (!P.curve().same_equation(source_))
      throw std::invalid_argument("canonical_height: point on a different curve");
    HeightValue hv;
    if (P.is_infinity()) {
      hv.interval = RealInterval::exact(0, precision);
      hv.exact_zero = true;
      return hv;
    }
    CurvePoint Q = P.mapped(to_min_, emin_);
    double target = std::ldexp(1.0, -static_cast<int>(precision / 2));
    mpfr_prec_t work = precision + 64;
    bool torsion_ruled_out = false;
    for (int attempt = 0; attempt < 6; ++attempt, work *= 2) {
      RealInterval total;
      try {
        total = assemble(Q, work);
      } catch (const PrecisionError&) {
        // Series divisor not resolvable at this precision; points are exact,
        // so escalation always separates it eventually.
        continue;
      }
      if (total.width() / 2 > target) continue;
      if (total.certainly_positive()) {
        hv.interval = total;
        return hv;
      }
      // Enclosure touches 0: decide torsion exactly (hhat vanishes only on
      // torsion), otherwise escalate until the interval clears 0.
      if (!torsion_ruled_out) {
        if (Q.is_torsion()) {
          hv.interval = RealInterval::exact(0, precision);
          hv.exact_zero = true;
          return hv;
        }
        torsion_ruled_out = true;
      }
    }
    throw PrecisionError("canonical_height: could not reach target error");
  }

  // Interval containing hhat(P) from the doubling limit:
  // |hhat - 4^{-n} h(x(2^n P))| <= 4^{-n} B on the global minimal model,
  // so B must bound |h - hhat| there.
  RealInterval limit_oracle(const CurvePoint& P, int n, const RealInterval& B,
                            mpfr_prec_t prec = 0) const {
    if (prec == 0) prec = default_interval_precision();
    if (n < 0 || n > 5)
      throw std::invalid_argument("limit_oracle: n out of range (0..5)");
    CurvePoint Q = P.mapped(to_min_, emin_);
    for (int i = 0; i < n; ++i) {
      Q = Q + Q;
      if (!Q.is_infinity()) {
        size_t sz = mpz_sizeinbase(Q.x().a().get_mpz_t(), 2) +
                    mpz_sizeinbase(Q.x().c().get_mpz_t(), 2);
        if (sz > 4000000)
          throw OracleUnavailable("limit_oracle: coordinate size cap exceeded");
      }
    }
    RealInterval h = Q.is_infinity() ? RealInterval::exact(0, prec)
                                     : weil_height(Q.x(), prec);
    RealInterval rad = B.mul_2exp(-2 * n);
    RealInterval center = h.mul_2exp(-2 * n);
    return hull_of(center - rad, center + rad);
  }

  // Weighted archimedean total on the minimal model (audits and tests).
  RealInterval archimedean_total(const CurvePoint& P, mpfr_prec_t prec) const {
    CurvePoint Q = P.mapped(to_min_, emin_);
    if (Q.is_infinity()) return RealInterval::exact(0, prec);
    long terms =
        arch_->terms_for(std::ldexp(1.0, -static_cast<int>(prec / 2) - 4));
    return arch_part(Q, prec, terms);
  }

 private:
  const LocalMinimalization& vmin_for(const Place& v) const {
    auto key = std::make_pair(v.field().d(), v.p());
    auto it = vmin_cache_.find(key);
    if (it == vmin_cache_.end())
      it = vmin_cache_.emplace(key, v_minimal_model(*emin_, v)).first;
    return it->second;
  }

  RealInterval arch_part(const CurvePoint& Q, mpfr_prec_t work,
                         long terms) const {
    const QuadFieldElement& x = Q.x();
    RealInterval total = RealInterval::exact(0, work);
    for (const Place& sigma : archimedean_places(Q.field())) {
      RealInterval lam;
      if (sigma.kind() == PlaceKind::ComplexPair) {
        lam = detail::arch_lambda_impl<ComplexInterval>(
            *arch_, x.complex_embedding(work), work, terms);
      } else {
        lam = detail::arch_lambda_impl<RealInterval>(
            *arch_, x.real_embedding(sigma.conj_index(), work), work, terms);
      }
      total = total + RealInterval::from_mpq(sigma.weight(), work) * lam;
    }
    return total;
  }

  RealInterval assemble(const CurvePoint& Q, mpfr_prec_t work) const {
    const QuadFieldElement& x = Q.x();
    QuadField F = Q.field();
    double eps = std::ldexp(1.0, -static_cast<int>(work / 2) - 4);
    long terms = arch_->terms_for(eps);
    RealInterval total = arch_part(Q, work, terms);
    // Finite naive part: sum_v w_v log+ |x|_v = (1/deg x) log(leading
    // coefficient of the primitive minimal polynomial of x).
    auto mp = x.min_poly();
    if (mp.A != 1)
      total = total + RealInterval::from_mpz(mp.A, work).log() /
                          RealInterval::exact(x.degree(), work);
    // Corrections at bad places: w_v (rho_v - max(0, -ord_v x)) log(p)/e_v.
    for (const mpz_class& p : bad_primes_) {
      mpq_class acc = 0;
      for (const Place& v : places_above(F, p)) {
        mpq_class rho = detail::finite_rho(vmin_for(v), v, Q.x(), Q.y());
        mpq_class naive(std::max(0L, -v.ord(x)));
        acc += v.weight() * (rho - naive) / v.e();
      }
      acc.canonicalize();
      if (acc != 0)
        total = total + RealInterval::from_mpq(acc, work) *
                            RealInterval::from_mpz(p, work).log();
    }
    return total;
  }

  CurveModel source_;
  std::shared_ptr<const CurveModel> emin_;
  Transform to_min_;
  std::unique_ptr<ArchContext> arch_;
  std::vector<mpz_class> bad_primes_;
  mutable std::map<std::pair<mpz_class, mpz_class>, LocalMinimalization>
      vmin_cache_;
};

inline HeightValue canonical_height(const CurvePoint& P,
                                    mpfr_prec_t precision = 0) {
  HeightEngine eng(P.curve());
  return eng.canonical_height(P, precision);
}

inline RealInterval limit_oracle(const CurvePoint& P, int n,
                                 const RealInterval& B_E,
                                 mpfr_prec_t prec = 0) {
  HeightEngine eng(P.curve());
  return eng.limit_oracle(P, n, B_E, prec);
}

}  // namespace minpoint
