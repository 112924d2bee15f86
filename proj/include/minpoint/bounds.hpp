#pragma once
// Uniform bounds on the gap between the naive height of x(P) and the
// canonical height, valid over every base field of degree <= 2, together
// with the height floors and cutoff formulas a complete point search is
// assembled from.
//
// All bounds refer to the x coordinate on the rational minimal model.
// Callers working with a different model must transport points before
// comparing naive heights against these bounds.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "minpoint/curve.hpp"
#include "minpoint/heights.hpp"
#include "minpoint/interval.hpp"
#include "minpoint/localdata.hpp"
#include "minpoint/numeric.hpp"
#include "minpoint/qfield.hpp"

namespace minpoint {

enum class BoundTier { GlobalSilverman, CpsQuadratic };

inline const char* tier_name(BoundTier t) {
  return t == BoundTier::GlobalSilverman ? "GLOBAL_SILVERMAN" : "CPS_QUADRATIC";
}

// One entry of the audit breakdown of a bound.  p = 0 marks archimedean
// entries.  Contributions are rounded up.
struct PlaceBoundTerm {
  mpz_class p;
  std::string completion;
  double contribution;
};

// Certified upper bound for |h(x(P)) - hhat(P)| over all points of E with
// coordinates in any field of degree <= 2.
struct HeightDifferenceBound {
  BoundTier tier = BoundTier::GlobalSilverman;
  double value = 0;
  std::vector<PlaceBoundTerm> per_place;
  std::string normalization{kHeightNormalizationTag};

  std::string json() const;
};

namespace detail {

inline std::string json_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string HeightDifferenceBound::json() const {
  std::string s = "{\"tier\":\"";
  s += tier_name(tier);
  s += "\",\"value\":";
  s += detail::json_double(value);
  s += ",\"normalization\":\"" + normalization + "\",\"per_place\":[";
  bool first = true;
  for (const auto& t : per_place) {
    if (!first) s += ",";
    first = false;
    s += "{\"p\":" + t.p.get_str() + ",\"completion\":\"" + t.completion +
         "\",\"contribution\":" + detail::json_double(t.contribution) + "}";
  }
  s += "]}";
  return s;
}

// max(h(j), log |N(disc_min)|, 1): the natural scale for comparing minimal
// heights against, invariant under model change.
inline RealInterval lang_invariant(const CurveModel& E, mpfr_prec_t prec = 96) {
  CurveModel emin = E.minimal_model().first;
  const mpq_class& j = emin.j_invariant();
  mpz_class jm = std::max(mpz_class(abs(j.get_num())), mpz_class(j.get_den()));
  mpz_class nd = abs(mpz_class(emin.disc().get_num()));
  RealInterval hj = RealInterval::from_mpz(jm, prec).log();
  RealInterval hd = RealInterval::from_mpz(nd, prec).log();
  return max(max(hj, hd), RealInterval::exact(1, prec));
}

// Lower bound for the canonical height of a non-torsion point generating a
// degree-d field of discriminant disc_F:
//   (1/(2d-2)) ((1/d) log |disc_F| - log d).
// Over the rationals no discriminant-driven floor exists; degree 1 is
// rejected.
inline RealInterval silverman_height_floor(const mpz_class& field_disc,
                                           long degree,
                                           mpfr_prec_t prec = 96) {
  if (degree < 2)
    throw std::invalid_argument("silverman_height_floor: degree must be >= 2");
  mpz_class a = abs(field_disc);
  if (a == 0)
    throw std::invalid_argument("silverman_height_floor: zero discriminant");
  RealInterval la = RealInterval::from_mpz(a, prec).log();
  RealInterval d = RealInterval::exact(degree, prec);
  return (la / d - d.log()) / RealInterval::exact(2 * degree - 2, prec);
}

// Largest |disc_F| a degree-d field can have while still possibly carrying
// a point with hhat * d <= height_budget, given |h - hhat| <= diff_bound:
//   d^(d delta_k) exp(d (2d-2) diff_bound + (2d-2) height_budget).
// Exact when both budget terms vanish; in particular 4 for (0, 0, 2, 1)
// and 1 for every degree-1 query.
inline RealInterval discriminant_cutoff(double height_budget,
                                        double diff_bound, long degree,
                                        long delta_k = 1,
                                        mpfr_prec_t prec = 96) {
  if (degree < 1 || delta_k < 1)
    throw std::invalid_argument("discriminant_cutoff: bad degree parameters");
  RealInterval pw = RealInterval::exact(1, prec);
  RealInterval b = RealInterval::exact(degree, prec);
  for (long i = 0; i < degree * delta_k; ++i) pw = pw * b;
  long m = 2 * degree - 2;
  RealInterval expo =
      RealInterval::from_double(diff_bound, prec) *
          RealInterval::exact(degree * m, prec) +
      RealInterval::from_double(height_budget, prec) * RealInterval::exact(m, prec);
  return pw * expo.exp();
}

// Largest Weil height of x a degree-d candidate can have under the same
// budget: height_budget / d + diff_bound.
inline double weil_cutoff(double height_budget, double diff_bound,
                          long degree) {
  if (degree < 1) throw std::invalid_argument("weil_cutoff: bad degree");
  return height_budget / static_cast<double>(degree) + diff_bound;
}

// Tuning for the archimedean defect search.
struct ArchSupOptions {
  double gap = 0.05;      // stop once upper - lower <= gap
  long max_boxes = 4000;  // hard budget; the result stays certified
  long terms = 8;
  mpfr_prec_t prec = 64;
};

namespace detail {

// Certified upper bound for the sup over x in C of
//   sign * (log+ |x| - lambda(x))
// at one archimedean completion.  Branch and bound over the two chart
// squares.  Each box is summed for as many terms as its width allows and
// closed with the geometric tail at that depth, so every box gets a true
// if sometimes coarse enclosure and the return value is always an upper
// bound.
inline double arch_defect_sup_signed(const ArchContext& ctx, int sign,
                                     const ArchSupOptions& opt) {
  const mpfr_prec_t prec = opt.prec;
  const double wide = ctx.series_bound / 3.0;
  auto ux = lift_coeffs<ComplexInterval>(ctx.u, prec);
  auto wx = lift_coeffs<ComplexInterval>(ctx.w, prec);
  auto ut = lift_coeffs<ComplexInterval>(ctx.ut, prec);
  auto wt = lift_coeffs<ComplexInterval>(ctx.wt, prec);

  // Terms completed before the iterate's chart box stops being certified.
  auto series = [&](bool on_x, ComplexInterval z, RealInterval& sum) -> long {
    long k = 0;
    for (; k < opt.terms; ++k) {
      ComplexInterval pu = horner(on_x ? ux : ut, z);
      ComplexInterval pw = horner(on_x ? wx : wt, z);
      RealInterval au = pu.abs(), aw = pw.abs();
      bool nx = au.mid() <= aw.mid();
      const RealInterval& aden = nx ? aw : au;
      if (!aden.certainly_positive()) break;
      ComplexInterval next = (nx ? pu : pw) / (nx ? pw : pu);
      if (!(next.abs().hi_d() <= 2.0)) break;
      sum = sum + aden.log().mul_2exp(-2 * (k + 1));
      z = next;
      on_x = nx;
    }
    return k;
  };

  struct Box {
    bool x_chart;
    double rlo, rhi, ilo, ihi;
    double upper;
  };
  auto eval = [&](Box& b) -> double {
    ComplexInterval z{RealInterval::hull(b.rlo, b.rhi, prec),
                      RealInterval::hull(b.ilo, b.ihi, prec)};
    RealInterval s = RealInterval::exact(0, prec);
    long k = series(b.x_chart, z, s);
    double tail = std::ldexp(wide, static_cast<int>(-2 * k));
    double glo = -s.hi_d() - tail, ghi = -s.lo_d() + tail;
    if (sign < 0) {
      double t = glo;
      glo = -ghi;
      ghi = -t;
    }
    b.upper = ghi;
    return glo;
  };

  auto cmp = [](const Box& a, const Box& b) { return a.upper < b.upper; };
  std::priority_queue<Box, std::vector<Box>, decltype(cmp)> q(cmp);
  double best_lower = -wide;
  long used = 0;
  for (bool chart : {true, false}) {
    Box b{chart, -1.0, 1.0, -1.0, 1.0, 0.0};
    eval(b);
    Box mid{chart, 0.0, 0.0, 0.0, 0.0, 0.0};
    best_lower = std::max(best_lower, eval(mid));
    q.push(b);
    ++used;
  }
  while (!q.empty()) {
    Box top = q.top();
    if (top.upper - best_lower <= opt.gap || used >= opt.max_boxes)
      return top.upper;
    q.pop();
    double rw = top.rhi - top.rlo, iw = top.ihi - top.ilo;
    for (int half = 0; half < 2; ++half) {
      Box c = top;
      if (rw >= iw) {
        double m = 0.5 * (top.rlo + top.rhi);
        (half ? c.rlo : c.rhi) = m;
      } else {
        double m = 0.5 * (top.ilo + top.ihi);
        (half ? c.ilo : c.ihi) = m;
      }
      eval(c);
      Box mid{c.x_chart, 0.5 * (c.rlo + c.rhi), 0.5 * (c.rlo + c.rhi),
              0.5 * (c.ilo + c.ihi), 0.5 * (c.ilo + c.ihi), 0.0};
      best_lower = std::max(best_lower, eval(mid));
      q.push(c);
      ++used;
    }
  }
  return best_lower;
}

// Representatives of every completion of a degree <= 2 field at p: the
// trivial one, the unramified quadratic one, and all ramified quadratic
// ones (six at p = 2, two elsewhere).
struct CompletionProbe {
  QuadField F;
  std::string label;
};

inline std::vector<CompletionProbe> completion_probes(const mpz_class& p) {
  std::vector<CompletionProbe> out;
  out.push_back({QuadField::rationals(), "Q_p"});
  auto add = [&](const mpz_class& d, const char* kind) {
    out.push_back({QuadField(d), std::string(kind) + "(" + d.get_str() + ")"});
  };
  if (p == 2) {
    add(5, "unramified");
    for (long d : {-1L, 2L, -2L, 3L, 6L, -6L}) add(mpz_class(d), "ramified");
  } else {
    // Least positive non-residue; always prime, hence squarefree.
    mpz_class u = 2;
    while (u < p && kronecker(u, p) != -1) ++u;
    add(u, "unramified");
    if (p == 3) {
      add(3, "ramified");
      add(-3, "ramified");
    } else {
      add(p, "ramified");
      add(p * u, "ramified");
    }
  }
  return out;
}

// Sup over all points rational over the completion at v of the deficit
//   naive local height - local height,
// in units of log(p)/e_v, for a globally minimal E.  Exact for good,
// multiplicative, and additive reduction away from residue characteristic
// 2 and 3; a certified cap at 2 and 3.
inline double completion_deficit_steps(const CurveModel& E, const Place& v) {
  LocalMinimalization lm = v_minimal_model(E, v);
  // Each drop of 12 in ord(disc) shifts the deficit by 2 on non-singular
  // residues and cancels exactly against the coordinate scaling near
  // infinity.
  double extra = static_cast<double>(lm.delta_drop) / 6.0;
  long N = v.ord(lm.model.disc);
  if (N >= kOrdInfinity) throw std::logic_error("deficit: singular model");
  if (N <= 0) return extra;
  long vc4 = v.ord(lm.model.c4);
  double table;
  if (vc4 == 0) {
    // Split or non-split multiplicative: components contribute n(N-n)/N at
    // integer n, maximal at n = floor(N/2).
    double a = static_cast<double>(N / 2);
    double b = static_cast<double>(N - N / 2);
    table = a * b / static_cast<double>(N);
  } else if (v.p() >= 5) {
    if (vc4 == 2 && N >= 6) {
      table = 1.0 + static_cast<double>(N - 6) / 4.0;
    } else {
      switch (N) {
        case 2: table = 0.0; break;
        case 3: table = 0.5; break;
        case 4: table = 2.0 / 3.0; break;
        case 6: table = 1.0; break;
        case 8: table = 4.0 / 3.0; break;
        case 9: table = 1.5; break;
        case 10: table = 0.0; break;
        default: table = 2.0 * static_cast<double>(N) / 3.0; break;
      }
    }
  } else {
    // Residue characteristic 2 or 3: resultant identities force
    // min(2 ord psi2^2, ord psi3) <= 2 ord(disc), so the deficit is at
    // most (2/3) ord(disc) whichever branch applies.
    table = 2.0 * static_cast<double>(N) / 3.0;
  }
  return table + extra;
}

}  // namespace detail

// Certified bound for |h(x(P)) - hhat(P)| on the rational minimal model of
// E.  The first tier needs only j and the discriminant; the second sums,
// over each bad prime, the worst completion of any degree <= 2 field, and
// adds a certified archimedean defect found by branch and bound.
inline HeightDifferenceBound height_difference_bound(
    const CurveModel& E, BoundTier tier, const ArchSupOptions& opt = {}) {
  CurveModel emin = E.minimal_model().first;
  HeightDifferenceBound out;
  out.tier = tier;

  if (tier == BoundTier::GlobalSilverman) {
    const mpq_class& j = emin.j_invariant();
    mpz_class jm =
        std::max(mpz_class(abs(j.get_num())), mpz_class(j.get_den()));
    mpz_class nd = abs(mpz_class(emin.disc().get_num()));
    mpfr_prec_t prec = 96;
    RealInterval hj = RealInterval::from_mpz(jm, prec).log();
    RealInterval hd = RealInterval::from_mpz(nd, prec).log();
    RealInterval v = (hj + hd) / RealInterval::exact(6, prec) +
                     RealInterval::from_mpq(mpq_class(214, 100), prec);
    out.value = v.hi_d();
    return out;
  }

  mpfr_prec_t prec = opt.prec;
  mpz_class D = abs(mpz_class(emin.disc().get_num()));
  RealInterval finite_sum = RealInterval::exact(0, prec);
  for (const auto& [p, e] : factorize(D)) {
    (void)e;
    RealInterval lp = RealInterval::from_mpz(p, prec).log();
    double best = 0;
    for (const auto& probe : detail::completion_probes(p)) {
      auto places = places_above(probe.F, p);
      if (places.size() != 1)
        throw std::logic_error("completion probe split unexpectedly");
      const Place& v = places[0];
      double steps = detail::completion_deficit_steps(emin, v);
      RealInterval c = RealInterval::from_double(steps, prec) * lp /
                       RealInterval::exact(v.e(), prec);
      double ch = c.hi_d();
      out.per_place.push_back({p, probe.label, ch});
      best = std::max(best, ch);
    }
    finite_sum = finite_sum + RealInterval::from_double(best, prec);
  }

  ArchContext ctx(emin);
  double up = detail::arch_defect_sup_signed(ctx, +1, opt);
  double dn = detail::arch_defect_sup_signed(ctx, -1, opt);
  out.per_place.push_back({mpz_class(0), "archimedean, naive above", up});
  out.per_place.push_back({mpz_class(0), "archimedean, naive below", dn});

  double upper_side =
      (finite_sum + RealInterval::from_double(up, prec)).hi_d();
  out.value = std::max({upper_side, dn, 0.0});
  return out;
}

// Both tiers, keeping whichever is smaller.
inline HeightDifferenceBound best_height_difference_bound(
    const CurveModel& E, const ArchSupOptions& opt = {}) {
  HeightDifferenceBound a =
      height_difference_bound(E, BoundTier::GlobalSilverman, opt);
  HeightDifferenceBound b =
      height_difference_bound(E, BoundTier::CpsQuadratic, opt);
  return b.value <= a.value ? b : a;
}

}  // namespace minpoint
