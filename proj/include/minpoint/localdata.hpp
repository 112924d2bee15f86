// Places of Q and quadratic fields, exact valuations, and local (per-place)
// integral/minimal Weierstrass models used by the height machinery.
#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "minpoint/curve.hpp"
#include "minpoint/numeric.hpp"
#include "minpoint/qfield.hpp"

namespace minpoint {

// Sentinel for ord of 0 ("+infinity"); large enough to dominate every real
// valuation that can appear, small enough not to overflow in arithmetic.
inline constexpr long kOrdInfinity = 1L << 40;

enum class PlaceKind { RealEmbedding, ComplexPair, Finite };
enum class Splitting { Trivial, Split, Inert, Ramified };  // Trivial: F = Q

class Place {
 public:
  static Place real_embedding(const QuadField& F, int which) {
    Place v;
    v.kind_ = PlaceKind::RealEmbedding;
    v.F_ = F;
    v.conj_ = which;
    return v;
  }
  static Place complex_pair(const QuadField& F) {
    Place v;
    v.kind_ = PlaceKind::ComplexPair;
    v.F_ = F;
    return v;
  }

  PlaceKind kind() const { return kind_; }
  const QuadField& field() const { return F_; }
  bool is_finite() const { return kind_ == PlaceKind::Finite; }
  const mpz_class& p() const { return p_; }
  Splitting splitting() const { return split_; }
  int conj_index() const { return conj_; }

  // Ramification index and residue degree over Q.
  int e() const {
    return (is_finite() && split_ == Splitting::Ramified) ? 2 : 1;
  }
  int f() const { return (is_finite() && split_ == Splitting::Inert) ? 2 : 1; }

  // Weight of the place in height sums: [F_v : Q_v] / [F : Q].
  mpq_class weight() const {
    int local;
    switch (kind_) {
      case PlaceKind::RealEmbedding:
        local = 1;
        break;
      case PlaceKind::ComplexPair:
        local = 2;
        break;
      default:
        local = e() * f();
    }
    mpq_class w(local, F_.degree());
    w.canonicalize();
    return w;
  }

  // Valuation in uniformizer units, ord_v(0) = kOrdInfinity.  For ramified v
  // this is twice the Q-normalized valuation of rationals.
  long ord(const QuadFieldElement& x) const {
    if (!is_finite()) throw std::domain_error("ord: archimedean place");
    if (x.is_zero()) return kOrdInfinity;
    if (!x.is_rational() && QuadField(x.d()) != F_)
      throw std::domain_error("ord: element outside the place's field");
    if (x.is_rational()) {
      long o = ord_p(x.a(), p_) - ord_p(x.c(), p_);
      return o * e();
    }
    switch (split_) {
      case Splitting::Inert: {
        // ord_v = ord_p(N(x)) / 2, always integral.
        mpq_class n = x.norm();
        long o = ord_p(n, p_);
        if (o % 2 != 0) throw std::logic_error("ord: odd norm valuation at inert place");
        return o / 2;
      }
      case Splitting::Ramified: {
        return ord_p(x.norm(), p_);
      }
      case Splitting::Split: {
        // Embed sqrt(d) via its p-adic lift; the numerator valuation is
        // bounded by ord_p(N) since the conjugate factor is integral.
        mpz_class num_norm = x.a() * x.a() - x.b() * x.b() * x.d();
        long bound = (num_norm == 0) ? 0 : ord_p(num_norm, p_);
        long M = bound + 1;
        ensure_sqrt_precision(M);
        mpz_class pm = pow_p(M);
        mpz_class s = sqrt_lift_ % pm;
        if (conj_ == 1) s = pm - s;
        mpz_class t = (x.a() + x.b() * s) % pm;
        if (t < 0) t += pm;
        if (t == 0)
          throw std::logic_error("ord: split valuation exceeded its norm bound");
        return ord_p(t, p_) - ord_p(x.c(), p_);
      }
      default:
        throw std::logic_error("ord: quadratic element over Q place");
    }
  }

  long ord(const mpq_class& x) const {
    if (!is_finite()) throw std::domain_error("ord: archimedean place");
    if (x == 0) return kOrdInfinity;
    return ord_p(x, p_) * e();
  }

  // log of the residue/absolute-value base: |x|_v = p^(-ord_v(x)/e).
  RealInterval log_p(mpfr_prec_t prec = 0) const {
    return RealInterval::from_mpz(p_, prec).log();
  }

  // A uniformizer as a field element (finite ramified places only; for
  // unramified places the rational p serves).
  QuadFieldElement uniformizer() const {
    if (!is_finite()) throw std::domain_error("uniformizer: archimedean place");
    if (split_ != Splitting::Ramified)
      return QuadFieldElement(p_, 0, 1, 1);
    QuadFieldElement root = QuadFieldElement::sqrt_generator(F_);
    if (ord(root) == 1) return root;
    QuadFieldElement cand = root + QuadFieldElement::from_int(1);
    if (ord(cand) != 1)
      throw std::logic_error("uniformizer: no candidate of valuation 1");
    return cand;
  }

  std::string str() const {
    switch (kind_) {
      case PlaceKind::RealEmbedding:
        return F_.is_rational() ? "real" : (conj_ == 0 ? "real+" : "real-");
      case PlaceKind::ComplexPair:
        return "complex";
      default:
        break;
    }
    std::string tag;
    switch (split_) {
      case Splitting::Trivial:
        tag = "";
        break;
      case Splitting::Split:
        tag = conj_ == 0 ? ",split+" : ",split-";
        break;
      case Splitting::Inert:
        tag = ",inert";
        break;
      case Splitting::Ramified:
        tag = ",ramified";
        break;
    }
    return "(" + p_.get_str() + tag + ")";
  }

  friend std::vector<Place> places_above(const QuadField& F, const mpz_class& p);

 private:
  Place() = default;

  mpz_class pow_p(long k) const {
    mpz_class out;
    mpz_pow_ui(out.get_mpz_t(), p_.get_mpz_t(), static_cast<unsigned long>(k));
    return out;
  }

  void ensure_sqrt_precision(long M) const {
    if (M <= sqrt_prec_ && sqrt_prec_ > 0) return;
    long target = std::max(M, sqrt_prec_ * 2);
    sqrt_lift_ = padic_sqrt(F_.d(), p_, target);
    sqrt_prec_ = target;
  }

  PlaceKind kind_ = PlaceKind::Finite;
  QuadField F_;
  Splitting split_ = Splitting::Trivial;
  mpz_class p_;
  int conj_ = 0;
  // Cached Hensel lift of sqrt(d) mod p^sqrt_prec_ (split places).
  mutable mpz_class sqrt_lift_;
  mutable long sqrt_prec_ = 0;
};

// Archimedean places with weights: Q -> one real; real quadratic -> two real
// embeddings (weight 1/2 each); imaginary quadratic -> one complex pair.
inline std::vector<Place> archimedean_places(const QuadField& F) {
  std::vector<Place> out;
  if (F.is_rational()) {
    out.push_back(Place::real_embedding(F, 0));
  } else if (F.is_real()) {
    out.push_back(Place::real_embedding(F, 0));
    out.push_back(Place::real_embedding(F, 1));
  } else {
    out.push_back(Place::complex_pair(F));
  }
  return out;
}

// Finite places of F above the rational prime p.
inline std::vector<Place> places_above(const QuadField& F, const mpz_class& p) {
  if (!is_probable_prime(p)) throw std::invalid_argument("places_above: p not prime");
  Place v;
  v.kind_ = PlaceKind::Finite;
  v.F_ = F;
  v.p_ = p;
  if (F.is_rational()) {
    v.split_ = Splitting::Trivial;
    return {v};
  }
  const mpz_class& d = F.d();
  Splitting s;
  if (p == 2) {
    mpz_class r = d % 8;
    if (r < 0) r += 8;
    if (r == 1)
      s = Splitting::Split;
    else if (r == 5)
      s = Splitting::Inert;
    else
      s = Splitting::Ramified;  // d = 2, 3 mod 4
  } else {
    int chi = kronecker(d, p);
    s = (chi == 0) ? Splitting::Ramified : (chi == 1 ? Splitting::Split : Splitting::Inert);
  }
  v.split_ = s;
  if (s == Splitting::Split) {
    Place v2 = v;
    v2.conj_ = 1;
    return {v, v2};
  }
  return {v};
}

// -------- Weierstrass models with coefficients in a quadratic field --------

// Needed because minimalizing at a ramified place scales by a uniformizer,
// which pushes coefficients out of Q.
struct LocalModel {
  QuadFieldElement a1, a2, a3, a4, a6;
  QuadFieldElement b2, b4, b6, b8, c4, c6, disc;

  LocalModel(QuadFieldElement a1_, QuadFieldElement a2_, QuadFieldElement a3_,
             QuadFieldElement a4_, QuadFieldElement a6_)
      : a1(std::move(a1_)),
        a2(std::move(a2_)),
        a3(std::move(a3_)),
        a4(std::move(a4_)),
        a6(std::move(a6_)) {
    auto I = [](long v) { return QuadFieldElement::from_int(v); };
    b2 = a1 * a1 + I(4) * a2;
    b4 = I(2) * a4 + a1 * a3;
    b6 = a3 * a3 + I(4) * a6;
    b8 = a1 * a1 * a6 + I(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
    c4 = b2 * b2 - I(24) * b4;
    c6 = -(b2 * b2 * b2) + I(36) * b2 * b4 - I(216) * b6;
    disc = -(b2 * b2 * b8) - I(8) * b4 * b4 * b4 - I(27) * b6 * b6 +
           I(9) * b2 * b4 * b6;
    if (disc.is_zero()) throw std::invalid_argument("LocalModel: singular");
  }

  static LocalModel from_curve(const CurveModel& E) {
    using detail::qf;
    return LocalModel(qf(E.a1()), qf(E.a2()), qf(E.a3()), qf(E.a4()), qf(E.a6()));
  }
};

// Coordinate change with coefficients in F; same convention as Transform.
struct LocalTransform {
  QuadFieldElement u = QuadFieldElement::from_int(1);
  QuadFieldElement r = QuadFieldElement::zero();
  QuadFieldElement s = QuadFieldElement::zero();
  QuadFieldElement t = QuadFieldElement::zero();

  LocalTransform then(const LocalTransform& next) const {
    LocalTransform out;
    out.u = u * next.u;
    out.r = u * u * next.r + r;
    out.s = u * next.s + s;
    out.t = u * u * u * next.t + s * u * u * next.r + t;
    return out;
  }

  LocalModel apply(const LocalModel& E) const {
    QuadFieldElement u2 = u * u, u3 = u2 * u;
    auto I = [](long v) { return QuadFieldElement::from_int(v); };
    QuadFieldElement na1 = (E.a1 + I(2) * s) / u;
    QuadFieldElement na2 = (E.a2 - s * E.a1 + I(3) * r - s * s) / u2;
    QuadFieldElement na3 = (E.a3 + r * E.a1 + I(2) * t) / u3;
    QuadFieldElement na4 =
        (E.a4 - s * E.a3 + I(2) * r * E.a2 - (t + r * s) * E.a1 + I(3) * r * r -
         I(2) * s * t) /
        (u2 * u2);
    QuadFieldElement na6 =
        (E.a6 + r * E.a4 + r * r * E.a2 + r * r * r - t * E.a3 - t * t -
         r * t * E.a1) /
        (u3 * u3);
    return LocalModel(na1, na2, na3, na4, na6);
  }

  // (x, y) on the source model -> coordinates on the transformed model.
  std::pair<QuadFieldElement, QuadFieldElement> apply_point(
      const QuadFieldElement& x, const QuadFieldElement& y) const {
    QuadFieldElement u2 = u * u;
    QuadFieldElement nx = (x - r) / u2;
    QuadFieldElement ny = (y - s * (x - r) - t) / (u2 * u);
    return {nx, ny};
  }
};

struct LocalMinimalization {
  LocalModel model;
  LocalTransform tr;   // source model -> model
  long delta_drop;     // ord_v(disc_src) - ord_v(disc_min), a multiple of 12
};

namespace detail {

// Residue representatives of O_v mod pi^m at a ramified place: all sums
// c_0 + c_1 pi + ... + c_{m-1} pi^{m-1} with 0 <= c_j < p.
inline std::vector<QuadFieldElement> residue_reps(const Place& v,
                                                  const QuadFieldElement& pi,
                                                  int m) {
  long p = v.p().get_si();
  std::vector<QuadFieldElement> pows(m);
  QuadFieldElement acc = QuadFieldElement::from_int(1);
  for (int j = 0; j < m; ++j) {
    pows[j] = acc;
    acc = acc * pi;
  }
  std::vector<QuadFieldElement> reps{QuadFieldElement::zero()};
  for (int j = 0; j < m; ++j) {
    std::vector<QuadFieldElement> next;
    next.reserve(reps.size() * p);
    for (const auto& base : reps)
      for (long c = 0; c < p; ++c)
        next.push_back(base + QuadFieldElement::from_int(c) * pows[j]);
    reps = std::move(next);
  }
  return reps;
}

inline bool divides(const Place& v, const QuadFieldElement& z, long k) {
  return v.ord(z) >= k;
}

// One minimality step at a ramified place with p >= 5: if (c4, c6, disc)
// valuations allow a scale by pi, return the transform (complete the square
// and cube, then scale); 2 and 3 are units so the shifts stay integral.
inline std::optional<LocalTransform> scale_step_large_p(const Place& v,
                                                        const LocalModel& E,
                                                        const QuadFieldElement& pi) {
  long vc4 = E.c4.is_zero() ? kOrdInfinity : v.ord(E.c4);
  long vc6 = E.c6.is_zero() ? kOrdInfinity : v.ord(E.c6);
  if (vc4 < 4 || vc6 < 6 || v.ord(E.disc) < 12) return std::nullopt;
  auto I = [](long x) { return QuadFieldElement::from_int(x); };
  LocalTransform square;  // kills a1, a3
  square.s = -E.a1 / I(2);
  square.t = -E.a3 / I(2);
  LocalTransform shift;  // kills the x^2 term
  shift.r = -E.b2 / I(12);
  LocalTransform scale;
  scale.u = pi;
  return square.then(shift).then(scale);
}

// One minimality step at a ramified place with p in {2, 3}: bounded search
// over residue representatives.  Any valid (r, s, t) is equivalent to one
// with r, t mod pi^6 and s mod pi^4.
inline std::optional<LocalTransform> scale_step_small_p(const Place& v,
                                                        const LocalModel& E,
                                                        const QuadFieldElement& pi) {
  if (v.ord(E.disc) < 12) return std::nullopt;
  auto I = [](long x) { return QuadFieldElement::from_int(x); };
  if (v.p() == 3) {
    // 2 is a unit: complete the square, then only r needs searching.
    LocalTransform square;
    square.s = -E.a1 / I(2);
    square.t = -E.a3 / I(2);
    LocalModel Esq = square.apply(E);
    for (const auto& r : residue_reps(v, pi, 6)) {
      if (!divides(v, Esq.a2 + I(3) * r, 2)) continue;
      if (!divides(v, Esq.a4 + I(2) * r * Esq.a2 + I(3) * r * r, 4)) continue;
      if (!divides(v, Esq.a6 + r * Esq.a4 + r * r * Esq.a2 + r * r * r, 6)) continue;
      LocalTransform step;
      step.u = pi;
      step.r = r;
      return square.then(step);
    }
    return std::nullopt;
  }
  // p = 2: full (s, r, t) search with early pruning.
  auto s_reps = residue_reps(v, pi, 4);
  auto rt_reps = residue_reps(v, pi, 6);
  for (const auto& s : s_reps) {
    if (!divides(v, E.a1 + I(2) * s, 1)) continue;
    for (const auto& r : rt_reps) {
      if (!divides(v, E.a2 - s * E.a1 + I(3) * r - s * s, 2)) continue;
      for (const auto& t : rt_reps) {
        if (!divides(v, E.a3 + r * E.a1 + I(2) * t, 3)) continue;
        if (!divides(v,
                     E.a4 - s * E.a3 + I(2) * r * E.a2 - (t + r * s) * E.a1 +
                         I(3) * r * r - I(2) * s * t,
                     4))
          continue;
        if (!divides(v,
                     E.a6 + r * E.a4 + r * r * E.a2 + r * r * r - t * E.a3 -
                         t * t - r * t * E.a1,
                     6))
          continue;
        LocalTransform step;
        step.u = pi;
        step.r = r;
        step.s = s;
        step.t = t;
        return step;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Minimal model of E at the finite place v.  Precondition: E is integral and
// minimal at v.p() over Q (e.g. a global minimal model); then only ramified
// places can admit a further scale.
inline LocalMinimalization v_minimal_model(const CurveModel& E, const Place& v) {
  if (!v.is_finite()) throw std::domain_error("v_minimal_model: archimedean place");
  if (!E.is_integral())
    throw std::invalid_argument("v_minimal_model: non-integral model");
  LocalModel M = LocalModel::from_curve(E);
  LocalTransform total;
  long n0 = v.ord(M.disc);
  if (v.splitting() == Splitting::Ramified) {
    QuadFieldElement pi = v.uniformizer();
    for (;;) {
      std::optional<LocalTransform> step =
          (v.p() <= 3) ? detail::scale_step_small_p(v, M, pi)
                       : detail::scale_step_large_p(v, M, pi);
      if (!step) break;
      LocalModel next = step->apply(M);
      for (const QuadFieldElement* a :
           {&next.a1, &next.a2, &next.a3, &next.a4, &next.a6}) {
        if (v.ord(*a) < 0)
          throw std::logic_error("v_minimal_model: scale step left integrality");
      }
      if (v.ord(next.disc) != v.ord(M.disc) - 12)
        throw std::logic_error("v_minimal_model: unexpected discriminant drop");
      M = next;
      total = total.then(*step);
    }
  }
  long drop = n0 - v.ord(M.disc);
  return LocalMinimalization{M, total, drop};
}

}  // namespace minpoint
