// Elliptic curves over Q in long Weierstrass form, their standard invariants,
// global minimal models, and exact point arithmetic over quadratic fields.
#pragma once

#include <gmpxx.h>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "minpoint/numeric.hpp"
#include "minpoint/qfield.hpp"

namespace minpoint {

// Coordinate change x = u^2 x' + r, y = u^3 y' + s u^2 x' + t mapping a model
// E to a model E'.  u, r, s, t are rational; u != 0.
struct Transform {
  mpq_class u{1}, r{0}, s{0}, t{0};

  bool is_identity() const { return u == 1 && r == 0 && s == 0 && t == 0; }

  // Composition: apply *this first, then next (as maps of models E -> E'').
  Transform then(const Transform& next) const {
    Transform out;
    out.u = u * next.u;
    out.r = u * u * next.r + r;
    out.s = u * next.s + s;
    out.t = u * u * u * next.t + s * u * u * next.r + t;
    out.u.canonicalize();
    out.r.canonicalize();
    out.s.canonicalize();
    out.t.canonicalize();
    return out;
  }

  Transform inverse() const {
    Transform out;
    out.u = 1 / u;
    out.r = -r / (u * u);
    out.s = -s / u;
    out.t = (r * s - t) / (u * u * u);
    out.u.canonicalize();
    out.r.canonicalize();
    out.s.canonicalize();
    out.t.canonicalize();
    return out;
  }
};

class CurveModel {
 public:
  CurveModel(mpq_class a1, mpq_class a2, mpq_class a3, mpq_class a4, mpq_class a6,
             std::string label = "")
      : a1_(std::move(a1)),
        a2_(std::move(a2)),
        a3_(std::move(a3)),
        a4_(std::move(a4)),
        a6_(std::move(a6)),
        label_(std::move(label)) {
    b2_ = a1_ * a1_ + 4 * a2_;
    b4_ = 2 * a4_ + a1_ * a3_;
    b6_ = a3_ * a3_ + 4 * a6_;
    b8_ = a1_ * a1_ * a6_ + 4 * a2_ * a6_ - a1_ * a3_ * a4_ + a2_ * a3_ * a3_ -
          a4_ * a4_;
    c4_ = b2_ * b2_ - 24 * b4_;
    c6_ = -b2_ * b2_ * b2_ + 36 * b2_ * b4_ - 216 * b6_;
    disc_ = -b2_ * b2_ * b8_ - 8 * b4_ * b4_ * b4_ - 27 * b6_ * b6_ +
            9 * b2_ * b4_ * b6_;
    for (mpq_class* q : {&b2_, &b4_, &b6_, &b8_, &c4_, &c6_, &disc_})
      q->canonicalize();
    if (disc_ == 0) throw std::invalid_argument("CurveModel: singular (disc = 0)");
    j_ = c4_ * c4_ * c4_ / disc_;
    j_.canonicalize();
  }

  const mpq_class& a1() const { return a1_; }
  const mpq_class& a2() const { return a2_; }
  const mpq_class& a3() const { return a3_; }
  const mpq_class& a4() const { return a4_; }
  const mpq_class& a6() const { return a6_; }
  const mpq_class& b2() const { return b2_; }
  const mpq_class& b4() const { return b4_; }
  const mpq_class& b6() const { return b6_; }
  const mpq_class& b8() const { return b8_; }
  const mpq_class& c4() const { return c4_; }
  const mpq_class& c6() const { return c6_; }
  const mpq_class& disc() const { return disc_; }
  const mpq_class& j_invariant() const { return j_; }
  const std::string& label() const { return label_; }

  bool is_integral() const {
    return a1_.get_den() == 1 && a2_.get_den() == 1 && a3_.get_den() == 1 &&
           a4_.get_den() == 1 && a6_.get_den() == 1;
  }

  bool same_equation(const CurveModel& o) const {
    return a1_ == o.a1_ && a2_ == o.a2_ && a3_ == o.a3_ && a4_ == o.a4_ &&
           a6_ == o.a6_;
  }

  CurveModel transformed(const Transform& tr, std::string label = "") const {
    const mpq_class &u = tr.u, &r = tr.r, &s = tr.s, &t = tr.t;
    if (u == 0) throw std::invalid_argument("transformed: u = 0");
    mpq_class u2 = u * u, u3 = u2 * u;
    mpq_class na1 = (a1_ + 2 * s) / u;
    mpq_class na2 = (a2_ - s * a1_ + 3 * r - s * s) / u2;
    mpq_class na3 = (a3_ + r * a1_ + 2 * t) / u3;
    mpq_class na4 =
        (a4_ - s * a3_ + 2 * r * a2_ - (t + r * s) * a1_ + 3 * r * r - 2 * s * t) /
        (u2 * u2);
    mpq_class na6 =
        (a6_ + r * a4_ + r * r * a2_ + r * r * r - t * a3_ - t * t - r * t * a1_) /
        (u3 * u3);
    for (mpq_class* q : {&na1, &na2, &na3, &na4, &na6}) q->canonicalize();
    return CurveModel(na1, na2, na3, na4, na6,
                      label.empty() ? label_ : std::move(label));
  }

  // Clears denominators: the returned transform tr maps *this to the integral
  // model, this->transformed(tr).
  Transform integral_scaling() const {
    mpz_class m = 1;
    const mpq_class* as[5] = {&a1_, &a2_, &a3_, &a4_, &a6_};
    const int weight[5] = {1, 2, 3, 4, 6};
    mpz_class dens = 1;
    for (auto* a : as) dens *= a->get_den();
    for (const auto& [p, e0] : factorize(dens)) {
      (void)e0;
      long k = 0;
      for (int i = 0; i < 5; ++i) {
        if (*as[i] == 0) continue;
        long e = ord_p(*as[i], p);
        if (e < 0) {
          long need = (-e + weight[i] - 1) / weight[i];  // ceil(-e / weight)
          k = std::max(k, need);
        }
      }
      for (long j = 0; j < k; ++j) m *= p;
    }
    Transform tr;
    tr.u = mpq_class(1, m);
    return tr;
  }

  // Global minimal model over Q (Laska-Kraus-Connell): returns the minimal
  // model and the transform tr with minimal == this->transformed(tr).
  std::pair<CurveModel, Transform> minimal_model() const;

  std::string str() const {
    std::string s = "[" + a1_.get_str() + "," + a2_.get_str() + "," + a3_.get_str() +
                    "," + a4_.get_str() + "," + a6_.get_str() + "]";
    return label_.empty() ? s : label_ + ":" + s;
  }

 private:
  mpq_class a1_, a2_, a3_, a4_, a6_;
  mpq_class b2_, b4_, b6_, b8_, c4_, c6_, disc_, j_;
  std::string label_;
};

namespace detail {

// Kraus: (c4, c6) with 1728 | c4^3 - c6^2 arise from an integral model iff
// ord3(c6) != 2 and, at 2, either c6 = -1 mod 4 or (16 | c4 and
// c6 mod 32 in {0, 8}).
inline bool kraus_ok(const mpz_class& c4, const mpz_class& c6) {
  if (c6 != 0 && ord_p(c6, mpz_class(3)) == 2) return false;
  mpz_class r4 = c6 % 4;
  if (r4 < 0) r4 += 4;
  if (r4 == 3) return true;  // c6 = -1 mod 4
  if (c4 % 16 != 0) return false;
  mpz_class r32 = c6 % 32;
  if (r32 < 0) r32 += 32;
  return r32 == 0 || r32 == 8;
}

// Reconstructs the reduced integral model with invariants (c4, c6); requires
// kraus_ok.  The valid b2 in [-5, 6] is unique.
inline CurveModel curve_from_c4c6(const mpz_class& c4, const mpz_class& c6,
                                  const std::string& label) {
  for (long cand = -5; cand <= 6; ++cand) {
    mpz_class b2 = cand;
    mpz_class num4 = b2 * b2 - c4;
    if (num4 % 24 != 0) continue;
    mpz_class b4 = num4 / 24;
    mpz_class num6 = -b2 * b2 * b2 + 36 * b2 * b4 - c6;
    if (num6 % 216 != 0) continue;
    mpz_class b6 = num6 / 216;
    mpz_class a1 = ((b2 % 2) + 2) % 2;
    mpz_class a3 = ((b6 % 2) + 2) % 2;
    if ((b2 - a1) % 4 != 0) continue;
    mpz_class a2 = (b2 - a1) / 4;
    if ((b4 - a1 * a3) % 2 != 0) continue;
    mpz_class a4 = (b4 - a1 * a3) / 2;
    if ((b6 - a3) % 4 != 0) continue;
    mpz_class a6 = (b6 - a3) / 4;
    CurveModel E(mpq_class(a1), mpq_class(a2), mpq_class(a3), mpq_class(a4),
                 mpq_class(a6), label);
    if (E.c4() == c4 && E.c6() == c6) return E;
  }
  throw std::logic_error("curve_from_c4c6: no valid reduced model (Kraus violated)");
}

}  // namespace detail

inline std::pair<CurveModel, Transform> CurveModel::minimal_model() const {
  Transform to_int = integral_scaling();
  CurveModel E = is_integral() ? *this : transformed(to_int);
  mpz_class c4(E.c4().get_num()), c6(E.c6().get_num()), D(E.disc().get_num());
  // Largest u with u^4 | c4, u^6 | c6, u^12 | disc, then Kraus-corrected
  // at 2 and 3.
  mpz_class u = 1;
  mpz_class content = gcd(gcd(abs(c4), abs(c6)), abs(D));
  for (const auto& [p, e0] : factorize(content)) {
    (void)e0;
    long k = ord_p(D, p) / 12;
    if (c4 != 0) k = std::min(k, ord_p(c4, p) / 4);
    if (c6 != 0) k = std::min(k, ord_p(c6, p) / 6);
    if (p == 2 || p == 3) {
      mpz_class p4 = p * p * p * p, p6 = p4 * p * p;
      while (k > 0) {
        mpz_class uk4 = 1, uk6 = 1;
        for (long j = 0; j < k; ++j) {
          uk4 *= p4;
          uk6 *= p6;
        }
        if (detail::kraus_ok(c4 / uk4, c6 / uk6)) break;
        --k;
      }
    }
    for (long j = 0; j < k; ++j) u *= p;
  }
  mpz_class u4 = u * u * u * u, u6 = u4 * u * u;
  CurveModel Emin = detail::curve_from_c4c6(c4 / u4, c6 / u6, label_);
  // Recover (r, s, t) linking E to Emin at scale u; each step is forced and
  // must land in Z.
  auto exact_div = [](const mpq_class& num, long den) {
    mpq_class q = num / den;
    q.canonicalize();
    if (q.get_den() != 1)
      throw std::logic_error("minimal_model: non-integral transform");
    return q;
  };
  mpq_class uq(u);
  mpq_class s = exact_div(uq * Emin.a1() - E.a1(), 2);
  mpq_class r = exact_div(uq * uq * Emin.a2() - E.a2() + s * E.a1() + s * s, 3);
  mpq_class t = exact_div(uq * uq * uq * Emin.a3() - E.a3() - r * E.a1(), 2);
  Transform lk{uq, r, s, t};
  if (!E.transformed(lk).same_equation(Emin))
    throw std::logic_error("minimal_model: transform verification failed");
  Transform total = is_integral() ? lk : to_int.then(lk);
  return {Emin, total};
}

// Parses "[a1,a2,a3,a4,a6]" with an optional "label:" prefix; entries are
// integers or fractions p/q.
inline CurveModel parse_curve(const std::string& text) {
  size_t i = 0;
  detail::skip_ws(text, i);
  std::string label;
  size_t bracket = text.find('[', i);
  if (bracket == std::string::npos)
    throw std::invalid_argument("parse_curve: missing '[' in '" + text + "'");
  size_t colon = text.find(':', i);
  if (colon != std::string::npos && colon < bracket) {
    label = text.substr(i, colon - i);
    while (!label.empty() && isspace(static_cast<unsigned char>(label.back())))
      label.pop_back();
    i = colon + 1;
    detail::skip_ws(text, i);
  }
  if (text[i] != '[')
    throw std::invalid_argument("parse_curve: expected '[' in '" + text + "'");
  ++i;
  mpq_class a[5];
  for (int k = 0; k < 5; ++k) {
    mpz_class num = detail::parse_int(text, i);
    mpz_class den = 1;
    detail::skip_ws(text, i);
    if (i < text.size() && text[i] == '/') {
      ++i;
      den = detail::parse_int(text, i);
    }
    a[k] = mpq_class(num, den);
    a[k].canonicalize();
    detail::skip_ws(text, i);
    if (k < 4) detail::expect(text, i, ",");
  }
  detail::expect(text, i, "]");
  detail::skip_ws(text, i);
  if (i != text.size())
    throw std::invalid_argument("parse_curve: trailing characters in '" + text + "'");
  return CurveModel(a[0], a[1], a[2], a[3], a[4], label);
}

// -------- points --------

namespace detail {
inline QuadFieldElement qf(const mpq_class& q) {
  return QuadFieldElement::from_rational(q);
}
}  // namespace detail

class CurvePoint {
 public:
  // Point at infinity.
  explicit CurvePoint(std::shared_ptr<const CurveModel> curve)
      : curve_(std::move(curve)), infinity_(true) {
    if (!curve_) throw std::invalid_argument("CurvePoint: null curve");
  }

  CurvePoint(std::shared_ptr<const CurveModel> curve, QuadFieldElement x,
             QuadFieldElement y)
      : curve_(std::move(curve)),
        infinity_(false),
        x_(std::move(x)),
        y_(std::move(y)) {
    if (!curve_) throw std::invalid_argument("CurvePoint: null curve");
    if (!x_.is_rational() && !y_.is_rational() && x_.d() != y_.d())
      throw std::invalid_argument("CurvePoint: coordinates in distinct fields");
    if (!satisfies_equation())
      throw std::invalid_argument("CurvePoint: not on the curve");
  }

  const CurveModel& curve() const { return *curve_; }
  std::shared_ptr<const CurveModel> curve_ptr() const { return curve_; }
  bool is_infinity() const { return infinity_; }
  const QuadFieldElement& x() const {
    if (infinity_) throw std::domain_error("x(): point at infinity");
    return x_;
  }
  const QuadFieldElement& y() const {
    if (infinity_) throw std::domain_error("y(): point at infinity");
    return y_;
  }

  // Smallest field containing both coordinates.
  QuadField field() const {
    if (infinity_ || (x_.is_rational() && y_.is_rational())) return QuadField();
    return x_.is_rational() ? QuadField(y_.d()) : QuadField(x_.d());
  }

  bool operator==(const CurvePoint& o) const {
    if (infinity_ || o.infinity_) return infinity_ == o.infinity_;
    return x_ == o.x_ && y_ == o.y_;
  }
  bool operator!=(const CurvePoint& o) const { return !(*this == o); }

  CurvePoint operator-() const {
    if (infinity_) return *this;
    using detail::qf;
    QuadFieldElement ny = -y_ - qf(curve_->a1()) * x_ - qf(curve_->a3());
    return CurvePoint(curve_, x_, ny, unchecked_tag{});
  }

  friend CurvePoint operator+(const CurvePoint& P, const CurvePoint& Q) {
    if (&P.curve() != &Q.curve() && !P.curve().same_equation(Q.curve()))
      throw std::invalid_argument("CurvePoint: adding points on different curves");
    if (P.infinity_) return Q;
    if (Q.infinity_) return P;
    using detail::qf;
    const CurveModel& E = P.curve();
    QuadFieldElement a1 = qf(E.a1()), a2 = qf(E.a2()), a3 = qf(E.a3()),
                     a4 = qf(E.a4());
    QuadFieldElement lambda;
    if (P.x_ == Q.x_) {
      QuadFieldElement denom = Q.y_ + P.y_ + a1 * P.x_ + a3;
      if (denom.is_zero()) return CurvePoint(P.curve_);  // Q = -P
      // Tangent line (P = Q forced: same x, not opposite).
      QuadFieldElement three = QuadFieldElement::from_int(3);
      QuadFieldElement two = QuadFieldElement::from_int(2);
      lambda = (three * P.x_ * P.x_ + two * a2 * P.x_ + a4 - a1 * P.y_) / denom;
    } else {
      lambda = (Q.y_ - P.y_) / (Q.x_ - P.x_);
    }
    QuadFieldElement nu = P.y_ - lambda * P.x_;
    QuadFieldElement x3 = lambda * lambda + a1 * lambda - a2 - P.x_ - Q.x_;
    QuadFieldElement y3 = -(lambda + a1) * x3 - nu - a3;
    return CurvePoint(P.curve_, x3, y3, unchecked_tag{});
  }

  friend CurvePoint operator-(const CurvePoint& P, const CurvePoint& Q) {
    return P + (-Q);
  }

  CurvePoint times(long k) const {
    if (k < 0) return (-*this).times(-k);
    CurvePoint acc(curve_);
    CurvePoint base = *this;
    while (k > 0) {
      if (k & 1) acc = acc + base;
      k >>= 1;
      if (k > 0) base = base + base;
    }
    return acc;
  }

  // Exact torsion order if <= 18, else 0.  Torsion orders over degree <= 2
  // fields are bounded by 18, so 0 certifies infinite order.
  int torsion_order() const {
    if (infinity_) return 1;
    CurvePoint acc = *this;
    for (int k = 2; k <= 18; ++k) {
      acc = acc + *this;
      if (acc.infinity_) return k;
    }
    return 0;
  }
  bool is_torsion() const { return torsion_order() != 0; }

  // Image under a model transform; tr maps curve() to target.
  CurvePoint mapped(const Transform& tr,
                    std::shared_ptr<const CurveModel> target) const {
    if (infinity_) return CurvePoint(std::move(target));
    using detail::qf;
    QuadFieldElement u = qf(tr.u), r = qf(tr.r), s = qf(tr.s), t = qf(tr.t);
    QuadFieldElement nx = (x_ - r) / (u * u);
    QuadFieldElement ny = (y_ - s * (x_ - r) - t) / (u * u * u);
    return CurvePoint(std::move(target), nx, ny);
  }

  std::string str() const {
    if (infinity_) return "O";
    return "(" + x_.str() + ", " + y_.str() + ")";
  }

 private:
  struct unchecked_tag {};
  CurvePoint(std::shared_ptr<const CurveModel> curve, QuadFieldElement x,
             QuadFieldElement y, unchecked_tag)
      : curve_(std::move(curve)),
        infinity_(false),
        x_(std::move(x)),
        y_(std::move(y)) {}

  bool satisfies_equation() const {
    using detail::qf;
    const CurveModel& E = *curve_;
    QuadFieldElement lhs =
        y_ * y_ + qf(E.a1()) * x_ * y_ + qf(E.a3()) * y_;
    QuadFieldElement rhs =
        x_ * x_ * x_ + qf(E.a2()) * x_ * x_ + qf(E.a4()) * x_ + qf(E.a6());
    return lhs == rhs;
  }

  std::shared_ptr<const CurveModel> curve_;
  bool infinity_;
  QuadFieldElement x_, y_;
};

// Points of E with the given x-coordinate and y in F; 0, 1, or 2 results,
// ordered with the preferred square root first.
inline std::vector<CurvePoint> lift_x(std::shared_ptr<const CurveModel> curve,
                                      const QuadField& F,
                                      const QuadFieldElement& x) {
  using detail::qf;
  const CurveModel& E = *curve;
  QuadFieldElement lin = qf(E.a1()) * x + qf(E.a3());
  QuadFieldElement rhs =
      x * x * x + qf(E.a2()) * x * x + qf(E.a4()) * x + qf(E.a6());
  // y^2 + lin*y - rhs = 0: y = (-lin +- sqrt(lin^2 + 4 rhs)) / 2
  QuadFieldElement disc = lin * lin + QuadFieldElement::from_int(4) * rhs;
  if (!x.is_rational() && QuadField(x.d()) != F)
    throw std::domain_error("lift_x: x outside field");
  auto root = sqrt_in_field(F, disc);
  std::vector<CurvePoint> out;
  if (!root) return out;
  QuadFieldElement two = QuadFieldElement::from_int(2);
  QuadFieldElement y1 = (*root - lin) / two;
  out.emplace_back(curve, x, y1);
  if (!root->is_zero()) {
    QuadFieldElement y2 = (-*root - lin) / two;
    out.emplace_back(curve, x, y2);
  }
  return out;
}

// Parses "(x, y)" or "O"/"inf" relative to a curve.
inline CurvePoint parse_point(std::shared_ptr<const CurveModel> curve,
                              const std::string& text) {
  size_t i = 0;
  detail::skip_ws(text, i);
  if (text.compare(i, 1, "O") == 0 || text.compare(i, 3, "inf") == 0)
    return CurvePoint(std::move(curve));
  if (i >= text.size() || text[i] != '(')
    throw std::invalid_argument("parse_point: expected '(' or 'O' in '" + text + "'");
  // Split on the top-level comma (coordinates may contain parentheses).
  size_t depth = 0, split = std::string::npos;
  size_t last = text.find_last_of(')');
  if (last == std::string::npos)
    throw std::invalid_argument("parse_point: unbalanced '(' in '" + text + "'");
  for (size_t k = i + 1; k < last; ++k) {
    if (text[k] == '(') ++depth;
    if (text[k] == ')') --depth;
    if (text[k] == ',' && depth == 0) {
      split = k;
      break;
    }
  }
  if (split == std::string::npos)
    throw std::invalid_argument("parse_point: missing ',' in '" + text + "'");
  QuadFieldElement x = parse_element(text.substr(i + 1, split - i - 1));
  QuadFieldElement y = parse_element(text.substr(split + 1, last - split - 1));
  return CurvePoint(std::move(curve), std::move(x), std::move(y));
}

}  // namespace minpoint
