// Interval arithmetic over MPFR with directed rounding.  Every operation
// returns an enclosure of the exact result, so any value threaded through
// RealInterval carries a machine-checkable error bound.
#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace minpoint {

inline mpfr_prec_t& default_interval_precision() {
  static mpfr_prec_t prec = 192;
  return prec;
}

class RealInterval {
 public:
  RealInterval() : RealInterval(default_interval_precision()) {
    mpfr_set_zero(lo_, 1);
    mpfr_set_zero(hi_, 1);
  }
  explicit RealInterval(mpfr_prec_t prec) {
    mpfr_init2(lo_, prec);
    mpfr_init2(hi_, prec);
    mpfr_set_nan(lo_);
    mpfr_set_nan(hi_);
  }
  RealInterval(const RealInterval& o) : RealInterval(o.prec()) {
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }
  RealInterval(RealInterval&& o) noexcept {
    mpfr_init2(lo_, o.prec());
    mpfr_init2(hi_, o.prec());
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  }
  RealInterval& operator=(const RealInterval& o) {
    if (this != &o) {
      mpfr_set_prec(lo_, o.prec());
      mpfr_set_prec(hi_, o.prec());
      mpfr_set(lo_, o.lo_, MPFR_RNDD);
      mpfr_set(hi_, o.hi_, MPFR_RNDU);
    }
    return *this;
  }
  RealInterval& operator=(RealInterval&& o) noexcept {
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
    return *this;
  }
  ~RealInterval() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }

  static RealInterval exact(long v, mpfr_prec_t prec = 0) {
    RealInterval r(pick(prec));
    mpfr_set_si(r.lo_, v, MPFR_RNDD);
    mpfr_set_si(r.hi_, v, MPFR_RNDU);
    return r;
  }
  static RealInterval from_mpz(const mpz_class& v, mpfr_prec_t prec = 0) {
    RealInterval r(pick(prec));
    mpfr_set_z(r.lo_, v.get_mpz_t(), MPFR_RNDD);
    mpfr_set_z(r.hi_, v.get_mpz_t(), MPFR_RNDU);
    return r;
  }
  static RealInterval from_mpq(const mpq_class& v, mpfr_prec_t prec = 0) {
    RealInterval r(pick(prec));
    mpfr_set_q(r.lo_, v.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_, v.get_mpq_t(), MPFR_RNDU);
    return r;
  }
  static RealInterval from_double(double v, mpfr_prec_t prec = 0) {
    RealInterval r(pick(prec));
    mpfr_set_d(r.lo_, v, MPFR_RNDD);
    mpfr_set_d(r.hi_, v, MPFR_RNDU);
    return r;
  }
  static RealInterval hull(double lo, double hi, mpfr_prec_t prec = 0) {
    RealInterval r(pick(prec));
    mpfr_set_d(r.lo_, lo, MPFR_RNDD);
    mpfr_set_d(r.hi_, hi, MPFR_RNDU);
    return r;
  }

  mpfr_prec_t prec() const { return mpfr_get_prec(lo_); }
  double lo_d() const { return mpfr_get_d(lo_, MPFR_RNDD); }
  double hi_d() const { return mpfr_get_d(hi_, MPFR_RNDU); }
  double mid() const { return (lo_d() + hi_d()) / 2; }
  double width() const {
    mpfr_t w;
    mpfr_init2(w, 64);
    mpfr_sub(w, hi_, lo_, MPFR_RNDU);
    double r = mpfr_get_d(w, MPFR_RNDU);
    mpfr_clear(w);
    return r;
  }

  bool is_nan() const { return mpfr_nan_p(lo_) || mpfr_nan_p(hi_); }
  bool contains_zero() const {
    return mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0;
  }
  bool certainly_positive() const { return mpfr_sgn(lo_) > 0; }
  bool certainly_negative() const { return mpfr_sgn(hi_) < 0; }
  bool certainly_less(const RealInterval& o) const {
    return mpfr_less_p(hi_, o.lo_) != 0;
  }
  bool certainly_leq(const RealInterval& o) const {
    return mpfr_lessequal_p(hi_, o.lo_) != 0;
  }
  bool overlaps(const RealInterval& o) const {
    return !certainly_less(o) && !o.certainly_less(*this);
  }

  RealInterval operator-() const {
    RealInterval r(prec());
    mpfr_neg(r.lo_, hi_, MPFR_RNDD);
    mpfr_neg(r.hi_, lo_, MPFR_RNDU);
    return r;
  }

  friend RealInterval operator+(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
  }
  friend RealInterval operator-(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
    return r;
  }
  friend RealInterval operator*(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    mpfr_t t;
    mpfr_init2(t, r.prec());
    // lo = min of the four endpoint products rounded down.
    mpfr_mul(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_mul(t, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_mul(t, a.hi_, b.lo_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_mul(t, a.hi_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    // hi = max of the four rounded up.
    mpfr_mul(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
    mpfr_mul(t, a.lo_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_mul(t, a.hi_, b.lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_mul(t, a.hi_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_clear(t);
    return r;
  }
  friend RealInterval operator/(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    if (b.contains_zero()) {
      mpfr_set_inf(r.lo_, -1);
      mpfr_set_inf(r.hi_, 1);
      return r;
    }
    mpfr_t t;
    mpfr_init2(t, r.prec());
    mpfr_div(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_div(t, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(t, a.hi_, b.lo_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(t, a.hi_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
    mpfr_div(t, a.lo_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_div(t, a.hi_, b.lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_div(t, a.hi_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_clear(t);
    return r;
  }

  RealInterval& operator+=(const RealInterval& o) { return *this = *this + o; }
  RealInterval& operator-=(const RealInterval& o) { return *this = *this - o; }
  RealInterval& operator*=(const RealInterval& o) { return *this = *this * o; }
  RealInterval& operator/=(const RealInterval& o) { return *this = *this / o; }

  RealInterval abs() const {
    RealInterval r(prec());
    if (mpfr_sgn(lo_) >= 0) return *this;
    if (mpfr_sgn(hi_) <= 0) return -*this;
    mpfr_set_zero(r.lo_, 1);
    mpfr_neg(r.hi_, lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  // Interval of x^2; never dips below zero.
  RealInterval square() const {
    RealInterval a = abs();
    RealInterval r(prec());
    mpfr_mul(r.lo_, a.lo_, a.lo_, MPFR_RNDD);
    mpfr_mul(r.hi_, a.hi_, a.hi_, MPFR_RNDU);
    return r;
  }

  RealInterval sqrt() const {
    if (mpfr_sgn(lo_) < 0) throw std::domain_error("RealInterval::sqrt: negative");
    RealInterval r(prec());
    mpfr_sqrt(r.lo_, lo_, MPFR_RNDD);
    mpfr_sqrt(r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  RealInterval log() const {
    if (mpfr_sgn(lo_) <= 0) throw std::domain_error("RealInterval::log: nonpositive");
    RealInterval r(prec());
    mpfr_log(r.lo_, lo_, MPFR_RNDD);
    mpfr_log(r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  RealInterval exp() const {
    RealInterval r(prec());
    mpfr_exp(r.lo_, lo_, MPFR_RNDD);
    mpfr_exp(r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  RealInterval mul_2exp(long e) const {
    RealInterval r(prec());
    mpfr_mul_2si(r.lo_, lo_, e, MPFR_RNDD);
    mpfr_mul_2si(r.hi_, hi_, e, MPFR_RNDU);
    return r;
  }

  friend RealInterval max(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    mpfr_max(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
  }
  friend RealInterval min(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_min(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
  }
  friend RealInterval hull_of(const RealInterval& a, const RealInterval& b) {
    RealInterval r(std::max(a.prec(), b.prec()));
    mpfr_min(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
  }

  // Enclosure widened to [min(lo,0), max(hi,0)].
  RealInterval join_zero() const {
    RealInterval z = RealInterval::exact(0, prec());
    return hull_of(*this, z);
  }

  std::string str(int digits = 20) const {
    char buf[128];
    mpfr_snprintf(buf, sizeof buf, "[%.*Rg, %.*Rg]", digits, lo_, digits, hi_);
    return buf;
  }

  const mpfr_t& lo_raw() const { return lo_; }
  const mpfr_t& hi_raw() const { return hi_; }
  void set_lo(const mpfr_t v) { mpfr_set(lo_, v, MPFR_RNDD); }
  void set_hi(const mpfr_t v) { mpfr_set(hi_, v, MPFR_RNDU); }

 private:
  static mpfr_prec_t pick(mpfr_prec_t p) {
    return p > 0 ? p : default_interval_precision();
  }
  mpfr_t lo_;
  mpfr_t hi_;
};

// Axis-aligned rectangle enclosure of a complex value.
struct ComplexInterval {
  RealInterval re, im;

  ComplexInterval() = default;
  ComplexInterval(RealInterval r, RealInterval i) : re(std::move(r)), im(std::move(i)) {}
  static ComplexInterval real(const RealInterval& r) {
    return {r, RealInterval::exact(0, r.prec())};
  }

  friend ComplexInterval operator+(const ComplexInterval& a, const ComplexInterval& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend ComplexInterval operator-(const ComplexInterval& a, const ComplexInterval& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend ComplexInterval operator*(const ComplexInterval& a, const ComplexInterval& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend ComplexInterval operator/(const ComplexInterval& a, const ComplexInterval& b) {
    RealInterval n = b.re.square() + b.im.square();
    return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
  }

  RealInterval abs() const { return (re.square() + im.square()).sqrt(); }
  bool contains_zero() const { return re.contains_zero() && im.contains_zero(); }
};

}  // namespace minpoint
