// Exact arithmetic in Q and real/imaginary quadratic fields Q(sqrt(d)).
// Elements are kept in the canonical form (a + b*sqrt(d))/c with d squarefree,
// gcd(a, b, c) = 1, c > 0, and b = 0 collapsing to the rational subfield.
#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "minpoint/interval.hpp"
#include "minpoint/numeric.hpp"

namespace minpoint {

// d = 1 denotes Q itself; any other value is squarefree and not 0.
class QuadField {
 public:
  QuadField() : d_(1) {}
  explicit QuadField(const mpz_class& d) {
    if (d == 0) throw std::invalid_argument("QuadField: d = 0");
    auto [f, s] = squarefree_decompose(d);
    (void)s;
    d_ = f;
  }

  static QuadField rationals() { return QuadField(); }

  const mpz_class& d() const { return d_; }
  bool is_rational() const { return d_ == 1; }
  int degree() const { return is_rational() ? 1 : 2; }
  bool is_real() const { return d_ > 0; }

  // Field discriminant: 1 for Q, d for d = 1 mod 4, else 4d.
  mpz_class disc() const {
    if (is_rational()) return 1;
    mpz_class r = d_ % 4;
    if (r < 0) r += 4;
    return (r == 1) ? d_ : 4 * d_;
  }

  // Number of real places of the field (delta_K in degree bookkeeping).
  int real_embeddings() const {
    if (is_rational()) return 1;
    return d_ > 0 ? 2 : 0;
  }

  bool operator==(const QuadField& o) const { return d_ == o.d_; }
  bool operator!=(const QuadField& o) const { return d_ != o.d_; }

  std::string str() const {
    if (is_rational()) return "Q";
    return "Q(sqrt(" + d_.get_str() + "))";
  }

 private:
  mpz_class d_;
};

class QuadFieldElement {
 public:
  QuadFieldElement() : a_(0), b_(0), c_(1), d_(1) {}

  // Canonicalizes (a + b*sqrt(d))/c: square part of d folds into b, the gcd
  // is stripped, c is made positive, and b = 0 forces the rational form d = 1.
  QuadFieldElement(mpz_class a, mpz_class b, mpz_class c, mpz_class d)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    if (c_ == 0) throw std::invalid_argument("QuadFieldElement: zero denominator");
    if (d_ == 0) throw std::invalid_argument("QuadFieldElement: d = 0");
    if (b_ != 0) {
      auto [f, s] = squarefree_decompose(d_);
      d_ = f;
      b_ *= s;
    }
    if (b_ == 0 || d_ == 1) {
      if (d_ == 1) a_ += b_;  // sqrt(1) = 1 folds into the rational part
      b_ = 0;
      d_ = 1;
    }
    if (c_ < 0) {
      a_ = -a_;
      b_ = -b_;
      c_ = -c_;
    }
    mpz_class g = gcd3(a_, b_, c_);
    if (g > 1) {
      a_ /= g;
      b_ /= g;
      c_ /= g;
    }
  }

  static QuadFieldElement from_rational(const mpq_class& q) {
    return QuadFieldElement(mpz_class(q.get_num()), 0, mpz_class(q.get_den()), 1);
  }
  static QuadFieldElement from_int(long v) { return from_rational(mpq_class(v)); }
  static QuadFieldElement zero() { return from_int(0); }
  static QuadFieldElement sqrt_generator(const QuadField& f) {
    if (f.is_rational()) return from_int(1);
    return QuadFieldElement(0, 1, 1, f.d());
  }

  const mpz_class& a() const { return a_; }
  const mpz_class& b() const { return b_; }
  const mpz_class& c() const { return c_; }
  const mpz_class& d() const { return d_; }

  bool is_rational() const { return b_ == 0; }
  bool is_zero() const { return a_ == 0 && b_ == 0; }
  QuadField field() const { return is_rational() ? QuadField() : QuadField(d_); }
  // Degree of Q(x) over Q, 1 or 2.
  int degree() const { return is_rational() ? 1 : 2; }

  mpq_class rational_value() const {
    if (!is_rational()) throw std::domain_error("rational_value: element is irrational");
    mpq_class q(a_, c_);
    q.canonicalize();
    return q;
  }

  QuadFieldElement conjugate() const { return QuadFieldElement(a_, -b_, c_, d_); }

  mpq_class norm() const {
    mpq_class n(a_ * a_ - b_ * b_ * d_, c_ * c_);
    n.canonicalize();
    return n;
  }
  mpq_class trace() const {
    mpq_class t(2 * a_, c_);
    t.canonicalize();
    return t;
  }

  bool operator==(const QuadFieldElement& o) const {
    return a_ == o.a_ && b_ == o.b_ && c_ == o.c_ && d_ == o.d_;
  }
  bool operator!=(const QuadFieldElement& o) const { return !(*this == o); }

  // Total order used for deterministic output; not an arithmetic order.
  bool lex_less(const QuadFieldElement& o) const {
    if (d_ != o.d_) return d_ < o.d_;
    if (a_ != o.a_) return a_ < o.a_;
    if (b_ != o.b_) return b_ < o.b_;
    return c_ < o.c_;
  }

  QuadFieldElement operator-() const { return QuadFieldElement(-a_, -b_, c_, d_); }

  friend QuadFieldElement operator+(const QuadFieldElement& x, const QuadFieldElement& y) {
    mpz_class d = merged_d(x, y);
    return QuadFieldElement(x.a_ * y.c_ + y.a_ * x.c_, x.b_ * y.c_ + y.b_ * x.c_,
                            x.c_ * y.c_, d);
  }
  friend QuadFieldElement operator-(const QuadFieldElement& x, const QuadFieldElement& y) {
    return x + (-y);
  }
  friend QuadFieldElement operator*(const QuadFieldElement& x, const QuadFieldElement& y) {
    mpz_class d = merged_d(x, y);
    // (a1 + b1 r)(a2 + b2 r) = a1 a2 + b1 b2 d + (a1 b2 + a2 b1) r
    return QuadFieldElement(x.a_ * y.a_ + x.b_ * y.b_ * d, x.a_ * y.b_ + y.a_ * x.b_,
                            x.c_ * y.c_, d);
  }
  friend QuadFieldElement operator/(const QuadFieldElement& x, const QuadFieldElement& y) {
    if (y.is_zero()) throw std::domain_error("QuadFieldElement: division by zero");
    mpz_class d = merged_d(x, y);
    // 1/y = c (a - b r) / (a^2 - b^2 d)
    QuadFieldElement inv(y.c_ * y.a_, -y.c_ * y.b_, y.a_ * y.a_ - y.b_ * y.b_ * y.d_,
                         d);
    return x * inv;
  }

  QuadFieldElement& operator+=(const QuadFieldElement& o) { return *this = *this + o; }
  QuadFieldElement& operator-=(const QuadFieldElement& o) { return *this = *this - o; }
  QuadFieldElement& operator*=(const QuadFieldElement& o) { return *this = *this * o; }
  QuadFieldElement& operator/=(const QuadFieldElement& o) { return *this = *this / o; }

  // Primitive integral minimal polynomial A x^2 + B x + C, A > 0, for
  // quadratic elements; (den) x - (num) normalized to A x + B for rationals.
  struct MinPoly {
    mpz_class A, B, C;  // C unused (0) in the degree-1 case
    int degree;
  };
  MinPoly min_poly() const {
    if (is_rational()) {
      return MinPoly{c_, -a_, 0, 1};
    }
    mpz_class A = c_ * c_, B = -2 * a_ * c_, C = a_ * a_ - b_ * b_ * d_;
    mpz_class g = gcd3(A, B, C);
    return MinPoly{A / g, B / g, C / g, 2};
  }

  // Enclosures of the archimedean embeddings.  Real d: index 0 takes +sqrt(d);
  // index 1 the conjugate.  Imaginary d: embedding(0) with im = +sqrt(|d|).
  RealInterval real_embedding(int which = 0, mpfr_prec_t prec = 0) const {
    if (!is_rational() && d_ < 0)
      throw std::domain_error("real_embedding: imaginary field");
    RealInterval a = RealInterval::from_mpz(a_, prec);
    RealInterval c = RealInterval::from_mpz(c_, prec);
    if (is_rational()) return a / c;
    RealInterval root = RealInterval::from_mpz(d_, prec).sqrt();
    RealInterval b = RealInterval::from_mpz(b_, prec);
    if (which == 1) b = -b;
    return (a + b * root) / c;
  }
  ComplexInterval complex_embedding(mpfr_prec_t prec = 0) const {
    RealInterval c = RealInterval::from_mpz(c_, prec);
    if (is_rational() || d_ > 0) {
      return ComplexInterval::real(real_embedding(0, prec));
    }
    RealInterval a = RealInterval::from_mpz(a_, prec);
    RealInterval root = RealInterval::from_mpz(-d_, prec).sqrt();
    RealInterval b = RealInterval::from_mpz(b_, prec);
    return {a / c, b * root / c};
  }

  std::string str() const {
    if (is_rational()) {
      if (c_ == 1) return a_.get_str();
      return a_.get_str() + "/" + c_.get_str();
    }
    std::string s = "(" + a_.get_str();
    s += (b_ < 0) ? "-" : "+";
    s += mpz_class(abs(b_)).get_str() + "*sqrt(" + d_.get_str() + "))/" + c_.get_str();
    return s;
  }

 private:
  static mpz_class merged_d(const QuadFieldElement& x, const QuadFieldElement& y) {
    if (x.is_rational()) return y.d_;
    if (y.is_rational()) return x.d_;
    if (x.d_ != y.d_)
      throw std::domain_error("QuadFieldElement: mixing distinct quadratic fields");
    return x.d_;
  }

  mpz_class a_, b_, c_, d_;
};

// -------- canonicalize (exposed as a free function over raw tuples) --------

inline QuadFieldElement canonicalize(const mpz_class& a, const mpz_class& b,
                                     const mpz_class& c, const mpz_class& d) {
  return QuadFieldElement(a, b, c, d);
}

// -------- Weil height --------

// Absolute logarithmic Weil height h(x) = (1/deg) log M(minpoly), as a
// certified enclosure.  Rational p/q in lowest terms: log max(|p|, |q|).
inline RealInterval weil_height(const QuadFieldElement& x, mpfr_prec_t prec = 0) {
  if (x.is_rational()) {
    mpz_class m = std::max(abs(x.a()), abs(x.c()));
    return RealInterval::from_mpz(m, prec).log();
  }
  auto [A, B, C, deg] = x.min_poly();
  (void)deg;
  mpz_class disc = B * B - 4 * A * C;
  RealInterval mahler(prec ? prec : default_interval_precision());
  if (disc < 0) {
    // Conjugate complex roots: M = A * max(1, |r|^2) = max(A, C).
    mahler = RealInterval::from_mpz(std::max(A, C), prec);
  } else {
    // Count roots outside the closed unit disc; roots are irrational so
    // f(1), f(-1) are nonzero and |root| = 1 cannot occur.
    mpz_class f1 = A + B + C, fm1 = A - B + C;
    if (f1 == 0 || fm1 == 0)
      throw std::logic_error("weil_height: rational root in quadratic branch");
    int n_out;
    if (f1 < 0 && fm1 < 0) {
      n_out = 2;
    } else if (f1 > 0 && fm1 > 0) {
      n_out = (abs(B) < 2 * A) ? 0 : 2;
    } else {
      n_out = 1;
    }
    if (n_out == 0) {
      mahler = RealInterval::from_mpz(A, prec);
    } else if (n_out == 2) {
      mahler = RealInterval::from_mpz(abs(C), prec);
    } else {
      // M = A * |r_out| = (|B| + sqrt(disc)) / 2.
      RealInterval root = RealInterval::from_mpz(disc, prec).sqrt();
      mahler = (RealInterval::from_mpz(abs(B), prec) + root) /
               RealInterval::exact(2, prec);
    }
  }
  return mahler.log() / RealInterval::exact(2, prec);
}

// -------- square roots inside a fixed field --------

namespace detail {

inline bool mpq_is_square(const mpq_class& q, mpq_class* root) {
  if (q < 0) return false;
  mpz_class rn, rd;
  if (!is_perfect_square(mpz_class(q.get_num()), &rn)) return false;
  if (!is_perfect_square(mpz_class(q.get_den()), &rd)) return false;
  if (root) {
    *root = mpq_class(rn, rd);
    root->canonicalize();
  }
  return true;
}

// Lexicographic (sign of sqrt-part, sign of rational part) used to pick a
// canonical one of the two square roots +-y.
inline QuadFieldElement prefer_root(const QuadFieldElement& y) {
  auto key = [](const QuadFieldElement& e) {
    return std::pair<int, int>(sgn(e.b()), sgn(e.a()));
  };
  QuadFieldElement neg = -y;
  return key(y) >= key(neg) ? y : neg;
}

}  // namespace detail

// Square root of x within the field F (x must lie in F).  Returns the root
// with lexicographically maximal (sign of b, sign of a), or nullopt.
inline std::optional<QuadFieldElement> sqrt_in_field(const QuadField& F,
                                                     const QuadFieldElement& x) {
  if (!x.is_rational() && QuadField(x.d()) != F)
    throw std::domain_error("sqrt_in_field: element outside field");
  if (x.is_zero()) return QuadFieldElement::zero();
  if (x.is_rational()) {
    mpq_class r = x.rational_value();
    mpq_class root;
    if (detail::mpq_is_square(r, &root)) {
      QuadFieldElement y = QuadFieldElement::from_rational(root);
      return detail::prefer_root(y);
    }
    if (F.is_rational()) return std::nullopt;
    // Pure sqrt(d) solutions: y = s*sqrt(d) with s^2 = r/d.
    mpq_class quotient = r / mpq_class(F.d());
    if (detail::mpq_is_square(quotient, &root)) {
      QuadFieldElement y(mpz_class(0), mpz_class(root.get_num()),
                         mpz_class(root.get_den()), F.d());
      return detail::prefer_root(y);
    }
    return std::nullopt;
  }
  // y = p + q sqrt(d): p^2 + q^2 d = A, 2pq = B, so p^2 solves
  // 4 z^2 - 4 A z + B^2 d = 0, z = (A +- sqrt(A^2 - B^2 d)) / 2 with
  // A^2 - B^2 d = N(x) required to be a rational square.
  mpq_class A(x.a(), x.c()), B(x.b(), x.c());
  A.canonicalize();
  B.canonicalize();
  mpq_class n = x.norm(), sn;
  if (!detail::mpq_is_square(n, &sn)) return std::nullopt;
  for (int sign = 0; sign < 2; ++sign) {
    mpq_class z = (sign == 0) ? mpq_class((A + sn) / 2) : mpq_class((A - sn) / 2);
    mpq_class p;
    if (z == 0 || !detail::mpq_is_square(z, &p)) continue;
    mpq_class q = B / (2 * p);
    // Verify q^2 d matches the complementary part.
    if (q * q * mpq_class(x.d()) + p * p != A) continue;
    QuadFieldElement y(p.get_num() * q.get_den(), q.get_num() * p.get_den(),
                       p.get_den() * q.get_den(), x.d());
    if (y * y == x) return detail::prefer_root(y);
  }
  return std::nullopt;
}

// -------- field enumeration --------

// All fields with |disc| <= cap, Q first, then by (|disc|, positive before
// negative).  cap < 1 yields an empty list; cap >= 1 always includes Q.
inline std::vector<QuadField> enumerate_fields(const mpz_class& cap) {
  std::vector<QuadField> out;
  if (cap < 1) return out;
  out.push_back(QuadField::rationals());
  struct Row {
    mpz_class abs_disc;
    mpz_class disc;
    mpz_class d;
  };
  std::vector<Row> rows;
  for (mpz_class ad = 1; ad <= cap; ++ad) {
    for (int sign = +1; sign >= -1; sign -= 2) {
      mpz_class d = sign * ad;
      if (d == 1) continue;
      auto [f, s] = squarefree_decompose(d);
      if (s != 1) continue;  // not squarefree
      mpz_class r = d % 4;
      if (r < 0) r += 4;
      mpz_class disc = (r == 1) ? d : 4 * d;
      if (abs(disc) <= cap) rows.push_back({abs(disc), disc, d});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    if (x.abs_disc != y.abs_disc) return x.abs_disc < y.abs_disc;
    return x.disc > y.disc;  // positive discriminant first on ties
  });
  for (auto& r : rows) out.push_back(QuadField(r.d));
  return out;
}

// Families of fields a search ranges over: Q together with all quadratic
// fields of |disc| bounded by a cap.
struct FamilySpec {
  mpz_class disc_cap;

  bool contains(const QuadField& f) const {
    return f.is_rational() || abs(f.disc()) <= disc_cap;
  }
  std::vector<QuadField> fields() const { return enumerate_fields(disc_cap); }
  std::string str() const { return "Q plus quadratic fields with |disc| <= " + disc_cap.get_str(); }
};

// -------- parsing --------

namespace detail {

inline void skip_ws(const std::string& s, size_t& i) {
  while (i < s.size() && isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline mpz_class parse_int(const std::string& s, size_t& i) {
  skip_ws(s, i);
  size_t start = i;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  while (i < s.size() && isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == start || (i == start + 1 && !isdigit(static_cast<unsigned char>(s[start]))))
    throw std::invalid_argument("parse_element: expected integer in '" + s + "'");
  return mpz_class(s.substr(start, i - start));
}

inline void expect(const std::string& s, size_t& i, const std::string& tok) {
  skip_ws(s, i);
  if (s.compare(i, tok.size(), tok) != 0)
    throw std::invalid_argument("parse_element: expected '" + tok + "' in '" + s + "'");
  i += tok.size();
}

}  // namespace detail

// Accepts "p", "p/q", and "(a+b*sqrt(d))/c" (also with "-b").
inline QuadFieldElement parse_element(const std::string& text) {
  size_t i = 0;
  detail::skip_ws(text, i);
  if (i < text.size() && text[i] == '(') {
    ++i;
    mpz_class a = detail::parse_int(text, i);
    detail::skip_ws(text, i);
    if (i >= text.size() || (text[i] != '+' && text[i] != '-'))
      throw std::invalid_argument("parse_element: expected sign in '" + text + "'");
    int sign = (text[i] == '-') ? -1 : 1;
    ++i;
    mpz_class b = detail::parse_int(text, i);
    detail::expect(text, i, "*sqrt(");
    mpz_class d = detail::parse_int(text, i);
    detail::expect(text, i, ")");
    detail::expect(text, i, ")");
    detail::expect(text, i, "/");
    mpz_class c = detail::parse_int(text, i);
    detail::skip_ws(text, i);
    if (i != text.size())
      throw std::invalid_argument("parse_element: trailing characters in '" + text + "'");
    return QuadFieldElement(a, sign * b, c, d);
  }
  mpz_class p = detail::parse_int(text, i);
  detail::skip_ws(text, i);
  if (i == text.size()) return QuadFieldElement(p, 0, 1, 1);
  detail::expect(text, i, "/");
  mpz_class q = detail::parse_int(text, i);
  detail::skip_ws(text, i);
  if (i != text.size())
    throw std::invalid_argument("parse_element: trailing characters in '" + text + "'");
  return QuadFieldElement(p, 0, q, 1);
}

}  // namespace minpoint
