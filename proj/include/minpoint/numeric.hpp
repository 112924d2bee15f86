// Exact integer utilities on top of GMP: valuations, square detection,
// squarefree decomposition, small-prime sieving, modular and p-adic square
// roots, and a Pollard-Brent factorizer for the occasional large cofactor.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace minpoint {

inline mpz_class isqrt_floor(const mpz_class& n) {
  if (n < 0) throw std::domain_error("isqrt_floor: negative argument");
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

inline bool is_perfect_square(const mpz_class& n, mpz_class* root = nullptr) {
  if (n < 0) return false;
  if (mpz_perfect_square_p(n.get_mpz_t()) == 0) return false;
  if (root) mpz_sqrt(root->get_mpz_t(), n.get_mpz_t());
  return true;
}

inline mpz_class gcd3(const mpz_class& a, const mpz_class& b, const mpz_class& c) {
  mpz_class g = gcd(a, b);
  return gcd(g, c);
}

// Exponent of p in n.  n must be nonzero.
inline long ord_p(const mpz_class& n, const mpz_class& p) {
  if (n == 0) throw std::domain_error("ord_p: zero argument");
  mpz_class m = abs(n);
  long v = 0;
  mpz_class q, r;
  while (true) {
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t(), p.get_mpz_t());
    if (r != 0) break;
    m = q;
    ++v;
  }
  return v;
}

inline long ord_p(const mpq_class& x, const mpz_class& p) {
  if (x == 0) throw std::domain_error("ord_p: zero argument");
  return ord_p(mpz_class(x.get_num()), p) - ord_p(mpz_class(x.get_den()), p);
}

inline const std::vector<uint32_t>& small_primes() {
  static const std::vector<uint32_t> primes = [] {
    const uint32_t limit = 100000;
    std::vector<bool> sieve(limit + 1, true);
    std::vector<uint32_t> out;
    for (uint32_t i = 2; i <= limit; ++i) {
      if (!sieve[i]) continue;
      out.push_back(i);
      for (uint64_t j = uint64_t(i) * i; j <= limit; j += i) sieve[j] = false;
    }
    return out;
  }();
  return primes;
}

inline bool is_probable_prime(const mpz_class& n) {
  return mpz_probab_prime_p(n.get_mpz_t(), 40) != 0;
}

namespace detail {

inline mpz_class pollard_brent(const mpz_class& n) {
  // n composite, odd, no factor below the trial bound.  Returns a proper factor.
  if (n % 2 == 0) return 2;
  gmp_randclass rng(gmp_randinit_default);
  rng.seed(0xb5297a4dUL);
  while (true) {
    mpz_class y = rng.get_z_range(n - 3) + 2;
    mpz_class c = rng.get_z_range(n - 2) + 1;
    mpz_class x, ys, q = 1, g = 1;
    unsigned long r = 1;
    const unsigned long m = 128;
    while (g == 1) {
      x = y;
      for (unsigned long i = 0; i < r; ++i) y = (y * y + c) % n;
      unsigned long k = 0;
      while (k < r && g == 1) {
        ys = y;
        unsigned long steps = std::min(m, r - k);
        for (unsigned long i = 0; i < steps; ++i) {
          y = (y * y + c) % n;
          q = q * abs(x - y) % n;
        }
        g = gcd(q, n);
        k += m;
      }
      r *= 2;
    }
    if (g == n) {
      g = 1;
      while (g == 1) {
        ys = (ys * ys + c) % n;
        g = gcd(abs(x - ys), n);
      }
    }
    if (g != n) return g;
  }
}

inline void factor_into(mpz_class n, std::map<mpz_class, long>& out) {
  if (n <= 1) return;
  if (is_probable_prime(n)) {
    ++out[n];
    return;
  }
  mpz_class root;
  if (is_perfect_square(n, &root)) {
    std::map<mpz_class, long> half;
    factor_into(root, half);
    for (auto& [p, e] : half) out[p] += 2 * e;
    return;
  }
  mpz_class d = pollard_brent(n);
  factor_into(d, out);
  factor_into(n / d, out);
}

}  // namespace detail

// Full factorization of |n| as prime -> exponent.  n must be nonzero.
inline std::map<mpz_class, long> factorize(const mpz_class& n) {
  if (n == 0) throw std::domain_error("factorize: zero argument");
  mpz_class m = abs(n);
  std::map<mpz_class, long> out;
  for (uint32_t p : small_primes()) {
    if (m == 1) break;
    if (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
      long e = 0;
      while (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
        mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), p);
        ++e;
      }
      out[mpz_class(p)] = e;
    }
    if (mpz_class(p) * p > m) break;
  }
  if (m > 1) {
    if (is_probable_prime(m)) {
      ++out[m];
    } else {
      detail::factor_into(m, out);
    }
  }
  return out;
}

// n = f * s^2 with f squarefree carrying the sign of n.  n must be nonzero.
// Trial division below 10^5; the residual cofactor R then has no prime factor
// below the bound, so R is 1, p, p^2, or pq, all recognizable without search.
inline std::pair<mpz_class, mpz_class> squarefree_decompose(const mpz_class& n) {
  if (n == 0) throw std::domain_error("squarefree_decompose: zero argument");
  mpz_class m = abs(n), f = (n < 0) ? -1 : 1, s = 1;
  for (uint32_t p : small_primes()) {
    if (mpz_class(p) * p > m) break;
    if (!mpz_divisible_ui_p(m.get_mpz_t(), p)) continue;
    long e = 0;
    while (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
      mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), p);
      ++e;
    }
    for (long i = 0; i < e / 2; ++i) s *= p;
    if (e % 2) f *= p;
  }
  mpz_class root;
  if (m == 1) {
  } else if (is_perfect_square(m, &root)) {
    s *= root;
  } else if (is_probable_prime(m)) {
    f *= m;
  } else {
    // R = pq with distinct primes above the trial bound: squarefree.
    // (p^3 and p^2 q exceed bound^3 > R, and p^2 was caught above.)
    f *= m;
  }
  return {f, s};
}

inline int kronecker(const mpz_class& a, const mpz_class& n) {
  return mpz_kronecker(a.get_mpz_t(), n.get_mpz_t());
}

// Square root of a modulo odd prime p (Tonelli-Shanks).  Requires (a|p) = 1.
inline mpz_class mod_sqrt(const mpz_class& a0, const mpz_class& p) {
  mpz_class a = a0 % p;
  if (a < 0) a += p;
  if (a == 0) return 0;
  if (mpz_legendre(a.get_mpz_t(), p.get_mpz_t()) != 1)
    throw std::domain_error("mod_sqrt: non-residue");
  auto powmod = [&p](mpz_class b, mpz_class e) {
    mpz_class r;
    mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    return r;
  };
  if (p % 4 == 3) return powmod(a, (p + 1) / 4);
  mpz_class q = p - 1;
  long s = 0;
  while (q % 2 == 0) { q /= 2; ++s; }
  mpz_class z = 2;
  while (mpz_legendre(z.get_mpz_t(), p.get_mpz_t()) != -1) ++z;
  mpz_class m = s, c = powmod(z, q), t = powmod(a, q), r = powmod(a, (q + 1) / 2);
  while (t != 1) {
    long i = 0;
    mpz_class t2 = t;
    while (t2 != 1) { t2 = t2 * t2 % p; ++i; }
    mpz_class b = c;
    for (long j = 0; j < m.get_si() - i - 1; ++j) b = b * b % p;
    m = i;
    c = b * b % p;
    t = t * c % p;
    r = r * b % p;
  }
  return r;
}

// s with s^2 = d mod p^k.  Odd p needs (d|p) = 1; p = 2 needs d = 1 mod 8.
inline mpz_class padic_sqrt(const mpz_class& d, const mpz_class& p, long k) {
  mpz_class pk;
  mpz_pow_ui(pk.get_mpz_t(), p.get_mpz_t(), k);
  if (p == 2) {
    mpz_class r8 = d % 8;
    if (r8 < 0) r8 += 8;
    if (r8 != 1) throw std::domain_error("padic_sqrt: d != 1 mod 8");
    // Newton on x^2 - d from x = 1 mod 8.  One step sends accuracy m to
    // 2m - 2 (the new error is (d - x^2)^2 / 4x^2), not the odd-p 2m.
    mpz_class x = 1;
    long prec = 3;
    while (prec < k + 1) {
      long next = std::min(2 * prec - 2, k + 1);
      mpz_class mod;
      mpz_pow_ui(mod.get_mpz_t(), p.get_mpz_t(), next);
      // x <- x + (d - x^2)/2 * inv(x) mod 2^next
      mpz_class num = (d - x * x) % (mod * 2);
      if (num % 2 != 0) throw std::logic_error("padic_sqrt: parity failure");
      mpz_class inv;
      if (mpz_invert(inv.get_mpz_t(), x.get_mpz_t(), mod.get_mpz_t()) == 0)
        throw std::logic_error("padic_sqrt: non-invertible");
      x = (x + (num / 2) * inv) % mod;
      prec = next;
    }
    x %= pk;
    if (x < 0) x += pk;
    return x;
  }
  mpz_class x = mod_sqrt(d, p);
  long prec = 1;
  while (prec < k) {
    long next = std::min(2 * prec, k);
    mpz_class mod;
    mpz_pow_ui(mod.get_mpz_t(), p.get_mpz_t(), next);
    mpz_class inv, two_x = 2 * x;
    if (mpz_invert(inv.get_mpz_t(), two_x.get_mpz_t(), mod.get_mpz_t()) == 0)
      throw std::logic_error("padic_sqrt: non-invertible");
    x = (x + (d - x * x) * inv) % mod;
    if (x < 0) x += mod;
    prec = next;
  }
  x %= pk;
  if (x < 0) x += pk;
  return x;
}

}  // namespace minpoint
