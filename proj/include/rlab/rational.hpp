#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "rlab/error.hpp"

namespace rlab {

// Exact arbitrary-precision rational. All measures, thresholds and window
// averages in the exact backends are of this type; no floating point enters
// until a value is explicitly exported for display or for the grid modules.
using Rat = mpq_class;
using Int = mpz_class;

inline Rat rat(long num, long den = 1) {
  if (den == 0) throw ValidationError("rational with zero denominator");
  Rat r(num, den);
  r.canonicalize();
  return r;
}

// Accepts "p/q", "p", and "-p/q". Plain integers get denominator 1.
inline Rat parse_rat(const std::string& s) {
  if (s.empty()) throw ValidationError("empty rational literal");
  try {
    Rat r(s);
    r.canonicalize();
    return r;
  } catch (const std::invalid_argument&) {
    throw ValidationError("malformed rational literal: '" + s + "'");
  }
}

inline std::string rat_str(const Rat& r) { return r.get_str(); }

inline double rat_d(const Rat& r) { return r.get_d(); }

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline Rat rat_pow(const Rat& base, unsigned exp) {
  Rat out(1);
  Rat b = base;
  unsigned e = exp;
  while (e > 0) {
    if (e & 1u) out *= b;
    b *= b;
    e >>= 1u;
  }
  return out;
}

// r mod 1, always in [0,1).
inline Rat frac1(const Rat& r) {
  Int fl;
  mpz_fdiv_q(fl.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
  return r - Rat(fl);
}

// Circle distance to the nearest integer: min_m |t - m|, in [0, 1/2].
inline Rat circle_dist(const Rat& t) {
  Rat f = frac1(t);
  Rat g = 1 - f;
  return f <= g ? f : g;
}

// floor(n^(1/k)) for n >= 1, k >= 1.
inline long ifloor_root(long n, int k) {
  if (n < 1 || k < 1) throw ValidationError("ifloor_root needs n >= 1, k >= 1");
  if (k == 1) return n;
  long r = static_cast<long>(std::pow(static_cast<double>(n), 1.0 / k));
  while (r > 1 && rat_pow(Rat(r), static_cast<unsigned>(k)) > n) --r;
  while (rat_pow(Rat(r + 1), static_cast<unsigned>(k)) <= n) ++r;
  return r;
}

}  // namespace rlab
