#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/rational.hpp"

namespace rlab {

// Rotation angle as a rational surrogate with an explicit drift budget:
// |target - surrogate| <= drift. Genuinely rational targets carry drift 0.
struct Angle {
  Rat surrogate;
  std::string label;
  Rat drift;

  Angle() : surrogate(0), drift(0) {}
  Angle(Rat s, std::string lbl = "", Rat d = Rat(0))
      : surrogate(frac1(s)), label(std::move(lbl)), drift(std::move(d)) {
    if (drift < 0) throw ValidationError("drift budget must be nonnegative");
  }
};

struct RotationTuple {
  std::vector<Angle> angles;

  explicit RotationTuple(std::vector<Angle> a) : angles(std::move(a)) {
    if (angles.empty()) throw ValidationError("rotation tuple must be non-empty");
  }

  int k() const { return static_cast<int>(angles.size()); }

  Rat max_drift() const {
    Rat m(0);
    for (const auto& a : angles) m = std::max(m, a.drift);
    return m;
  }
};

// ---- Continued fractions ----

// Convergents p_j/q_j of [a0; a1, a2, ...]. Terms after a0 must be >= 1.
inline std::vector<Rat> cf_convergents(const std::vector<long>& terms) {
  if (terms.empty()) throw ValidationError("empty continued fraction");
  std::vector<Rat> out;
  Int p_prev(1), q_prev(0), p(terms[0]), q(1);
  out.emplace_back(Rat(p) / Rat(q));
  for (size_t j = 1; j < terms.size(); ++j) {
    if (terms[j] < 1) throw ValidationError("continued fraction terms after a0 must be >= 1");
    Int pn = Int(terms[j]) * p + p_prev;
    Int qn = Int(terms[j]) * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    Rat c(p);
    c /= Rat(q);
    out.push_back(c);
  }
  return out;
}

// Convergent surrogate of an infinite continued fraction given by a term
// generator. Expands until the denominator reaches min_den; the drift budget
// is the classical bound 1/(q_d * q_{d+1}).
inline Angle angle_from_cf_generator(const std::function<long(int)>& term, long min_den,
                                     const std::string& label) {
  Int p_prev(1), q_prev(0), p(term(0)), q(1);
  int j = 0;
  while (q < min_den) {
    ++j;
    long a = term(j);
    if (a < 1) throw ValidationError("continued fraction terms after a0 must be >= 1");
    Int pn = Int(a) * p + p_prev;
    Int qn = Int(a) * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    if (j > 4096) throw ValidationError("continued fraction expansion does not reach min_den");
  }
  long a_next = term(j + 1);
  Int q_next = Int(a_next) * q + q_prev;
  Rat surrogate(p);
  surrogate /= Rat(q);
  Rat drift(1);
  drift /= Rat(Int(q) * q_next);
  return Angle(frac1(surrogate), label, drift);
}

// Finite user-written continued fraction truncated at `depth` terms
// (a0 counts as the first). Truncating below the full length budgets
// 1/(q_d * q_{d+1}) of drift against the full expansion; using every term
// makes the value exact.
inline Angle angle_from_cf(const std::vector<long>& terms, int depth, const std::string& label) {
  if (depth < 1 || depth > static_cast<int>(terms.size()))
    throw ValidationError("cf depth out of range");
  std::vector<long> head(terms.begin(), terms.begin() + depth);
  std::vector<Rat> conv = cf_convergents(terms);
  Rat value = cf_convergents(head).back();
  Rat drift(0);
  if (depth < static_cast<int>(terms.size())) {
    Int qd = conv[static_cast<size_t>(depth - 1)].get_den();
    Int qn = conv[static_cast<size_t>(depth)].get_den();
    drift = Rat(1) / Rat(qd * qn);
  }
  return Angle(frac1(value), label, drift);
}

inline Angle named_angle(const std::string& name, long min_den = 1000000) {
  if (name == "sqrt2-1")
    return angle_from_cf_generator([](int j) { return j == 0 ? 0L : 2L; }, min_den, name);
  if (name == "sqrt3-1")
    return angle_from_cf_generator([](int j) { return j == 0 ? 0L : (j % 2 == 1 ? 1L : 2L); },
                                   min_den, name);
  if (name == "golden-1")
    return angle_from_cf_generator([](int j) { return j == 0 ? 0L : 1L; }, min_den, name);
  throw ValidationError("unknown named angle: '" + name + "'");
}

// Accepts "p/q", "cf:[a0;a1,a2,...]@depth" (depth optional, default full),
// and the named constants sqrt2-1, sqrt3-1, golden-1.
inline Angle parse_angle(const std::string& spec, long min_den = 1000000) {
  if (spec.rfind("cf:", 0) == 0) {
    std::string body = spec.substr(3);
    int depth = -1;
    if (auto at = body.find('@'); at != std::string::npos) {
      depth = std::stoi(body.substr(at + 1));
      body = body.substr(0, at);
    }
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
      throw ValidationError("cf angle must look like cf:[a0;a1,...]");
    body = body.substr(1, body.size() - 2);
    std::vector<long> terms;
    size_t semi = body.find(';');
    terms.push_back(std::stol(body.substr(0, semi)));
    if (semi != std::string::npos) {
      std::string rest = body.substr(semi + 1);
      size_t pos = 0;
      while (pos < rest.size()) {
        size_t comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        terms.push_back(std::stol(rest.substr(pos, comma - pos)));
        pos = comma + 1;
      }
    }
    if (depth < 0) depth = static_cast<int>(terms.size());
    return angle_from_cf(terms, depth, spec);
  }
  if (spec.find_first_not_of("0123456789/-") == std::string::npos)
    return Angle(frac1(parse_rat(spec)), spec, Rat(0));
  return named_angle(spec, min_den);
}

// ---- Arc sets ----

// Half-open arc [lo, hi) with 0 <= lo < hi <= 1.
struct Arc {
  Rat lo, hi;
  friend bool operator==(const Arc&, const Arc&) = default;
};

class ArcSet {
 public:
  ArcSet() = default;

  // Accepts arcs with endpoints taken mod 1; hi <= lo means the arc wraps.
  static ArcSet from_arcs(const std::vector<Arc>& raw) {
    std::vector<Arc> flat;
    for (const Arc& a : raw) {
      Rat lo = frac1(a.lo);
      Rat span = a.hi - a.lo;
      if (span <= 0) throw ValidationError("arc with nonpositive length");
      if (span >= 1) return full();
      Rat hi = lo + span;
      if (hi <= 1) {
        flat.push_back({lo, hi});
      } else {
        flat.push_back({lo, Rat(1)});
        flat.push_back({Rat(0), hi - 1});
      }
    }
    std::sort(flat.begin(), flat.end(), [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
    std::vector<Arc> merged;
    for (const Arc& a : flat) {
      if (!merged.empty() && a.lo <= merged.back().hi)
        merged.back().hi = std::max(merged.back().hi, a.hi);
      else
        merged.push_back(a);
    }
    // Merge across the 0 seam: [x,1) followed by [0,y) stays split (half-open
    // normal form keeps endpoints in [0,1]), which is fine for measure and
    // intersection purposes.
    ArcSet out;
    out.arcs_ = std::move(merged);
    if (out.measure() == 1) return full();
    return out;
  }

  static ArcSet full() {
    ArcSet s;
    s.arcs_ = {Arc{Rat(0), Rat(1)}};
    return s;
  }

  static ArcSet empty_set() { return ArcSet(); }

  const std::vector<Arc>& arcs() const { return arcs_; }
  bool empty() const { return arcs_.empty(); }

  Rat measure() const {
    Rat m(0);
    for (const Arc& a : arcs_) m += a.hi - a.lo;
    return m;
  }

  bool contains(const Rat& x_in) const {
    Rat x = frac1(x_in);
    for (const Arc& a : arcs_)
      if (x >= a.lo && x < a.hi) return true;
    return false;
  }

  friend bool operator==(const ArcSet&, const ArcSet&) = default;

 private:
  std::vector<Arc> arcs_;
};

// "a/b..c/d,e/f..g/h" (a '+' before an arc is tolerated). hi <= lo wraps.
inline ArcSet parse_arcset(const std::string& spec) {
  std::vector<Arc> arcs;
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    std::string piece = spec.substr(pos, comma - pos);
    if (!piece.empty() && piece.front() == '+') piece = piece.substr(1);
    size_t dots = piece.find("..");
    if (dots == std::string::npos)
      throw ValidationError("arc must look like lo..hi, got '" + piece + "'");
    Rat lo = parse_rat(piece.substr(0, dots));
    Rat hi = parse_rat(piece.substr(dots + 2));
    lo = frac1(lo);
    Rat hi_f = (hi == 1) ? Rat(1) : frac1(hi);
    if (hi_f <= lo) hi_f += 1;  // wrap
    arcs.push_back(Arc{lo, hi_f});
    pos = comma + 1;
  }
  if (arcs.empty()) throw ValidationError("empty arc set literal");
  return ArcSet::from_arcs(arcs);
}

inline ArcSet translate(const ArcSet& s, const Rat& shift) {
  if (s.empty()) return s;
  std::vector<Arc> arcs;
  Rat t = frac1(shift);
  for (const Arc& a : s.arcs()) arcs.push_back(Arc{a.lo + t, a.hi + t});
  return ArcSet::from_arcs(arcs);
}

// R_a^{-n}(s) = s - n*omega mod 1 (computed on the surrogate).
inline ArcSet rot_preimage(const Angle& a, long n, const ArcSet& s) {
  return translate(s, frac1(Rat(-n) * a.surrogate));
}

inline ArcSet intersect(const ArcSet& a, const ArcSet& b) {
  std::vector<Arc> out;
  size_t i = 0, j = 0;
  const auto& x = a.arcs();
  const auto& y = b.arcs();
  while (i < x.size() && j < y.size()) {
    Rat lo = std::max(x[i].lo, y[j].lo);
    Rat hi = std::min(x[i].hi, y[j].hi);
    if (lo < hi) out.push_back(Arc{lo, hi});
    if (x[i].hi <= y[j].hi)
      ++i;
    else
      ++j;
  }
  if (out.empty()) return ArcSet::empty_set();
  return ArcSet::from_arcs(out);
}

inline Rat arcs_intersect_measure(const std::vector<ArcSet>& ss) {
  if (ss.empty()) return Rat(1);
  ArcSet acc = ss[0];
  for (size_t i = 1; i < ss.size() && !acc.empty(); ++i) acc = intersect(acc, ss[i]);
  return acc.measure();
}

// diam{x, R_1^n x, ..., R_k^n x} on the circle metric; independent of x, so
// computed as the max pairwise circle distance of {0, n*w_1, ..., n*w_k}.
inline Rat orbit_diam(const RotationTuple& r, long n) {
  if (n < 1) throw ValidationError("orbit_diam needs n >= 1");
  std::vector<Rat> pts;
  pts.emplace_back(0);
  for (const Angle& a : r.angles) pts.push_back(frac1(Rat(n) * a.surrogate));
  Rat d(0);
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      d = std::max(d, circle_dist(pts[i] - pts[j]));
  return d;
}

// Worst-case surrogate error after n steps.
inline Rat drift_bound(const RotationTuple& r, long n) { return Rat(n) * r.max_drift(); }

struct DirichletResult {
  long n_star = 0;
  Rat value;          // min over 1 <= n <= N of max_i ||n w_i||
  Rat bound;          // 1/floor(N^(1/k)), the integer-rounded Dirichlet bound
  bool within_bound = false;
  Rat drift;          // n_star * max drift
  bool unreliable = false;
};

inline DirichletResult dirichlet_min(const RotationTuple& r, long N) {
  if (N < 1) throw ValidationError("dirichlet_min needs N >= 1");
  const int k = r.k();
  std::vector<Rat> residue(static_cast<size_t>(k), Rat(0));
  DirichletResult res;
  for (long n = 1; n <= N; ++n) {
    Rat worst(0);
    for (int i = 0; i < k; ++i) {
      residue[static_cast<size_t>(i)] = frac1(residue[static_cast<size_t>(i)] +
                                              r.angles[static_cast<size_t>(i)].surrogate);
      worst = std::max(worst, circle_dist(residue[static_cast<size_t>(i)]));
    }
    if (res.n_star == 0 || worst < res.value) {
      res.n_star = n;
      res.value = worst;
    }
  }
  res.bound = Rat(1) / Rat(ifloor_root(N, k));
  res.within_bound = res.value < res.bound;
  res.drift = drift_bound(r, res.n_star);
  res.unreliable = res.value != 0 && res.drift * 2 > res.value;
  return res;
}

struct DiamScanRow {
  long n = 0;
  Rat diam;
  double scaled = 0;        // n^(1/k) * diam
  Rat runmin_diam;
  double runmin_scaled = 0;
  Rat drift;                // n * max drift
};

inline std::vector<DiamScanRow> diam_recurrence_scan(const RotationTuple& r, long N) {
  if (N < 1) throw ValidationError("diam_recurrence_scan needs N >= 1");
  const int k = r.k();
  std::vector<Rat> residue(static_cast<size_t>(k), Rat(0));
  std::vector<DiamScanRow> rows;
  rows.reserve(static_cast<size_t>(N));
  Rat runmin;
  double runmin_scaled = 0;
  const Rat step_drift = r.max_drift();
  for (long n = 1; n <= N; ++n) {
    std::vector<Rat> pts;
    pts.emplace_back(0);
    for (int i = 0; i < k; ++i) {
      residue[static_cast<size_t>(i)] = frac1(residue[static_cast<size_t>(i)] +
                                              r.angles[static_cast<size_t>(i)].surrogate);
      pts.push_back(residue[static_cast<size_t>(i)]);
    }
    Rat d(0);
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        d = std::max(d, circle_dist(pts[i] - pts[j]));
    double scaled = std::pow(static_cast<double>(n), 1.0 / k) * rat_d(d);
    if (n == 1 || d < runmin) runmin = d;
    if (n == 1 || scaled < runmin_scaled) runmin_scaled = scaled;
    rows.push_back(DiamScanRow{n, d, scaled, runmin, runmin_scaled, Rat(n) * step_drift});
  }
  return rows;
}

// Circle partition into m equal arcs [j/m, (j+1)/m).
inline std::vector<ArcSet> make_arc_partition(int m) {
  if (m < 1) throw ValidationError("partition needs at least one arc");
  std::vector<ArcSet> parts;
  for (int j = 0; j < m; ++j)
    parts.push_back(ArcSet::from_arcs({Arc{rat(j, m), rat(j + 1, m)}}));
  return parts;
}

}  // namespace rlab
