#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rational.hpp"
#include "rlab/symbolic.hpp"
#include "rlab/torus.hpp"

namespace rlab {

enum class EntryKind { Exact, Estimate, Unavailable };

struct SeriesEntry {
  EntryKind kind = EntryKind::Unavailable;
  Rat exact;            // Exact
  double estimate = 0;  // Estimate
  double ci = 0;        // Estimate: 95% half-width
  Rat drift;            // Exact via rational surrogates: worst-case error bound

  static SeriesEntry exact_value(Rat v, Rat drift = Rat(0)) {
    SeriesEntry e;
    e.kind = EntryKind::Exact;
    e.exact = std::move(v);
    e.drift = std::move(drift);
    return e;
  }
  static SeriesEntry estimate_value(double v, double ci) {
    SeriesEntry e;
    e.kind = EntryKind::Estimate;
    e.estimate = v;
    e.ci = ci;
    return e;
  }
  static SeriesEntry unavailable() { return SeriesEntry{}; }
};

struct SeriesMeta {
  std::string system_id;
  std::string backend;  // "symbolic-exact", "torus-exact", "mc"
  std::vector<std::string> set_ids;
  std::vector<std::string> transform_ids;
  long n_min = 0, n_max = 0;
  std::uint64_t seed = 0;
  long samples = 0;
  std::string scope = "finite-horizon witness";
};

// n |-> mu(T_1^{-n}A_1 cap ... cap T_k^{-n}A_k) over a finite horizon.
class CorrelationSeries {
 public:
  CorrelationSeries(long n_min, std::vector<SeriesEntry> entries, SeriesMeta meta)
      : n_min_(n_min), entries_(std::move(entries)), meta_(std::move(meta)) {
    meta_.n_min = n_min_;
    meta_.n_max = n_max();
  }

  long n_min() const { return n_min_; }
  long n_max() const { return n_min_ + static_cast<long>(entries_.size()) - 1; }
  long size() const { return static_cast<long>(entries_.size()); }
  const SeriesMeta& meta() const { return meta_; }

  const SeriesEntry& at(long n) const {
    if (n < n_min() || n > n_max()) throw ValidationError("series index out of horizon");
    return entries_[static_cast<size_t>(n - n_min_)];
  }

  bool all_exact() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const SeriesEntry& e) { return e.kind == EntryKind::Exact; });
  }

  // Prefix sums S with S[i] = sum of the first i entries; the single array
  // behind every window average.
  const std::vector<Rat>& prefix_sums() const {
    if (prefix_.empty()) {
      prefix_.reserve(entries_.size() + 1);
      prefix_.emplace_back(0);
      for (const SeriesEntry& e : entries_) {
        if (e.kind != EntryKind::Exact)
          throw ValidationError("exact window arithmetic needs an all-exact series");
        prefix_.push_back(prefix_.back() + e.exact);
      }
    }
    return prefix_;
  }

  // Exact mean over the window [M, N) of absolute indices.
  Rat window_average(long M, long N) const {
    if (M < n_min() || N > n_max() + 1 || M >= N)
      throw ValidationError("window exceeds series horizon");
    const auto& S = prefix_sums();
    const size_t a = static_cast<size_t>(M - n_min_);
    const size_t b = static_cast<size_t>(N - n_min_);
    return (S[b] - S[a]) / Rat(N - M);
  }

  // max / min over all offsets of |window_average - target| at one fixed
  // window length.
  Rat max_window_deviation(const Rat& target, long len) const {
    return extremal_deviation(target, len, /*want_max=*/true);
  }
  Rat min_window_deviation(const Rat& target, long len) const {
    return extremal_deviation(target, len, /*want_max=*/false);
  }

  // max over all windows of length >= L of |window_average - target|.
  // A window of length >= 2L splits into two halves of length >= L whose
  // averages bracket it, so scanning lengths in [L, 2L) is exact.
  Rat convergence_probe(const Rat& target, long L) const {
    if (L < 1 || 2 * L > size()) throw ValidationError("probe length must satisfy L <= size/2");
    Rat worst(0);
    const long max_len = std::min(2 * L - 1, size());
    for (long len = L; len <= max_len; ++len)
      worst = std::max(worst, max_window_deviation(target, len));
    return worst;
  }

 private:
  Rat extremal_deviation(const Rat& target, long len, bool want_max) const {
    if (len < 1 || len > size()) throw ValidationError("window length out of range");
    const auto& S = prefix_sums();
    Rat best;
    bool first = true;
    for (long off = 0; off + len <= size(); ++off) {
      Rat avg = (S[static_cast<size_t>(off + len)] - S[static_cast<size_t>(off)]) / Rat(len);
      Rat dev = rat_abs(avg - target);
      if (first || (want_max ? dev > best : dev < best)) {
        best = dev;
        first = false;
      }
    }
    return best;
  }

  long n_min_;
  std::vector<SeriesEntry> entries_;
  SeriesMeta meta_;
  mutable std::vector<Rat> prefix_;
};

// ---- Series builders ----

inline CorrelationSeries correlation_series(const SymbolicSystem& sys,
                                            const std::vector<int>& transforms,
                                            const std::vector<ConstraintSet>& sets, long n0,
                                            long n1, int threads = 1) {
  if (transforms.size() != sets.size())
    throw ValidationError("one constraint set per transform required");
  if (n1 < n0) throw ValidationError("empty n range");
  auto entries = parallel_map<SeriesEntry>(n1 - n0 + 1, threads, [&](long i) {
    const long n = n0 + i;
    try {
      std::vector<ConstraintSet> pulled;
      pulled.reserve(sets.size());
      for (size_t j = 0; j < sets.size(); ++j)
        pulled.push_back(pullback(sys, transforms[j], n, sets[j]));
      return SeriesEntry::exact_value(exact_measure(sys, intersect(sys, pulled)));
    } catch (const BackendLimitError&) {
      return SeriesEntry::unavailable();
    }
  });
  SeriesMeta meta;
  meta.system_id = sys.name();
  meta.backend = "symbolic-exact";
  for (int t : transforms) meta.transform_ids.push_back(sys.transform(t).name);
  meta.set_ids.assign(sets.size(), "set");
  return CorrelationSeries(n0, std::move(entries), std::move(meta));
}

inline CorrelationSeries correlation_series(const RotationTuple& rot,
                                            const std::vector<ArcSet>& sets, long n0, long n1,
                                            int threads = 1) {
  if (static_cast<int>(sets.size()) != rot.k())
    throw ValidationError("one arc set per rotation required");
  if (n1 < n0) throw ValidationError("empty n range");
  auto entries = parallel_map<SeriesEntry>(n1 - n0 + 1, threads, [&](long i) {
    const long n = n0 + i;
    std::vector<ArcSet> pre;
    pre.reserve(sets.size());
    for (size_t j = 0; j < sets.size(); ++j)
      pre.push_back(rot_preimage(rot.angles[j], n, sets[j]));
    return SeriesEntry::exact_value(arcs_intersect_measure(pre),
                                    Rat(std::abs(n)) * rot.max_drift());
  });
  SeriesMeta meta;
  meta.backend = "torus-exact";
  for (const Angle& a : rot.angles)
    meta.transform_ids.push_back(a.label.empty() ? rat_str(a.surrogate) : a.label);
  meta.set_ids.assign(sets.size(), "arcs");
  return CorrelationSeries(n0, std::move(entries), std::move(meta));
}

// ---- Threshold scans ----

enum class Verdict { WitnessedSyndetic, Empty, Inconclusive };

inline std::string verdict_str(Verdict v, long gap_bound = 0) {
  switch (v) {
    case Verdict::WitnessedSyndetic:
      return "WITNESSED-SYNDETIC(" + std::to_string(gap_bound) + ")";
    case Verdict::Empty:
      return "EMPTY";
    default:
      return "INCONCLUSIVE";
  }
}

struct GapReport {
  Rat threshold;
  std::vector<long> hits;     // subset of [horizon_lo, horizon_hi]
  long max_gap = 0;           // includes the leading gap from 0 and the censored tail
  long tail_gap = 0;          // horizon_hi - last hit (censored at the horizon)
  bool tail_censored = false;
  Rat hit_density;            // |hits| / horizon length
  Verdict verdict = Verdict::Empty;
  long horizon_lo = 1, horizon_hi = 0;
  long ambiguous = 0;     // Estimate entries whose interval straddles the threshold
  bool drift_clean = true;   // no Exact decision sits within its drift bound of the threshold
};

// Hits {n : series(n) > threshold} over n in [max(1, n_min), n_max].
// Estimate entries hit only if their whole interval clears the threshold.
inline GapReport threshold_scan(const CorrelationSeries& s, const Rat& threshold) {
  GapReport r;
  r.threshold = threshold;
  r.horizon_lo = std::max(1L, s.n_min());
  r.horizon_hi = s.n_max();
  if (r.horizon_hi < r.horizon_lo) throw ValidationError("scan horizon is empty");
  const double thr_d = rat_d(threshold);
  for (long n = r.horizon_lo; n <= r.horizon_hi; ++n) {
    const SeriesEntry& e = s.at(n);
    switch (e.kind) {
      case EntryKind::Exact:
        if (e.exact > threshold) r.hits.push_back(n);
        if (e.drift > 0 && rat_abs(e.exact - threshold) <= e.drift) r.drift_clean = false;
        break;
      case EntryKind::Estimate:
        if (e.estimate - e.ci > thr_d)
          r.hits.push_back(n);
        else if (e.estimate + e.ci > thr_d)
          ++r.ambiguous;
        break;
      case EntryKind::Unavailable:
        ++r.ambiguous;
        break;
    }
  }
  const long span = r.horizon_hi - r.horizon_lo + 1;
  r.hit_density = Rat(static_cast<long>(r.hits.size())) / Rat(span);
  if (r.hits.empty()) {
    r.max_gap = span;
    r.tail_gap = span;
    r.tail_censored = true;
    r.verdict = r.ambiguous > 0 ? Verdict::Inconclusive : Verdict::Empty;
    return r;
  }
  long prev = r.horizon_lo - 1;  // gap measured from just before the horizon
  for (long h : r.hits) {
    r.max_gap = std::max(r.max_gap, h - prev);
    prev = h;
  }
  r.tail_gap = r.horizon_hi - r.hits.back();
  r.tail_censored = r.tail_gap > 0;
  r.max_gap = std::max(r.max_gap, r.tail_gap);
  r.verdict = r.ambiguous > 0 ? Verdict::Inconclusive : Verdict::WitnessedSyndetic;
  return r;
}

// Threshold base^exponent - eps.
inline GapReport khintchine_scan(const CorrelationSeries& s, const Rat& base, int exponent,
                                 const Rat& eps) {
  if (eps <= 0) throw ValidationError("khintchine_scan needs eps > 0");
  if (exponent < 1) throw ValidationError("khintchine_scan needs exponent >= 1");
  return threshold_scan(s, rat_pow(base, static_cast<unsigned>(exponent)) - eps);
}

struct FkResult {
  Rat c_star;
  Rat min_window_avg;
  long window_len = 0;
  GapReport report;
};

// c_star = half the minimum windowed average; hits = {n : series(n) > c_star}.
inline FkResult fk_scan(const CorrelationSeries& s, long window_len) {
  const long lo = std::max(1L, s.n_min());
  const long count = s.n_max() - lo + 1;
  if (window_len < 1 || 2 * window_len > count)
    throw ValidationError("fk_scan window must satisfy window_len <= horizon/2");
  FkResult res;
  res.window_len = window_len;
  bool first = true;
  for (long M = lo; M + window_len <= s.n_max() + 1; ++M) {
    Rat avg = s.window_average(M, M + window_len);
    if (first || avg < res.min_window_avg) {
      res.min_window_avg = avg;
      first = false;
    }
  }
  res.c_star = res.min_window_avg / 2;
  res.report = threshold_scan(s, res.c_star);
  return res;
}

// Dyadic window lengths with strided offsets; the probe schedule is
// configuration, not doctrine.
struct WindowSchedule {
  std::vector<long> lengths = {32, 64, 128, 256, 512, 1024, 2048, 4096, 8192};
  long offset_stride(long len) const { return std::max(1L, len / 8); }

  std::vector<long> lengths_within(long horizon) const {
    std::vector<long> out;
    for (long l : lengths)
      if (l <= horizon) out.push_back(l);
    return out;
  }
};

}  // namespace rlab
