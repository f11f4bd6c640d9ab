#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rational.hpp"
#include "rlab/recurrence.hpp"
#include "rlab/symbolic.hpp"
#include "rlab/torus.hpp"

namespace rlab {

struct McConfig {
  std::uint64_t seed = 1;
  long samples = 10000;
  long burn_in = 0;
  enum class Estimator { Plain, Antithetic } estimator = Estimator::Plain;

  void validate() const {
    if (samples < 100) throw ValidationError("mc needs samples >= 100");
    if (burn_in < 0) throw ValidationError("negative burn_in");
  }
};

namespace mcdetail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based uniform draw keyed on (seed, n, sample, draw index): the
// value of a draw never depends on evaluation order or thread count.
inline double u01(std::uint64_t seed, std::uint64_t n, std::uint64_t sample, std::uint64_t draw) {
  std::uint64_t h = mix64(seed ^ 0x7f4a7c15d1ce4e5bULL);
  h = mix64(h ^ n);
  h = mix64(h ^ sample);
  h = mix64(h ^ draw);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct Tally {
  double sum = 0;    // sum of per-sample (or per-pair) values
  double sumsq = 0;  // sum of squares, for the antithetic variance
  long units = 0;    // samples (plain) or pairs (antithetic)

  double mean() const { return units == 0 ? 0.0 : sum / static_cast<double>(units); }
  double ci_halfwidth(bool antithetic) const {
    if (units < 2) return 0.0;
    const double m = mean();
    double var;
    if (antithetic) {
      var = (sumsq - static_cast<double>(units) * m * m) / static_cast<double>(units - 1);
    } else {
      var = m * (1.0 - m);  // Bernoulli
    }
    var = std::max(0.0, var);
    return 1.96 * std::sqrt(var / static_cast<double>(units));
  }
};

// Runs `samples` indicator draws of event(n, sample_uniform_fn) and tallies
// plain samples or antithetic pairs. Event must be a pure function of its
// draws. Deterministic for fixed cfg.seed regardless of threads.
template <typename Event>
Tally run_event(const Event& event, long n, const McConfig& cfg, int threads) {
  const bool anti = cfg.estimator == McConfig::Estimator::Antithetic;
  const long units = anti ? cfg.samples / 2 : cfg.samples;
  auto unit_value = [&](long u) {
    if (!anti) {
      const std::uint64_t s = static_cast<std::uint64_t>(cfg.burn_in + u);
      auto draw = [&](std::uint64_t d) { return u01(cfg.seed, static_cast<std::uint64_t>(n), s, d); };
      return event(n, draw) ? 1.0 : 0.0;
    }
    const std::uint64_t s = static_cast<std::uint64_t>(cfg.burn_in + u);
    auto draw_a = [&](std::uint64_t d) { return u01(cfg.seed, static_cast<std::uint64_t>(n), s, d); };
    auto draw_b = [&](std::uint64_t d) {
      return 1.0 - u01(cfg.seed, static_cast<std::uint64_t>(n), s, d);
    };
    double v = (event(n, draw_a) ? 0.5 : 0.0) + (event(n, draw_b) ? 0.5 : 0.0);
    return v;
  };
  auto values = parallel_map<double>(units, threads, unit_value);
  Tally t;
  t.units = units;
  for (double v : values) {
    t.sum += v;
    t.sumsq += v * v;
  }
  return t;
}

}  // namespace mcdetail

struct McEstimate {
  double estimate = 0;
  double ci_halfwidth = 0;
  std::uint64_t seed = 0;
  long samples = 0;
};

// ---- Symbolic backend: orbit sampling via the forward point dynamics ----

namespace mcdetail {

// Samples only the finitely many coordinates the event at time n can read,
// then evaluates membership through the forward transform formula. This is a
// membership route independent of the pullback set algebra.
struct SymbolicEvent {
  const SymbolicSystem* sys;
  std::vector<int> transforms;
  const std::vector<ConstraintSet>* sets;
  long n;
  std::vector<Cell> coords;  // sorted source coordinates

  SymbolicEvent(const SymbolicSystem& s, std::vector<int> ts,
                const std::vector<ConstraintSet>& cs, long n_in)
      : sys(&s), transforms(std::move(ts)), sets(&cs), n(n_in) {
    for (size_t j = 0; j < sets->size(); ++j) {
      const TransformSpec& t = sys->transform(transforms[j]);
      for (const Atom& a : (*sets)[j].atoms())
        for (const Cell& c : a.cells)
          coords.push_back(
              Cell{c.component, c.coord + n * t.shift_exponents[static_cast<size_t>(c.component)]});
    }
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  }

  template <typename Draw>
  bool operator()(long, const Draw& draw) const {
    std::vector<Symbol> symbols(coords.size());
    for (size_t r = 0; r < coords.size(); ++r) {
      const auto& weights = sys->components()[static_cast<size_t>(coords[r].component)].weights;
      const double u = draw(static_cast<std::uint64_t>(r));
      double acc = 0;
      Symbol sym = static_cast<Symbol>(weights.size()) - 1;
      for (size_t w = 0; w < weights.size(); ++w) {
        acc += rat_d(weights[w]);
        if (u < acc) {
          sym = static_cast<Symbol>(w);
          break;
        }
      }
      symbols[r] = sym;
    }
    auto coord_value = [&](const Cell& c) {
      auto it = std::lower_bound(coords.begin(), coords.end(), c);
      return symbols[static_cast<size_t>(it - coords.begin())];
    };
    for (size_t j = 0; j < sets->size(); ++j) {
      for (const Atom& a : (*sets)[j].atoms()) {
        std::vector<Symbol> tuple(a.cells.size());
        for (size_t i = 0; i < a.cells.size(); ++i)
          tuple[i] = transformed_symbol(*sys, transforms[j], n, a.cells[i], coord_value);
        if (!std::binary_search(a.allowed.begin(), a.allowed.end(), tuple)) return false;
      }
    }
    return true;
  }
};

struct TorusEvent {
  std::vector<double> shifts;                              // frac(n w_i)
  std::vector<std::vector<std::pair<double, double>>> arcs;  // per factor

  TorusEvent(const RotationTuple& rot, const std::vector<ArcSet>& sets, long n) {
    for (int i = 0; i < rot.k(); ++i) {
      shifts.push_back(rat_d(frac1(Rat(n) * rot.angles[static_cast<size_t>(i)].surrogate)));
      std::vector<std::pair<double, double>> as;
      for (const Arc& a : sets[static_cast<size_t>(i)].arcs())
        as.emplace_back(rat_d(a.lo), rat_d(a.hi));
      arcs.push_back(std::move(as));
    }
  }

  template <typename Draw>
  bool operator()(long, const Draw& draw) const {
    const double x = draw(0);
    for (size_t i = 0; i < shifts.size(); ++i) {
      double y = x + shifts[i];
      if (y >= 1.0) y -= 1.0;
      bool inside = false;
      for (const auto& [lo, hi] : arcs[i])
        if (y >= lo && y < hi) {
          inside = true;
          break;
        }
      if (!inside) return false;
    }
    return true;
  }
};

}  // namespace mcdetail

inline McEstimate mc_correlation(const SymbolicSystem& sys, const std::vector<int>& transforms,
                                 const std::vector<ConstraintSet>& sets, long n,
                                 const McConfig& cfg, int threads = 1) {
  cfg.validate();
  if (transforms.size() != sets.size())
    throw ValidationError("one constraint set per transform required");
  mcdetail::SymbolicEvent ev(sys, transforms, sets, n);
  auto t = mcdetail::run_event(ev, n, cfg, threads);
  const bool anti = cfg.estimator == McConfig::Estimator::Antithetic;
  return McEstimate{t.mean(), t.ci_halfwidth(anti), cfg.seed, cfg.samples};
}

inline McEstimate mc_correlation(const RotationTuple& rot, const std::vector<ArcSet>& sets, long n,
                                 const McConfig& cfg, int threads = 1) {
  cfg.validate();
  if (static_cast<int>(sets.size()) != rot.k())
    throw ValidationError("one arc set per rotation required");
  mcdetail::TorusEvent ev(rot, sets, n);
  auto t = mcdetail::run_event(ev, n, cfg, threads);
  const bool anti = cfg.estimator == McConfig::Estimator::Antithetic;
  return McEstimate{t.mean(), t.ci_halfwidth(anti), cfg.seed, cfg.samples};
}

// ---- Window averages with per-n stratification ----

namespace mcdetail {

template <typename EventFactory>
McEstimate window_average(EventFactory&& make_event, long M, long N, const McConfig& cfg,
                          int threads) {
  cfg.validate();
  if (N <= M) throw ValidationError("window must satisfy M < N");
  const long width = N - M;
  McConfig per_n = cfg;
  per_n.samples = std::max(100L, cfg.samples / width);
  if (per_n.estimator == McConfig::Estimator::Antithetic && per_n.samples % 2 != 0)
    ++per_n.samples;
  const bool anti = cfg.estimator == McConfig::Estimator::Antithetic;
  double mean_sum = 0, var_sum = 0;
  long total = 0;
  for (long n = M; n < N; ++n) {
    auto ev = make_event(n);
    auto t = run_event(ev, n, per_n, threads);
    mean_sum += t.mean();
    const double hw = t.ci_halfwidth(anti);
    var_sum += (hw / 1.96) * (hw / 1.96);
    total += per_n.samples;
  }
  McEstimate out;
  out.estimate = mean_sum / static_cast<double>(width);
  out.ci_halfwidth = 1.96 * std::sqrt(var_sum) / static_cast<double>(width);
  out.seed = cfg.seed;
  out.samples = total;
  return out;
}

}  // namespace mcdetail

inline McEstimate mc_window_average(const SymbolicSystem& sys, const std::vector<int>& transforms,
                                    const std::vector<ConstraintSet>& sets, long M, long N,
                                    const McConfig& cfg, int threads = 1) {
  return mcdetail::window_average(
      [&](long n) { return mcdetail::SymbolicEvent(sys, transforms, sets, n); }, M, N, cfg,
      threads);
}

inline McEstimate mc_window_average(const RotationTuple& rot, const std::vector<ArcSet>& sets,
                                    long M, long N, const McConfig& cfg, int threads = 1) {
  return mcdetail::window_average(
      [&](long n) { return mcdetail::TorusEvent(rot, sets, n); }, M, N, cfg, threads);
}

// ---- Estimate-valued correlation series ----

inline CorrelationSeries mc_correlation_series(const SymbolicSystem& sys,
                                               const std::vector<int>& transforms,
                                               const std::vector<ConstraintSet>& sets, long n0,
                                               long n1, const McConfig& cfg, int threads = 1) {
  cfg.validate();
  if (n1 < n0) throw ValidationError("empty n range");
  std::vector<SeriesEntry> entries;
  for (long n = n0; n <= n1; ++n) {
    auto est = mc_correlation(sys, transforms, sets, n, cfg, threads);
    entries.push_back(SeriesEntry::estimate_value(est.estimate, est.ci_halfwidth));
  }
  SeriesMeta meta;
  meta.system_id = sys.name();
  meta.backend = "mc";
  for (int t : transforms) meta.transform_ids.push_back(sys.transform(t).name);
  meta.set_ids.assign(sets.size(), "set");
  meta.seed = cfg.seed;
  meta.samples = cfg.samples;
  return CorrelationSeries(n0, std::move(entries), std::move(meta));
}

inline CorrelationSeries mc_correlation_series(const RotationTuple& rot,
                                               const std::vector<ArcSet>& sets, long n0, long n1,
                                               const McConfig& cfg, int threads = 1) {
  cfg.validate();
  if (n1 < n0) throw ValidationError("empty n range");
  std::vector<SeriesEntry> entries;
  for (long n = n0; n <= n1; ++n) {
    auto est = mc_correlation(rot, sets, n, cfg, threads);
    entries.push_back(SeriesEntry::estimate_value(est.estimate, est.ci_halfwidth));
  }
  SeriesMeta meta;
  meta.backend = "mc";
  for (const Angle& a : rot.angles)
    meta.transform_ids.push_back(a.label.empty() ? rat_str(a.surrogate) : a.label);
  meta.set_ids.assign(sets.size(), "arcs");
  meta.seed = cfg.seed;
  meta.samples = cfg.samples;
  return CorrelationSeries(n0, std::move(entries), std::move(meta));
}

}  // namespace rlab
