#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/rational.hpp"
#include "rlab/torus.hpp"

namespace rlab {

// Neumaier-compensated accumulator for grid integrals.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0, c_ = 0;
};

// ---- Fourier observables on the circle (and the 2-torus) ----

struct Freq {
  int m1 = 0, m2 = 0;
  friend auto operator<=>(const Freq&, const Freq&) = default;
};

class FourierObservable {
 public:
  explicit FourierObservable(int dim = 1, int cutoff = 0) : dim_(dim), cutoff_(cutoff) {
    if (dim != 1 && dim != 2) throw ValidationError("base space must be 1- or 2-dimensional");
  }

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  const std::map<Freq, std::complex<double>>& coeffs() const { return coeffs_; }

  void set(Freq f, std::complex<double> c) {
    if (std::abs(f.m1) > cutoff_ || std::abs(f.m2) > cutoff_)
      throw ValidationError("frequency beyond cutoff");
    if (dim_ == 1 && f.m2 != 0) throw ValidationError("1-d observable with 2-d frequency");
    coeffs_[f] = c;
  }

  std::complex<double> get(Freq f) const {
    auto it = coeffs_.find(f);
    return it == coeffs_.end() ? std::complex<double>(0) : it->second;
  }

  double l2_norm() const {
    CompensatedSum s;
    for (const auto& [f, c] : coeffs_) s.add(std::norm(c));
    return std::sqrt(s.value());
  }

  // coeff(-m) == conj(coeff(m)) within tol; holds for real observables.
  bool hermitian(double tol = 1e-12) const {
    for (const auto& [f, c] : coeffs_) {
      std::complex<double> mirror = get(Freq{-f.m1, -f.m2});
      if (std::abs(mirror - std::conj(c)) > tol) return false;
    }
    return true;
  }

 private:
  int dim_;
  int cutoff_;
  std::map<Freq, std::complex<double>> coeffs_;
};

// Exact closed-form arc Fourier coefficients: for an arc [a,b),
// c_m = (e^{-2 pi i m a} - e^{-2 pi i m b}) / (2 pi i m), c_0 = |[a,b)|.
// Phases are reduced exactly in rationals before evaluation.
inline FourierObservable fourier_indicator(const ArcSet& s, int cutoff) {
  if (cutoff < 1) throw ValidationError("fourier_indicator needs cutoff >= 1");
  FourierObservable out(1, cutoff);
  auto unit = [](const Rat& turns) {
    double t = 2.0 * std::numbers::pi * rat_d(frac1(turns));
    return std::complex<double>(std::cos(t), std::sin(t));
  };
  for (int m = -cutoff; m <= cutoff; ++m) {
    std::complex<double> c(0);
    for (const Arc& a : s.arcs()) {
      if (m == 0) {
        c += rat_d(a.hi - a.lo);
      } else {
        std::complex<double> num = unit(Rat(-m) * a.lo) - unit(Rat(-m) * a.hi);
        c += num / (std::complex<double>(0, 2.0 * std::numbers::pi * m));
      }
    }
    if (m == 0 || std::abs(c) > 0) out.set(Freq{m, 0}, c);
  }
  return out;
}

// Koopman action of the rotation by `a` on characters: U^n e_m = e^{2 pi i m n w} e_m.
inline FourierObservable koopman_rotation(const Angle& a, long n, const FourierObservable& obs) {
  if (obs.dim() != 1) throw ValidationError("koopman_rotation acts on circle observables");
  FourierObservable out(1, obs.cutoff());
  for (const auto& [f, c] : obs.coeffs()) {
    Rat turns = Rat(f.m1) * Rat(n) * a.surrogate;
    double t = 2.0 * std::numbers::pi * rat_d(frac1(turns));
    out.set(f, c * std::complex<double>(std::cos(t), std::sin(t)));
  }
  return out;
}

// ---- Dyadic grids ----

// Square grid on the 2-torus, row-major with x major: v[ix*R + iy].
struct Grid2 {
  int R = 0;
  std::vector<double> v;

  Grid2() = default;
  explicit Grid2(int r, double fill = 0.0) : R(r), v(static_cast<size_t>(r) * r, fill) {}

  double& at(int ix, int iy) { return v[static_cast<size_t>(ix) * R + iy]; }
  double at(int ix, int iy) const { return v[static_cast<size_t>(ix) * R + iy]; }
};

inline bool power_of_two(int r) { return r > 0 && (r & (r - 1)) == 0; }

// Indicator grid of a product set A_x x A_y sampled at cell midpoints; exact
// for arc endpoints on the grid.
inline Grid2 indicator_grid(const ArcSet& ax, const ArcSet& ay, int R) {
  Grid2 g(R);
  std::vector<bool> in_x(static_cast<size_t>(R)), in_y(static_cast<size_t>(R));
  for (int i = 0; i < R; ++i) {
    Rat mid = Rat(2 * i + 1) / Rat(2 * R);
    in_x[static_cast<size_t>(i)] = ax.contains(mid);
    in_y[static_cast<size_t>(i)] = ay.contains(mid);
  }
  for (int ix = 0; ix < R; ++ix)
    if (in_x[static_cast<size_t>(ix)])
      for (int iy = 0; iy < R; ++iy)
        if (in_y[static_cast<size_t>(iy)]) g.at(ix, iy) = 1.0;
  return g;
}

struct Lemma33Report {
  bool applies = false;  // input recognized as an indicator
  double min_f = 0, max_f = 0;
  double integral_1A_f = 0;  // int 1_A * f
  double mu_A = 0;
  bool range_ok = false;       // 0 <= f <= 1
  bool lower_bound_ok = false; // int 1_A * f >= mu(A)^2
  bool positivity_ok = false;  // f > 0 on every grid cell meeting A
};

struct SpectralSplit {
  Grid2 compact;  // f: y-constant conditional expectation onto the x factor
  Grid2 wm;       // g = obs - f
  double residual_norm = 0;
  double fg_inner = 0;
  std::string system_tag;
  Lemma33Report lemma33;
};

// Splitting for the skew product T(x,y) = (x+w, 2y mod 1): the almost
// periodic part of L^2 is the rotation factor, so the compact projection of
// an observable is its column mean; the remainder carries the mixing
// (doubling) direction.
inline SpectralSplit jdlg_split_product(const Grid2& obs) {
  const int R = obs.R;
  if (!power_of_two(R) || R < 256)
    throw ValidationError("grid resolution must be a power of 2 and >= 256");
  SpectralSplit sp;
  sp.system_tag = "rotation x doubling";
  sp.compact = Grid2(R);
  sp.wm = Grid2(R);
  for (int ix = 0; ix < R; ++ix) {
    CompensatedSum col;
    for (int iy = 0; iy < R; ++iy) col.add(obs.at(ix, iy));
    const double mean = col.value() / R;
    for (int iy = 0; iy < R; ++iy) {
      sp.compact.at(ix, iy) = mean;
      sp.wm.at(ix, iy) = obs.at(ix, iy) - mean;
    }
  }

  const double cell = 1.0 / (static_cast<double>(R) * R);
  CompensatedSum inner, resid;
  for (size_t i = 0; i < obs.v.size(); ++i) {
    inner.add(sp.compact.v[i] * sp.wm.v[i]);
    const double r = obs.v[i] - sp.compact.v[i] - sp.wm.v[i];
    resid.add(r * r);
  }
  sp.fg_inner = inner.value() * cell;
  sp.residual_norm = std::sqrt(std::max(0.0, resid.value() * cell));

  bool indicator = true;
  for (double x : obs.v)
    if (std::abs(x) > 1e-12 && std::abs(x - 1.0) > 1e-12) {
      indicator = false;
      break;
    }
  Lemma33Report& l = sp.lemma33;
  l.applies = indicator;
  if (indicator) {
    CompensatedSum int_1a_f, mass;
    l.min_f = 2.0;
    l.max_f = -1.0;
    l.positivity_ok = true;
    for (int ix = 0; ix < R; ++ix)
      for (int iy = 0; iy < R; ++iy) {
        const double f = sp.compact.at(ix, iy);
        l.min_f = std::min(l.min_f, f);
        l.max_f = std::max(l.max_f, f);
        if (obs.at(ix, iy) > 0.5) {
          int_1a_f.add(f);
          mass.add(1.0);
          if (!(f > 1e-12)) l.positivity_ok = false;
        }
      }
    l.integral_1A_f = int_1a_f.value() * cell;
    l.mu_A = mass.value() * cell;
    l.range_ok = l.min_f >= -1e-9 && l.max_f <= 1.0 + 1e-9;
    l.lower_bound_ok = l.integral_1A_f >= l.mu_A * l.mu_A - 1e-6;
  }
  return sp;
}

// Pure rotation: every observable is almost periodic, so the compact part is
// the observable itself and the weakly mixing part vanishes.
inline SpectralSplit jdlg_split_rotation(const Grid2& obs) {
  SpectralSplit sp;
  sp.system_tag = "rotation";
  sp.compact = obs;
  sp.wm = Grid2(obs.R);
  sp.residual_norm = 0;
  sp.fg_inner = 0;
  return sp;
}

// ---- Eigenvalue return times ----

struct EigenReturnReport {
  std::vector<Rat> freqs;   // lambda = e^{2 pi i freq}
  double delta = 0;
  double a = 1;             // coefficient mass bound
  double tau = 0;           // delta / (3a)
  long N = 0;
  std::vector<long> hits;   // E = {n <= N : max |lambda^n - 1| < tau}
  long max_gap = 0;         // includes leading and censored tail gaps
  bool tail_censored = false;
};

// E = {n <= N : |lambda_{i,j}^n - 1| < delta/(3a) for all i,j} with
// a = max_i sum_j |a_{i,j}|.
inline EigenReturnReport eigen_return_times(
    const std::vector<std::vector<std::pair<Rat, double>>>& per_transform, double delta, long N) {
  if (per_transform.empty()) throw ValidationError("empty frequency list");
  EigenReturnReport rep;
  rep.delta = delta;
  double a = 0;
  for (const auto& list : per_transform) {
    if (list.empty()) throw ValidationError("empty frequency list");
    double mass = 0;
    for (const auto& [f, w] : list) {
      mass += std::abs(w);
      rep.freqs.push_back(frac1(f));
    }
    a = std::max(a, mass);
  }
  rep.a = a;
  if (delta <= 0 || a <= 0) throw ValidationError("eigen_return_times needs delta > 0, a > 0");
  rep.tau = delta / (3.0 * a);
  rep.N = N;

  std::vector<Rat> residue(rep.freqs.size(), Rat(0));
  for (long n = 1; n <= N; ++n) {
    bool hit = true;
    for (size_t i = 0; i < rep.freqs.size(); ++i) {
      residue[i] = frac1(residue[i] + rep.freqs[i]);
      // |e^{2 pi i t} - 1| = 2 sin(pi ||t||)
      double dist = 2.0 * std::sin(std::numbers::pi * rat_d(circle_dist(residue[i])));
      if (!(dist < rep.tau)) {
        hit = false;
        // keep updating the remaining residues
        for (size_t j = i + 1; j < rep.freqs.size(); ++j)
          residue[j] = frac1(residue[j] + rep.freqs[j]);
        break;
      }
    }
    if (hit) rep.hits.push_back(n);
  }
  long prev = 0;
  for (long h : rep.hits) {
    rep.max_gap = std::max(rep.max_gap, h - prev);
    prev = h;
  }
  const long tail = rep.hits.empty() ? N : N - rep.hits.back();
  rep.tail_censored = tail > 0;
  rep.max_gap = std::max(rep.max_gap, tail);
  return rep;
}

// Single flat list, threshold given directly as tau = delta/(3a).
inline EigenReturnReport eigen_return_times(const std::vector<Rat>& freqs, double tau, long N) {
  std::vector<std::vector<std::pair<Rat, double>>> per;
  for (const Rat& f : freqs) per.push_back({{f, 1.0}});
  return eigen_return_times(per, 3.0 * tau, N);
}

// ---- Van der Corput surrogate ----

struct VdcReport {
  double lhs = 0;    // max over long windows of ||avg x_n||^2
  double rhs = 0;    // (1/H) sum_h max over long windows of avg Re<x_{n+h}, x_n>
  double slack = 0;  // finite-truncation allowance
  bool holds_with_slack = false;
  long window_len = 0;  // minimum window length scanned
  std::vector<double> per_h;
};

// Finite-window reading of the van der Corput inequality. Windows of length
// >= L reduce to lengths in [L, 2L) exactly (averages over long windows are
// convex combinations of averages over halves).
inline VdcReport vdc_surrogate(const std::vector<std::vector<double>>& xs, int H,
                               long min_window = 0) {
  const long n = static_cast<long>(xs.size());
  if (H < 1) throw ValidationError("vdc_surrogate needs H >= 1");
  if (n < 4L * H) throw ValidationError("sequence too short: need |xs| >= 4H");
  const size_t dim = xs[0].size();
  for (const auto& x : xs)
    if (x.size() != dim) throw ValidationError("inconsistent vector dimensions");

  VdcReport rep;
  const long L = min_window > 0 ? min_window : std::max<long>(H, n / 4);
  rep.window_len = L;

  // Prefix vector sums for the window averages on the left side.
  std::vector<std::vector<double>> prefix(static_cast<size_t>(n) + 1,
                                          std::vector<double>(dim, 0.0));
  for (long i = 0; i < n; ++i)
    for (size_t d = 0; d < dim; ++d)
      prefix[static_cast<size_t>(i) + 1][d] = prefix[static_cast<size_t>(i)][d] + xs[static_cast<size_t>(i)][d];

  double lhs = 0;
  const long max_len = std::min(2 * L - 1, n);
  for (long len = L; len <= max_len; ++len)
    for (long off = 0; off + len <= n; ++off) {
      double norm2 = 0;
      for (size_t d = 0; d < dim; ++d) {
        double avg = (prefix[static_cast<size_t>(off + len)][d] -
                      prefix[static_cast<size_t>(off)][d]) / static_cast<double>(len);
        norm2 += avg * avg;
      }
      lhs = std::max(lhs, norm2);
    }
  rep.lhs = lhs;

  auto max_window_mean = [L](const std::vector<double>& s) {
    const long m = static_cast<long>(s.size());
    std::vector<double> pre(static_cast<size_t>(m) + 1, 0.0);
    for (long i = 0; i < m; ++i) pre[static_cast<size_t>(i) + 1] = pre[static_cast<size_t>(i)] + s[static_cast<size_t>(i)];
    if (m <= L) return pre[static_cast<size_t>(m)] / static_cast<double>(m);
    double best = -std::numeric_limits<double>::infinity();
    const long cap = std::min(2 * L - 1, m);
    for (long len = L; len <= cap; ++len)
      for (long off = 0; off + len <= m; ++off)
        best = std::max(best, (pre[static_cast<size_t>(off + len)] - pre[static_cast<size_t>(off)]) / static_cast<double>(len));
    return best;
  };

  double rhs_sum = 0;
  for (int h = 1; h <= H; ++h) {
    std::vector<double> corr;
    corr.reserve(static_cast<size_t>(n - h));
    for (long i = 0; i + h < n; ++i) {
      double dot = 0;
      for (size_t d = 0; d < dim; ++d) dot += xs[static_cast<size_t>(i + h)][d] * xs[static_cast<size_t>(i)][d];
      corr.push_back(dot);
    }
    double v = max_window_mean(corr);
    rep.per_h.push_back(v);
    rhs_sum += v;
  }
  rep.rhs = rhs_sum / H;

  double b2 = 0;
  for (const auto& x : xs) {
    double norm2 = 0;
    for (double c : x) norm2 += c * c;
    b2 = std::max(b2, norm2);
  }
  rep.slack = 4.0 * b2 * static_cast<double>(H) / static_cast<double>(n);
  rep.holds_with_slack = rep.lhs <= rep.rhs + rep.slack;
  return rep;
}

// ---- Grid Koopman operators for the doubling direction ----

// One Koopman step of y -> 2y mod 1 projected back to the R-cell grid:
// (Uf)[j] = (f[2j mod R] + f[(2j+1) mod R]) / 2. Frequencies double and are
// damped by cos(pi l / R); components at the Nyquist frequency vanish, which
// is the grid realization of mixing.
inline void doubling_step(std::vector<double>& u) {
  const size_t R = u.size();
  std::vector<double> next(R);
  for (size_t j = 0; j < R; ++j)
    next[j] = 0.5 * (u[(2 * j) % R] + u[(2 * j + 1) % R]);
  u = std::move(next);
}

inline std::vector<double> koopman_doubling(std::vector<double> u, long steps) {
  for (long s = 0; s < steps; ++s) doubling_step(u);
  return u;
}

inline double grid_l2_norm(const std::vector<double>& u) {
  CompensatedSum s;
  for (double x : u) s.add(x * x);
  return std::sqrt(std::max(0.0, s.value() / static_cast<double>(u.size())));
}

struct WmReport {
  long window_len = 0;
  std::vector<std::pair<long, double>> window_norms;  // (offset M, ||avg||_2)
  double max_norm = 0;
};

// max over sampled windows [M, M+W) of || (1/W) sum_n U^n u ||_2 for the
// doubling map on a dyadic grid. u must have zero grid mean.
inline WmReport wm_average_vanishing_doubling(const std::vector<double>& u, long window_len,
                                              long n_max, long stride = 0) {
  const long R = static_cast<long>(u.size());
  if (R < 2 || (R & (R - 1)) != 0)
    throw ValidationError("doubling grid size must be a power of 2");
  if (window_len < 1 || n_max < window_len)
    throw ValidationError("window must fit inside [0, n_max)");
  CompensatedSum mean;
  for (double x : u) mean.add(x);
  if (std::abs(mean.value() / static_cast<double>(R)) > 1e-9)
    throw ValidationError("observable must have zero grid mean");
  if (stride < 1) stride = std::max(1L, window_len / 8);

  std::vector<double> add_state = u;  // U^n u at the leading edge
  std::vector<double> sub_state = u;  // U^n u at the trailing edge
  bool add_zero = false, sub_zero = false;
  std::vector<double> window_sum(static_cast<size_t>(R), 0.0);

  auto advance = [](std::vector<double>& st, bool& zero) {
    if (zero) return;
    doubling_step(st);
    double mag = 0;
    for (double x : st) mag = std::max(mag, std::abs(x));
    if (mag == 0.0) zero = true;
  };

  for (long i = 0; i < window_len; ++i) {
    for (long j = 0; j < R; ++j) window_sum[static_cast<size_t>(j)] += add_state[static_cast<size_t>(j)];
    advance(add_state, add_zero);
  }

  WmReport rep;
  rep.window_len = window_len;
  double last_norm = -1;
  bool sum_stable = false;
  for (long M = 0; M + window_len <= n_max; ++M) {
    if (M % stride == 0) {
      if (!sum_stable || last_norm < 0) {
        std::vector<double> avg(static_cast<size_t>(R));
        for (long j = 0; j < R; ++j)
          avg[static_cast<size_t>(j)] = window_sum[static_cast<size_t>(j)] / static_cast<double>(window_len);
        last_norm = grid_l2_norm(avg);
      }
      rep.window_norms.emplace_back(M, last_norm);
      rep.max_norm = std::max(rep.max_norm, last_norm);
    }
    if (add_zero && sub_zero) {
      sum_stable = true;
      continue;  // both edges are past the truncation horizon; sum is constant
    }
    sum_stable = false;
    for (long j = 0; j < R; ++j)
      window_sum[static_cast<size_t>(j)] += add_state[static_cast<size_t>(j)] - sub_state[static_cast<size_t>(j)];
    advance(add_state, add_zero);
    advance(sub_state, sub_zero);
  }
  return rep;
}

// Product-system version: observable i evolves under (x,y) -> (x + w_i, 2y).
// The rotation acts as an exact column shift of round(frac(n w) R) cells; the
// doubling acts per column as above. At least one observable must have zero
// y-mean in every column.
inline WmReport wm_average_vanishing_product(const std::vector<Grid2>& us,
                                             const std::vector<Angle>& angles, long window_len,
                                             long n_max, long stride = 0) {
  if (us.empty() || us.size() != angles.size())
    throw ValidationError("need one rotation angle per observable");
  const int R = us[0].R;
  if (!power_of_two(R)) throw ValidationError("grid resolution must be a power of 2");
  for (const auto& g : us)
    if (g.R != R) throw ValidationError("observable grids must share one resolution");
  bool someone_mean_zero = false;
  for (const auto& g : us) {
    bool ok = true;
    for (int ix = 0; ix < R && ok; ++ix) {
      CompensatedSum col;
      for (int iy = 0; iy < R; ++iy) col.add(g.at(ix, iy));
      if (std::abs(col.value() / R) > 1e-9) ok = false;
    }
    if (ok) someone_mean_zero = true;
  }
  if (!someone_mean_zero)
    throw ValidationError("at least one observable must have zero y-mean on every column");
  if (window_len < 1 || n_max < window_len)
    throw ValidationError("window must fit inside [0, n_max)");
  if (stride < 1) stride = std::max(1L, window_len / 8);

  const size_t k = us.size();
  auto column_shift = [&](const Angle& a, long n) {
    // round(frac(n w) * R) mod R, computed exactly
    Rat scaled = frac1(Rat(n) * a.surrogate) * R;
    Rat half = scaled + Rat(1, 2);
    Int fl;
    mpz_fdiv_q(fl.get_mpz_t(), half.get_num().get_mpz_t(), half.get_den().get_mpz_t());
    long s = fl.get_si() % R;
    return s < 0 ? s + R : s;
  };

  // y-evolved states; the column shift is applied on demand per n.
  std::vector<Grid2> add_state(us), sub_state(us);
  auto advance = [&](std::vector<Grid2>& st) {
    for (auto& g : st) {
      std::vector<double> col(static_cast<size_t>(R));
      for (int ix = 0; ix < R; ++ix) {
        for (int iy = 0; iy < R; ++iy) col[static_cast<size_t>(iy)] = g.at(ix, iy);
        doubling_step(col);
        for (int iy = 0; iy < R; ++iy) g.at(ix, iy) = col[static_cast<size_t>(iy)];
      }
    }
  };
  auto product_at = [&](const std::vector<Grid2>& st, long n, Grid2& out) {
    std::fill(out.v.begin(), out.v.end(), 1.0);
    for (size_t i = 0; i < k; ++i) {
      const long s = column_shift(angles[i], n);
      for (int ix = 0; ix < R; ++ix) {
        const int src = static_cast<int>((ix + s) % R);
        for (int iy = 0; iy < R; ++iy) out.at(ix, iy) *= st[i].at(src, iy);
      }
    }
  };

  Grid2 scratch(R);
  std::vector<double> window_sum(static_cast<size_t>(R) * R, 0.0);
  for (long n = 0; n < window_len; ++n) {
    product_at(add_state, n, scratch);
    for (size_t i = 0; i < window_sum.size(); ++i) window_sum[i] += scratch.v[i];
    advance(add_state);
  }

  WmReport rep;
  rep.window_len = window_len;
  const double cells = static_cast<double>(R) * R;
  for (long M = 0; M + window_len <= n_max; ++M) {
    if (M % stride == 0) {
      CompensatedSum s2;
      for (double x : window_sum) {
        const double a = x / static_cast<double>(window_len);
        s2.add(a * a);
      }
      const double norm = std::sqrt(std::max(0.0, s2.value() / cells));
      rep.window_norms.emplace_back(M, norm);
      rep.max_norm = std::max(rep.max_norm, norm);
    }
    product_at(add_state, M + window_len, scratch);
    for (size_t i = 0; i < window_sum.size(); ++i) window_sum[i] += scratch.v[i];
    product_at(sub_state, M, scratch);
    for (size_t i = 0; i < window_sum.size(); ++i) window_sum[i] -= scratch.v[i];
    advance(add_state);
    advance(sub_state);
  }
  return rep;
}

}  // namespace rlab
