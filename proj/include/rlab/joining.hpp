#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/rational.hpp"
#include "rlab/symbolic.hpp"
#include "rlab/torus.hpp"

namespace rlab {

// nu(S_1^{-n}P_{1,j_1} cap ... cap S_k^{-n}P_{k,j_k}) for box (j_1..j_k).
using BoxMeasureFn = std::function<Rat(long n, const std::vector<int>& box)>;

// The windowed empirical joining lambda_{M,N} restricted to a finite
// partition box grid, with exact rational entries.
struct JoiningEstimate {
  long M = 0, N = 0;
  std::vector<int> dims;                        // partition sizes per factor
  std::vector<Rat> tensor;                      // row-major over boxes
  std::vector<std::vector<Rat>> marginals;      // tensor marginals per factor
  std::vector<std::vector<Rat>> part_measures;  // exact nu(P_{i,j})
  Rat product_distance;                         // TV distance to the product of marginals

  long box_count() const {
    long c = 1;
    for (int d : dims) c *= d;
    return c;
  }

  size_t flat_index(const std::vector<int>& box) const {
    size_t idx = 0;
    for (size_t i = 0; i < dims.size(); ++i)
      idx = idx * static_cast<size_t>(dims[i]) + static_cast<size_t>(box[i]);
    return idx;
  }

  std::vector<int> unflatten(long flat) const {
    std::vector<int> box(dims.size());
    for (size_t i = dims.size(); i-- > 0;) {
      box[i] = static_cast<int>(flat % dims[i]);
      flat /= dims[i];
    }
    return box;
  }

  const Rat& at(const std::vector<int>& box) const { return tensor[flat_index(box)]; }
};

namespace detail {

inline std::vector<Rat> joining_tensor(const BoxMeasureFn& fn, const std::vector<int>& dims,
                                       long M, long N) {
  long boxes = 1;
  for (int d : dims) boxes *= d;
  std::vector<Rat> sum(static_cast<size_t>(boxes), Rat(0));
  std::vector<int> box(dims.size());
  for (long n = M; n < N; ++n) {
    for (long flat = 0; flat < boxes; ++flat) {
      long rest = flat;
      for (size_t i = dims.size(); i-- > 0;) {
        box[i] = static_cast<int>(rest % dims[i]);
        rest /= dims[i];
      }
      sum[static_cast<size_t>(flat)] += fn(n, box);
    }
  }
  for (auto& v : sum) v /= Rat(N - M);
  return sum;
}

}  // namespace detail

inline JoiningEstimate empirical_joining_core(const BoxMeasureFn& fn,
                                              const std::vector<int>& dims,
                                              std::vector<std::vector<Rat>> part_measures, long M,
                                              long N) {
  if (N <= M) throw ValidationError("joining window must satisfy M < N");
  if (dims.empty()) throw ValidationError("joining needs at least one factor");
  for (size_t i = 0; i < part_measures.size(); ++i) {
    Rat sum(0);
    for (const Rat& m : part_measures[i]) sum += m;
    if (sum != 1) throw ValidationError("partition does not cover the space exactly");
  }

  JoiningEstimate je;
  je.M = M;
  je.N = N;
  je.dims = dims;
  je.part_measures = std::move(part_measures);
  je.tensor = detail::joining_tensor(fn, dims, M, N);

  je.marginals.assign(dims.size(), {});
  for (size_t i = 0; i < dims.size(); ++i)
    je.marginals[i].assign(static_cast<size_t>(dims[i]), Rat(0));
  for (long flat = 0; flat < je.box_count(); ++flat) {
    const auto box = je.unflatten(flat);
    for (size_t i = 0; i < dims.size(); ++i)
      je.marginals[i][static_cast<size_t>(box[i])] += je.tensor[static_cast<size_t>(flat)];
  }

  Rat tv(0);
  for (long flat = 0; flat < je.box_count(); ++flat) {
    const auto box = je.unflatten(flat);
    Rat prod(1);
    for (size_t i = 0; i < dims.size(); ++i)
      prod *= je.marginals[i][static_cast<size_t>(box[i])];
    tv += rat_abs(je.tensor[static_cast<size_t>(flat)] - prod);
  }
  je.product_distance = tv / 2;
  return je;
}

// ---- Concrete backends ----

inline BoxMeasureFn symbolic_box_measure(const SymbolicSystem& sys,
                                         const std::vector<int>& transforms,
                                         const std::vector<std::vector<ConstraintSet>>& parts) {
  return [&sys, transforms, parts](long n, const std::vector<int>& box) {
    std::vector<ConstraintSet> pulled;
    pulled.reserve(parts.size());
    for (size_t i = 0; i < parts.size(); ++i)
      pulled.push_back(
          pullback(sys, transforms[i], n, parts[i][static_cast<size_t>(box[i])]));
    return exact_measure(sys, intersect(sys, pulled));
  };
}

inline BoxMeasureFn torus_box_measure(const RotationTuple& rot,
                                      const std::vector<std::vector<ArcSet>>& parts) {
  return [rot, parts](long n, const std::vector<int>& box) {
    std::vector<ArcSet> pre;
    pre.reserve(parts.size());
    for (size_t i = 0; i < parts.size(); ++i)
      pre.push_back(rot_preimage(rot.angles[i], n, parts[i][static_cast<size_t>(box[i])]));
    return arcs_intersect_measure(pre);
  };
}

inline JoiningEstimate empirical_joining(const SymbolicSystem& sys,
                                         const std::vector<int>& transforms,
                                         const std::vector<std::vector<ConstraintSet>>& parts,
                                         long M, long N) {
  if (transforms.size() != parts.size())
    throw ValidationError("one partition per transform required");
  std::vector<int> dims;
  std::vector<std::vector<Rat>> measures;
  for (const auto& p : parts) {
    dims.push_back(static_cast<int>(p.size()));
    std::vector<Rat> ms;
    for (const auto& cs : p) ms.push_back(exact_measure(sys, cs));
    measures.push_back(std::move(ms));
  }
  return empirical_joining_core(symbolic_box_measure(sys, transforms, parts), dims,
                                std::move(measures), M, N);
}

inline JoiningEstimate empirical_joining(const RotationTuple& rot,
                                         const std::vector<std::vector<ArcSet>>& parts, long M,
                                         long N) {
  if (static_cast<int>(parts.size()) != rot.k())
    throw ValidationError("one partition per rotation required");
  std::vector<int> dims;
  std::vector<std::vector<Rat>> measures;
  for (const auto& p : parts) {
    dims.push_back(static_cast<int>(p.size()));
    std::vector<Rat> ms;
    for (const auto& a : p) ms.push_back(a.measure());
    measures.push_back(std::move(ms));
  }
  return empirical_joining_core(torus_box_measure(rot, parts), dims, std::move(measures), M, N);
}

// ---- Exact self-checks ----

struct JoiningChecks {
  bool tensor_valid = false;      // entries >= 0 and total mass exactly 1
  bool marginals_exact = false;   // every tensor marginal equals nu(P) exactly
  Rat max_marginal_dev;
  bool invariance_ok = false;     // |lambda(prod S^{-1}P) - lambda(prod P)| <= 2/(N-M)
  Rat max_invariance_dev;
  Rat invariance_bound;

  bool all_pass() const { return tensor_valid && marginals_exact && invariance_ok; }
};

// Exact-rational verification of the tensor-level identities. A violation is
// an implementation bug, never a property of the instance.
inline JoiningChecks joining_exact_checks(const JoiningEstimate& je, const BoxMeasureFn& fn) {
  JoiningChecks c;
  Rat mass(0);
  c.tensor_valid = true;
  for (const Rat& v : je.tensor) {
    if (v < 0) c.tensor_valid = false;
    mass += v;
  }
  if (mass != 1) c.tensor_valid = false;

  c.marginals_exact = true;
  c.max_marginal_dev = Rat(0);
  for (size_t i = 0; i < je.dims.size(); ++i)
    for (size_t j = 0; j < je.marginals[i].size(); ++j) {
      Rat dev = rat_abs(je.marginals[i][j] - je.part_measures[i][j]);
      c.max_marginal_dev = std::max(c.max_marginal_dev, dev);
      if (dev != 0) c.marginals_exact = false;
    }

  // lambda_{M,N} of the simultaneously pre-imaged boxes equals the tensor of
  // the window [M+1, N+1); the telescoping bound caps the difference.
  const std::vector<Rat> shifted = detail::joining_tensor(fn, je.dims, je.M + 1, je.N + 1);
  c.invariance_bound = Rat(2) / Rat(je.N - je.M);
  c.max_invariance_dev = Rat(0);
  for (size_t f = 0; f < je.tensor.size(); ++f)
    c.max_invariance_dev =
        std::max(c.max_invariance_dev, rat_abs(shifted[f] - je.tensor[f]));
  c.invariance_ok = c.max_invariance_dev <= c.invariance_bound;
  return c;
}

}  // namespace rlab
