#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "rlab/rational.hpp"
#include "rlab/symbolic.hpp"
#include "rlab/torus.hpp"

namespace testutil {

using namespace rlab;

// Brute-force measure oracle: enumerates every symbol assignment over the
// cells a constraint set references and sums the weight products of the
// assignments satisfying all atoms. Independent of canonicalization and of
// the product factorization in exact_measure.
inline Rat brute_force_measure(const SymbolicSystem& sys, const ConstraintSet& cs) {
  std::vector<Cell> cells;
  for (const Atom& a : cs.atoms())
    for (const Cell& c : a.cells) cells.push_back(c);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  if (cells.size() > 12) throw std::runtime_error("oracle limited to 12 cells");

  Rat total(0);
  std::map<Cell, Symbol> assign;
  std::function<void(size_t, Rat)> rec = [&](size_t idx, Rat weight) {
    if (idx == cells.size()) {
      for (const Atom& a : cs.atoms()) {
        std::vector<Symbol> tuple;
        tuple.reserve(a.cells.size());
        for (const Cell& c : a.cells) tuple.push_back(assign.at(c));
        bool ok = false;
        for (const auto& t : a.allowed)
          if (t == tuple) {
            ok = true;
            break;
          }
        if (!ok) return;
      }
      total += weight;
      return;
    }
    const Cell& c = cells[idx];
    const int q = sys.components()[static_cast<size_t>(c.component)].alphabet;
    for (Symbol s = 0; s < q; ++s) {
      assign[c] = s;
      rec(idx + 1, weight * sys.weight(c.component, s));
    }
  };
  rec(0, Rat(1));
  return total;
}

// Random small systems and constraint sets for property tests.
struct RandomGen {
  std::mt19937 rng;
  explicit RandomGen(unsigned seed) : rng(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  std::vector<Rat> random_weights(int q) {
    std::vector<long> raw(static_cast<size_t>(q));
    long sum = 0;
    for (auto& r : raw) {
      r = uniform(1, 6);
      sum += r;
    }
    std::vector<Rat> w;
    for (long r : raw) w.push_back(Rat(r, sum));
    for (auto& x : w) x.canonicalize();
    return w;
  }

  Permutation random_permutation(int q) {
    std::vector<Symbol> tbl(static_cast<size_t>(q));
    std::iota(tbl.begin(), tbl.end(), 0);
    std::shuffle(tbl.begin(), tbl.end(), rng);
    return Permutation(tbl);
  }

  SymbolicSystem random_system(int n_transforms) {
    const int n_comp = uniform(1, 2);
    std::vector<ComponentSpec> comps;
    for (int c = 0; c < n_comp; ++c) {
      int q = uniform(2, 3);
      comps.push_back(ComponentSpec{q, random_weights(q)});
    }
    std::vector<TransformSpec> transforms;
    for (int t = 0; t < n_transforms; ++t) {
      TransformSpec ts;
      for (int c = 0; c < n_comp; ++c) ts.shift_exponents.push_back(uniform(-2, 2));
      if (uniform(0, 2) == 0) {
        Conjugator conj;
        const int comp = uniform(0, n_comp - 1);
        ComponentConjugator cc;
        cc.default_perm = random_permutation(comps[static_cast<size_t>(comp)].alphabet);
        for (Coord e = -1; e <= 1; ++e)
          if (uniform(0, 1) == 0)
            cc.exceptions.emplace(e, random_permutation(comps[static_cast<size_t>(comp)].alphabet));
        conj.per_component.emplace(comp, std::move(cc));
        ts.conjugator = std::move(conj);
      }
      ts.name = "T" + std::to_string(t);
      transforms.push_back(std::move(ts));
    }
    return SymbolicSystem(std::move(comps), std::move(transforms), "random");
  }

  ConstraintSet random_constraint_set(const SymbolicSystem& sys, int max_atoms = 2) {
    const int n_atoms = uniform(1, max_atoms);
    std::vector<Atom> atoms;
    for (int a = 0; a < n_atoms; ++a) {
      Atom atom;
      const int arity = uniform(1, 2);
      for (int i = 0; i < arity; ++i) {
        Cell c{uniform(0, sys.component_count() - 1), static_cast<Coord>(uniform(-3, 3))};
        bool dup = false;
        for (const Cell& prev : atom.cells) dup = dup || prev == c;
        if (dup) {
          --i;
          continue;
        }
        atom.cells.push_back(c);
      }
      long combos = 1;
      for (const Cell& c : atom.cells)
        combos *= sys.components()[static_cast<size_t>(c.component)].alphabet;
      for (long t = 0; t < combos; ++t) {
        if (uniform(0, 2) == 0) continue;  // drop some tuples
        long rest = t;
        std::vector<Symbol> tuple;
        for (const Cell& c : atom.cells) {
          const int q = sys.components()[static_cast<size_t>(c.component)].alphabet;
          tuple.push_back(static_cast<Symbol>(rest % q));
          rest /= q;
        }
        atom.allowed.push_back(std::move(tuple));
      }
      if (atom.allowed.empty()) atom.allowed.push_back(std::vector<Symbol>(atom.cells.size(), 0));
      atoms.push_back(std::move(atom));
    }
    return ConstraintSet(std::move(atoms));
  }
};

}  // namespace testutil
