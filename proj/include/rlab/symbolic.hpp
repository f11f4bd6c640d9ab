#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/rational.hpp"

namespace rlab {

using Symbol = int;
using Coord = std::int64_t;

// One constrained position of the sequence space: (component, coordinate).
struct Cell {
  int component = 0;
  Coord coord = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Permutation of a finite alphabet. The inverse table is materialized only
// when the permutation is not an involution.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<Symbol> fwd) : fwd_(std::move(fwd)) {
    const int q = static_cast<int>(fwd_.size());
    std::vector<bool> seen(static_cast<size_t>(q), false);
    for (Symbol s : fwd_) {
      if (s < 0 || s >= q || seen[static_cast<size_t>(s)])
        throw ValidationError("not a permutation of the alphabet");
      seen[static_cast<size_t>(s)] = true;
    }
    bool involution = true;
    for (int s = 0; s < q; ++s)
      if (fwd_[static_cast<size_t>(fwd_[static_cast<size_t>(s)])] != s) {
        involution = false;
        break;
      }
    if (!involution) {
      inv_.resize(static_cast<size_t>(q));
      for (int s = 0; s < q; ++s) inv_[static_cast<size_t>(fwd_[static_cast<size_t>(s)])] = s;
    }
  }

  static Permutation identity(int q) {
    std::vector<Symbol> f(static_cast<size_t>(q));
    std::iota(f.begin(), f.end(), 0);
    return Permutation(std::move(f));
  }

  int size() const { return static_cast<int>(fwd_.size()); }
  bool is_involution() const { return inv_.empty(); }

  bool is_identity() const {
    for (int s = 0; s < size(); ++s)
      if (fwd_[static_cast<size_t>(s)] != s) return false;
    return true;
  }

  Symbol apply(Symbol s) const { return fwd_[static_cast<size_t>(s)]; }
  Symbol apply_inv(Symbol s) const {
    return inv_.empty() ? fwd_[static_cast<size_t>(s)] : inv_[static_cast<size_t>(s)];
  }

  const std::vector<Symbol>& table() const { return fwd_; }

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.fwd_ == b.fwd_; }

 private:
  std::vector<Symbol> fwd_;
  std::vector<Symbol> inv_;  // empty for involutions
};

// Coordinate-wise alphabet permutations for one component: a default
// permutation everywhere except a finite exceptional set of coordinates.
struct ComponentConjugator {
  Permutation default_perm;
  std::map<Coord, Permutation> exceptions;

  const Permutation& at(Coord i) const {
    auto it = exceptions.find(i);
    return it == exceptions.end() ? default_perm : it->second;
  }
};

// The pointwise map psi of a conjugated transform T = psi^{-1} o S^e o psi.
// Components not present act by the identity.
struct Conjugator {
  std::map<int, ComponentConjugator> per_component;

  bool trivial_on(int component) const { return per_component.find(component) == per_component.end(); }
};

struct TransformSpec {
  std::vector<Coord> shift_exponents;  // one entry per component
  std::optional<Conjugator> conjugator;
  std::string name;
};

struct ComponentSpec {
  int alphabet = 2;
  std::vector<Rat> weights;  // exact probability vector, one entry per symbol
};

class SymbolicSystem {
 public:
  SymbolicSystem(std::vector<ComponentSpec> components, std::vector<TransformSpec> transforms,
                 std::string name)
      : components_(std::move(components)), transforms_(std::move(transforms)), name_(std::move(name)) {
    if (components_.empty()) throw ValidationError("system needs at least one component");
    for (const auto& c : components_) {
      if (c.alphabet < 2) throw ValidationError("alphabet_size must be >= 2");
      if (static_cast<int>(c.weights.size()) != c.alphabet)
        throw ValidationError("weights length must equal alphabet size");
      Rat sum(0);
      for (const auto& w : c.weights) {
        if (w < 0 || w > 1) throw ValidationError("symbol weight outside [0,1]");
        sum += w;
      }
      if (sum != 1) throw ValidationError("symbol weights must sum to 1 exactly");
    }
    for (const auto& t : transforms_) {
      if (t.shift_exponents.size() != components_.size())
        throw ValidationError("shift exponent vector length must equal component count");
      if (t.conjugator) {
        for (const auto& [comp, cc] : t.conjugator->per_component) {
          if (comp < 0 || comp >= static_cast<int>(components_.size()))
            throw ValidationError("conjugator references undeclared component");
          const int q = components_[static_cast<size_t>(comp)].alphabet;
          if (cc.default_perm.size() != q)
            throw ValidationError("conjugator permutation size mismatch");
          for (const auto& [coord, perm] : cc.exceptions)
            if (perm.size() != q) throw ValidationError("conjugator permutation size mismatch");
        }
      }
    }
  }

  const std::vector<ComponentSpec>& components() const { return components_; }
  const std::vector<TransformSpec>& transforms() const { return transforms_; }
  const std::string& name() const { return name_; }

  int component_count() const { return static_cast<int>(components_.size()); }
  int transform_count() const { return static_cast<int>(transforms_.size()); }

  const TransformSpec& transform(int t) const {
    if (t < 0 || t >= transform_count()) throw ValidationError("unknown transform index");
    return transforms_[static_cast<size_t>(t)];
  }

  const Rat& weight(int component, Symbol s) const {
    return components_[static_cast<size_t>(component)].weights[static_cast<size_t>(s)];
  }

  // psi_{component, coord} of transform t (identity when unconjugated).
  const Permutation& psi(int t, int component, Coord coord) const {
    const TransformSpec& ts = transform(t);
    if (ts.conjugator) {
      auto it = ts.conjugator->per_component.find(component);
      if (it != ts.conjugator->per_component.end()) return it->second.at(coord);
    }
    return identity_perm(component);
  }

  Coord coord_bound() const { return coord_bound_; }
  int cell_limit() const { return cell_limit_; }
  void set_coord_bound(Coord b) { coord_bound_ = b; }
  void set_cell_limit(int l) { cell_limit_ = l; }

 private:
  const Permutation& identity_perm(int component) const {
    if (identity_cache_.empty())
      for (const auto& c : components_) identity_cache_.push_back(Permutation::identity(c.alphabet));
    return identity_cache_[static_cast<size_t>(component)];
  }

  std::vector<ComponentSpec> components_;
  std::vector<TransformSpec> transforms_;
  std::string name_;
  Coord coord_bound_ = Coord(1) << 40;
  int cell_limit_ = 24;
  mutable std::vector<Permutation> identity_cache_;
};

// One relation: a tuple constraint over an ordered list of distinct cells.
// `allowed` is kept sorted and duplicate-free; an empty `allowed` denotes the
// empty set, a missing atom list (in ConstraintSet) the full space.
struct Atom {
  std::vector<Cell> cells;
  std::vector<std::vector<Symbol>> allowed;

  friend bool operator==(const Atom& a, const Atom& b) = default;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (auto& a : atoms_) normalize_atom(a);
  }

  static ConstraintSet full_space() { return ConstraintSet(); }

  const std::vector<Atom>& atoms() const { return atoms_; }
  bool is_full_space() const { return atoms_.empty(); }
  bool canonical() const { return canonical_; }

  friend bool operator==(const ConstraintSet& a, const ConstraintSet& b) {
    return a.atoms_ == b.atoms_;
  }

  // Sorts cells within an atom (permuting tuple entries to match), sorts and
  // dedupes the allowed list. Cells must be pairwise distinct.
  static void normalize_atom(Atom& a) {
    if (a.cells.empty()) throw ValidationError("atom with no cells");
    std::vector<size_t> order(a.cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return a.cells[i] < a.cells[j]; });
    for (size_t i = 0; i + 1 < order.size(); ++i)
      if (a.cells[order[i]] == a.cells[order[i + 1]])
        throw ValidationError("atom repeats a cell");
    std::vector<Cell> cells(a.cells.size());
    for (size_t i = 0; i < order.size(); ++i) cells[i] = a.cells[order[i]];
    std::vector<std::vector<Symbol>> allowed;
    allowed.reserve(a.allowed.size());
    for (const auto& t : a.allowed) {
      if (t.size() != a.cells.size()) throw ValidationError("tuple arity mismatch");
      std::vector<Symbol> u(t.size());
      for (size_t i = 0; i < order.size(); ++i) u[i] = t[order[i]];
      allowed.push_back(std::move(u));
    }
    std::sort(allowed.begin(), allowed.end());
    allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
    a.cells = std::move(cells);
    a.allowed = std::move(allowed);
  }

  friend ConstraintSet canonicalize(const SymbolicSystem& sys, ConstraintSet cs);

 private:
  std::vector<Atom> atoms_;
  bool canonical_ = false;
};

namespace detail {

// Natural join of two atoms on their shared cells.
inline Atom join_atoms(const SymbolicSystem& sys, const Atom& a, const Atom& b) {
  std::vector<Cell> cells = a.cells;
  cells.insert(cells.end(), b.cells.begin(), b.cells.end());
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  if (static_cast<int>(cells.size()) > sys.cell_limit())
    throw BackendLimitError("cell limit exceeded while joining constraint atoms");

  auto position = [&](const Cell& c) {
    return static_cast<size_t>(std::lower_bound(cells.begin(), cells.end(), c) - cells.begin());
  };
  std::vector<size_t> pos_a(a.cells.size()), pos_b(b.cells.size());
  for (size_t i = 0; i < a.cells.size(); ++i) pos_a[i] = position(a.cells[i]);
  for (size_t i = 0; i < b.cells.size(); ++i) pos_b[i] = position(b.cells[i]);

  // Shared positions, expressed as index pairs (into a's and b's tuples).
  std::vector<std::pair<size_t, size_t>> shared;
  for (size_t i = 0; i < a.cells.size(); ++i)
    for (size_t j = 0; j < b.cells.size(); ++j)
      if (a.cells[i] == b.cells[j]) shared.emplace_back(i, j);

  std::map<std::vector<Symbol>, std::vector<const std::vector<Symbol>*>> b_by_key;
  for (const auto& tb : b.allowed) {
    std::vector<Symbol> key;
    key.reserve(shared.size());
    for (auto [ia, ib] : shared) key.push_back(tb[ib]);
    b_by_key[key].push_back(&tb);
  }

  Atom out;
  out.cells = cells;
  for (const auto& ta : a.allowed) {
    std::vector<Symbol> key;
    key.reserve(shared.size());
    for (auto [ia, ib] : shared) key.push_back(ta[ia]);
    auto it = b_by_key.find(key);
    if (it == b_by_key.end()) continue;
    for (const auto* tb : it->second) {
      std::vector<Symbol> merged(cells.size(), -1);
      for (size_t i = 0; i < a.cells.size(); ++i) merged[pos_a[i]] = ta[i];
      for (size_t i = 0; i < b.cells.size(); ++i) merged[pos_b[i]] = (*tb)[i];
      out.allowed.push_back(std::move(merged));
    }
  }
  std::sort(out.allowed.begin(), out.allowed.end());
  out.allowed.erase(std::unique(out.allowed.begin(), out.allowed.end()), out.allowed.end());
  return out;
}

}  // namespace detail

// Joins atoms sharing cells until all atoms constrain disjoint cells, then
// sorts for deterministic equality testing.
inline ConstraintSet canonicalize(const SymbolicSystem& sys, ConstraintSet cs) {
  if (cs.canonical_) return cs;
  std::vector<Atom> pending = std::move(cs.atoms_);
  std::vector<Atom> done;
  while (!pending.empty()) {
    Atom cur = std::move(pending.back());
    pending.pop_back();
    bool joined = true;
    while (joined) {
      joined = false;
      for (size_t i = 0; i < pending.size(); ++i) {
        const Atom& other = pending[i];
        bool shares = false;
        for (const Cell& c : cur.cells)
          if (std::binary_search(other.cells.begin(), other.cells.end(), c)) {
            shares = true;
            break;
          }
        if (shares) {
          cur = detail::join_atoms(sys, cur, other);
          pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(i));
          joined = true;
          break;
        }
      }
    }
    done.push_back(std::move(cur));
  }
  std::sort(done.begin(), done.end(),
            [](const Atom& x, const Atom& y) { return x.cells < y.cells; });
  ConstraintSet out;
  out.atoms_ = std::move(done);
  out.canonical_ = true;
  return out;
}

// Exact constraint description of T_t^{-n}(cs). Valid for any sign of n; the
// shifts are two-sided. Cell (c,i) moves to (c, i + n*e_c) and a conjugated
// transform maps the allowed symbols by psi_{c,i+n*e_c}^{-1} o psi_{c,i}.
inline ConstraintSet pullback(const SymbolicSystem& sys, int t, Coord n, const ConstraintSet& cs) {
  const TransformSpec& ts = sys.transform(t);
  std::vector<Atom> atoms;
  atoms.reserve(cs.atoms().size());
  for (const Atom& a : cs.atoms()) {
    Atom out;
    out.cells.reserve(a.cells.size());
    std::vector<std::pair<const Permutation*, const Permutation*>> maps;  // (psi_src, psi_dst)
    for (const Cell& c : a.cells) {
      const Coord shift = n * ts.shift_exponents[static_cast<size_t>(c.component)];
      const Coord moved = c.coord + shift;
      if (moved > sys.coord_bound() || moved < -sys.coord_bound())
        throw BackendLimitError("coordinate index beyond configured horizon bound");
      out.cells.push_back(Cell{c.component, moved});
      maps.emplace_back(&sys.psi(t, c.component, c.coord), &sys.psi(t, c.component, moved));
    }
    out.allowed.reserve(a.allowed.size());
    for (const auto& tuple : a.allowed) {
      std::vector<Symbol> mapped(tuple.size());
      for (size_t j = 0; j < tuple.size(); ++j)
        mapped[j] = maps[j].second->apply_inv(maps[j].first->apply(tuple[j]));
      out.allowed.push_back(std::move(mapped));
    }
    ConstraintSet::normalize_atom(out);
    atoms.push_back(std::move(out));
  }
  return canonicalize(sys, ConstraintSet(std::move(atoms)));
}

inline ConstraintSet intersect(const SymbolicSystem& sys, const std::vector<ConstraintSet>& css) {
  std::vector<Atom> atoms;
  for (const auto& cs : css)
    atoms.insert(atoms.end(), cs.atoms().begin(), cs.atoms().end());
  return canonicalize(sys, ConstraintSet(std::move(atoms)));
}

// Product-measure value of a constraint set. Atoms of a canonical set
// constrain disjoint cells, so their measures multiply.
inline Rat exact_measure(const SymbolicSystem& sys, const ConstraintSet& cs_in) {
  const ConstraintSet cs = cs_in.canonical() ? cs_in : canonicalize(sys, cs_in);
  Rat total(1);
  for (const Atom& a : cs.atoms()) {
    if (static_cast<int>(a.cells.size()) > sys.cell_limit())
      throw BackendLimitError("cell limit exceeded in exact_measure");
    Rat m(0);
    for (const auto& tuple : a.allowed) {
      Rat w(1);
      for (size_t j = 0; j < tuple.size(); ++j)
        w *= sys.weight(a.cells[j].component, tuple[j]);
      m += w;
    }
    total *= m;
    if (total == 0) return total;
  }
  return total;
}

// Value of (T_t^n x) at `cell`, reading the needed coordinate of x through
// `coord_value`. This is the forward point dynamics; the Monte Carlo module
// uses it as a membership route independent of the set algebra above.
template <typename CoordValueFn>
Symbol transformed_symbol(const SymbolicSystem& sys, int t, Coord n, const Cell& cell,
                          CoordValueFn&& coord_value) {
  const TransformSpec& ts = sys.transform(t);
  const Coord src = cell.coord + n * ts.shift_exponents[static_cast<size_t>(cell.component)];
  const Symbol raw = coord_value(Cell{cell.component, src});
  return sys.psi(t, cell.component, cell.coord)
      .apply_inv(sys.psi(t, cell.component, src).apply(raw));
}

// ---- Builders for the stock systems ----

inline SymbolicSystem make_bernoulli(int q, std::vector<Rat> weights,
                                     const std::string& name = "bernoulli") {
  ComponentSpec comp{q, std::move(weights)};
  TransformSpec shift{{1}, std::nullopt, "S"};
  return SymbolicSystem({comp}, {shift}, name);
}

// Full shift S and its flip conjugate T = psi^{-1} o S o psi on {0,1}^Z with
// the (1/2,1/2) product measure; psi flips every coordinate except 0.
inline SymbolicSystem make_flip_pair() {
  ComponentSpec comp{2, {rat(1, 2), rat(1, 2)}};
  TransformSpec s{{1}, std::nullopt, "S"};
  Conjugator conj;
  ComponentConjugator cc;
  cc.default_perm = Permutation({1, 0});
  cc.exceptions.emplace(0, Permutation::identity(2));
  conj.per_component.emplace(0, std::move(cc));
  TransformSpec t{{1}, std::move(conj), "T"};
  return SymbolicSystem({comp}, {s, t}, "flip");
}

// Three commuting coordinate-pair shifts on the triple product of the uniform
// 3-symbol shift: exponent vectors (0,1,1), (1,0,1), (1,1,0).
inline SymbolicSystem make_triple_product() {
  ComponentSpec comp{3, {rat(1, 3), rat(1, 3), rat(1, 3)}};
  TransformSpec t0{{0, 1, 1}, std::nullopt, "T0"};
  TransformSpec t1{{1, 0, 1}, std::nullopt, "T1"};
  TransformSpec t2{{1, 1, 0}, std::nullopt, "T2"};
  return SymbolicSystem({comp, comp, comp}, {t0, t1, t2}, "triple");
}

// {(x,y,z) : x_0, y_0, z_0 distinct} for the triple product system.
inline ConstraintSet make_distinct_tuple_set() {
  Atom a;
  a.cells = {Cell{0, 0}, Cell{1, 0}, Cell{2, 0}};
  for (Symbol i = 0; i < 3; ++i)
    for (Symbol j = 0; j < 3; ++j)
      for (Symbol k = 0; k < 3; ++k)
        if (i != j && j != k && i != k) a.allowed.push_back({i, j, k});
  return ConstraintSet({a});
}

// Single-cell cylinder {x : x_{(component, coord)} = s}.
inline ConstraintSet make_symbol_cylinder(int component, Coord coord, Symbol s) {
  Atom a;
  a.cells = {Cell{component, coord}};
  a.allowed = {{s}};
  return ConstraintSet({a});
}

// Partition of the space by the symbol at one cell.
inline std::vector<ConstraintSet> make_symbol_partition(const SymbolicSystem& sys, int component,
                                                        Coord coord) {
  std::vector<ConstraintSet> parts;
  const int q = sys.components()[static_cast<size_t>(component)].alphabet;
  parts.reserve(static_cast<size_t>(q));
  for (Symbol s = 0; s < q; ++s) parts.push_back(make_symbol_cylinder(component, coord, s));
  return parts;
}

}  // namespace rlab
