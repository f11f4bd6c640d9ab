#include <catch2/catch_amalgamated.hpp>

#include "rlab/symbolic.hpp"

#include "helpers.hpp"

using namespace rlab;
using testutil::brute_force_measure;
using testutil::RandomGen;

namespace {

ConstraintSet cylinder(int comp, Coord coord, Symbol s) {
  return make_symbol_cylinder(comp, coord, s);
}

// Forward dynamics of the flip pair, written out independently of the
// library: S shifts, T flips every coordinate except 0 around a shift.
Symbol flip_forward_value(bool conjugated, long n, Coord i,
                          const std::map<Cell, Symbol>& x) {
  const Symbol raw = x.at(Cell{0, i + n});
  if (!conjugated) return raw;
  auto psi = [](Coord coord, Symbol s) { return coord == 0 ? s : 1 - s; };
  return psi(i, psi(i + n, raw));
}

}  // namespace

TEST_CASE("pullback on the flip pair reproduces the sign flip") {
  SymbolicSystem sys = make_flip_pair();
  ConstraintSet a = cylinder(0, 0, 0);  // {x_0 = 0}

  SECTION("T, n=3: {x_0=0} becomes {x_3=1}") {
    ConstraintSet p = pullback(sys, 1, 3, a);
    REQUIRE(p == canonicalize(sys, cylinder(0, 3, 1)));
  }

  SECTION("S, n=3: {x_0=0} becomes {x_3=0}") {
    ConstraintSet p = pullback(sys, 0, 3, a);
    REQUIRE(p == canonicalize(sys, cylinder(0, 3, 0)));
  }

  SECTION("n=0 is the identity") {
    REQUIRE(pullback(sys, 0, 0, a) == canonicalize(sys, a));
    REQUIRE(pullback(sys, 1, 0, a) == canonicalize(sys, a));
  }

  SECTION("forward-map oracle over all assignments, n in 1..6") {
    for (long n = 1; n <= 6; ++n) {
      for (int t = 0; t < 2; ++t) {
        ConstraintSet p = pullback(sys, t, n, a);
        // x in T^{-n}A iff (T^n x)_0 = 0, checked against the hand formula.
        for (Symbol xn = 0; xn < 2; ++xn) {
          std::map<Cell, Symbol> x{{Cell{0, n}, xn}};
          const bool direct = flip_forward_value(t == 1, n, 0, x) == 0;
          REQUIRE(p.atoms().size() == 1);
          const Atom& atom = p.atoms()[0];
          REQUIRE(atom.cells == std::vector<Cell>{Cell{0, n}});
          bool member = false;
          for (const auto& tup : atom.allowed) member = member || tup[0] == xn;
          REQUIRE(member == direct);
        }
      }
    }
  }
}

TEST_CASE("pullback of the distinct-triple set under T_0^2") {
  SymbolicSystem sys = make_triple_product();
  ConstraintSet a = make_distinct_tuple_set();
  ConstraintSet p = pullback(sys, 0, 2, a);

  // Frozen expectation: one atom on cells (0,0),(1,2),(2,2) with the six
  // distinct triples.
  REQUIRE(p.atoms().size() == 1);
  const Atom& atom = p.atoms()[0];
  REQUIRE(atom.cells == std::vector<Cell>{Cell{0, 0}, Cell{1, 2}, Cell{2, 2}});
  REQUIRE(atom.allowed.size() == 6);
  for (const auto& t : atom.allowed) {
    REQUIRE(t[0] != t[1]);
    REQUIRE(t[1] != t[2]);
    REQUIRE(t[0] != t[2]);
  }

  SECTION("membership matches direct application of T_0^2 on 3^6 assignments") {
    // T_0 = id x S x S, so (T_0^2 x) reads (x_0, y_2, z_2). Enumerate all
    // assignments of the six cells that either route can touch.
    std::vector<Cell> cells = {Cell{0, 0}, Cell{0, 2}, Cell{1, 0},
                               Cell{1, 2}, Cell{2, 0}, Cell{2, 2}};
    std::vector<Symbol> v(cells.size(), 0);
    long checked = 0;
    while (true) {
      std::map<Cell, Symbol> x;
      for (size_t i = 0; i < cells.size(); ++i) x[cells[i]] = v[i];
      const Symbol a0 = x[Cell{0, 0}], b2 = x[Cell{1, 2}], c2 = x[Cell{2, 2}];
      const bool direct = a0 != b2 && b2 != c2 && a0 != c2;
      std::vector<Symbol> tuple = {a0, b2, c2};
      const bool via_pullback =
          std::binary_search(atom.allowed.begin(), atom.allowed.end(), tuple);
      REQUIRE(direct == via_pullback);
      ++checked;
      size_t idx = 0;
      while (idx < v.size() && ++v[idx] == 3) v[idx++] = 0;
      if (idx == v.size()) break;
    }
    REQUIRE(checked == 729);
  }
}

TEST_CASE("intersection joins shared cells") {
  SymbolicSystem sys = make_flip_pair();

  SECTION("{x_0=0} and {x_n=0} and {x_n=1} is empty") {
    for (long n : {1L, 2L, 7L}) {
      ConstraintSet c =
          intersect(sys, {cylinder(0, 0, 0), cylinder(0, n, 0), cylinder(0, n, 1)});
      REQUIRE(exact_measure(sys, c) == 0);
    }
  }

  SECTION("intersection with the full space is the identity") {
    ConstraintSet c = cylinder(0, 0, 0);
    ConstraintSet both = intersect(sys, {c, ConstraintSet::full_space()});
    REQUIRE(both == canonicalize(sys, c));
  }

  SECTION("triple-product pullbacks join into one 6-cell atom with 6 tuples") {
    SymbolicSystem triple = make_triple_product();
    ConstraintSet a = make_distinct_tuple_set();
    for (long n : {1L, 3L, 10L}) {
      std::vector<ConstraintSet> pulled;
      for (int t = 0; t < 3; ++t) pulled.push_back(pullback(triple, t, n, a));
      ConstraintSet joined = intersect(triple, pulled);
      REQUIRE(joined.atoms().size() == 1);
      REQUIRE(joined.atoms()[0].cells.size() == 6);
      REQUIRE(joined.atoms()[0].allowed.size() == 6);
    }
  }
}

TEST_CASE("exact measures of the worked systems") {
  SECTION("uniform binary cylinder has measure 1/2") {
    SymbolicSystem b = make_bernoulli(2, {rat(1, 2), rat(1, 2)});
    REQUIRE(exact_measure(b, cylinder(0, 0, 0)) == rat(1, 2));
  }

  SECTION("distinct-triple set has measure 2/9") {
    SymbolicSystem sys = make_triple_product();
    REQUIRE(exact_measure(sys, make_distinct_tuple_set()) == rat(2, 9));
  }

  SECTION("joined 6-cell atom at n != 0 has measure 6/729 = 2/243") {
    SymbolicSystem sys = make_triple_product();
    ConstraintSet a = make_distinct_tuple_set();
    std::vector<ConstraintSet> pulled;
    for (int t = 0; t < 3; ++t) pulled.push_back(pullback(sys, t, 4, a));
    REQUIRE(exact_measure(sys, intersect(sys, pulled)) == rat(2, 243));
    REQUIRE(rat(2, 243) == Rat(6) / Rat(729));
  }

  SECTION("full space has measure 1") {
    SymbolicSystem b = make_bernoulli(2, {rat(1, 2), rat(1, 2)});
    REQUIRE(exact_measure(b, ConstraintSet::full_space()) == 1);
  }
}

TEST_CASE("builders match the stock constructions") {
  SECTION("flip pair: S unconjugated, T flips everywhere but coordinate 0") {
    SymbolicSystem sys = make_flip_pair();
    REQUIRE(sys.transform_count() == 2);
    REQUIRE_FALSE(sys.transforms()[0].conjugator.has_value());
    REQUIRE(sys.transforms()[1].conjugator.has_value());
    REQUIRE(sys.psi(1, 0, 0).is_identity());
    REQUIRE(sys.psi(1, 0, 5).apply(0) == 1);
    REQUIRE(sys.psi(1, 0, -3).apply(1) == 0);
  }

  SECTION("triple product exponent vectors") {
    SymbolicSystem sys = make_triple_product();
    REQUIRE(sys.transforms()[0].shift_exponents == std::vector<Coord>{0, 1, 1});
    REQUIRE(sys.transforms()[1].shift_exponents == std::vector<Coord>{1, 0, 1});
    REQUIRE(sys.transforms()[2].shift_exponents == std::vector<Coord>{1, 1, 0});
  }

  SECTION("invalid probability vectors are rejected") {
    REQUIRE_THROWS_AS(make_bernoulli(2, {rat(1, 2), rat(1, 3)}), ValidationError);
    REQUIRE_THROWS_AS(make_bernoulli(1, {rat(1, 1)}), ValidationError);
  }
}

TEST_CASE("measure preservation and composition properties") {
  RandomGen gen(20240801);
  for (int trial = 0; trial < 12; ++trial) {
    SymbolicSystem sys = gen.random_system(2);
    ConstraintSet c = gen.random_constraint_set(sys);
    const Rat base = exact_measure(sys, c);
    for (int t = 0; t < sys.transform_count(); ++t) {
      for (long n : {1L, 2L, 17L, 50L}) {
        ConstraintSet p = pullback(sys, t, n, c);
        REQUIRE(exact_measure(sys, p) == base);
      }
      // pullback(m+n) == pullback(m) after pullback(n)
      ConstraintSet lhs = pullback(sys, t, 7, c);
      ConstraintSet rhs = pullback(sys, t, 3, pullback(sys, t, 4, c));
      REQUIRE(lhs == rhs);
    }
  }
}

TEST_CASE("monotonicity and brute-force oracle equivalence") {
  RandomGen gen(987123);
  for (int trial = 0; trial < 20; ++trial) {
    SymbolicSystem sys = gen.random_system(1);
    ConstraintSet c1 = gen.random_constraint_set(sys);
    ConstraintSet c2 = gen.random_constraint_set(sys);
    const Rat m1 = exact_measure(sys, c1);
    const Rat m2 = exact_measure(sys, c2);
    const Rat mi = exact_measure(sys, intersect(sys, {c1, c2}));
    REQUIRE(mi <= m1);
    REQUIRE(mi <= m2);
    REQUIRE(m1 == brute_force_measure(sys, c1));
    REQUIRE(mi == brute_force_measure(sys, intersect(sys, {c1, c2})));
  }
}

TEST_CASE("flip-system identity over the full horizon") {
  SymbolicSystem sys = make_flip_pair();
  ConstraintSet a = cylinder(0, 0, 0);
  for (long n = 1; n <= 1000; ++n) {
    ConstraintSet triple = intersect(
        sys, {a, pullback(sys, 0, n, a), pullback(sys, 1, n, a)});
    REQUIRE(exact_measure(sys, triple) == 0);
    ConstraintSet pair = intersect(sys, {a, pullback(sys, 0, n, a)});
    REQUIRE(exact_measure(sys, pair) == rat(1, 4));
  }
}

TEST_CASE("error paths") {
  SymbolicSystem sys = make_flip_pair();
  ConstraintSet a = cylinder(0, 0, 0);

  SECTION("unknown transform index") {
    REQUIRE_THROWS_AS(pullback(sys, 5, 1, a), ValidationError);
  }

  SECTION("coordinate horizon overflow") {
    SymbolicSystem tight = make_flip_pair();
    tight.set_coord_bound(100);
    REQUIRE_THROWS_AS(pullback(tight, 0, 101, a), BackendLimitError);
    REQUIRE_NOTHROW(pullback(tight, 0, 100, a));
  }

  SECTION("per-atom cell limit") {
    SymbolicSystem tight = make_triple_product();
    tight.set_cell_limit(4);
    ConstraintSet d = make_distinct_tuple_set();
    std::vector<ConstraintSet> pulled;
    for (int t = 0; t < 3; ++t) pulled.push_back(pullback(tight, t, 2, d));
    REQUIRE_THROWS_AS(intersect(tight, pulled), BackendLimitError);
  }

  SECTION("atoms may not repeat a cell") {
    Atom bad;
    bad.cells = {Cell{0, 0}, Cell{0, 0}};
    bad.allowed = {{0, 0}};
    REQUIRE_THROWS_AS(ConstraintSet({bad}), ValidationError);
  }
}

TEST_CASE("canonicalization is deterministic and idempotent") {
  RandomGen gen(5551212);
  for (int trial = 0; trial < 10; ++trial) {
    SymbolicSystem sys = gen.random_system(1);
    ConstraintSet c = gen.random_constraint_set(sys, 3);
    ConstraintSet canon = canonicalize(sys, c);
    REQUIRE(canon.canonical());
    REQUIRE(canonicalize(sys, canon) == canon);
    // No two canonical atoms share a cell.
    std::vector<Cell> seen;
    for (const Atom& a : canon.atoms())
      for (const Cell& cell : a.cells) {
        REQUIRE(std::find(seen.begin(), seen.end(), cell) == seen.end());
        seen.push_back(cell);
      }
  }
}
