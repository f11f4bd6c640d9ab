#pragma once

#include <cstdint>
#include <ctime>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlab/error.hpp"
#include "rlab/joining.hpp"
#include "rlab/montecarlo.hpp"
#include "rlab/rational.hpp"
#include "rlab/recurrence.hpp"
#include "rlab/spectral.hpp"
#include "rlab/symbolic.hpp"
#include "rlab/torus.hpp"

namespace rlab {

using Json = nlohmann::ordered_json;

// ---- exact numeric literals ----

// "p/q" or plain integer; decimals like "0.125" convert exactly with
// *was_decimal set so callers can warn.
inline Rat parse_rat_flexible(const std::string& s, bool* was_decimal = nullptr) {
  if (was_decimal) *was_decimal = false;
  auto dot = s.find('.');
  if (dot == std::string::npos) return parse_rat(s);
  if (was_decimal) *was_decimal = true;
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const size_t places = s.size() - dot - 1;
  if (digits.empty() || places == 0) throw ValidationError("malformed decimal literal: '" + s + "'");
  Rat num = parse_rat(digits);
  Rat den = rat_pow(Rat(10), static_cast<unsigned>(places));
  return num / den;
}

// ---- symbolic system JSON ----

inline Json permutation_to_json(const Permutation& p) {
  Json arr = Json::array();
  for (Symbol s : p.table()) arr.push_back(s);
  return arr;
}

inline Permutation permutation_from_json(const Json& j) {
  std::vector<Symbol> tbl;
  for (const auto& v : j) tbl.push_back(v.get<Symbol>());
  return Permutation(tbl);
}

inline Json system_to_json(const SymbolicSystem& sys) {
  Json j;
  j["name"] = sys.name();
  j["components"] = Json::array();
  for (const auto& c : sys.components()) {
    Json jc;
    jc["alphabet"] = c.alphabet;
    Json w = Json::array();
    for (const auto& r : c.weights) w.push_back(rat_str(r));
    jc["weights"] = w;
    j["components"].push_back(jc);
  }
  j["transforms"] = Json::array();
  for (const auto& t : sys.transforms()) {
    Json jt;
    jt["name"] = t.name;
    Json sh = Json::array();
    for (Coord e : t.shift_exponents) sh.push_back(e);
    jt["shifts"] = sh;
    if (t.conjugator) {
      Json jc;
      for (const auto& [comp, cc] : t.conjugator->per_component) {
        Json e;
        e["default"] = permutation_to_json(cc.default_perm);
        Json ex;
        for (const auto& [coord, perm] : cc.exceptions)
          ex[std::to_string(coord)] = permutation_to_json(perm);
        e["exceptions"] = ex;
        jc[std::to_string(comp)] = e;
      }
      jt["conjugator"] = jc;
    }
    j["transforms"].push_back(jt);
  }
  return j;
}

inline SymbolicSystem system_from_json(const Json& j) {
  std::vector<ComponentSpec> comps;
  for (const auto& jc : j.at("components")) {
    ComponentSpec c;
    c.alphabet = jc.at("alphabet").get<int>();
    for (const auto& w : jc.at("weights")) c.weights.push_back(parse_rat(w.get<std::string>()));
    comps.push_back(std::move(c));
  }
  std::vector<TransformSpec> transforms;
  for (const auto& jt : j.at("transforms")) {
    TransformSpec t;
    for (const auto& e : jt.at("shifts")) t.shift_exponents.push_back(e.get<Coord>());
    t.name = jt.value("name", "T" + std::to_string(transforms.size()));
    if (jt.contains("conjugator")) {
      Conjugator conj;
      for (const auto& [comp_key, e] : jt.at("conjugator").items()) {
        ComponentConjugator cc;
        cc.default_perm = permutation_from_json(e.at("default"));
        if (e.contains("exceptions"))
          for (const auto& [coord_key, perm] : e.at("exceptions").items())
            cc.exceptions.emplace(std::stoll(coord_key), permutation_from_json(perm));
        conj.per_component.emplace(std::stoi(comp_key), std::move(cc));
      }
      t.conjugator = std::move(conj);
    }
    transforms.push_back(std::move(t));
  }
  return SymbolicSystem(std::move(comps), std::move(transforms), j.value("name", "system"));
}

inline Json constraint_set_to_json(const ConstraintSet& cs) {
  Json j;
  j["atoms"] = Json::array();
  for (const Atom& a : cs.atoms()) {
    Json ja;
    ja["cells"] = Json::array();
    for (const Cell& c : a.cells) ja["cells"].push_back(Json::array({c.component, c.coord}));
    ja["allowed"] = Json::array();
    for (const auto& t : a.allowed) {
      Json tp = Json::array();
      for (Symbol s : t) tp.push_back(s);
      ja["allowed"].push_back(tp);
    }
    j["atoms"].push_back(ja);
  }
  return j;
}

inline ConstraintSet constraint_set_from_json(const Json& j) {
  std::vector<Atom> atoms;
  for (const auto& ja : j.at("atoms")) {
    Atom a;
    for (const auto& jc : ja.at("cells"))
      a.cells.push_back(Cell{jc.at(0).get<int>(), jc.at(1).get<Coord>()});
    for (const auto& jt : ja.at("allowed")) {
      std::vector<Symbol> t;
      for (const auto& s : jt) t.push_back(s.get<Symbol>());
      a.allowed.push_back(std::move(t));
    }
    atoms.push_back(std::move(a));
  }
  return ConstraintSet(std::move(atoms));
}

inline std::map<std::string, ConstraintSet> sets_from_json(const Json& j) {
  std::map<std::string, ConstraintSet> out;
  if (!j.contains("sets")) return out;
  for (const auto& [name, js] : j.at("sets").items()) out.emplace(name, constraint_set_from_json(js));
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t system_hash(const SymbolicSystem& sys) {
  return fnv1a(system_to_json(sys).dump());
}

inline std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---- report JSON ----

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline Json series_meta_json(const SeriesMeta& m) {
  Json j;
  j["system"] = m.system_id;
  j["backend"] = m.backend;
  j["sets"] = m.set_ids;
  j["transforms"] = m.transform_ids;
  j["n_min"] = m.n_min;
  j["n_max"] = m.n_max;
  if (m.backend == "mc") {
    j["seed"] = m.seed;
    j["samples"] = m.samples;
  }
  j["scope"] = m.scope;
  return j;
}

inline Json gap_report_json(const GapReport& r) {
  Json j;
  j["threshold"] = rat_str(r.threshold);
  j["horizon"] = Json::array({r.horizon_lo, r.horizon_hi});
  j["hit_count"] = static_cast<long>(r.hits.size());
  j["hits"] = r.hits;
  j["max_gap"] = r.max_gap;
  j["tail_gap"] = r.tail_gap;
  j["tail_censored"] = r.tail_censored;
  j["hit_density"] = rat_str(r.hit_density);
  j["verdict"] = verdict_str(r.verdict, r.max_gap);
  j["ambiguous"] = r.ambiguous;
  j["drift_clean"] = r.drift_clean;
  return j;
}

struct AverageRow {
  long M = 0, N = 0;
  Rat value;
};

inline Json averages_json(const std::vector<AverageRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["M"] = r.M;
    j["N"] = r.N;
    j["value"] = rat_str(r.value);
    arr.push_back(j);
  }
  return arr;
}

inline Json joining_json(const JoiningEstimate& je, const JoiningChecks* checks) {
  Json j;
  j["M"] = je.M;
  j["N"] = je.N;
  j["dims"] = je.dims;
  Json tensor = Json::array();
  for (const Rat& v : je.tensor) tensor.push_back(rat_str(v));
  j["tensor"] = tensor;
  Json marg = Json::array();
  for (const auto& m : je.marginals) {
    Json row = Json::array();
    for (const Rat& v : m) row.push_back(rat_str(v));
    marg.push_back(row);
  }
  j["marginals"] = marg;
  j["product_distance"] = rat_str(je.product_distance);
  if (checks) {
    Json c;
    c["tensor_valid"] = checks->tensor_valid;
    c["marginals_exact"] = checks->marginals_exact;
    c["max_marginal_dev"] = rat_str(checks->max_marginal_dev);
    c["invariance_ok"] = checks->invariance_ok;
    c["max_invariance_dev"] = rat_str(checks->max_invariance_dev);
    c["invariance_bound"] = rat_str(checks->invariance_bound);
    j["checks"] = c;
  }
  return j;
}

inline Json spectral_json(const SpectralSplit& sp) {
  Json j;
  j["system_tag"] = sp.system_tag;
  j["split_residual"] = sp.residual_norm;
  Json l;
  l["applies"] = sp.lemma33.applies;
  l["min_f"] = sp.lemma33.min_f;
  l["max_f"] = sp.lemma33.max_f;
  l["inner_product"] = sp.fg_inner;
  l["integral_1A_f"] = sp.lemma33.integral_1A_f;
  l["mu_A"] = sp.lemma33.mu_A;
  l["range_ok"] = sp.lemma33.range_ok;
  l["lower_bound_ok"] = sp.lemma33.lower_bound_ok;
  l["positivity_on_A"] = sp.lemma33.positivity_ok;
  j["lemma33"] = l;
  return j;
}

inline Json vdc_json(const VdcReport& r) {
  Json j;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  j["holds_with_slack"] = r.holds_with_slack;
  j["window_len"] = r.window_len;
  j["per_h"] = r.per_h;
  return j;
}

inline Json eigen_report_json(const EigenReturnReport& r) {
  Json j;
  Json fr = Json::array();
  for (const Rat& f : r.freqs) fr.push_back(rat_str(f));
  j["frequencies"] = fr;
  j["delta"] = r.delta;
  j["a"] = r.a;
  j["tau"] = r.tau;
  j["N"] = r.N;
  j["hit_count"] = static_cast<long>(r.hits.size());
  j["first_hits"] = std::vector<long>(r.hits.begin(),
                                      r.hits.begin() + std::min<size_t>(r.hits.size(), 64));
  j["max_gap"] = r.max_gap;
  j["tail_censored"] = r.tail_censored;
  return j;
}

// Required keys of the emitted report schema; used by the CLI as a
// post-write self check and by the tests for round trips.
inline void validate_report_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("report must be a JSON object");
  if (!j.contains("provenance")) throw ValidationError("report missing provenance");
  const Json& p = j.at("provenance");
  for (const char* key : {"command", "system"})
    if (!p.contains(key)) throw ValidationError(std::string("provenance missing ") + key);
  if (j.contains("series_meta")) {
    const Json& m = j.at("series_meta");
    for (const char* key : {"system", "backend", "sets", "transforms", "n_min", "n_max"})
      if (!m.contains(key)) throw ValidationError(std::string("series_meta missing ") + key);
  }
  if (j.contains("gap_report")) {
    const Json& g = j.at("gap_report");
    for (const char* key : {"threshold", "hits", "max_gap", "hit_density", "verdict"})
      if (!g.contains(key)) throw ValidationError(std::string("gap_report missing ") + key);
  }
  if (j.contains("joining")) {
    const Json& g = j.at("joining");
    for (const char* key : {"tensor", "product_distance"})
      if (!g.contains(key)) throw ValidationError(std::string("joining missing ") + key);
  }
  if (j.contains("spectral")) {
    const Json& s = j.at("spectral");
    for (const char* key : {"split_residual", "lemma33"})
      if (!s.contains(key)) throw ValidationError(std::string("spectral missing ") + key);
  }
}

// ---- CSV ----

struct Provenance {
  std::string command;
  std::string system_id;
  std::uint64_t hash = 0;
  std::string backend;
  long horizon_lo = 0, horizon_hi = 0;
  std::uint64_t seed = 0;
  long samples = 0;
  int threads = 1;
  std::string scope = "finite-horizon witness";
};

inline Json provenance_json(const Provenance& p) {
  Json j;
  j["command"] = p.command;
  j["system"] = p.system_id;
  j["system_hash"] = hex64(p.hash);
  j["backend"] = p.backend;
  j["horizon"] = Json::array({p.horizon_lo, p.horizon_hi});
  if (p.samples > 0) {
    j["seed"] = p.seed;
    j["samples"] = p.samples;
  }
  j["threads"] = p.threads;
  j["scope"] = p.scope;
  return j;
}

inline std::string iso_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Provenance header as '#' comment lines; the body below it is byte-stable
// across reruns (the timestamp lives only here).
inline std::string csv_header(const Provenance& p, bool timestamp = true) {
  std::ostringstream os;
  os << "# rlab " << p.command << "\n";
  os << "# system: " << p.system_id << "  hash: " << hex64(p.hash) << "\n";
  os << "# horizon: " << p.horizon_lo << ".." << p.horizon_hi << "  backend: " << p.backend
     << "\n";
  if (p.samples > 0) os << "# seed: " << p.seed << "  samples: " << p.samples << "\n";
  os << "# scope: " << p.scope << "\n";
  if (timestamp) os << "# generated: " << iso_timestamp() << "\n";
  return os.str();
}

inline std::string series_csv_body(const CorrelationSeries& s) {
  bool any_estimate = false, any_drift = false;
  for (long n = s.n_min(); n <= s.n_max(); ++n) {
    const SeriesEntry& e = s.at(n);
    if (e.kind == EntryKind::Estimate) any_estimate = true;
    if (e.kind == EntryKind::Exact && e.drift > 0) any_drift = true;
  }
  std::ostringstream os;
  os << "n,value";
  if (any_estimate) os << ",ci";
  if (any_drift) os << ",drift";
  os << "\r\n";
  for (long n = s.n_min(); n <= s.n_max(); ++n) {
    const SeriesEntry& e = s.at(n);
    os << n << ",";
    switch (e.kind) {
      case EntryKind::Exact:
        os << rat_str(e.exact);
        if (any_estimate) os << ",0";
        if (any_drift) os << "," << rat_str(e.drift);
        break;
      case EntryKind::Estimate:
        os << fmt_double(e.estimate);
        if (any_estimate) os << "," << fmt_double(e.ci);
        if (any_drift) os << ",0";
        break;
      case EntryKind::Unavailable:
        os << "UNAVAILABLE";
        if (any_estimate) os << ",";
        if (any_drift) os << ",";
        break;
    }
    os << "\r\n";
  }
  return os.str();
}

inline std::string diam_scan_csv_body(const std::vector<DiamScanRow>& rows) {
  std::ostringstream os;
  os << "n,diam,scaled,runmin_diam,runmin_scaled,drift\r\n";
  for (const auto& r : rows)
    os << r.n << "," << rat_str(r.diam) << "," << fmt_double(r.scaled) << ","
       << rat_str(r.runmin_diam) << "," << fmt_double(r.runmin_scaled) << "," << rat_str(r.drift)
       << "\r\n";
  return os.str();
}

}  // namespace rlab
