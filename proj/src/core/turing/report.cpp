// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "evaluate/evaluate.hpp"
#include "turing/turing.hpp"

namespace molswap::turing {

namespace {

using chem::Element;

struct Traits {
  std::string size;
  std::string rings;
  std::string bonds;
  std::string flexibility;
  std::vector<std::pair<std::string, bool>> groups;
};

std::string size_bucket(int heavy) {
  if (heavy <= 10) return "heavy_atoms_1_10";
  if (heavy <= 20) return "heavy_atoms_11_20";
  if (heavy <= 30) return "heavy_atoms_21_30";
  return "heavy_atoms_31_plus";
}

std::string flexibility_bucket(int rot) {
  if (rot == 0) return "rotatable_0";
  if (rot <= 3) return "rotatable_1_3";
  if (rot <= 6) return "rotatable_4_6";
  return "rotatable_7_plus";
}

Traits traits_of(const MolGraph& g) {
  const auto d = eval::descriptors(g);
  Traits t;
  t.size = size_bucket(static_cast<int>(d.get("heavy_atom_count")));
  const int rings = static_cast<int>(d.get("ring_count"));
  t.rings = rings == 0 ? "acyclic" : rings == 1 ? "monocyclic" : "polycyclic";
  int multiple = 0;
  for (const auto& b : g.bonds()) multiple += b.order > 1 ? 1 : 0;
  if (d.get("aromatic_rings") > 0) {
    t.bonds = "aromatic";
  } else if (multiple >= 2) {
    t.bonds = "multiple_unsaturations";
  } else {
    t.bonds = "aliphatic";
  }
  t.flexibility = flexibility_bucket(static_cast<int>(d.get("rotatable_bonds")));

  bool hydroxyl = false, carbonyl = false, amine = false, halogen = false, nitrile = false, ether = false;
  for (int a = 0; a < g.atom_count(); ++a) {
    const Element e = g.element(a);
    const int hs = g.hydrogen_count(a);
    if (e == Element::O && hs == 1) hydroxyl = true;
    if (e == Element::F || e == Element::Cl || e == Element::Br || e == Element::I) halogen = true;
    if (e == Element::N) {
      bool all_single = true;
      for (int b : g.neighbors(a)) all_single = all_single && g.multiplicity(a, b) == 1;
      if (all_single) amine = true;
    }
    if (e == Element::O && hs == 0 && g.degree(a) == 2 && g.neighbors(a).size() == 2) {
      bool carbons = true;
      for (int b : g.neighbors(a)) carbons = carbons && g.element(b) == Element::C;
      if (carbons) ether = true;
    }
    for (int b : g.neighbors(a)) {
      if (e == Element::C && g.element(b) == Element::O && g.multiplicity(a, b) == 2) carbonyl = true;
      if (e == Element::C && g.element(b) == Element::N && g.multiplicity(a, b) == 3) nitrile = true;
    }
  }
  t.groups = {{"hydroxyl", hydroxyl}, {"carbonyl", carbonyl}, {"amine", amine},
              {"halogen", halogen},   {"nitrile", nitrile},   {"ether", ether}};
  return t;
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(sorted.size() - 1, lo + 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

json interval_json(const Interval& iv) {
  return {{"accuracy", iv.accuracy},
          {"ci_low", iv.low},
          {"ci_high", iv.high},
          {"participants", iv.participants},
          {"answers", iv.answers}};
}

// Per stratum value, per participant (correct, answered).
using Tally = std::map<std::string, std::map<std::size_t, std::pair<int, int>>>;

json strata_json(const Tally& tally, std::uint64_t seed, int resamples) {
  json out = json::object();
  for (const auto& [value, per] : tally) {
    std::vector<std::pair<int, int>> counts;
    for (const auto& [p, c] : per) counts.push_back(c);
    out[value] = interval_json(bootstrap_accuracy(counts, mix_seed({seed, hash_string(value)}), resamples));
  }
  return out;
}

}  // namespace

Interval bootstrap_accuracy(const std::vector<std::pair<int, int>>& per_participant, std::uint64_t seed,
                            int resamples) {
  Interval iv;
  iv.participants = per_participant.size();
  long correct = 0, answered = 0;
  for (const auto& [c, a] : per_participant) {
    correct += c;
    answered += a;
  }
  iv.answers = static_cast<std::size_t>(answered);
  if (answered == 0) return iv;
  iv.accuracy = static_cast<double>(correct) / static_cast<double>(answered);
  Rng rng(seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  const std::size_t n = per_participant.size();
  for (int r = 0; r < resamples; ++r) {
    long c = 0, a = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& pick = per_participant[static_cast<std::size_t>(rng.below(n))];
      c += pick.first;
      a += pick.second;
    }
    if (a > 0) stats.push_back(static_cast<double>(c) / static_cast<double>(a));
  }
  std::sort(stats.begin(), stats.end());
  iv.low = percentile(stats, 0.025);
  iv.high = percentile(stats, 0.975);
  return iv;
}

json turing_report(const std::vector<Session>& sessions, std::uint64_t seed, int resamples) {
  std::map<std::string, Traits> cache;
  std::map<std::string, Tally> strata;
  std::vector<std::pair<int, int>> overall;
  std::size_t answered_total = 0;
  for (std::size_t p = 0; p < sessions.size(); ++p) {
    const Session& s = sessions[p];
    std::pair<int, int> mine{0, 0};
    for (const auto& r : s.rounds) {
      if (!r.choice) continue;
      const int c = *r.correct ? 1 : 0;
      ++mine.second;
      mine.first += c;
      auto it = cache.find(r.pair.real_smiles);
      if (it == cache.end()) it = cache.emplace(r.pair.real_smiles, traits_of(chem::parse_smiles(r.pair.real_smiles))).first;
      const Traits& t = it->second;
      auto add = [&](const std::string& stratum, const std::string& value) {
        auto& cell = strata[stratum][value][p];
        cell.first += c;
        cell.second += 1;
      };
      add("expertise", s.expertise);
      add("molecule_size", t.size);
      add("ring_class", t.rings);
      add("bond_character", t.bonds);
      add("flexibility", t.flexibility);
      for (const auto& [group, present] : t.groups) add("functional_group_" + group, present ? "present" : "absent");
    }
    if (mine.second > 0) {
      overall.push_back(mine);
      answered_total += static_cast<std::size_t>(mine.second);
    }
  }
  if (answered_total == 0) fail(ErrorCode::kEmptyLog, "the response log has no answered round");
  json report;
  report["format"] = "molswap-turing-report";
  report["version"] = 1;
  report["resamples"] = resamples;
  report["confidence"] = 0.95;
  report["overall"] = interval_json(bootstrap_accuracy(overall, mix_seed({seed, 0x616c6c}), resamples));
  json st = json::object();
  for (const auto& [name, tally] : strata) st[name] = strata_json(tally, mix_seed({seed, hash_string(name)}), resamples);
  report["strata"] = std::move(st);
  return report;
}

}  // namespace molswap::turing
