// SPDX-License-Identifier: Apache-2.0
#include "sampler/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <set>

#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"
#include "diffusion/des.hpp"
#include "featurize/features.hpp"
#include "topo/topo.hpp"

namespace molswap::sample {

namespace {

constexpr std::int64_t kSearchBudget = 200000;

// Capped multigraph realization of a degree sequence. Each unit of the
// vertex with the largest remaining degree goes to the partner with the
// largest remaining degree, preferring partners not yet bonded; dead ends
// backtrack within a node budget.
class Realizer {
 public:
  explicit Realizer(MolGraph& g) : g_(g), rem_(static_cast<std::size_t>(g.atom_count())) {
    for (int a = 0; a < g.atom_count(); ++a) rem_[static_cast<std::size_t>(a)] = chem::standard_valence(g.element(a));
  }

  bool run() { return place(); }

 private:
  bool place() {
    if (++visited_ > kSearchBudget) return false;
    int v = -1;
    for (int a = 0; a < g_.atom_count(); ++a) {
      if (rem_[static_cast<std::size_t>(a)] > 0 && (v < 0 || rem_[static_cast<std::size_t>(a)] > rem_[static_cast<std::size_t>(v)])) v = a;
    }
    if (v < 0) return true;
    std::vector<int> partners;
    for (int u = 0; u < g_.atom_count(); ++u) {
      if (u != v && rem_[static_cast<std::size_t>(u)] > 0 && g_.multiplicity(v, u) < MolGraph::kMaxMultiplicity) {
        partners.push_back(u);
      }
    }
    std::stable_sort(partners.begin(), partners.end(), [&](int x, int y) {
      const int rx = rem_[static_cast<std::size_t>(x)], ry = rem_[static_cast<std::size_t>(y)];
      if (rx != ry) return rx > ry;
      return g_.bonded(v, x) < g_.bonded(v, y);
    });
    // Partners with equal state are interchangeable for feasibility.
    std::set<std::pair<int, int>> tried;
    for (int u : partners) {
      if (!tried.insert({rem_[static_cast<std::size_t>(u)], g_.multiplicity(v, u)}).second) continue;
      g_.set_multiplicity(v, u, g_.multiplicity(v, u) + 1);
      --rem_[static_cast<std::size_t>(v)];
      --rem_[static_cast<std::size_t>(u)];
      if (place()) return true;
      ++rem_[static_cast<std::size_t>(v)];
      ++rem_[static_cast<std::size_t>(u)];
      g_.set_multiplicity(v, u, g_.multiplicity(v, u) - 1);
      if (visited_ > kSearchBudget) return false;
    }
    return false;
  }

  MolGraph& g_;
  std::vector<int> rem_;
  std::int64_t visited_ = 0;
};

std::vector<int> component_labels(const MolGraph& g) {
  std::vector<int> label(static_cast<std::size_t>(g.atom_count()), -1);
  int next = 0;
  for (int s = 0; s < g.atom_count(); ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack{s};
    label[static_cast<std::size_t>(s)] = next;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (int b : g.neighbors(a)) {
        if (label[static_cast<std::size_t>(b)] < 0) {
          label[static_cast<std::size_t>(b)] = next;
          stack.push_back(b);
        }
      }
    }
    ++next;
  }
  return label;
}

bool still_connected_without_unit(MolGraph g, int a, int b) {
  g.set_multiplicity(a, b, g.multiplicity(a, b) - 1);
  const auto label = component_labels(g);
  return label[static_cast<std::size_t>(a)] == label[static_cast<std::size_t>(b)];
}

// Merges components with swaps that take one unit from a non-bridge bond of
// one component and any bond of another: (a1,a2),(b1,b2) -> (a1,b1),(a2,b2).
void connect_components(MolGraph& g) {
  for (;;) {
    const auto label = component_labels(g);
    const int count = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
    if (count <= 1) return;
    const auto bonds = g.bonds();
    const chem::Bond* keep = nullptr;
    for (const auto& bd : bonds) {
      if (bd.order > 1 || still_connected_without_unit(g, bd.a, bd.b)) {
        keep = &bd;
        break;
      }
    }
    if (!keep) fail(ErrorCode::kInfeasibleFormula, "too few bonds to connect every atom");
    const int ca = label[static_cast<std::size_t>(keep->a)];
    const chem::Bond* other = nullptr;
    for (const auto& bd : bonds) {
      if (label[static_cast<std::size_t>(bd.a)] != ca) {
        other = &bd;
        break;
      }
    }
    if (!other) fail(ErrorCode::kInternal, "isolated atom with nonzero valence");
    const int a1 = keep->a, a2 = keep->b, b1 = other->a, b2 = other->b;
    g.set_multiplicity(a1, a2, g.multiplicity(a1, a2) - 1);
    g.set_multiplicity(b1, b2, g.multiplicity(b1, b2) - 1);
    g.add_bond(a1, b1);
    g.add_bond(a2, b2);
  }
}

}  // namespace

void SampleConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kInvalidArgument, m); };
  if (!(steps_factor > 0.0)) bad("steps_factor must be positive");
  if (!(threshold_start > 0.0 && threshold_start <= 1.0)) bad("threshold_start must lie in (0, 1]");
  if (!(threshold_decrement > 0.0 && threshold_decrement <= threshold_start)) {
    bad("threshold_decrement must lie in (0, threshold_start]");
  }
  if (!(randomization_factor >= 0.0)) bad("randomization_factor must be non-negative");
  if (workers <= 0) bad("workers must be positive");
}

MolGraph construct_saturated(const MolFormula& formula) {
  std::vector<chem::Element> atoms;
  int degree_sum = 0;
  for (chem::Element e : chem::all_elements()) {
    for (int k = 0; k < formula.count(e); ++k) {
      atoms.push_back(e);
      degree_sum += chem::standard_valence(e);
    }
  }
  const std::string name = formula.to_string();
  const int n = static_cast<int>(atoms.size());
  if (n < 2) fail(ErrorCode::kInfeasibleFormula, name + ": needs at least two atoms");
  if (degree_sum % 2 != 0) fail(ErrorCode::kInfeasibleFormula, name + ": odd valence sum");
  if (degree_sum / 2 < n - 1) fail(ErrorCode::kInfeasibleFormula, name + ": too few bonds to connect every atom");
  MolGraph g(atoms);
  if (!Realizer(g).run()) fail(ErrorCode::kInfeasibleFormula, name + ": no bond assignment with multiplicity <= 3");
  connect_components(g);
  return g;
}

MolGraph build_initial(const MolFormula& formula, std::uint64_t seed, double randomization_factor) {
  MolGraph g = construct_saturated(formula);
  const int steps = static_cast<int>(std::ceil(randomization_factor * g.bond_units()));
  Rng rng(seed);
  for (int s = 0; s < steps; ++s) {
    try {
      g = diffusion::noise_step(g, rng).graph;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoFeasibleMove) throw;
      break;
    }
  }
  return g;
}

double threshold_after(const SampleConfig& cfg, int decrements) {
  return std::max(0.0, cfg.threshold_start - decrements * cfg.threshold_decrement);
}

int decrements_needed(const SampleConfig& cfg, double max_q) {
  if (!(max_q > 0.0)) return -1;
  int k = 0;
  while (!(max_q > threshold_after(cfg, k))) ++k;
  return k;
}

double predict_time(const MolGraph& g, nn::ModelWeights& time_w) {
  const auto f = feat::featurize(g, 0.0);
  feat::Fingerprint fp;
  const bool fps = time_w.variant() == nn::Variant::kFps;
  if (fps) fp = feat::fingerprint(g);
  nn::Tape tape;
  const auto t = nn::time_forward(tape, f, time_w, fps ? &fp : nullptr);
  return std::clamp(tape.scalar(t), 0.0, 1.0);
}

DenoiseResult denoise(const MolGraph& gT, nn::ModelWeights& diffusion_w, nn::ModelWeights& time_w,
                      const SampleConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!topo::is_connected(gT)) fail(ErrorCode::kNotConnected, "initial graph is not connected");
  const bool fps = diffusion_w.variant() == nn::Variant::kFps;
  Rng rng(seed);

  DenoiseResult res;
  res.planned_steps = static_cast<int>(std::ceil(cfg.steps_factor * gT.bond_units()));
  std::set<chem::CanonicalSignature> visited;
  MolGraph cur = gT;
  double t_cur = predict_time(cur, time_w);
  res.signatures.push_back(chem::canonical_signature(cur));
  visited.insert(res.signatures.back());
  res.t_pred.push_back(t_cur);
  res.molecule = cur;

  for (int step = 0; step < res.planned_steps; ++step) {
    const auto feasible = diffusion::enumerate_feasible(cur);
    if (feasible.empty()) {
      res.stalled = true;
      break;
    }
    const auto f = feat::featurize(cur, t_cur);
    feat::Fingerprint fp;
    if (fps) fp = feat::fingerprint(cur);
    nn::Tape tape;
    const auto scores = nn::diffusion_forward(tape, f, diffusion_w, fps ? &fp : nullptr);
    const auto q_var = nn::swap_scores(tape, scores, f, feasible);
    const nn::Mat& q = tape.value(q_var);

    std::vector<bool> excluded(feasible.size(), false);
    std::optional<MolGraph> next;
    for (int k = 0; !next;) {
      const double theta = threshold_after(cfg, k);
      std::vector<std::size_t> cand;
      std::vector<double> weight;
      for (std::size_t i = 0; i < feasible.size(); ++i) {
        if (!excluded[i] && q(static_cast<Eigen::Index>(i), 0) > theta) {
          cand.push_back(i);
          weight.push_back(cfg.uniform_candidates ? 1.0 : q(static_cast<Eigen::Index>(i), 0));
        }
      }
      if (cand.empty()) {
        if (theta <= 0.0) break;
        ++k;
        continue;
      }
      std::size_t pick = rng.weighted(weight);
      if (pick >= cand.size()) pick = static_cast<std::size_t>(rng.below(cand.size()));
      const std::size_t m = cand[pick];
      MolGraph g = diffusion::apply(cur, feasible[m]);
      if (!topo::is_connected(g)) {
        excluded[m] = true;
        continue;
      }
      auto sig = chem::canonical_signature(g);
      if (visited.count(sig)) {
        excluded[m] = true;
        continue;
      }
      visited.insert(sig);
      res.signatures.push_back(std::move(sig));
      next = std::move(g);
    }
    if (!next) {
      res.stalled = true;
      break;
    }
    cur = std::move(*next);
    t_cur = predict_time(cur, time_w);
    res.t_pred.push_back(t_cur);
    ++res.steps_taken;
    if (t_cur < res.t_pred[res.best_index]) {
      res.best_index = res.t_pred.size() - 1;
      res.molecule = cur;
    }
  }
  return res;
}

GenerationReport generate_batch(const std::vector<MolFormula>& formulas, nn::ModelWeights& diffusion_w,
                                nn::ModelWeights& time_w, const SampleConfig& cfg) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  GenerationReport rep;
  rep.items.resize(formulas.size());
  parallel_for(formulas.size(), default_workers(static_cast<std::size_t>(cfg.workers)), [&](std::size_t i) {
    const auto t0 = clock::now();
    GeneratedItem& item = rep.items[i];
    item.index = i;
    item.formula = formulas[i].to_string();
    try {
      const MolGraph gT = build_initial(formulas[i], mix_seed({cfg.seed, i, 1}), cfg.randomization_factor);
      const auto res = denoise(gT, diffusion_w, time_w, cfg, mix_seed({cfg.seed, i, 2}));
      item.smiles = chem::write_smiles(res.molecule);
      item.signature = res.signatures[res.best_index].text;
      item.steps = res.steps_taken;
      item.stalled = res.stalled;
      item.best_t_pred = res.t_pred[res.best_index];
    } catch (const Error& e) {
      item.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    item.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  });
  std::set<std::string> distinct;
  for (const auto& item : rep.items) {
    if (!item.smiles) {
      ++rep.failed;
      continue;
    }
    ++rep.generated;
    if (item.stalled) ++rep.stalled;
    distinct.insert(item.signature);
  }
  rep.duplicate_fraction =
      rep.generated ? 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(rep.generated) : 0.0;
  rep.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return rep;
}

}  // namespace molswap::sample
