// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chem/canon.hpp"
#include "chem/molgraph.hpp"
#include "neural/model.hpp"

namespace molswap::sample {

using chem::MolFormula;
using chem::MolGraph;

struct SampleConfig {
  double steps_factor = 0.3;          // denoising steps per bond unit
  double threshold_start = 0.95;
  double threshold_decrement = 0.05;
  double randomization_factor = 2.0;  // noising steps per bond unit when building G_T
  std::uint64_t seed = 0;
  bool uniform_candidates = false;    // uniform instead of q-proportional choice
  int workers = 24;

  void validate() const;
};

// Connected, saturated graph with the formula's atoms in element order,
// followed by randomization_factor x bond units noising steps. Throws
// kInfeasibleFormula.
MolGraph build_initial(const MolFormula& formula, std::uint64_t seed, double randomization_factor = 2.0);
// The deterministic construction alone, before randomization.
MolGraph construct_saturated(const MolFormula& formula);

// Threshold after k decrements, clamped at 0.
double threshold_after(const SampleConfig& cfg, int decrements);
// Decrements needed before a score of max_q clears the threshold.
int decrements_needed(const SampleConfig& cfg, double max_q);

struct DenoiseResult {
  MolGraph molecule;                       // trajectory state with minimal t_pred
  std::vector<chem::CanonicalSignature> signatures;  // accepted states, G_T first
  std::vector<double> t_pred;              // per accepted state
  std::size_t best_index = 0;
  int planned_steps = 0;
  int steps_taken = 0;
  bool stalled = false;
};

// Predicted normalized time of g, clamped to [0, 1].
double predict_time(const MolGraph& g, nn::ModelWeights& time_w);

DenoiseResult denoise(const MolGraph& gT, nn::ModelWeights& diffusion_w, nn::ModelWeights& time_w,
                      const SampleConfig& cfg, std::uint64_t seed);

struct GeneratedItem {
  std::size_t index = 0;
  std::string formula;
  std::optional<std::string> smiles;  // empty when the item failed
  std::string signature;
  int steps = 0;
  bool stalled = false;
  double best_t_pred = 0.0;
  double seconds = 0.0;
  std::string error;
};

struct GenerationReport {
  std::vector<GeneratedItem> items;
  std::size_t generated = 0;
  std::size_t failed = 0;
  std::size_t stalled = 0;
  double duplicate_fraction = 0.0;  // 1 - distinct / generated
  double seconds = 0.0;
};

// Item i uses seed mix(cfg.seed, i), so results do not depend on the worker
// count. Per-item failures are recorded and the batch continues.
GenerationReport generate_batch(const std::vector<MolFormula>& formulas, nn::ModelWeights& diffusion_w,
                                nn::ModelWeights& time_w, const SampleConfig& cfg);

}  // namespace molswap::sample
