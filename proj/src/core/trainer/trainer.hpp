// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "chem/molgraph.hpp"
#include "neural/model.hpp"
#include "neural/optimizer.hpp"

namespace molswap::train {

using chem::MolGraph;

// Seed streams for training and validation trajectories. With
// resample_trajectories off, evaluate_loss on kTrajectoryStream scores the
// exact states seen in training.
inline constexpr std::uint64_t kTrajectoryStream = 0x7472616a;
inline constexpr std::uint64_t kValidationStream = 0x76616c69;

struct TrainConfig {
  int slice_size = 100000;
  double train_fraction = 0.8;
  int batch_size = 12;
  int epochs = 1;
  double lr = 1e-4;              // BASE training, every group
  double lr_pretrained = 1e-5;   // fine-tuning: copied BASE tensors
  double lr_fingerprint = 1e-4;  // fine-tuning: fingerprint branch
  nn::LossWeights loss_weights;
  int checkpoint_interval = 1000;  // optimizer steps
  int workers = 24;
  std::uint64_t seed = 0;
  nn::Variant variant = nn::Variant::kBase;
  double steps_factor = 0.25;
  bool resample_trajectories = true;     // false: the same trajectories every epoch
  std::filesystem::path checkpoint_path;  // empty: no checkpoints
  std::filesystem::path metrics_path;     // empty: no per-row log
  std::filesystem::path summary_path;     // empty: no epoch summaries file
  bool resume = true;                     // continue from checkpoint_path when present
  std::optional<std::int64_t> stop_after_steps;  // stop early (used to test resumption)

  void validate() const;
};

struct EpochSummary {
  int epoch = 0;
  double train_loss = 0.0;       // mean per pair (diffusion) or per state (time)
  double validation_loss = 0.0;  // same quantity on the held-out split
  std::int64_t train_items = 0;
  std::int64_t validation_items = 0;
  std::int64_t optimizer_steps = 0;  // within the epoch
};

struct TrainResult {
  nn::ModelWeights weights;
  std::vector<EpochSummary> epochs;
  std::int64_t optimizer_steps = 0;
  std::int64_t skipped_molecules = 0;  // trajectories with no usable step
  bool completed = false;
};

// Deterministic split: a seeded shuffle, the first train_fraction for
// training. Returns (train indices, validation indices).
std::pair<std::vector<int>, std::vector<int>> split_indices(std::size_t count, double train_fraction,
                                                            std::uint64_t seed);

TrainResult train_diffusion(const std::vector<MolGraph>& dataset, const TrainConfig& cfg);
TrainResult train_time(const std::vector<MolGraph>& dataset, const TrainConfig& cfg);
// base must be BASE diffusion or time weights; the result is the FPS variant
// of the same kind. Throws kVersionMismatch otherwise.
TrainResult finetune_fps(const nn::ModelWeights& base, const std::vector<MolGraph>& dataset, const TrainConfig& cfg);

// Mean loss of a model over fresh trajectories of the given molecules.
double evaluate_loss(nn::ModelWeights& w, const std::vector<MolGraph>& dataset, const std::vector<int>& indices,
                     const TrainConfig& cfg, std::uint64_t stream);

}  // namespace molswap::train
