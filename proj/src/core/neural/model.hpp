// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "diffusion/des.hpp"
#include "featurize/features.hpp"
#include "neural/tape.hpp"

namespace molswap::nn {

enum class ModelKind { kDiffusion, kTime };
enum class Variant { kBase, kFps };

std::string_view kind_name(ModelKind k);
std::string_view variant_name(Variant v);

inline constexpr int kEmbed = 124;
inline constexpr int kHeadHidden = 256;
inline constexpr int kTimeHidden = 64;
inline constexpr int kCondDim = feat::kGraphDim + 1;   // g and t
inline constexpr int kPairEdgeDim = feat::kEdgeDim + 1;  // E and the bonded flag
inline constexpr int kFpsOut = 256;

// Parameter groups for per-group learning rates.
inline constexpr int kGroupBase = 0;
inline constexpr int kGroupFingerprint = 1;

class ModelWeights {
 public:
  ModelWeights() = default;
  ModelWeights(ModelKind kind, Variant variant) : kind_(kind), variant_(variant) {}

  ModelKind kind() const { return kind_; }
  Variant variant() const { return variant_; }
  void set_variant(Variant v) { variant_ = v; }

  Param& add(std::string name, Mat init, int group);
  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;
  bool has(std::string_view name) const;

  std::deque<Param>& params() { return params_; }
  const std::deque<Param>& params() const { return params_; }
  std::size_t parameter_count() const;
  std::size_t parameter_count(int group) const;
  void zero_grad();

 private:
  ModelKind kind_ = ModelKind::kDiffusion;
  Variant variant_ = Variant::kBase;
  std::deque<Param> params_;  // deque keeps addresses stable for the tape
};

ModelWeights init_diffusion(Variant variant, std::uint64_t seed);
ModelWeights init_time(Variant variant, std::uint64_t seed);

// Copies every BASE tensor and adds the fingerprint branch. The weights that
// connect the branch to the heads start at zero, so the result initially
// computes exactly what the BASE model does.
ModelWeights upgrade_to_fps(const ModelWeights& base, std::uint64_t seed);

float round_to_storage(double x);
void round_to_storage(Mat& m);

struct DiffusionScores {
  int n = 0;
  std::vector<std::pair<int, int>> pairs;  // every i < j, row-major
  std::vector<std::pair<int, int>> bonds;  // bond records of the scored graph
  Tape::Var p_form = -1;                   // pairs.size() x 1
  Tape::Var p_break = -1;                  // bonds.size() x 1

  int pair_index(int i, int j) const;
};

// Throws kDimensionMismatch on malformed input or a fingerprint mismatch
// with the model variant.
DiffusionScores diffusion_forward(Tape& tape, const feat::FeatureBundle& f, ModelWeights& w,
                                  const feat::Fingerprint* fp = nullptr);

// q_inv for each move: p_break(i,j) p_break(k,l) p_form(i,k) p_form(j,l).
Tape::Var swap_scores(Tape& tape, const DiffusionScores& s, const feat::FeatureBundle& f,
                      const std::vector<diffusion::DesMove>& moves);

// Predicted normalized time, 1 x 1. The time input of the bundle is unused.
Tape::Var time_forward(Tape& tape, const feat::FeatureBundle& f, ModelWeights& w,
                       const feat::Fingerprint* fp = nullptr);

Tape::Var embed_nodes(Tape& tape, const feat::FeatureBundle& f, ModelWeights& w);

struct LossWeights {
  double des = 1.0;
  double form = 1.0;
  double brk = 1.0;
};

struct LossBreakdown {
  double l_des = 0.0;
  double l_form = 0.0;
  double l_break = 0.0;
  double total = 0.0;
  bool des_masked = false;  // no feasible move, l_des left out
};

// Losses for one (G_{t-1}, G_t) pair scored on G_t. feasible must be
// enumerate_feasible(G_t); reverse is the move that undoes the forward step.
Tape::Var diffusion_loss(Tape& tape, const DiffusionScores& s, const feat::FeatureBundle& f,
                         const chem::MolGraph& g0, const std::vector<diffusion::DesMove>& feasible,
                         const diffusion::DesMove& reverse, const LossWeights& lw, LossBreakdown* out);

Tape::Var time_loss(Tape& tape, Tape::Var t_pred, double t_real);

// Weights file: JSON with format/version/kind/variant and row-major float32
// tensors. Throws kCorruptFile or kVersionMismatch.
inline constexpr int kWeightsVersion = 1;
std::string weights_to_json(const ModelWeights& w);
ModelWeights weights_from_json(std::string_view text);
void save_weights(const ModelWeights& w, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);
// Also checks kind and variant.
ModelWeights load_weights(const std::filesystem::path& path, ModelKind kind, Variant variant);

}  // namespace molswap::nn
