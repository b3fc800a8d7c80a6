// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bitset>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chem/molgraph.hpp"

namespace molswap::feat {

using chem::MolGraph;

inline constexpr int kNodeDim = 31;
inline constexpr int kEdgeDim = 20;
inline constexpr int kGraphDim = 21;
inline constexpr int kFingerprintBits = 2048;
inline constexpr int kFingerprintRadius = 3;

// Count normalization caps.
inline constexpr double kNeighborCap = 4.0;
inline constexpr double kBridgeCap = 8.0;
inline constexpr double kCycleCountCap = 10.0;
inline constexpr double kPathCap = 8.0;

// Column offsets.
namespace node {
inline constexpr int kElement = 0;      // 15 one-hot
inline constexpr int kCycles = 15;      // 13 flags
inline constexpr int kHeavy = 28;
inline constexpr int kHydrogen = 29;
inline constexpr int kBridges = 30;
}  // namespace node
namespace edge {
inline constexpr int kOrder = 0;        // single, double, triple, aromatic
inline constexpr int kCycles = 4;       // 13 flags
inline constexpr int kBridge = 17;
inline constexpr int kPaths = 18;
inline constexpr int kDistance = 19;
}  // namespace edge
namespace graph {
inline constexpr int kCycles = 0;       // 13 counts
inline constexpr int kPlanar = 13;
inline constexpr int kComponents = 14;
inline constexpr int kBridgeFraction = 15;
inline constexpr int kSimpleBridgeFraction = 16;
inline constexpr int kBondTypes = 17;   // 4
}  // namespace graph

struct FeatureBundle {
  int n = 0;
  Eigen::MatrixXd X;                      // n x 31
  std::vector<std::pair<int, int>> bonds; // bond records, a < b
  Eigen::MatrixXd E;                      // one row per bond record, 20 wide
  Eigen::VectorXd g;                      // 21
  double t = 0.0;

  // Row of E for (a, b), or -1 when the pair is not bonded. Non-bonded pairs
  // have an all-zero feature vector.
  int edge_row(int a, int b) const { return edge_index_[static_cast<std::size_t>(a * n + b)]; }

  std::vector<int> edge_index_;  // dense n x n
};

// Throws kNotConnected, kTimeOutOfRange.
FeatureBundle featurize(const MolGraph& g, double t);

using Fingerprint = std::bitset<kFingerprintBits>;

// Morgan-style circular fingerprint over heavy atoms, radius 3. Graphs with
// no heavy atom use all atoms.
Fingerprint fingerprint(const MolGraph& g);

double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace molswap::feat
