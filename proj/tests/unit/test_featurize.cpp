// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "featurize/features.hpp"
#include "topo/topo.hpp"
#include "test_util.hpp"

namespace molswap {
namespace {

using chem::Element;
using chem::parse_smiles;
using namespace feat;

TEST(Features, Widths) {
  const auto f = featurize(parse_smiles("CC1=CC=CC=C1O"), 0.3);
  EXPECT_EQ(f.X.cols(), kNodeDim);
  EXPECT_EQ(f.E.cols(), kEdgeDim);
  EXPECT_EQ(f.g.size(), kGraphDim);
  EXPECT_EQ(kNodeDim, 31);
  EXPECT_EQ(kEdgeDim, 20);
  EXPECT_EQ(kGraphDim, 21);
  EXPECT_EQ(f.X.rows(), f.n);
  EXPECT_EQ(f.E.rows(), static_cast<Eigen::Index>(f.bonds.size()));
  // Column blocks tile each width exactly once.
  EXPECT_EQ(node::kCycles - node::kElement, chem::kElementCount);
  EXPECT_EQ(node::kHeavy - node::kCycles, topo::kCycleBuckets);
  EXPECT_EQ(node::kBridges + 1, kNodeDim);
  EXPECT_EQ(edge::kCycles - edge::kOrder, 4);
  EXPECT_EQ(edge::kBridge - edge::kCycles, topo::kCycleBuckets);
  EXPECT_EQ(edge::kDistance + 1, kEdgeDim);
  EXPECT_EQ(graph::kPlanar - graph::kCycles, topo::kCycleBuckets);
  EXPECT_EQ(graph::kBondTypes + 4, kGraphDim);
}

TEST(Features, EthanolNeighbourCounts) {
  const auto g = parse_smiles("CCO");
  const auto f = featurize(g, 0.0);
  std::vector<double> carbon_heavy, carbon_h;
  for (int a = 0; a < g.atom_count(); ++a) {
    EXPECT_EQ(f.X(a, node::kElement + chem::index_of(g.element(a))), 1.0);
    if (g.element(a) == Element::C) {
      carbon_heavy.push_back(f.X(a, node::kHeavy) * kNeighborCap);
      carbon_h.push_back(f.X(a, node::kHydrogen) * kNeighborCap);
    }
    if (g.element(a) == Element::O) {
      EXPECT_DOUBLE_EQ(f.X(a, node::kHeavy) * kNeighborCap, 1.0);
      EXPECT_DOUBLE_EQ(f.X(a, node::kHydrogen) * kNeighborCap, 1.0);
    }
  }
  std::sort(carbon_heavy.begin(), carbon_heavy.end());
  std::sort(carbon_h.begin(), carbon_h.end());
  // CH3 has one heavy neighbour, CH2 two.
  EXPECT_EQ(carbon_heavy, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(carbon_h, (std::vector<double>{2.0, 3.0}));
}

TEST(Features, BenzeneGraphVector) {
  const auto f = featurize(parse_smiles("C1=CC=CC=C1"), 0.0);
  for (int k = 0; k < topo::kCycleBuckets; ++k) {
    EXPECT_DOUBLE_EQ(f.g(graph::kCycles + k), k == topo::cycle_bucket(6) ? 1.0 / kCycleCountCap : 0.0);
  }
  EXPECT_DOUBLE_EQ(f.g(graph::kBondTypes + 0), 9.0 / 12.0);
  EXPECT_DOUBLE_EQ(f.g(graph::kBondTypes + 1), 3.0 / 12.0);
  EXPECT_DOUBLE_EQ(f.g(graph::kBondTypes + 2), 0.0);
  EXPECT_DOUBLE_EQ(f.g(graph::kBondTypes + 3), 0.0);
  EXPECT_EQ(f.g(graph::kPlanar), 1.0);
  EXPECT_EQ(f.g(graph::kComponents), 1.0);
  EXPECT_DOUBLE_EQ(f.g(graph::kSimpleBridgeFraction), 0.5);
}

TEST(Features, TimePassThroughAndRange) {
  const auto g = parse_smiles("CCN");
  EXPECT_EQ(featurize(g, 0.5).t, 0.5);
  for (double bad : {-0.1, 1.5, std::nan("")}) {
    try {
      featurize(g, bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kTimeOutOfRange);
    }
  }
}

TEST(Features, DisconnectedRejected) {
  chem::MolGraph g(std::vector<Element>(4, Element::H));
  g.add_bond(0, 1);
  g.add_bond(2, 3);
  try {
    featurize(g, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotConnected);
  }
}

TEST(Features, FiniteAndBinaryFlags) {
  for (const auto& smi : testing::read_smiles("corpus.smi")) {
    const auto f = featurize(parse_smiles(smi), 0.7);
    EXPECT_TRUE(f.X.allFinite());
    EXPECT_TRUE(f.E.allFinite());
    EXPECT_TRUE(f.g.allFinite());
    for (Eigen::Index r = 0; r < f.X.rows(); ++r) {
      for (int c = 0; c < node::kHeavy; ++c) EXPECT_TRUE(f.X(r, c) == 0.0 || f.X(r, c) == 1.0);
    }
    for (Eigen::Index r = 0; r < f.E.rows(); ++r) {
      for (int c = 0; c <= edge::kBridge; ++c) EXPECT_TRUE(f.E(r, c) == 0.0 || f.E(r, c) == 1.0);
      EXPECT_EQ(f.E(r, edge::kOrder + 3), 0.0);  // aromatic slot unused
    }
  }
}

TEST(Features, PermutationEquivariance) {
  Rng rng(31);
  for (const char* smi : {"CC1=CC=CC=C1O", "C1CC2CCC1C2", "CC(=O)NC"}) {
    const auto g = parse_smiles(smi);
    const auto perm = testing::random_permutation(g.atom_count(), rng);
    const auto f = featurize(g, 0.25);
    const auto h = featurize(g.permuted(perm), 0.25);
    const double tol = 1e-9;
    EXPECT_TRUE((f.g - h.g).cwiseAbs().maxCoeff() < tol);
    for (int a = 0; a < g.atom_count(); ++a) {
      EXPECT_TRUE((f.X.row(a) - h.X.row(perm[static_cast<std::size_t>(a)])).cwiseAbs().maxCoeff() < tol) << smi;
    }
    for (std::size_t e = 0; e < f.bonds.size(); ++e) {
      const int pa = perm[static_cast<std::size_t>(f.bonds[e].first)];
      const int pb = perm[static_cast<std::size_t>(f.bonds[e].second)];
      const int row = h.edge_row(pa, pb);
      ASSERT_GE(row, 0);
      // Layout distances come from an iterative embedding; compare the
      // exact columns tightly and the distance loosely.
      for (int c = 0; c < edge::kDistance; ++c) EXPECT_NEAR(f.E(static_cast<Eigen::Index>(e), c), h.E(row, c), tol) << smi;
    }
  }
}

TEST(Fingerprint, InvariantUnderPermutation) {
  Rng rng(2);
  for (const auto& smi : testing::read_smiles("corpus.smi")) {
    const auto g = parse_smiles(smi);
    EXPECT_EQ(fingerprint(g), fingerprint(g.permuted(testing::random_permutation(g.atom_count(), rng)))) << smi;
  }
}

TEST(Fingerprint, TanimotoExamples) {
  const auto a = fingerprint(parse_smiles("CCO"));
  const auto b = fingerprint(parse_smiles("COC"));
  EXPECT_EQ(tanimoto(a, a), 1.0);
  EXPECT_LT(tanimoto(a, b), 1.0);
  Fingerprint x, y;
  x.set(0);
  x.set(1);
  y.set(0);
  y.set(2);
  EXPECT_DOUBLE_EQ(tanimoto(x, y), 1.0 / 3.0);
  Fingerprint p, q;
  p.set(5);
  q.set(6);
  EXPECT_EQ(tanimoto(p, q), 0.0);
  EXPECT_EQ(tanimoto(p, p), 1.0);
  EXPECT_EQ(kFingerprintRadius, 3);
}

}  // namespace
}  // namespace molswap
