// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chem/molgraph.hpp"

namespace molswap::eval {

using chem::MolGraph;

inline constexpr int kDescriptorCount = 22;
// Order of DescriptorVector::values. internal_similarity is set-level and is
// filled by descriptor_samples, not by descriptors().
inline constexpr std::array<std::string_view, kDescriptorCount> kDescriptorIds = {
    "molecular_weight", "exact_molecular_weight", "heavy_atom_count", "valence_electron_count",
    "nhoh_count",       "no_count",               "fraction_csp3",    "balaban_j",
    "h_bond_donors",    "h_bond_acceptors",       "rotatable_bonds",  "tpsa",
    "aromatic_rings",   "aliphatic_rings",        "ring_count",       "saturated_rings",
    "chi0",             "chi1",                   "chi0n",            "chi2n",
    "chi3n",            "internal_similarity"};
inline constexpr int kInternalSimilarity = kDescriptorCount - 1;

int descriptor_index(std::string_view id);  // -1 when unknown
bool is_integer_descriptor(int index);

struct DescriptorVector {
  std::array<double, kDescriptorCount> values{};  // internal_similarity left 0

  double get(std::string_view id) const;
};

// Throws kNotConnected.
DescriptorVector descriptors(const MolGraph& g);

// Aromatic ring heuristic: a 5/6-membered basis cycle of C/N/O/S whose atoms
// each bring one pi electron from a double bond inside the cycle or inside
// a fused basis ring, or two from an all-single N/O/S, totalling 4n+2.
int aromatic_ring_count(const MolGraph& g);

// Per-descriptor samples for a molecule set. internal_similarity gets every
// pairwise Tanimoto similarity within the set.
std::array<std::vector<double>, kDescriptorCount> descriptor_samples(const std::vector<MolGraph>& mols,
                                                                     int workers = 1);

struct Binning {
  bool unit = false;  // integer-valued data, one bin per integer
  double lo = 0.0;
  double width = 1.0;
  int bins = 0;

  int bin_of(double x) const;
};

inline constexpr int kMinBins = 10;
inline constexpr int kMaxBins = 1000;
inline constexpr double kSmoothing = 1e-10;

// Shared binning for the union of two samples: unit bins when every value is
// an integer, Freedman-Diaconis with at least kMinBins otherwise.
Binning shared_binning(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> histogram(const std::vector<double>& x, const Binning& bins);  // counts

// KL(reference || generated) with additive smoothing. Throws kEmptySample.
double kl_divergence(const std::vector<double>& reference, const std::vector<double>& generated);
// 100 * mean(exp(-kl)).
double score_from_divergences(const std::vector<double>& kl);
double kl_score(const std::array<std::vector<double>, kDescriptorCount>& reference,
                const std::array<std::vector<double>, kDescriptorCount>& generated);

// sqrt of the base-2 Jensen-Shannon divergence of two distributions.
double js_distance_dist(const std::vector<double>& p, const std::vector<double>& q);
// The same over the shared histogram of two samples. Throws kEmptySample.
double js_distance(const std::vector<double>& p, const std::vector<double>& q);

struct Vun {
  double validity = 0.0;    // percent of lines parsing to saturated connected graphs
  double uniqueness = 0.0;  // percent distinct among valid
  double novelty = 0.0;     // percent of distinct absent from training
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t distinct = 0;
  std::size_t novel = 0;
};
Vun vun_metrics(const std::vector<std::string>& generated_smiles, const std::set<std::string>& training_signatures);

struct NamedSet {
  std::string name;
  std::vector<std::string> smiles;
};

inline constexpr int kReportVersion = 1;
// Full comparison report as JSON text. When second is given, log2 ratios of
// its JS distances against those of generated are added. Deterministic for
// fixed inputs.
std::string compare_report(const NamedSet& reference, const NamedSet& generated,
                           const std::set<std::string>& training_signatures,
                           const std::optional<NamedSet>& second = std::nullopt, bool plot_data = false,
                           int workers = 1);

}  // namespace molswap::eval
