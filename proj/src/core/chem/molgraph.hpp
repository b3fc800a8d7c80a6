// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chem/element.hpp"

namespace molswap::chem {

struct Bond {
  int a;      // a < b
  int b;
  int order;  // multiplicity 1..3

  friend bool operator==(const Bond&, const Bond&) = default;
};

// Labeled multigraph of atoms; one bond record per bonded pair, parallel
// edges expressed as multiplicity. Hydrogens are ordinary atoms.
class MolGraph {
 public:
  static constexpr int kMaxMultiplicity = 3;

  MolGraph() = default;
  explicit MolGraph(std::vector<Element> atoms);
  MolGraph(std::vector<Element> atoms, std::span<const Bond> bonds);

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  bool empty() const { return atoms_.empty(); }
  Element element(int atom) const { return atoms_[static_cast<std::size_t>(atom)]; }
  const std::vector<Element>& atoms() const { return atoms_; }

  int multiplicity(int a, int b) const {
    return mult_[static_cast<std::size_t>(a) * atoms_.size() + static_cast<std::size_t>(b)];
  }
  bool bonded(int a, int b) const { return multiplicity(a, b) > 0; }

  // Sets the bond order between a and b; 0 removes the bond.
  void set_multiplicity(int a, int b, int order);
  void add_bond(int a, int b, int order = 1);
  int add_atom(Element e);

  // Sorted by (a, b).
  std::vector<Bond> bonds() const;
  int bond_count() const { return bond_records_; }
  // Total multiplicity, i.e. half the degree sum. Invariant under swaps.
  int bond_units() const { return bond_units_; }

  const std::vector<int>& neighbors(int atom) const { return adj_[static_cast<std::size_t>(atom)]; }
  int degree(int atom) const { return degree_[static_cast<std::size_t>(atom)]; }
  int hydrogen_count(int atom) const;
  int heavy_neighbor_count(int atom) const;
  bool is_hydrogen(int atom) const { return element(atom) == Element::H; }

  bool is_saturated(int atom) const { return degree(atom) == standard_valence(element(atom)); }
  bool is_saturated() const;

  // Atom i of this graph becomes atom perm[i] of the result.
  MolGraph permuted(std::span<const int> perm) const;

  const std::optional<std::string>& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  // Same labeled graph: identical atom list and multiplicities. Provenance is
  // ignored.
  bool operator==(const MolGraph& other) const {
    return atoms_ == other.atoms_ && mult_ == other.mult_;
  }

 private:
  void check_index(int atom) const;

  std::vector<Element> atoms_;
  std::vector<std::uint8_t> mult_;  // dense n x n
  std::vector<std::vector<int>> adj_;
  std::vector<int> degree_;
  int bond_records_ = 0;
  int bond_units_ = 0;
  std::optional<std::string> provenance_;
};

// Element counts in featurization order.
struct MolFormula {
  std::array<int, kElementCount> counts{};

  int count(Element e) const { return counts[static_cast<std::size_t>(index_of(e))]; }
  int total() const;
  // Hill notation: C, H, then alphabetical; all alphabetical without carbon.
  std::string to_string() const;
  static MolFormula parse(std::string_view text);

  friend bool operator==(const MolFormula&, const MolFormula&) = default;
  friend auto operator<=>(const MolFormula&, const MolFormula&) = default;
};

MolFormula formula_of(const MolGraph& g);

// Number of connected components; 0 for the empty graph.
int component_count(const MolGraph& g);

}  // namespace molswap::chem
