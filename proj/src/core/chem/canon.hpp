// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "chem/molgraph.hpp"

namespace molswap::chem {

struct CanonicalSignature {
  std::string text;

  friend bool operator==(const CanonicalSignature&, const CanonicalSignature&) = default;
  friend auto operator<=>(const CanonicalSignature&, const CanonicalSignature&) = default;
};

struct CanonicalForm {
  std::vector<int> rank;   // rank[atom] = canonical position
  std::vector<int> order;  // order[position] = atom
  CanonicalSignature signature;
  std::size_t leaves_visited = 0;
};

// Exact canonical labeling: color refinement seeded with (element, degree,
// sorted incident multiplicities, hydrogen-neighbour count), then a
// backtracking search over remaining ties that keeps the lexicographically
// least bond code. Twins and discovered automorphisms prune the search.
CanonicalForm canonical_form(const MolGraph& g);

inline CanonicalSignature canonical_signature(const MolGraph& g) {
  return canonical_form(g).signature;
}

// Stable color-refinement classes: equal values for atoms that the
// refinement cannot tell apart. Values are labeling-invariant.
std::vector<std::uint64_t> refined_atom_classes(const MolGraph& g);

}  // namespace molswap::chem
