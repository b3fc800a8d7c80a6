// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace molswap::chem {

// Declaration order is the one-hot order used by featurization.
enum class Element : std::uint8_t { B, N, C, O, F, P, S, Cl, Br, I, Ca, K, Na, Mg, H };

inline constexpr int kElementCount = 15;

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  int standard_valence;
  double atomic_mass;        // u, standard atomic weight
  double monoisotopic_mass;  // u, most abundant isotope
  int valence_electrons;
  bool organic_subset;       // written without brackets in SMILES
};

const ElementInfo& info(Element e);

inline int index_of(Element e) { return static_cast<int>(e); }
inline Element element_at(int index) { return static_cast<Element>(index); }

inline std::string_view symbol(Element e) { return info(e).symbol; }
inline int standard_valence(Element e) { return info(e).standard_valence; }

std::optional<Element> element_from_symbol(std::string_view symbol);

const std::array<Element, kElementCount>& all_elements();

}  // namespace molswap::chem
