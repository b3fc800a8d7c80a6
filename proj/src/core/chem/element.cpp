// SPDX-License-Identifier: Apache-2.0
#include "chem/element.hpp"

namespace molswap::chem {

namespace {

constexpr std::array<ElementInfo, kElementCount> kTable = {{
    {"B", 5, 3, 10.811, 11.0093054, 3, true},
    {"N", 7, 3, 14.007, 14.0030740, 5, true},
    {"C", 6, 4, 12.011, 12.0000000, 4, true},
    {"O", 8, 2, 15.999, 15.9949146, 6, true},
    {"F", 9, 1, 18.998, 18.9984032, 7, true},
    {"P", 15, 3, 30.974, 30.9737620, 5, true},
    {"S", 16, 2, 32.067, 31.9720707, 6, true},
    {"Cl", 17, 1, 35.453, 34.9688527, 7, true},
    {"Br", 35, 1, 79.904, 78.9183376, 7, true},
    {"I", 53, 1, 126.904, 126.9044730, 7, true},
    {"Ca", 20, 2, 40.078, 39.9625912, 2, false},
    {"K", 19, 1, 39.098, 38.9637069, 1, false},
    {"Na", 11, 1, 22.990, 22.9897693, 1, false},
    {"Mg", 12, 2, 24.305, 23.9850417, 2, false},
    {"H", 1, 1, 1.008, 1.0078250, 1, false},
}};

constexpr std::array<Element, kElementCount> kAll = {
    Element::B,  Element::N,  Element::C, Element::O,  Element::F,
    Element::P,  Element::S,  Element::Cl, Element::Br, Element::I,
    Element::Ca, Element::K,  Element::Na, Element::Mg, Element::H};

}  // namespace

const ElementInfo& info(Element e) { return kTable[static_cast<std::size_t>(e)]; }

std::optional<Element> element_from_symbol(std::string_view s) {
  for (std::size_t i = 0; i < kTable.size(); ++i) {
    if (kTable[i].symbol == s) return static_cast<Element>(i);
  }
  return std::nullopt;
}

const std::array<Element, kElementCount>& all_elements() { return kAll; }

}  // namespace molswap::chem
