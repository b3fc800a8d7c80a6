// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "chem/molgraph.hpp"

namespace molswap::chem {

// Kekulized SMILES subset:
//   atom   := B C N O F P S Cl Br I | [Na] [K] [Ca] [Mg] [H]
//   bond   := - = #        (single when omitted)
//   branch := ( chain )
//   ring   := digit | %dd
// Organic-subset atoms receive implicit hydrogens up to their standard
// valence; bracket atoms receive none and must be saturated by explicit bonds.
// Throws Error with kSyntax (with byte position), kUnsupportedFeature or
// kValence.
MolGraph parse_smiles(std::string_view text);

// Canonical subset SMILES. Hydrogens on organic atoms are written implicitly.
// Throws kNotConnected for disconnected graphs.
std::string write_smiles(const MolGraph& g);

}  // namespace molswap::chem
