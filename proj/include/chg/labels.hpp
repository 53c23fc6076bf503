//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_LABELS_HPP
#define CHG_LABELS_HPP

#include <optional>
#include <string>
#include <vector>

#include "chg/perception.hpp"
#include "chg/smiles.hpp"

namespace chg {

// One atom of a substructure pattern. Any listed element matches; aromatic
// unset matches both flags; hydrogens are bounded by [min_h, max_h] with
// max_h = -1 meaning unbounded; charge must match exactly.
struct PatternAtom {
  std::vector<int> elements;
  std::optional<bool> aromatic;
  int min_h = 0;
  int max_h = -1;
  int charge = 0;
};

struct PatternBond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;
};

struct Pattern {
  std::string name;
  std::vector<PatternAtom> atoms;
  std::vector<PatternBond> bonds;
};

struct FunctionalGroupSet {
  std::vector<Pattern> patterns;
  int size() const { return static_cast<int>(patterns.size()); }
};

// The pinned 16-group library; see the pattern table in labels.cpp.
const FunctionalGroupSet& default_functional_groups();

// Custom library: one "name<TAB>pattern" line per group, pattern in the
// SMILES subset. Bracket hydrogen counts become constraints: [OH] means at
// least one hydrogen, [NH0] means exactly zero; unbracketed atoms leave the
// count unconstrained. Patterns must be connected and have at most 8 atoms.
FunctionalGroupSet load_functional_groups(const std::string& path);
FunctionalGroupSet functional_groups_from_string(const std::string& text);

// bit c = 1 iff pattern c maps injectively into the fragment's induced
// subgraph (elements, aromatic flags, hydrogen bounds, charges, and exact
// bond orders all respected). Backtracking with degree pruning.
std::vector<int> match_groups(const PerceivedMolecule& pm,
                              const std::vector<int>& fragment_atoms,
                              const FunctionalGroupSet& fgs);

// Hashed linear-path fingerprint: every simple path of 1..7 bonds is encoded
// as (element, aromatic) per atom and an order code per bond, read in
// whichever direction is lexicographically smaller, then hashed into one of
// D bits. D must be a power of two in [64, 4096]. Branches contribute their
// own paths but no tree-shaped patterns.
std::vector<int> topo_fingerprint(const PerceivedMolecule& pm, int bits);

// Lowercase hex, one nibble per 4 bits, bit (8j + k) is bit k of byte j.
std::string fingerprint_hex(const std::vector<int>& bits);
std::vector<int> fingerprint_from_hex(const std::string& hex);

// Scaffold prediction targets: ring counts become classes clamped to [0, 8];
// the three descriptor flags pass through.
struct ScaffoldTargets {
  int ring_class = 0;
  int aromatic_ring_class = 0;
  bool fused = false;
  bool heterocyclic = false;
  bool bridged = false;
};

ScaffoldTargets scaffold_targets(const PerceivedMolecule& pm);

}  // namespace chg

#endif  // CHG_LABELS_HPP
