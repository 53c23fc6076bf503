//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_SMILES_HPP
#define CHG_SMILES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chg {

enum class BondOrder : std::uint8_t { kSingle, kDouble, kTriple, kAromatic };

// Direction mark written on a single bond (/ is kUp, \ is kDown), stored in
// the bond's parse order (begin -> end).
enum class BondDirection : std::uint8_t { kNone, kUp, kDown };

// Tetrahedral mark as written: @ is kAnticlockwise, @@ is kClockwise.
enum class Chirality : std::uint8_t { kNone, kAnticlockwise, kClockwise };

struct Atom {
  std::string element;
  int atomic_number = 0;
  int formal_charge = 0;
  // H count given inside brackets. Atoms written without brackets have no
  // value here and receive implicit hydrogens during perception; bracket
  // atoms carry exactly this many hydrogens and never gain implicit ones.
  std::optional<int> explicit_h;
  bool aromatic = false;
  Chirality chirality = Chirality::kNone;
  int index = 0;
};

struct Bond {
  // Endpoints in parse order. Bond identity is the unordered pair; the order
  // only matters for interpreting the direction mark.
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::kSingle;
  BondDirection direction = BondDirection::kNone;
  int index = 0;

  int other(int atom) const { return atom == begin ? end : begin; }
  bool connects(int atom) const { return atom == begin || atom == end; }
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string source_smiles;
  // True when the atoms do not form a single connected component.
  bool multi_component = false;

  int num_atoms() const { return static_cast<int>(atoms.size()); }
  int num_bonds() const { return static_cast<int>(bonds.size()); }

  // Bond indices incident to each atom, in bond-index order.
  std::vector<std::vector<int>> adjacency() const;
  // Heavy-atom degree of each atom.
  std::vector<int> degrees() const;
};

struct ParseOptions {
  // When false, a '.' separator (or any disconnected result) is rejected
  // with UnsupportedFeature.
  bool allow_multi_component = true;
};

// Parses the supported SMILES subset: organic-subset atoms B C N O P S F Cl
// Br I, aromatic b c n o p s (plus [se] and [as] in brackets), bracket atoms
// with isotope (discarded), charge, H count and tetrahedral marks, bond
// symbols - = # : / \, branches, and ring closures 0-9 and %nn. Anything
// else raises ParseError with the precise kind and position.
Molecule parse_smiles(const std::string& smiles,
                      const ParseOptions& options = {});

// Canonical string for the molecule: invariant under atom reordering, fixed
// point under reparsing. Constitution only; chirality and direction marks are
// not encoded. Hydrogen counts are normalized, so "C" and "[CH4]" map to the
// same string. Multi-component molecules canonicalize per component, joined
// with '.' in sorted order.
std::string canonical_form(const Molecule& m);
std::string canonical_form(const std::string& smiles);

// Valid SMILES for the same molecule written from a random start atom with a
// random branch order. Chirality and direction marks are dropped. Reparsing
// yields an isomorphic molecule.
std::string random_rewrite(const Molecule& m, std::uint64_t seed);

// Molecule induced by the given atom indices: keeps every bond whose two
// endpoints are both selected, reindexes atoms in the order given. Atom
// properties (element, charge, aromatic flag, explicit H) are preserved.
Molecule induced_subgraph(const Molecule& m, const std::vector<int>& atom_ids);

// Numeric order of a bond for valence accounting: 1, 2, 3, aromatic 1.5.
double bond_order_value(BondOrder order);

// Sum of bond_order_value over the bonds incident to an atom.
double bond_order_sum(const Molecule& m, int atom_index);

// Hydrogens the valence model assigns to an atom written without brackets:
// max(0, floor(V - order_sum)) for the smallest allowed valence V (shifted by
// the formal charge) that fits the bonds. Elements outside the organic
// subset get 0.
int default_implicit_h(int atomic_number, int formal_charge, double order_sum);

// Explicit H count for bracket atoms, the valence-model count otherwise.
int total_hydrogens(const Molecule& m, int atom_index);

}  // namespace chg

#endif  // CHG_SMILES_HPP
