//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_PERCEPTION_HPP
#define CHG_PERCEPTION_HPP

#include <vector>

#include "chg/smiles.hpp"

namespace chg {

enum class Hybridization : std::uint8_t {
  kS,
  kSP,
  kSP2,
  kSP3,
  kSP3D,
  kSP3D2,
  kOther,
};

struct AtomPerception {
  int implicit_h = 0;
  // implicit_h plus bracket hydrogens; bracket atoms never gain implicit H.
  int total_h = 0;
  int radical_electrons = 0;
  int degree = 0;
  Hybridization hybridization = Hybridization::kSP3;
  // Number of perceived rings containing this atom.
  int ring_count = 0;
};

// Rings chosen per edge: for every bond, the shortest cycle through it (size
// cap 12), reduced to an independent basis of cyclomatic size. When every
// cycle through some edge exceeds the cap, `oversized` is set and the basis
// stays short of `cyclomatic`.
struct RingInfo {
  std::vector<std::vector<int>> rings;  // atom index cycles, closing implied
  std::vector<int> atom_ring_count;
  std::vector<int> bond_ring_count;
  int cyclomatic = 0;
  bool oversized = false;
};

struct ScaffoldDescriptors {
  int ring_count = 0;
  int aromatic_ring_count = 0;  // rings whose bonds are all aromatic
  bool fused = false;           // some ring pair shares exactly one bond
  bool heterocyclic = false;    // some ring contains a non-carbon atom
  // Some ring pair shares three or more atoms, or exactly two atoms that
  // are not bonded to each other.
  bool bridged = false;
};

struct PerceivedMolecule {
  Molecule mol;
  std::vector<AtomPerception> atoms;
  RingInfo rings;
};

// Assigns implicit hydrogens, hybridization, radicals, and ring membership.
// Throws ValenceError when an atom's bonds (aromatic counted as order one)
// plus bracket hydrogens exceed the element's maximum allowed valence after
// the charge shift. Elements without a valence entry are never checked.
PerceivedMolecule perceive(const Molecule& m);

RingInfo find_rings(const Molecule& m);

ScaffoldDescriptors scaffold_descriptors(const Molecule& m);

// Iteratively deletes atoms of degree <= 1 until none remain. Acyclic
// molecules reduce to an empty molecule; ring systems keep their linkers.
Molecule murcko_scaffold(const Molecule& m);

}  // namespace chg

#endif  // CHG_PERCEPTION_HPP
