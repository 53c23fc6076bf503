//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_CHGRAPH_HPP
#define CHG_CHGRAPH_HPP

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "chg/perception.hpp"
#include "chg/smiles.hpp"
#include "chg/vocab.hpp"

namespace chg {

inline constexpr int kFeatureDim = 15;

enum class NodeType { kAtom, kBond, kFragment, kGraph };

// Which levels of the hierarchy participate. kAtomGraph keeps atoms and
// atom-atom edges only; kHierGraph drops bond nodes (and E_b, E_bf) but keeps
// fragments and the graph node; kChg is the full construction.
enum class GraphVariant { kAtomGraph, kHierGraph, kChg };

// Heterogeneous graph over one molecule. Node indexing is contiguous by
// type: atoms first, then bond nodes, then fragment nodes, then the single
// graph node. All edges are featureless topological connectors, stored as
// undirected index pairs in that global numbering.
struct CHGraph {
  GraphVariant variant = GraphVariant::kChg;
  int n_atoms = 0;
  int n_bonds = 0;  // bond nodes; 0 when the variant drops them
  int n_frags = 0;
  bool has_graph_node = false;

  std::vector<std::pair<int, int>> e_a;   // atom-atom, one per molecule bond
  std::vector<std::pair<int, int>> e_b;   // bond-bond, shared-atom rule
  std::vector<std::pair<int, int>> e_f;   // fragment-fragment adjacency
  std::vector<std::pair<int, int>> e_af;  // atom -> its fragment
  std::vector<std::pair<int, int>> e_bf;  // intra-fragment bond -> fragment
  std::vector<std::pair<int, int>> e_fg;  // fragment -> graph node

  std::vector<std::array<double, kFeatureDim>> features;  // one row per node

  std::vector<std::vector<int>> frag_atom_members;  // molecule atom indices
  std::vector<std::vector<int>> frag_bond_members;  // molecule bond indices

  int num_nodes() const {
    return n_atoms + n_bonds + n_frags + (has_graph_node ? 1 : 0);
  }
  int atom_offset() const { return 0; }
  int bond_offset() const { return n_atoms; }
  int frag_offset() const { return n_atoms + n_bonds; }
  int graph_index() const { return n_atoms + n_bonds + n_frags; }
  NodeType node_type(int node) const;

  // Union of the six edge sets, in set order. Every pair appears once; the
  // encoder aggregates both directions itself.
  std::vector<std::pair<int, int>> all_edges() const;
};

// Bond-index pairs; two bond nodes are adjacent when their bonds share an
// atom. Edge count always equals the sum of C(degree, 2) over atoms.
std::vector<std::pair<int, int>> build_bond_graph(const Molecule& m);

// Assembles the graph for one molecule under an atom partition. Throws
// GraphError when d does not partition pm's atoms. Cross-fragment bonds get
// no bond-fragment edge; they induce the fragment-fragment edge instead.
CHGraph build_chg(const PerceivedMolecule& pm, const Decomposition& d,
                  GraphVariant variant = GraphVariant::kChg);

// Initial node features. Layouts are pinned; every row is 15 wide.
// Atom: [0]=atomic number, [1]=degree, [2]=formal charge, [3]=radical
// electrons, [4..10]=hybridization one-hot {S,SP,SP2,SP3,SP3D,SP3D2,Other},
// [11]=atomic mass / 100, [12]=total hydrogens, [13]=chirality indicator,
// [14]=chirality type (0 none, 1 anticlockwise, 2 clockwise).
std::array<double, kFeatureDim> atom_features(const PerceivedMolecule& pm,
                                              int atom_index);

// Bond: [0]=1 (existence), [1..3]=one-hot single/double/triple (aromatic is
// all zero), [4]=endpoints differ in element, [5]=direction code (0 none,
// 1 up, 2 down), [6]=formal charge difference (higher index minus lower),
// [7]=conjugation (aromatic, or a single bond joining two SP2/SP atoms),
// [8..14]=stereo one-hot {none, any, Z, E, cis, trans, other}. Only Z and E
// are derivable from direction marks; the remaining slots stay reserved.
std::array<double, kFeatureDim> bond_features(const PerceivedMolecule& pm,
                                              int bond_index);

// Fragment, over the induced subgraph only: [0]=atoms, [1]=bonds,
// [2]=heteroatoms, [3..5]=C/N/O counts, [6]=halogens, [7..9]=single/double/
// triple bond counts, [10]=average atomic mass / 100, [11]=average
// within-fragment degree, [12]=charge sum, [13]=hydrogen sum, [14]=valence
// sum (intra-fragment bond orders plus hydrogens, per atom).
std::array<double, kFeatureDim> fragment_features(
    const PerceivedMolecule& pm, const std::vector<int>& fragment_atoms);

// Graph node, from fragment size statistics only: [0..2]=atom/bond/fragment
// counts, [3..5]=avg/max/min fragment atom count, [6..8]=avg/max/min fragment
// intra-bond count, [9..12]=small (2-3 atoms) / medium (4-8) / large (>=9) /
// single-atom fragment counts, [13..14]=population variance of fragment atom
// and intra-bond counts.
std::array<double, kFeatureDim> graph_features(
    int n_atoms, int n_bonds, const std::vector<int>& frag_atom_counts,
    const std::vector<int>& frag_bond_counts);

// Line-oriented text dump: "#chg-graph v1 ..." header, one "node <idx>
// <type> <15 features>" line per node, one "edge <set> <i> <j>" line per
// edge. Deterministic; used by golden-file tests and the inspector.
std::string dump_chg(const CHGraph& g);

}  // namespace chg

#endif  // CHG_CHGRAPH_HPP
