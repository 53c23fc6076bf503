//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/chgraph.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "chg/elements.hpp"
#include "chg/error.hpp"

namespace chg {

NodeType CHGraph::node_type(int node) const {
  if (node < n_atoms) return NodeType::kAtom;
  if (node < n_atoms + n_bonds) return NodeType::kBond;
  if (node < n_atoms + n_bonds + n_frags) return NodeType::kFragment;
  return NodeType::kGraph;
}

std::vector<std::pair<int, int>> CHGraph::all_edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(e_a.size() + e_b.size() + e_f.size() + e_af.size() +
              e_bf.size() + e_fg.size());
  for (const auto* set : {&e_a, &e_b, &e_f, &e_af, &e_bf, &e_fg}) {
    out.insert(out.end(), set->begin(), set->end());
  }
  return out;
}

std::vector<std::pair<int, int>> build_bond_graph(const Molecule& m) {
  std::vector<std::vector<int>> incident(m.atoms.size());
  for (const Bond& b : m.bonds) {
    incident[b.begin].push_back(b.index);
    incident[b.end].push_back(b.index);
  }
  std::vector<std::pair<int, int>> edges;
  for (auto& bonds : incident) {
    std::sort(bonds.begin(), bonds.end());
    for (std::size_t i = 0; i < bonds.size(); ++i) {
      for (std::size_t j = i + 1; j < bonds.size(); ++j) {
        edges.emplace_back(bonds[i], bonds[j]);
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::array<double, kFeatureDim> atom_features(const PerceivedMolecule& pm,
                                              int atom_index) {
  const Atom& a = pm.mol.atoms[atom_index];
  const AtomPerception& p = pm.atoms[atom_index];
  std::array<double, kFeatureDim> f{};
  f[0] = a.atomic_number;
  f[1] = p.degree;
  f[2] = a.formal_charge;
  f[3] = p.radical_electrons;
  f[4 + static_cast<int>(p.hybridization)] = 1.0;
  f[11] = elements::mass(a.atomic_number) / 100.0;
  f[12] = p.total_h;
  f[13] = a.chirality != Chirality::kNone ? 1.0 : 0.0;
  f[14] = static_cast<double>(a.chirality);
  return f;
}

namespace {

// Direction of the first marked single bond at `pivot`, flipped when needed
// so the mark reads as leaving the pivot toward the substituent.
BondDirection leaving_mark(const Molecule& m, int pivot, int skip_bond) {
  for (const Bond& b : m.bonds) {
    if (b.index == skip_bond || !b.connects(pivot)) continue;
    if (b.order != BondOrder::kSingle || b.direction == BondDirection::kNone) {
      continue;
    }
    if (b.begin == pivot) return b.direction;
    return b.direction == BondDirection::kUp ? BondDirection::kDown
                                             : BondDirection::kUp;
  }
  return BondDirection::kNone;
}

}  // namespace

std::array<double, kFeatureDim> bond_features(const PerceivedMolecule& pm,
                                              int bond_index) {
  const Bond& b = pm.mol.bonds[bond_index];
  const Atom& x = pm.mol.atoms[b.begin];
  const Atom& y = pm.mol.atoms[b.end];
  std::array<double, kFeatureDim> f{};
  f[0] = 1.0;
  switch (b.order) {
    case BondOrder::kSingle: f[1] = 1.0; break;
    case BondOrder::kDouble: f[2] = 1.0; break;
    case BondOrder::kTriple: f[3] = 1.0; break;
    case BondOrder::kAromatic: break;  // no type slot; conjugation carries it
  }
  f[4] = x.atomic_number != y.atomic_number ? 1.0 : 0.0;
  f[5] = static_cast<double>(b.direction);
  const int lo = std::min(b.begin, b.end);
  const int hi = std::max(b.begin, b.end);
  f[6] = pm.mol.atoms[hi].formal_charge - pm.mol.atoms[lo].formal_charge;

  auto pi_capable = [&](int atom) {
    const Hybridization h = pm.atoms[atom].hybridization;
    return h == Hybridization::kSP2 || h == Hybridization::kSP;
  };
  const bool conjugated =
      b.order == BondOrder::kAromatic ||
      (b.order == BondOrder::kSingle && pi_capable(b.begin) &&
       pi_capable(b.end));
  f[7] = conjugated ? 1.0 : 0.0;

  // Stereo one-hot {none, any, Z, E, cis, trans, other}. Z/E come from the
  // direction marks flanking a double bond; the rest stay reserved.
  int stereo = 0;
  if (b.order == BondOrder::kDouble) {
    const BondDirection at_begin = leaving_mark(pm.mol, b.begin, b.index);
    const BondDirection at_end = leaving_mark(pm.mol, b.end, b.index);
    if (at_begin != BondDirection::kNone && at_end != BondDirection::kNone) {
      stereo = at_begin == at_end ? 2 : 3;
    }
  }
  f[8 + stereo] = 1.0;
  return f;
}

std::array<double, kFeatureDim> fragment_features(
    const PerceivedMolecule& pm, const std::vector<int>& fragment_atoms) {
  std::set<int> inside(fragment_atoms.begin(), fragment_atoms.end());
  std::array<double, kFeatureDim> f{};
  const double n = static_cast<double>(fragment_atoms.size());
  f[0] = n;

  std::vector<double> order_sum(pm.mol.atoms.size(), 0.0);
  for (const Bond& b : pm.mol.bonds) {
    if (!inside.count(b.begin) || !inside.count(b.end)) continue;
    f[1] += 1.0;
    switch (b.order) {
      case BondOrder::kSingle: f[7] += 1.0; break;
      case BondOrder::kDouble: f[8] += 1.0; break;
      case BondOrder::kTriple: f[9] += 1.0; break;
      case BondOrder::kAromatic: break;
    }
    order_sum[b.begin] += bond_order_value(b.order);
    order_sum[b.end] += bond_order_value(b.order);
  }
  std::map<int, int> element_counts;  // summed in z order: label-invariant
  for (int a : fragment_atoms) {
    const Atom& atom = pm.mol.atoms[a];
    const int z = atom.atomic_number;
    if (z != 6) f[2] += 1.0;
    if (z == 6) f[3] += 1.0;
    if (z == 7) f[4] += 1.0;
    if (z == 8) f[5] += 1.0;
    if (z == 9 || z == 17 || z == 35 || z == 53) f[6] += 1.0;
    ++element_counts[z];
    f[12] += atom.formal_charge;
    f[13] += pm.atoms[a].total_h;
    f[14] += order_sum[a] + pm.atoms[a].total_h;
  }
  double mass_sum = 0.0;
  for (const auto& [z, count] : element_counts) {
    mass_sum += count * (elements::mass(z) / 100.0);
  }
  f[10] = mass_sum / n;
  f[11] = 2.0 * f[1] / n;
  return f;
}

std::array<double, kFeatureDim> graph_features(
    int n_atoms, int n_bonds, const std::vector<int>& frag_atom_counts,
    const std::vector<int>& frag_bond_counts) {
  std::array<double, kFeatureDim> f{};
  f[0] = n_atoms;
  f[1] = n_bonds;
  f[2] = static_cast<double>(frag_atom_counts.size());

  auto stats = [](std::vector<int> counts, double* avg, double* max,
                  double* min, double* var) {
    // Sorted so the variance accumulation is fragment-order invariant.
    std::sort(counts.begin(), counts.end());
    double sum = 0.0;
    for (int c : counts) sum += c;
    *avg = sum / static_cast<double>(counts.size());
    *max = counts.back();
    *min = counts.front();
    double sq = 0.0;
    for (int c : counts) sq += (c - *avg) * (c - *avg);
    *var = sq / static_cast<double>(counts.size());
  };
  stats(frag_atom_counts, &f[3], &f[4], &f[5], &f[13]);
  stats(frag_bond_counts, &f[6], &f[7], &f[8], &f[14]);
  for (int c : frag_atom_counts) {
    if (c == 1) f[12] += 1.0;
    else if (c <= 3) f[9] += 1.0;
    else if (c <= 8) f[10] += 1.0;
    else f[11] += 1.0;
  }
  return f;
}

CHGraph build_chg(const PerceivedMolecule& pm, const Decomposition& d,
                  GraphVariant variant) {
  const Molecule& m = pm.mol;
  const int n_atoms = m.num_atoms();
  if (static_cast<int>(d.fragment_of.size()) != n_atoms) {
    throw GraphError("decomposition does not cover the molecule's atoms");
  }
  std::vector<int> coverage(n_atoms, 0);
  for (std::size_t fi = 0; fi < d.fragments.size(); ++fi) {
    const auto& frag = d.fragments[fi];
    if (frag.atoms.empty()) throw GraphError("empty fragment in decomposition");
    for (int a : frag.atoms) {
      if (a < 0 || a >= n_atoms || d.fragment_of[a] != static_cast<int>(fi)) {
        throw GraphError("decomposition does not partition the molecule");
      }
      ++coverage[a];
    }
  }
  for (int c : coverage) {
    if (c != 1) throw GraphError("decomposition does not partition the molecule");
  }

  const bool with_bonds = variant == GraphVariant::kChg;
  const bool with_frags = variant != GraphVariant::kAtomGraph;

  CHGraph g;
  g.variant = variant;
  g.n_atoms = n_atoms;
  g.n_bonds = with_bonds ? m.num_bonds() : 0;
  g.n_frags = with_frags ? static_cast<int>(d.fragments.size()) : 0;
  g.has_graph_node = with_frags;

  for (const Bond& b : m.bonds) {
    g.e_a.emplace_back(std::min(b.begin, b.end), std::max(b.begin, b.end));
  }
  if (with_bonds) {
    for (const auto& [i, j] : build_bond_graph(m)) {
      g.e_b.emplace_back(g.bond_offset() + i, g.bond_offset() + j);
    }
  }
  if (with_frags) {
    const int fo = g.frag_offset();
    std::set<std::pair<int, int>> frag_pairs;
    for (const Bond& b : m.bonds) {
      const int f1 = d.fragment_of[b.begin];
      const int f2 = d.fragment_of[b.end];
      if (f1 != f2) {
        frag_pairs.insert(std::minmax(f1, f2));
      } else if (with_bonds) {
        g.e_bf.emplace_back(g.bond_offset() + b.index, fo + f1);
      }
    }
    for (const auto& [f1, f2] : frag_pairs) {
      g.e_f.emplace_back(fo + f1, fo + f2);
    }
    for (int a = 0; a < n_atoms; ++a) {
      g.e_af.emplace_back(a, fo + d.fragment_of[a]);
    }
    for (int fi = 0; fi < g.n_frags; ++fi) {
      g.e_fg.emplace_back(fo + fi, g.graph_index());
    }
  }

  g.features.reserve(g.num_nodes());
  for (int a = 0; a < n_atoms; ++a) g.features.push_back(atom_features(pm, a));
  if (with_bonds) {
    for (int b = 0; b < m.num_bonds(); ++b) {
      g.features.push_back(bond_features(pm, b));
    }
  }
  if (with_frags) {
    std::vector<int> atom_counts, bond_counts;
    for (const auto& frag : d.fragments) {
      g.frag_atom_members.push_back(frag.atoms);
      g.frag_bond_members.push_back(frag.bonds);
      g.features.push_back(fragment_features(pm, frag.atoms));
      atom_counts.push_back(static_cast<int>(frag.atoms.size()));
      bond_counts.push_back(static_cast<int>(frag.bonds.size()));
    }
    g.features.push_back(
        graph_features(n_atoms, m.num_bonds(), atom_counts, bond_counts));
  }
  return g;
}

namespace {

std::string fmt_feature(double v) {
  if (v == 0.0) v = 0.0;  // normalize negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string dump_chg(const CHGraph& g) {
  std::ostringstream out;
  out << "#chg-graph v1 atoms=" << g.n_atoms << " bonds=" << g.n_bonds
      << " frags=" << g.n_frags << " graph=" << (g.has_graph_node ? 1 : 0)
      << "\n";
  static const char kTypeTag[] = {'a', 'b', 'f', 'g'};
  for (int i = 0; i < g.num_nodes(); ++i) {
    out << "node " << i << " " << kTypeTag[static_cast<int>(g.node_type(i))];
    for (double v : g.features[i]) out << " " << fmt_feature(v);
    out << "\n";
  }
  const std::pair<const char*, const std::vector<std::pair<int, int>>*> sets[] =
      {{"Ea", &g.e_a},   {"Eb", &g.e_b},   {"Ef", &g.e_f},
       {"Eaf", &g.e_af}, {"Ebf", &g.e_bf}, {"Efg", &g.e_fg}};
  for (const auto& [name, edges] : sets) {
    for (const auto& [i, j] : *edges) {
      out << "edge " << name << " " << i << " " << j << "\n";
    }
  }
  return out.str();
}

}  // namespace chg
