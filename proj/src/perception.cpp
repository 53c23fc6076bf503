//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/perception.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "chg/elements.hpp"
#include "chg/error.hpp"

namespace chg {

namespace {

constexpr int kRingSizeCap = 12;

// Bond order for the valence cap: aromatic bonds count as one so that e.g.
// pyrrole nitrogens with a bracket hydrogen stay legal, while the hydrogen
// model above uses 1.5.
int unit_order(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return 1;
    case BondOrder::kDouble: return 2;
    case BondOrder::kTriple: return 3;
    case BondOrder::kAromatic: return 1;
  }
  return 1;
}

void check_valence(const Molecule& m) {
  for (const Atom& a : m.atoms) {
    const auto& valences = elements::default_valences(a.atomic_number);
    if (valences.empty()) continue;
    int units = 0;
    for (const Bond& b : m.bonds) {
      if (b.connects(a.index)) units += unit_order(b.order);
    }
    if (a.explicit_h.has_value()) units += *a.explicit_h;
    const int cap =
        valences.back() +
        elements::charge_valence_shift(a.atomic_number, a.formal_charge);
    if (units > cap) {
      throw ValenceError(
          a.index, "valence " + std::to_string(units) + " on atom " +
                       std::to_string(a.index) + " (" + a.element +
                       ") exceeds maximum " + std::to_string(cap));
    }
  }
}

int radical_count(const Atom& a, double order_sum) {
  if (!a.explicit_h.has_value()) return 0;
  const auto& valences = elements::default_valences(a.atomic_number);
  if (valences.empty()) return 0;
  const int shift =
      elements::charge_valence_shift(a.atomic_number, a.formal_charge);
  const double used = order_sum + *a.explicit_h;
  for (int v : valences) {
    const double spare = static_cast<double>(v + shift) - used;
    if (spare >= -1e-9)
      return std::max(0, static_cast<int>(std::floor(spare + 1e-9)));
  }
  return 0;
}

Hybridization hybridize(int sigma, int n_triple, int n_double, int n_arom) {
  if (sigma > 6) return Hybridization::kOther;
  if (sigma == 6) return Hybridization::kSP3D2;
  if (sigma == 5) return Hybridization::kSP3D;
  if (n_triple >= 1 || n_double >= 2) return Hybridization::kSP;
  if (n_double >= 1 || n_arom >= 1) return Hybridization::kSP2;
  if (sigma == 0) return Hybridization::kS;
  return Hybridization::kSP3;
}

// Normalized key for cycle deduplication: the lexicographically smallest
// rotation over both traversal directions.
std::vector<int> cycle_key(const std::vector<int>& cycle) {
  const std::size_t n = cycle.size();
  std::vector<int> best;
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<int> seq = cycle;
    if (dir == 1) std::reverse(seq.begin(), seq.end());
    for (std::size_t start = 0; start < n; ++start) {
      std::vector<int> rot(n);
      for (std::size_t i = 0; i < n; ++i) rot[i] = seq[(start + i) % n];
      if (best.empty() || rot < best) best = rot;
    }
  }
  return best;
}

int component_count(const Molecule& m) {
  std::vector<int> comp(m.atoms.size(), -1);
  const auto adj = m.adjacency();
  int n = 0;
  for (int root = 0; root < m.num_atoms(); ++root) {
    if (comp[root] >= 0) continue;
    std::vector<int> stack{root};
    comp[root] = n;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int bidx : adj[u]) {
        int v = m.bonds[bidx].other(u);
        if (comp[v] < 0) {
          comp[v] = n;
          stack.push_back(v);
        }
      }
    }
    ++n;
  }
  return n;
}

}  // namespace

RingInfo find_rings(const Molecule& m) {
  RingInfo info;
  info.atom_ring_count.assign(m.atoms.size(), 0);
  info.bond_ring_count.assign(m.bonds.size(), 0);
  info.cyclomatic = m.num_bonds() - m.num_atoms() + component_count(m);
  if (info.cyclomatic <= 0) return info;

  const auto adj = m.adjacency();

  // Shortest cycle through each edge: BFS between its endpoints with the
  // edge itself removed. Neighbor order follows bond indices, so the parent
  // tree, and with it the reported cycle, is deterministic.
  std::vector<std::vector<int>> candidates;
  std::set<std::vector<int>> seen;
  for (const Bond& b : m.bonds) {
    std::vector<int> parent(m.atoms.size(), -2);
    std::deque<int> queue{b.begin};
    parent[b.begin] = -1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      if (u == b.end) break;
      for (int bidx : adj[u]) {
        if (bidx == b.index) continue;
        int v = m.bonds[bidx].other(u);
        if (parent[v] == -2) {
          parent[v] = u;
          queue.push_back(v);
        }
      }
    }
    if (parent[b.end] == -2) continue;  // bridge bond, no cycle
    std::vector<int> cycle;
    for (int u = b.end; u != -1; u = parent[u]) cycle.push_back(u);
    if (static_cast<int>(cycle.size()) > kRingSizeCap) {
      info.oversized = true;
      continue;
    }
    std::vector<int> key = cycle_key(cycle);
    if (seen.insert(key).second) candidates.push_back(std::move(key));
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              return a < b;
            });

  // Greedy GF(2) independence over bond incidence vectors, smallest cycles
  // first, until the basis reaches the cyclomatic number. Each basis row is
  // kept under a unique pivot bit so reduction is a straight scan.
  std::map<std::pair<int, int>, int> bond_of;
  for (const Bond& b : m.bonds)
    bond_of[std::minmax(b.begin, b.end)] = b.index;
  const int words = (m.num_bonds() + 63) / 64;
  std::map<int, std::vector<std::uint64_t>> basis_by_pivot;
  auto highest_bit = [words](const std::vector<std::uint64_t>& v) {
    for (int w = words - 1; w >= 0; --w) {
      if (v[w] != 0) return w * 64 + 63 - std::countl_zero(v[w]);
    }
    return -1;
  };
  for (const auto& cycle : candidates) {
    if (static_cast<int>(info.rings.size()) >= info.cyclomatic) break;
    std::vector<std::uint64_t> vec(words, 0);
    std::vector<int> bond_ids;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      const int u = cycle[i];
      const int v = cycle[(i + 1) % cycle.size()];
      const int bidx = bond_of.at(std::minmax(u, v));
      vec[bidx / 64] ^= 1ULL << (bidx % 64);
      bond_ids.push_back(bidx);
    }
    std::vector<std::uint64_t> reduced = vec;
    int pivot = highest_bit(reduced);
    while (pivot >= 0) {
      auto it = basis_by_pivot.find(pivot);
      if (it == basis_by_pivot.end()) break;
      for (int w = 0; w < words; ++w) reduced[w] ^= it->second[w];
      pivot = highest_bit(reduced);
    }
    if (pivot < 0) continue;  // dependent on already accepted rings
    basis_by_pivot.emplace(pivot, std::move(reduced));
    info.rings.push_back(cycle);
    for (int u : cycle) ++info.atom_ring_count[u];
    for (int bidx : bond_ids) ++info.bond_ring_count[bidx];
  }
  if (static_cast<int>(info.rings.size()) < info.cyclomatic)
    info.oversized = true;
  return info;
}

PerceivedMolecule perceive(const Molecule& m) {
  check_valence(m);
  PerceivedMolecule pm;
  pm.mol = m;
  pm.rings = find_rings(m);
  pm.atoms.resize(m.atoms.size());
  const auto degrees = m.degrees();
  for (int i = 0; i < m.num_atoms(); ++i) {
    const Atom& a = m.atoms[i];
    AtomPerception& p = pm.atoms[i];
    const double order_sum = bond_order_sum(m, i);
    p.degree = degrees[i];
    if (a.explicit_h.has_value()) {
      p.implicit_h = 0;
      p.total_h = *a.explicit_h;
    } else {
      p.implicit_h =
          default_implicit_h(a.atomic_number, a.formal_charge, order_sum);
      p.total_h = p.implicit_h;
    }
    p.radical_electrons = radical_count(a, order_sum);
    int n_triple = 0;
    int n_double = 0;
    int n_arom = 0;
    for (const Bond& b : m.bonds) {
      if (!b.connects(i)) continue;
      if (b.order == BondOrder::kTriple) ++n_triple;
      if (b.order == BondOrder::kDouble) ++n_double;
      if (b.order == BondOrder::kAromatic) ++n_arom;
    }
    p.hybridization =
        hybridize(p.degree + p.total_h, n_triple, n_double, n_arom);
    p.ring_count = pm.rings.atom_ring_count[i];
  }
  return pm;
}

ScaffoldDescriptors scaffold_descriptors(const Molecule& m) {
  const RingInfo info = find_rings(m);
  ScaffoldDescriptors d;
  d.ring_count = info.oversized ? info.cyclomatic
                                : static_cast<int>(info.rings.size());

  std::map<std::pair<int, int>, int> bond_of;
  for (const Bond& b : m.bonds)
    bond_of[std::minmax(b.begin, b.end)] = b.index;

  std::vector<std::set<int>> atom_sets;
  std::vector<std::set<int>> bond_sets;
  for (const auto& cycle : info.rings) {
    std::set<int> atoms(cycle.begin(), cycle.end());
    std::set<int> bonds;
    bool all_aromatic = true;
    bool hetero = false;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      const int u = cycle[i];
      const int v = cycle[(i + 1) % cycle.size()];
      const int bidx = bond_of.at(std::minmax(u, v));
      bonds.insert(bidx);
      all_aromatic = all_aromatic && m.bonds[bidx].order == BondOrder::kAromatic;
      hetero = hetero || m.atoms[u].atomic_number != 6;
    }
    if (all_aromatic) ++d.aromatic_ring_count;
    if (hetero) d.heterocyclic = true;
    atom_sets.push_back(std::move(atoms));
    bond_sets.push_back(std::move(bonds));
  }

  for (std::size_t i = 0; i < atom_sets.size(); ++i) {
    for (std::size_t j = i + 1; j < atom_sets.size(); ++j) {
      std::vector<int> shared_bonds;
      std::set_intersection(bond_sets[i].begin(), bond_sets[i].end(),
                            bond_sets[j].begin(), bond_sets[j].end(),
                            std::back_inserter(shared_bonds));
      std::vector<int> shared_atoms;
      std::set_intersection(atom_sets[i].begin(), atom_sets[i].end(),
                            atom_sets[j].begin(), atom_sets[j].end(),
                            std::back_inserter(shared_atoms));
      if (shared_bonds.size() == 1) d.fused = true;
      if (shared_atoms.size() >= 3) {
        d.bridged = true;
      } else if (shared_atoms.size() == 2) {
        if (bond_of.find(std::minmax(shared_atoms[0], shared_atoms[1])) ==
            bond_of.end())
          d.bridged = true;
      }
    }
  }
  return d;
}

Molecule murcko_scaffold(const Molecule& m) {
  std::vector<bool> alive(m.atoms.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> deg(m.atoms.size(), 0);
    for (const Bond& b : m.bonds) {
      if (alive[b.begin] && alive[b.end]) {
        ++deg[b.begin];
        ++deg[b.end];
      }
    }
    for (int i = 0; i < m.num_atoms(); ++i) {
      if (alive[i] && deg[i] <= 1) {
        alive[i] = false;
        changed = true;
      }
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < m.num_atoms(); ++i)
    if (alive[i]) keep.push_back(i);
  return induced_subgraph(m, keep);
}

}  // namespace chg
