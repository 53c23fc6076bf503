//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/labels.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "chg/error.hpp"
#include "chg/rng.hpp"

namespace chg {

namespace {

PatternAtom pat_c() { return {{6}, std::nullopt, 0, -1, 0}; }

PatternAtom pat(int z, int min_h = 0, int max_h = -1, int charge = 0) {
  return {{z}, false, min_h, max_h, charge};
}

void validate_pattern(const Pattern& p) {
  if (p.atoms.empty() || p.atoms.size() > 8) {
    throw DataError("pattern '" + p.name + "' must have 1 to 8 atoms");
  }
  std::vector<int> reach(p.atoms.size(), 0);
  reach[0] = 1;
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& b : p.bonds) {
      if (reach[b.a] != reach[b.b]) {
        reach[b.a] = reach[b.b] = 1;
        grew = true;
      }
    }
  }
  for (int r : reach) {
    if (!r) throw DataError("pattern '" + p.name + "' is not connected");
  }
}

FunctionalGroupSet build_default_groups() {
  // Pattern sketches. Brackets bound hydrogens; q is a required charge.
  //
  //   hydroxyl         C-O[H>=1]
  //   carbonyl         C=O
  //   carboxyl         O=C-O[H>=1]
  //   ester            O=C-O[H0]-C
  //   ether            C-O[H0]-C
  //   primary amine    C-N[H>=2]
  //   secondary amine  C-N[H1]-C
  //   tertiary amine   N[H0](-C)(-C)-C
  //   amide            O=C-N
  //   nitro            O=N[q+1]-O[q-1]
  //   nitrile          C#N
  //   halide           C-{F|Cl|Br|I}
  //   thiol            C-S[H>=1]
  //   sulfonyl         O=S=O
  //   aldehyde         O=C[H>=1]
  //   ketone           C-C(=O)-C
  //
  // Pattern carbons accept either aromatic flag so aryl variants match;
  // every heteroatom is pinned aliphatic. Overlaps are intentional: an
  // acid also lights hydroxyl and carbonyl, an ester lights ether.
  const auto S = BondOrder::kSingle;
  const auto D = BondOrder::kDouble;
  const auto T = BondOrder::kTriple;
  FunctionalGroupSet fgs;
  auto& ps = fgs.patterns;
  ps.push_back({"hydroxyl", {pat_c(), pat(8, 1)}, {{0, 1, S}}});
  ps.push_back({"carbonyl", {pat_c(), pat(8)}, {{0, 1, D}}});
  ps.push_back({"carboxyl",
                {pat_c(), pat(8), pat(8, 1)},
                {{0, 1, D}, {0, 2, S}}});
  ps.push_back({"ester",
                {pat_c(), pat(8), pat(8, 0, 0), pat_c()},
                {{0, 1, D}, {0, 2, S}, {2, 3, S}}});
  ps.push_back({"ether",
                {pat_c(), pat(8, 0, 0), pat_c()},
                {{0, 1, S}, {1, 2, S}}});
  ps.push_back({"primary amine", {pat_c(), pat(7, 2)}, {{0, 1, S}}});
  ps.push_back({"secondary amine",
                {pat_c(), pat(7, 1, 1), pat_c()},
                {{0, 1, S}, {1, 2, S}}});
  ps.push_back({"tertiary amine",
                {pat(7, 0, 0), pat_c(), pat_c(), pat_c()},
                {{0, 1, S}, {0, 2, S}, {0, 3, S}}});
  ps.push_back({"amide",
                {pat(8), pat_c(), pat(7)},
                {{1, 0, D}, {1, 2, S}}});
  ps.push_back({"nitro",
                {pat(7, 0, -1, 1), pat(8), pat(8, 0, -1, -1)},
                {{0, 1, D}, {0, 2, S}}});
  ps.push_back({"nitrile", {pat_c(), pat(7)}, {{0, 1, T}}});
  ps.push_back({"halide",
                {pat_c(), {{9, 17, 35, 53}, false, 0, -1, 0}},
                {{0, 1, S}}});
  ps.push_back({"thiol", {pat_c(), pat(16, 1)}, {{0, 1, S}}});
  ps.push_back({"sulfonyl",
                {pat(16), pat(8), pat(8)},
                {{0, 1, D}, {0, 2, D}}});
  ps.push_back({"aldehyde", {pat_c(), pat(8)}, {{0, 1, D}}});
  ps.back().atoms[0].min_h = 1;
  ps.push_back({"ketone",
                {pat_c(), pat_c(), pat(8), pat_c()},
                {{0, 1, S}, {1, 2, D}, {1, 3, S}}});
  for (const auto& p : ps) validate_pattern(p);
  return fgs;
}

}  // namespace

const FunctionalGroupSet& default_functional_groups() {
  static const FunctionalGroupSet fgs = build_default_groups();
  return fgs;
}

FunctionalGroupSet functional_groups_from_string(const std::string& text) {
  FunctionalGroupSet fgs;
  std::set<std::string> names;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("pattern line needs 'name<TAB>pattern': " + line);
    }
    Pattern p;
    p.name = line.substr(0, tab);
    if (!names.insert(p.name).second) {
      throw DataError("duplicate pattern name: " + p.name);
    }
    Molecule m;
    try {
      m = parse_smiles(line.substr(tab + 1),
                       ParseOptions{.allow_multi_component = false});
    } catch (const Error& e) {
      throw DataError("pattern '" + p.name + "': " + e.what());
    }
    for (const Atom& a : m.atoms) {
      PatternAtom pa;
      pa.elements = {a.atomic_number};
      pa.aromatic = a.aromatic;
      pa.charge = a.formal_charge;
      // Bracket hydrogen counts are constraints: [OH] means at least one,
      // [NH0] exactly zero. Unbracketed atoms stay unconstrained.
      if (a.explicit_h.has_value()) {
        pa.min_h = *a.explicit_h;
        if (*a.explicit_h == 0) pa.max_h = 0;
      }
      p.atoms.push_back(std::move(pa));
    }
    for (const Bond& b : m.bonds) p.bonds.push_back({b.begin, b.end, b.order});
    validate_pattern(p);
    fgs.patterns.push_back(std::move(p));
  }
  return fgs;
}

FunctionalGroupSet load_functional_groups(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pattern file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return functional_groups_from_string(buf.str());
}

namespace {

// Fragment-local view the matcher walks: atoms renumbered 0..n-1 with the
// induced bonds only.
struct TargetGraph {
  std::vector<int> z, h, charge, degree;
  std::vector<bool> aromatic;
  std::vector<std::vector<std::pair<int, BondOrder>>> nbrs;

  TargetGraph(const PerceivedMolecule& pm, const std::vector<int>& atoms) {
    std::vector<int> local(pm.mol.atoms.size(), -1);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      local[atoms[i]] = static_cast<int>(i);
      const Atom& a = pm.mol.atoms[atoms[i]];
      z.push_back(a.atomic_number);
      h.push_back(pm.atoms[atoms[i]].total_h);
      charge.push_back(a.formal_charge);
      aromatic.push_back(a.aromatic);
    }
    nbrs.resize(atoms.size());
    for (const Bond& b : pm.mol.bonds) {
      const int x = local[b.begin];
      const int y = local[b.end];
      if (x < 0 || y < 0) continue;
      nbrs[x].emplace_back(y, b.order);
      nbrs[y].emplace_back(x, b.order);
    }
    for (const auto& n : nbrs) degree.push_back(static_cast<int>(n.size()));
  }
};

struct Matcher {
  const Pattern& p;
  const TargetGraph& t;
  std::vector<int> order;                     // pattern atom placement order
  std::vector<std::pair<int, BondOrder>> anchor;  // order pos -> placed bond
  std::vector<std::vector<std::pair<int, BondOrder>>> checks;
  std::vector<int> pat_degree;
  std::vector<int> map;   // pattern atom -> target atom
  std::vector<bool> used;

  Matcher(const Pattern& pattern, const TargetGraph& target)
      : p(pattern), t(target) {
    pat_degree.assign(p.atoms.size(), 0);
    for (const auto& b : p.bonds) {
      ++pat_degree[b.a];
      ++pat_degree[b.b];
    }
    // Place atoms so each one after the first attaches to a placed one;
    // validate_pattern guarantees such an order exists.
    std::vector<int> placed_at(p.atoms.size(), -1);
    order.push_back(0);
    placed_at[0] = 0;
    anchor.emplace_back(-1, BondOrder::kSingle);
    while (order.size() < p.atoms.size()) {
      for (const auto& b : p.bonds) {
        int from = -1, next = -1;
        if (placed_at[b.a] >= 0 && placed_at[b.b] < 0) {
          from = b.a;
          next = b.b;
        } else if (placed_at[b.b] >= 0 && placed_at[b.a] < 0) {
          from = b.b;
          next = b.a;
        } else {
          continue;
        }
        placed_at[next] = static_cast<int>(order.size());
        order.push_back(next);
        anchor.emplace_back(from, b.order);
        break;
      }
    }
    // Remaining bonds between already-placed atoms become edge checks at
    // the later endpoint.
    checks.resize(p.atoms.size());
    for (const auto& b : p.bonds) {
      const int pa = placed_at[b.a];
      const int pb = placed_at[b.b];
      const int late = pa > pb ? b.a : b.b;
      const int early = pa > pb ? b.b : b.a;
      if (anchor[placed_at[late]].first == early) continue;
      checks[late].emplace_back(early, b.order);
    }
    map.assign(p.atoms.size(), -1);
    used.assign(t.z.size(), false);
  }

  bool atom_ok(int pi, int ti) const {
    const PatternAtom& a = p.atoms[pi];
    if (std::find(a.elements.begin(), a.elements.end(), t.z[ti]) ==
        a.elements.end()) {
      return false;
    }
    if (a.aromatic.has_value() && *a.aromatic != t.aromatic[ti]) return false;
    if (t.h[ti] < a.min_h) return false;
    if (a.max_h >= 0 && t.h[ti] > a.max_h) return false;
    if (t.charge[ti] != a.charge) return false;
    return t.degree[ti] >= pat_degree[pi];
  }

  bool edge_ok(int pi, int ti) const {
    for (const auto& [early, want] : checks[pi]) {
      bool found = false;
      for (const auto& [nbr, got] : t.nbrs[ti]) {
        if (nbr == map[early] && got == want) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    return true;
  }

  bool extend(std::size_t k) {
    if (k == order.size()) return true;
    const int pi = order[k];
    if (k == 0) {
      for (std::size_t ti = 0; ti < t.z.size(); ++ti) {
        if (used[ti] || !atom_ok(pi, static_cast<int>(ti))) continue;
        map[pi] = static_cast<int>(ti);
        used[ti] = true;
        if (extend(k + 1)) return true;
        used[ti] = false;
        map[pi] = -1;
      }
      return false;
    }
    const auto& [from, want] = anchor[k];
    for (const auto& [ti, got] : t.nbrs[map[from]]) {
      if (used[ti] || got != want) continue;
      if (!atom_ok(pi, ti) || !edge_ok(pi, ti)) continue;
      map[pi] = ti;
      used[ti] = true;
      if (extend(k + 1)) return true;
      used[ti] = false;
      map[pi] = -1;
    }
    return false;
  }
};

}  // namespace

std::vector<int> match_groups(const PerceivedMolecule& pm,
                              const std::vector<int>& fragment_atoms,
                              const FunctionalGroupSet& fgs) {
  const TargetGraph target(pm, fragment_atoms);
  std::vector<int> bits(fgs.patterns.size(), 0);
  for (std::size_t c = 0; c < fgs.patterns.size(); ++c) {
    Matcher m(fgs.patterns[c], target);
    bits[c] = m.extend(0) ? 1 : 0;
  }
  return bits;
}

namespace {

std::uint8_t order_code(BondOrder o) {
  switch (o) {
    case BondOrder::kSingle: return 1;
    case BondOrder::kDouble: return 2;
    case BondOrder::kTriple: return 3;
    case BondOrder::kAromatic: return 4;
  }
  return 0;
}

struct PathWalker {
  const Molecule& m;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (atom, bond index)
  std::vector<int> bits;
  int width;
  std::vector<bool> on_path;
  std::vector<std::uint8_t> fwd;  // z, aromatic, code, z, aromatic, ...

  PathWalker(const PerceivedMolecule& pm, int w)
      : m(pm.mol), bits(w, 0), width(w), on_path(m.atoms.size(), false) {
    adj.resize(m.atoms.size());
    for (const Bond& b : m.bonds) {
      adj[b.begin].emplace_back(b.end, b.index);
      adj[b.end].emplace_back(b.begin, b.index);
    }
  }

  void push_atom(int a) {
    fwd.push_back(static_cast<std::uint8_t>(m.atoms[a].atomic_number));
    fwd.push_back(m.atoms[a].aromatic ? 1 : 0);
  }

  void record() {
    // Read the weaker direction so a path and its reverse set one bit.
    std::vector<std::uint8_t> rev(fwd.rbegin(), fwd.rend());
    for (std::size_t i = 0; i + 1 < rev.size(); i += 1) {
      // reversing the byte string flips each (z, aromatic) pair; restore it
      if (i % 3 == 0) std::swap(rev[i], rev[i + 1]);
    }
    const auto& key = std::lexicographical_compare(fwd.begin(), fwd.end(),
                                                   rev.begin(), rev.end())
                          ? fwd
                          : rev;
    const std::uint64_t h = fnv1a64(key.data(), key.size());
    bits[static_cast<int>(h % static_cast<std::uint64_t>(width))] = 1;
  }

  void walk(int a, int depth) {
    on_path[a] = true;
    push_atom(a);
    if (depth > 0) record();
    if (depth < 7) {
      for (const auto& [next, bond] : adj[a]) {
        if (on_path[next]) continue;
        fwd.push_back(order_code(m.bonds[bond].order));
        walk(next, depth + 1);
        fwd.pop_back();
      }
    }
    fwd.pop_back();
    fwd.pop_back();
    on_path[a] = false;
  }
};

}  // namespace

std::vector<int> topo_fingerprint(const PerceivedMolecule& pm, int bits) {
  if (bits < 64 || bits > 4096 || (bits & (bits - 1)) != 0) {
    throw DataError("fingerprint width must be a power of two in [64, 4096]");
  }
  PathWalker walker(pm, bits);
  for (int a = 0; a < pm.mol.num_atoms(); ++a) walker.walk(a, 0);
  return walker.bits;
}

std::string fingerprint_hex(const std::vector<int>& bits) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(bits.size() / 4);
  for (std::size_t j = 0; j < bits.size(); j += 8) {
    int byte = 0;
    for (std::size_t k = 0; k < 8 && j + k < bits.size(); ++k) {
      if (bits[j + k]) byte |= 1 << k;
    }
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0xF]);
  }
  return out;
}

std::vector<int> fingerprint_from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw DataError("odd fingerprint hex length");
  auto nibble = [](char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw DataError("invalid fingerprint hex digit");
  };
  std::vector<int> bits(hex.size() * 4, 0);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int byte = (nibble(hex[i]) << 4) | nibble(hex[i + 1]);
    for (int k = 0; k < 8; ++k) bits[i * 4 + k] = (byte >> k) & 1;
  }
  return bits;
}

ScaffoldTargets scaffold_targets(const PerceivedMolecule& pm) {
  const ScaffoldDescriptors d = scaffold_descriptors(pm.mol);
  ScaffoldTargets t;
  t.ring_class = std::min(d.ring_count, 8);
  t.aromatic_ring_class = std::min(d.aromatic_ring_count, 8);
  t.fused = d.fused;
  t.heterocyclic = d.heterocyclic;
  t.bridged = d.bridged;
  return t;
}

}  // namespace chg
