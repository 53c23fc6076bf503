//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include "chg/elements.hpp"
#include "chg/error.hpp"
#include "chg/rng.hpp"

namespace chg {

std::vector<std::vector<int>> Molecule::adjacency() const {
  std::vector<std::vector<int>> adj(atoms.size());
  for (const Bond& b : bonds) {
    adj[b.begin].push_back(b.index);
    adj[b.end].push_back(b.index);
  }
  return adj;
}

std::vector<int> Molecule::degrees() const {
  std::vector<int> deg(atoms.size(), 0);
  for (const Bond& b : bonds) {
    ++deg[b.begin];
    ++deg[b.end];
  }
  return deg;
}

double bond_order_value(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return 1.0;
    case BondOrder::kDouble: return 2.0;
    case BondOrder::kTriple: return 3.0;
    case BondOrder::kAromatic: return 1.5;
  }
  return 1.0;
}

double bond_order_sum(const Molecule& m, int atom_index) {
  double sum = 0.0;
  for (const Bond& b : m.bonds) {
    if (b.connects(atom_index)) sum += bond_order_value(b.order);
  }
  return sum;
}

int default_implicit_h(int atomic_number, int formal_charge,
                       double order_sum) {
  const std::vector<int>& valences = elements::default_valences(atomic_number);
  if (valences.empty()) return 0;
  const int shift = elements::charge_valence_shift(atomic_number, formal_charge);
  // Smallest allowed valence that accommodates the existing bonds; if even
  // the largest is exceeded, hydrogens floor at zero and the valence check
  // in perception reports the violation.
  for (int v : valences) {
    const double h = static_cast<double>(v + shift) - order_sum;
    if (h >= -1e-9) return std::max(0, static_cast<int>(std::floor(h + 1e-9)));
  }
  return 0;
}

int total_hydrogens(const Molecule& m, int atom_index) {
  const Atom& a = m.atoms[atom_index];
  if (a.explicit_h.has_value()) return *a.explicit_h;
  return default_implicit_h(a.atomic_number, a.formal_charge,
                            bond_order_sum(m, atom_index));
}

namespace {

// ---------------------------------------------------------------------------
// Parsing

constexpr int kMaxCharge = 9;

class Parser {
public:
  Parser(const std::string& s, const ParseOptions& options)
      : s_(s), options_(options) {}

  Molecule run() {
    if (s_.empty()) {
      throw ParseError(ParseError::Kind::kInvalidSyntax, "empty SMILES string");
    }
    while (i_ < s_.size()) step();
    finish();
    mol_.source_smiles = s_;
    return std::move(mol_);
  }

private:
  struct RingOpen {
    int atom;
    bool has_order = false;
    BondOrder order = BondOrder::kSingle;
    BondDirection direction = BondDirection::kNone;
    std::size_t pos = 0;
  };

  void step() {
    const char c = s_[i_];
    if (c == '(') {
      if (prev_ < 0) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "branch opened before any atom", i_);
      }
      if (pending_bond_) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "bond symbol before '('", i_);
      }
      open_stack_.push_back(prev_);
      ++i_;
      return;
    }
    if (c == ')') {
      if (open_stack_.empty()) {
        throw ParseError(ParseError::Kind::kUnbalancedParenthesis,
                         "unmatched ')' at position " + std::to_string(i_), i_);
      }
      if (pending_bond_) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "dangling bond symbol before ')'", i_);
      }
      prev_ = open_stack_.back();
      open_stack_.pop_back();
      ++i_;
      return;
    }
    if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
      if (pending_bond_) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "two consecutive bond symbols", i_);
      }
      pending_bond_ = true;
      pending_order_ = BondOrder::kSingle;
      pending_dir_ = BondDirection::kNone;
      switch (c) {
        case '=': pending_order_ = BondOrder::kDouble; break;
        case '#': pending_order_ = BondOrder::kTriple; break;
        case ':': pending_order_ = BondOrder::kAromatic; break;
        case '/': pending_dir_ = BondDirection::kUp; break;
        case '\\': pending_dir_ = BondDirection::kDown; break;
        default: break;
      }
      ++i_;
      return;
    }
    if (c == '.') {
      if (!options_.allow_multi_component) {
        throw ParseError(ParseError::Kind::kUnsupportedFeature,
                         "multi-component input is disabled", i_);
      }
      if (pending_bond_) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "bond symbol before '.'", i_);
      }
      if (prev_ < 0) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "'.' before any atom", i_);
      }
      prev_ = -1;
      ++i_;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0', i_);
      ++i_;
      return;
    }
    if (c == '%') {
      if (i_ + 3 > s_.size() ||
          !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "'%' must be followed by two digits", i_);
      }
      ring_closure((s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0'), i_);
      i_ += 3;
      return;
    }
    if (c == '[') {
      bracket_atom();
      return;
    }
    if (c == '*') {
      throw ParseError(ParseError::Kind::kUnsupportedFeature,
                       "wildcard atom '*'", i_);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      organic_atom();
      return;
    }
    throw ParseError(ParseError::Kind::kUnknownSymbol,
                     std::string("unknown symbol '") + c + "' at position " +
                         std::to_string(i_),
                     i_);
  }

  void organic_atom() {
    const std::size_t pos = i_;
    // Two-letter symbols first so "Cl"/"Br" are not read as C/B.
    if (i_ + 1 < s_.size()) {
      const std::string two = s_.substr(i_, 2);
      if (two == "Cl" || two == "Br") {
        i_ += 2;
        add_atom(two, elements::atomic_number(two), false, pos);
        return;
      }
    }
    const char c = s_[i_];
    static const std::string upper = "BCNOPSFI";
    static const std::string lower = "bcnops";
    if (upper.find(c) != std::string::npos) {
      ++i_;
      const std::string sym(1, c);
      add_atom(sym, elements::atomic_number(sym), false, pos);
      return;
    }
    if (lower.find(c) != std::string::npos) {
      ++i_;
      const std::string sym(1, static_cast<char>(std::toupper(c)));
      add_atom(sym, elements::atomic_number(sym), true, pos);
      return;
    }
    throw ParseError(ParseError::Kind::kUnknownSymbol,
                     std::string("unknown atom symbol '") + c +
                         "' at position " + std::to_string(pos),
                     pos);
  }

  void bracket_atom() {
    const std::size_t open_pos = i_;
    ++i_;  // '['
    // Isotope number: parsed for syntax, then discarded.
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
      ++i_;
    if (i_ >= s_.size()) {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "unterminated bracket atom", open_pos);
    }

    std::string symbol;
    bool aromatic = false;
    const std::size_t sym_pos = i_;
    const char c = s_[i_];
    if (std::islower(static_cast<unsigned char>(c))) {
      if (i_ + 1 < s_.size() &&
          (s_.compare(i_, 2, "se") == 0 || s_.compare(i_, 2, "as") == 0)) {
        symbol = s_.substr(i_, 2);
        symbol[0] = static_cast<char>(std::toupper(symbol[0]));
        i_ += 2;
        aromatic = true;
      } else if (std::string("bcnops").find(c) != std::string::npos) {
        symbol = std::string(1, static_cast<char>(std::toupper(c)));
        ++i_;
        aromatic = true;
      } else {
        throw ParseError(ParseError::Kind::kUnknownSymbol,
                         std::string("unknown aromatic symbol at position ") +
                             std::to_string(sym_pos),
                         sym_pos);
      }
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      symbol = std::string(1, c);
      if (i_ + 1 < s_.size() &&
          std::islower(static_cast<unsigned char>(s_[i_ + 1]))) {
        const std::string two = s_.substr(i_, 2);
        if (elements::atomic_number(two) != 0) {
          symbol = two;
          ++i_;
        }
      }
      ++i_;
    } else {
      throw ParseError(ParseError::Kind::kUnknownSymbol,
                       "expected element symbol at position " +
                           std::to_string(sym_pos),
                       sym_pos);
    }

    if (symbol == "H") {
      throw ParseError(ParseError::Kind::kUnsupportedFeature,
                       "explicit hydrogen atoms", sym_pos);
    }
    const int z = elements::atomic_number(symbol);
    if (z == 0) {
      throw ParseError(ParseError::Kind::kUnknownSymbol,
                       "unknown element '" + symbol + "' at position " +
                           std::to_string(sym_pos),
                       sym_pos);
    }
    if (aromatic && !elements::aromatic_allowed(z)) {
      throw ParseError(ParseError::Kind::kUnsupportedFeature,
                       "aromatic flag on element " + symbol, sym_pos);
    }

    Chirality chirality = Chirality::kNone;
    if (i_ < s_.size() && s_[i_] == '@') {
      ++i_;
      chirality = Chirality::kAnticlockwise;
      if (i_ < s_.size() && s_[i_] == '@') {
        ++i_;
        chirality = Chirality::kClockwise;
      }
      static const char* kExtended[] = {"TH", "AL", "SP", "TB", "OH"};
      for (const char* tag : kExtended) {
        if (s_.compare(i_, 2, tag) == 0) {
          throw ParseError(ParseError::Kind::kUnsupportedFeature,
                           std::string("extended chirality @") + tag, i_);
        }
      }
    }

    int hcount = 0;
    if (i_ < s_.size() && s_[i_] == 'H') {
      ++i_;
      hcount = 1;
      int digits = 0;
      int value = 0;
      while (i_ < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        value = value * 10 + (s_[i_] - '0');
        ++digits;
        ++i_;
      }
      if (digits > 0) hcount = value;
    }

    int charge = 0;
    if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) {
      const char sign_char = s_[i_];
      const int sign = sign_char == '+' ? 1 : -1;
      ++i_;
      if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        int value = 0;
        while (i_ < s_.size() &&
               std::isdigit(static_cast<unsigned char>(s_[i_]))) {
          value = value * 10 + (s_[i_] - '0');
          ++i_;
        }
        charge = sign * value;
      } else {
        charge = sign;
        while (i_ < s_.size() && s_[i_] == sign_char) {
          charge += sign;
          ++i_;
        }
      }
      if (charge > kMaxCharge || charge < -kMaxCharge) {
        throw ParseError(ParseError::Kind::kInvalidSyntax,
                         "formal charge out of range", open_pos);
      }
    }

    if (i_ < s_.size() && s_[i_] == ':') {
      throw ParseError(ParseError::Kind::kUnsupportedFeature,
                       "atom map class", i_);
    }
    if (i_ >= s_.size() || s_[i_] != ']') {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "expected ']' in bracket atom at position " +
                           std::to_string(i_),
                       i_ < s_.size() ? i_ : open_pos);
    }
    ++i_;

    const int idx = add_atom(symbol, z, aromatic, open_pos);
    mol_.atoms[idx].explicit_h = hcount;
    mol_.atoms[idx].formal_charge = charge;
    mol_.atoms[idx].chirality = chirality;
  }

  int add_atom(const std::string& symbol, int z, bool aromatic,
               std::size_t pos) {
    Atom a;
    a.element = symbol;
    a.atomic_number = z;
    a.aromatic = aromatic;
    a.index = static_cast<int>(mol_.atoms.size());
    mol_.atoms.push_back(std::move(a));
    const int idx = mol_.atoms.back().index;
    if (prev_ >= 0) {
      BondOrder order;
      BondDirection dir = BondDirection::kNone;
      if (pending_bond_) {
        order = pending_order_;
        dir = pending_dir_;
      } else {
        order = (mol_.atoms[prev_].aromatic && aromatic) ? BondOrder::kAromatic
                                                         : BondOrder::kSingle;
      }
      add_bond(prev_, idx, order, dir, pos);
    }
    pending_bond_ = false;
    prev_ = idx;
    return idx;
  }

  void ring_closure(int number, std::size_t pos) {
    if (prev_ < 0) {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "ring closure digit before any atom", pos);
    }
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      RingOpen open;
      open.atom = prev_;
      open.has_order = pending_bond_;
      open.order = pending_order_;
      open.direction = pending_dir_;
      open.pos = pos;
      open_rings_.emplace(number, open);
      pending_bond_ = false;
      return;
    }

    RingOpen open = it->second;
    open_rings_.erase(it);
    if (open.atom == prev_) {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "ring bond closes on its own atom", pos);
    }

    BondOrder order;
    BondDirection dir = BondDirection::kNone;
    const bool close_has_order = pending_bond_;
    if (open.has_order && close_has_order && pending_order_ != open.order) {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "conflicting ring bond orders", pos);
    }
    if (open.has_order) {
      order = open.order;
    } else if (close_has_order) {
      order = pending_order_;
    } else {
      order = (mol_.atoms[open.atom].aromatic && mol_.atoms[prev_].aromatic)
                  ? BondOrder::kAromatic
                  : BondOrder::kSingle;
    }
    // The bond is stored open -> close. A direction written at the opening
    // side is kept; one written only at the closing side describes the
    // reverse traversal and is flipped.
    if (open.direction != BondDirection::kNone) {
      dir = open.direction;
    } else if (pending_bond_ && pending_dir_ != BondDirection::kNone) {
      dir = pending_dir_ == BondDirection::kUp ? BondDirection::kDown
                                               : BondDirection::kUp;
    }
    add_bond(open.atom, prev_, order, dir, pos);
    pending_bond_ = false;
  }

  void add_bond(int a, int b, BondOrder order, BondDirection dir,
                std::size_t pos) {
    const auto key = std::minmax(a, b);
    if (!bond_pairs_.insert(key).second) {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "duplicate bond between atoms " + std::to_string(a) +
                           " and " + std::to_string(b),
                       pos);
    }
    Bond bond;
    bond.begin = a;
    bond.end = b;
    bond.order = order;
    bond.direction = dir;
    bond.index = static_cast<int>(mol_.bonds.size());
    mol_.bonds.push_back(bond);
  }

  void finish() {
    if (!open_rings_.empty()) {
      const int number = open_rings_.begin()->first;
      throw ParseError(ParseError::Kind::kUnclosedRingBond,
                       "unclosed ring bond " + std::to_string(number),
                       open_rings_.begin()->second.pos, number);
    }
    if (!open_stack_.empty()) {
      throw ParseError(ParseError::Kind::kUnbalancedParenthesis,
                       "unclosed '(' in SMILES");
    }
    if (pending_bond_) {
      throw ParseError(ParseError::Kind::kInvalidSyntax,
                       "dangling bond symbol at end of input");
    }
    // Connectivity: '.' breaks the chain but ring closures can rejoin the
    // pieces, so the flag comes from the final graph, not from the token.
    std::vector<int> comp(mol_.atoms.size(), -1);
    int n_comp = 0;
    for (std::size_t root = 0; root < comp.size(); ++root) {
      if (comp[root] >= 0) continue;
      std::vector<int> stack{static_cast<int>(root)};
      comp[root] = n_comp;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const Bond& bd : mol_.bonds) {
          if (!bd.connects(u)) continue;
          int v = bd.other(u);
          if (comp[v] < 0) {
            comp[v] = n_comp;
            stack.push_back(v);
          }
        }
      }
      ++n_comp;
    }
    mol_.multi_component = n_comp > 1;
  }

  const std::string& s_;
  ParseOptions options_;
  std::size_t i_ = 0;
  Molecule mol_;
  int prev_ = -1;
  std::vector<int> open_stack_;
  bool pending_bond_ = false;
  BondOrder pending_order_ = BondOrder::kSingle;
  BondDirection pending_dir_ = BondDirection::kNone;
  std::map<int, RingOpen> open_rings_;
  std::set<std::pair<int, int>> bond_pairs_;
};

// ---------------------------------------------------------------------------
// Canonical form

int bond_code(BondOrder order) { return static_cast<int>(order); }

struct AtomGraph {
  const Molecule* m;
  std::vector<std::vector<std::pair<int, int>>> nbrs;  // (neighbor, bond idx)
  std::vector<int> total_h;

  explicit AtomGraph(const Molecule& mol) : m(&mol), nbrs(mol.atoms.size()) {
    for (const Bond& b : mol.bonds) {
      nbrs[b.begin].emplace_back(b.end, b.index);
      nbrs[b.end].emplace_back(b.begin, b.index);
    }
    total_h.resize(mol.atoms.size());
    for (int i = 0; i < mol.num_atoms(); ++i)
      total_h[i] = total_hydrogens(mol, i);
  }
};

template <typename Key>
std::vector<int> dense_ranks(const std::vector<Key>& keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> ranks(keys.size(), 0);
  int rank = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && keys[order[i - 1]] < keys[order[i]]) ++rank;
    ranks[order[i]] = rank;
  }
  return ranks;
}

int count_distinct(const std::vector<int>& ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> initial_ranks(const AtomGraph& g) {
  using Key = std::tuple<int, int, int, int, int>;
  std::vector<Key> keys;
  keys.reserve(g.m->atoms.size());
  for (int i = 0; i < g.m->num_atoms(); ++i) {
    const Atom& a = g.m->atoms[i];
    keys.emplace_back(a.atomic_number, a.aromatic ? 1 : 0, a.formal_charge,
                      g.total_h[i], static_cast<int>(g.nbrs[i].size()));
  }
  return dense_ranks(keys);
}

// One round of neighborhood refinement until the partition stabilizes.
std::vector<int> refine_ranks(const AtomGraph& g, std::vector<int> ranks) {
  using Key = std::pair<int, std::vector<std::pair<int, int>>>;
  int distinct = count_distinct(ranks);
  for (;;) {
    std::vector<Key> keys(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      std::vector<std::pair<int, int>> nbr_keys;
      nbr_keys.reserve(g.nbrs[i].size());
      for (const auto& [v, bidx] : g.nbrs[i]) {
        nbr_keys.emplace_back(bond_code(g.m->bonds[bidx].order), ranks[v]);
      }
      std::sort(nbr_keys.begin(), nbr_keys.end());
      keys[i] = {ranks[i], std::move(nbr_keys)};
    }
    std::vector<int> next = dense_ranks(keys);
    const int next_distinct = count_distinct(next);
    if (next_distinct == distinct) return next;
    distinct = next_distinct;
    ranks = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// SMILES emission. Works from any injective rank vector: the lowest-ranked
// atom is the root and branches are ordered by rank, so canonical emission
// and randomized rewriting share this code.

bool atom_needs_brackets(const AtomGraph& g, int i) {
  const Atom& a = g.m->atoms[i];
  if (a.formal_charge != 0) return true;
  if (!elements::in_organic_subset(a.atomic_number)) return true;
  if (a.aromatic) {
    static const std::string arom = "bcnops";
    char c = static_cast<char>(std::tolower(a.element[0]));
    if (a.element.size() != 1 || arom.find(c) == std::string::npos) return true;
  }
  // Hydrogen count must survive reparsing without brackets.
  const int written_h = default_implicit_h(a.atomic_number, a.formal_charge,
                                           bond_order_sum(*g.m, i));
  return g.total_h[i] != written_h;
}

std::string atom_token(const AtomGraph& g, int i) {
  const Atom& a = g.m->atoms[i];
  std::string sym = a.element;
  if (a.aromatic) {
    for (char& c : sym) c = static_cast<char>(std::tolower(c));
  }
  if (!atom_needs_brackets(g, i)) return sym;
  std::string out = "[" + sym;
  const int h = g.total_h[i];
  if (h == 1) {
    out += "H";
  } else if (h > 1) {
    out += "H" + std::to_string(h);
  }
  const int q = a.formal_charge;
  if (q == 1) {
    out += "+";
  } else if (q == -1) {
    out += "-";
  } else if (q > 1) {
    out += "+" + std::to_string(q);
  } else if (q < -1) {
    out += "-" + std::to_string(-q);
  }
  out += "]";
  return out;
}

// Symbol required between two atoms for the given bond, or "" when the
// default bond of the atom pair already means the right thing.
std::string bond_token(const AtomGraph& g, const Bond& b) {
  const bool both_aromatic =
      g.m->atoms[b.begin].aromatic && g.m->atoms[b.end].aromatic;
  switch (b.order) {
    case BondOrder::kSingle: return both_aromatic ? "-" : "";
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kAromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

struct Emitter {
  const AtomGraph& g;
  const std::vector<int>& ranks;
  std::vector<bool> visited;
  std::vector<bool> edge_used;
  std::vector<std::vector<std::pair<int, int>>> children;  // (atom, bond)
  std::vector<std::vector<int>> ring_open;   // bond indices opened at atom
  std::vector<std::vector<int>> ring_close;  // bond indices closed at atom
  std::vector<int> preorder;
  std::vector<int> ring_digit;

  Emitter(const AtomGraph& graph, const std::vector<int>& rank_vec)
      : g(graph),
        ranks(rank_vec),
        visited(graph.m->atoms.size(), false),
        edge_used(graph.m->bonds.size(), false),
        children(graph.m->atoms.size()),
        ring_open(graph.m->atoms.size()),
        ring_close(graph.m->atoms.size()),
        ring_digit(graph.m->bonds.size(), -1) {}

  std::vector<std::pair<int, int>> sorted_nbrs(int u) const {
    std::vector<std::pair<int, int>> nbrs = g.nbrs[u];
    std::sort(nbrs.begin(), nbrs.end(), [&](const auto& a, const auto& b) {
      return ranks[a.first] < ranks[b.first];
    });
    return nbrs;
  }

  void classify(int root) {
    std::vector<std::pair<int, std::size_t>> stack;
    visited[root] = true;
    preorder.push_back(root);
    std::vector<std::vector<std::pair<int, int>>> nbr_cache(
        g.m->atoms.size());
    nbr_cache[root] = sorted_nbrs(root);
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next >= nbr_cache[u].size()) {
        stack.pop_back();
        continue;
      }
      const auto [v, bidx] = nbr_cache[u][next++];
      if (edge_used[bidx]) continue;
      edge_used[bidx] = true;
      if (visited[v]) {
        // Back edge: v was reached earlier, so v opens and u closes.
        ring_open[v].push_back(bidx);
        ring_close[u].push_back(bidx);
      } else {
        visited[v] = true;
        preorder.push_back(v);
        children[u].emplace_back(v, bidx);
        nbr_cache[v] = sorted_nbrs(v);
        stack.emplace_back(v, 0);
      }
    }
    assign_digits();
  }

  void assign_digits() {
    std::set<int> free_digits;
    int high_water = 0;
    std::vector<std::size_t> pos(g.m->atoms.size(), 0);
    for (std::size_t i = 0; i < preorder.size(); ++i) pos[preorder[i]] = i;
    // Order the open list of each atom by the closing atom's preorder
    // position so digit assignment is deterministic.
    for (int a = 0; a < g.m->num_atoms(); ++a) {
      std::sort(ring_open[a].begin(), ring_open[a].end(), [&](int x, int y) {
        const Bond& bx = g.m->bonds[x];
        const Bond& by = g.m->bonds[y];
        const int cx = visited_close_atom(bx, a);
        const int cy = visited_close_atom(by, a);
        return pos[cx] < pos[cy];
      });
    }
    for (int u : preorder) {
      for (int bidx : ring_close[u]) free_digits.insert(ring_digit[bidx]);
      for (int bidx : ring_open[u]) {
        int digit;
        if (!free_digits.empty()) {
          digit = *free_digits.begin();
          free_digits.erase(free_digits.begin());
        } else {
          digit = ++high_water;
          if (digit > 99) {
            throw GraphError("more than 99 simultaneously open ring bonds");
          }
        }
        ring_digit[bidx] = digit;
      }
    }
  }

  int visited_close_atom(const Bond& b, int open_atom) const {
    return b.begin == open_atom ? b.end : b.begin;
  }

  std::string emit(int root) {
    classify(root);
    std::string out;
    emit_atom(root, out);
    return out;
  }

  void emit_atom(int u, std::string& out) {
    out += atom_token(g, u);
    for (int bidx : ring_close[u]) out += digit_token(ring_digit[bidx]);
    for (int bidx : ring_open[u]) {
      out += bond_token(g, g.m->bonds[bidx]);
      out += digit_token(ring_digit[bidx]);
    }
    for (std::size_t i = 0; i < children[u].size(); ++i) {
      const auto [v, bidx] = children[u][i];
      const bool last = i + 1 == children[u].size();
      if (!last) out += "(";
      out += bond_token(g, g.m->bonds[bidx]);
      emit_atom(v, out);
      if (!last) out += ")";
    }
  }

  static std::string digit_token(int digit) {
    if (digit < 10) return std::string(1, static_cast<char>('0' + digit));
    return "%" + std::to_string(digit);
  }
};

std::vector<std::vector<int>> connected_components(const Molecule& m) {
  std::vector<std::vector<std::pair<int, int>>> nbrs(m.atoms.size());
  for (const Bond& b : m.bonds) {
    nbrs[b.begin].emplace_back(b.end, b.index);
    nbrs[b.end].emplace_back(b.begin, b.index);
  }
  std::vector<int> comp(m.atoms.size(), -1);
  std::vector<std::vector<int>> out;
  for (int root = 0; root < m.num_atoms(); ++root) {
    if (comp[root] >= 0) continue;
    std::vector<int> stack{root};
    comp[root] = static_cast<int>(out.size());
    std::vector<int> members;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      members.push_back(u);
      for (const auto& [v, bidx] : nbrs[u]) {
        if (comp[v] < 0) {
          comp[v] = comp[root];
          stack.push_back(v);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

std::string canon_branch(const AtomGraph& g, std::vector<int> ranks) {
  const int n = static_cast<int>(ranks.size());
  if (count_distinct(ranks) == n) {
    Emitter em(g, ranks);
    int root = 0;
    for (int i = 0; i < n; ++i)
      if (ranks[i] < ranks[root]) root = i;
    return em.emit(root);
  }
  // Lowest tied class; promote each member in turn and keep the smallest
  // resulting string. This resolves symmetry deterministically regardless of
  // input atom order.
  int tie_rank = -1;
  std::vector<int> members;
  for (int r = 0; tie_rank < 0; ++r) {
    members.clear();
    for (int i = 0; i < n; ++i)
      if (ranks[i] == r) members.push_back(i);
    if (members.size() >= 2) tie_rank = r;
    if (r > n) throw GraphError("rank refinement failed to converge");
  }
  std::string best;
  for (int promoted : members) {
    std::vector<int> split(n);
    for (int i = 0; i < n; ++i) split[i] = ranks[i] * 2 + 1;
    split[promoted] -= 1;
    std::vector<int> next = refine_ranks(g, dense_ranks(split));
    std::string s = canon_branch(g, std::move(next));
    if (best.empty() || s < best) best = std::move(s);
  }
  return best;
}

std::string canon_connected(const Molecule& m) {
  AtomGraph g(m);
  return canon_branch(g, refine_ranks(g, initial_ranks(g)));
}

}  // namespace

Molecule parse_smiles(const std::string& smiles, const ParseOptions& options) {
  Parser parser(smiles, options);
  return parser.run();
}

std::string canonical_form(const Molecule& m) {
  if (m.atoms.empty()) return "";
  const auto comps = connected_components(m);
  if (comps.size() == 1) return canon_connected(m);
  std::vector<std::string> parts;
  parts.reserve(comps.size());
  for (const auto& atoms : comps)
    parts.push_back(canon_connected(induced_subgraph(m, atoms)));
  std::sort(parts.begin(), parts.end());
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += "." + parts[i];
  return out;
}

std::string canonical_form(const std::string& smiles) {
  return canonical_form(parse_smiles(smiles));
}

std::string random_rewrite(const Molecule& m, std::uint64_t seed) {
  if (m.atoms.empty()) return "";
  Rng rng(seed);
  const auto comps = connected_components(m);
  std::vector<int> comp_order(comps.size());
  std::iota(comp_order.begin(), comp_order.end(), 0);
  shuffle(comp_order, rng);
  std::string out;
  for (std::size_t ci = 0; ci < comp_order.size(); ++ci) {
    const Molecule sub = induced_subgraph(m, comps[comp_order[ci]]);
    AtomGraph g(sub);
    std::vector<int> ranks(sub.atoms.size());
    std::iota(ranks.begin(), ranks.end(), 0);
    shuffle(ranks, rng);
    Emitter em(g, ranks);
    int root = 0;
    for (int i = 0; i < sub.num_atoms(); ++i)
      if (ranks[i] < ranks[root]) root = i;
    if (!out.empty()) out += ".";
    out += em.emit(root);
  }
  return out;
}

Molecule induced_subgraph(const Molecule& m, const std::vector<int>& atom_ids) {
  Molecule sub;
  std::vector<int> remap(m.atoms.size(), -1);
  for (std::size_t i = 0; i < atom_ids.size(); ++i) {
    const Atom& src = m.atoms[atom_ids[i]];
    Atom a = src;
    a.index = static_cast<int>(i);
    remap[atom_ids[i]] = a.index;
    sub.atoms.push_back(std::move(a));
  }
  for (const Bond& b : m.bonds) {
    if (remap[b.begin] < 0 || remap[b.end] < 0) continue;
    Bond nb = b;
    nb.begin = remap[b.begin];
    nb.end = remap[b.end];
    nb.index = static_cast<int>(sub.bonds.size());
    sub.bonds.push_back(nb);
  }
  const auto comps = connected_components(sub);
  sub.multi_component = comps.size() > 1;
  return sub;
}

}  // namespace chg
