//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chg/error.hpp"

namespace chg {

void FragmentVocab::add(VocabEntry entry) {
  if (index_.count(entry.key)) {
    throw VocabError("duplicate vocabulary key: " + entry.key);
  }
  index_.emplace(entry.key, static_cast<int>(entries_.size()));
  entries_.push_back(std::move(entry));
}

const VocabEntry* FragmentVocab::find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

namespace {

// Mining state for one molecule: the current fragment partition plus a memo
// of canonical keys for atom sets already canonicalized.
struct MolState {
  const Molecule* mol;
  std::vector<std::vector<int>> fragments;  // ascending atom ids; empty = dead
  std::vector<int> frag_of;
  std::map<std::vector<int>, std::string> key_memo;

  explicit MolState(const Molecule& m) : mol(&m) {
    fragments.reserve(m.atoms.size());
    frag_of.resize(m.atoms.size());
    for (int i = 0; i < m.num_atoms(); ++i) {
      fragments.push_back({i});
      frag_of[i] = i;
    }
  }

  const std::string& key_for(const std::vector<int>& atoms) {
    auto it = key_memo.find(atoms);
    if (it != key_memo.end()) return it->second;
    const std::string key = canonical_form(induced_subgraph(*mol, atoms));
    return key_memo.emplace(atoms, key).first->second;
  }

  // Distinct adjacent fragment pairs, each with the merged atom set.
  struct Candidate {
    std::vector<int> atoms;
    int f1, f2;
    std::string key;
  };

  std::vector<Candidate> candidates() {
    std::set<std::pair<int, int>> pairs;
    for (const Bond& b : mol->bonds) {
      int f1 = frag_of[b.begin];
      int f2 = frag_of[b.end];
      if (f1 != f2) pairs.insert(std::minmax(f1, f2));
    }
    std::vector<Candidate> out;
    out.reserve(pairs.size());
    for (const auto& [f1, f2] : pairs) {
      Candidate c;
      c.f1 = f1;
      c.f2 = f2;
      c.atoms.reserve(fragments[f1].size() + fragments[f2].size());
      std::merge(fragments[f1].begin(), fragments[f1].end(),
                 fragments[f2].begin(), fragments[f2].end(),
                 std::back_inserter(c.atoms));
      c.key = key_for(c.atoms);
      out.push_back(std::move(c));
    }
    // First-come order is by ascending merged atom set.
    std::sort(out.begin(), out.end(),
              [](const Candidate& a, const Candidate& b) {
                return a.atoms < b.atoms;
              });
    return out;
  }

  void merge(int f1, int f2) {
    std::vector<int> merged;
    std::merge(fragments[f1].begin(), fragments[f1].end(),
               fragments[f2].begin(), fragments[f2].end(),
               std::back_inserter(merged));
    for (int a : merged) frag_of[a] = static_cast<int>(fragments.size());
    fragments.push_back(std::move(merged));
    fragments[f1].clear();
    fragments[f2].clear();
  }
};

std::string single_atom_key(const Molecule& m, int atom) {
  return canonical_form(induced_subgraph(m, {atom}));
}

}  // namespace

FragmentVocab build_vocab(const std::vector<Molecule>& corpus, int target_size,
                          std::uint64_t seed) {
  (void)seed;
  if (corpus.empty()) throw VocabError("empty corpus");
  if (target_size < 1) throw VocabError("target size must be positive");

  FragmentVocab vocab;

  // Single-atom keys, sorted, with their total occurrence counts.
  std::map<std::string, long long> singles;
  for (const Molecule& m : corpus) {
    for (int i = 0; i < m.num_atoms(); ++i) ++singles[single_atom_key(m, i)];
  }
  for (const auto& [key, freq] : singles) {
    vocab.add({key, freq, 1});
  }

  std::vector<MolState> states;
  states.reserve(corpus.size());
  for (const Molecule& m : corpus) states.emplace_back(m);

  while (vocab.size() < target_size) {
    // Count every candidate key, non-overlapping per key within a molecule.
    struct Tally {
      long long count = 0;
      int atoms = 0;
    };
    std::map<std::string, Tally> counts;
    for (MolState& st : states) {
      std::map<std::string, std::set<int>> used;  // key -> consumed atoms
      for (const auto& cand : st.candidates()) {
        if (vocab.contains(cand.key)) continue;
        std::set<int>& taken = used[cand.key];
        bool overlap = false;
        for (int a : cand.atoms) {
          if (taken.count(a)) {
            overlap = true;
            break;
          }
        }
        if (overlap) continue;
        taken.insert(cand.atoms.begin(), cand.atoms.end());
        Tally& t = counts[cand.key];
        ++t.count;
        t.atoms = static_cast<int>(cand.atoms.size());
      }
    }

    std::string best_key;
    Tally best;
    for (const auto& [key, tally] : counts) {
      if (tally.count > best.count) {
        best_key = key;
        best = tally;
      }
      // map iteration is ascending, so ties keep the smaller key
    }
    if (best.count < 2) break;

    // Merge the adopted key's occurrences, ascending by atom set, skipping
    // overlaps with merges already applied this round.
    for (MolState& st : states) {
      std::set<int> consumed;  // fragment ids retired this round
      for (const auto& cand : st.candidates()) {
        if (cand.key != best_key) continue;
        if (consumed.count(cand.f1) || consumed.count(cand.f2)) continue;
        st.merge(cand.f1, cand.f2);
        consumed.insert(cand.f1);
        consumed.insert(cand.f2);
      }
    }
    vocab.add({best_key, best.count, best.atoms});
  }
  return vocab;
}

namespace {

Decomposition finalize(const Molecule& m,
                       std::vector<std::vector<int>> fragment_atoms) {
  // Drop dead entries, order by smallest atom index.
  std::vector<std::vector<int>> live;
  for (auto& f : fragment_atoms) {
    if (!f.empty()) live.push_back(std::move(f));
  }
  std::sort(live.begin(), live.end());

  Decomposition d;
  d.fragment_of.assign(m.atoms.size(), -1);
  for (std::size_t fi = 0; fi < live.size(); ++fi) {
    Fragment frag;
    frag.atoms = live[fi];
    for (int a : frag.atoms) d.fragment_of[a] = static_cast<int>(fi);
    frag.key = canonical_form(induced_subgraph(m, frag.atoms));
    d.fragments.push_back(std::move(frag));
  }
  for (const Bond& b : m.bonds) {
    if (d.fragment_of[b.begin] == d.fragment_of[b.end]) {
      d.fragments[d.fragment_of[b.begin]].bonds.push_back(b.index);
    }
  }
  return d;
}

}  // namespace

Decomposition decompose(const Molecule& m, const FragmentVocab& v) {
  for (int i = 0; i < m.num_atoms(); ++i) {
    const std::string key = single_atom_key(m, i);
    if (!v.contains(key)) {
      throw VocabError("element key '" + key + "' not in vocabulary");
    }
  }

  MolState st(m);
  for (;;) {
    const VocabEntry* best = nullptr;
    const MolState::Candidate* best_cand = nullptr;
    const auto cands = st.candidates();
    for (const auto& cand : cands) {
      const VocabEntry* entry = v.find(cand.key);
      if (entry == nullptr) continue;
      // Highest frequency, then smaller key, then lowest atom set; the
      // candidate list is already atom-set ordered.
      if (best == nullptr || entry->frequency > best->frequency ||
          (entry->frequency == best->frequency && entry->key < best->key)) {
        best = entry;
        best_cand = &cand;
      }
    }
    if (best_cand == nullptr) break;
    st.merge(best_cand->f1, best_cand->f2);
  }
  return finalize(m, std::move(st.fragments));
}

Decomposition whole_component_decomposition(const Molecule& m) {
  // Union-find over bonds; each component becomes one fragment.
  std::vector<int> parent(m.atoms.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Bond& b : m.bonds) parent[find(b.begin)] = find(b.end);

  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < m.num_atoms(); ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> frags;
  frags.reserve(groups.size());
  for (auto& [root, atoms] : groups) frags.push_back(std::move(atoms));
  return finalize(m, std::move(frags));
}

std::string vocab_to_string(const FragmentVocab& v) {
  std::ostringstream out;
  out << "#psm-vocab v1 size=" << v.size() << "\n";
  for (const VocabEntry& e : v.entries()) {
    out << e.key << "\t" << e.frequency << "\t" << e.atom_count << "\n";
  }
  return out.str();
}

void save_vocab(const FragmentVocab& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open vocabulary file for writing: " + path);
  out << vocab_to_string(v);
  if (!out) throw IoError("failed writing vocabulary file: " + path);
}

FragmentVocab vocab_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#psm-vocab v1 size=", 0) != 0) {
    throw IoError("missing #psm-vocab v1 header");
  }
  const int declared = std::stoi(line.substr(line.find('=') + 1));
  FragmentVocab v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw IoError("malformed vocabulary row: " + line);
    }
    VocabEntry e;
    e.key = line.substr(0, t1);
    e.frequency = std::stoll(line.substr(t1 + 1, t2 - t1 - 1));
    e.atom_count = std::stoi(line.substr(t2 + 1));
    v.add(std::move(e));
  }
  if (v.size() != declared) {
    throw IoError("vocabulary row count does not match declared size");
  }
  return v;
}

FragmentVocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return vocab_from_string(buf.str());
}

}  // namespace chg
