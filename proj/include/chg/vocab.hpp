//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_VOCAB_HPP
#define CHG_VOCAB_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "chg/smiles.hpp"

namespace chg {

struct VocabEntry {
  std::string key;  // canonical form of the fragment subgraph
  long long frequency = 0;
  int atom_count = 0;
};

// Fragment vocabulary in mining order: single-atom keys first (sorted), then
// merged keys in the order they were adopted. Keys are unique.
class FragmentVocab {
public:
  void add(VocabEntry entry);
  const VocabEntry* find(const std::string& key) const;
  bool contains(const std::string& key) const { return find(key) != nullptr; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<VocabEntry>& entries() const { return entries_; }

private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, int> index_;
};

struct Fragment {
  std::vector<int> atoms;  // ascending parent-molecule atom indices
  std::vector<int> bonds;  // parent bond indices with both ends inside
  std::string key;
};

// Partition of a molecule's atoms into connected fragments.
struct Decomposition {
  std::vector<Fragment> fragments;  // ordered by smallest atom index
  std::vector<int> fragment_of;     // atom index -> fragment index
};

// Frequency-driven mining: every atom starts as its own fragment; each round
// counts the canonical keys of all adjacent fragment-pair merges across the
// corpus (non-overlapping per key, first come by atom index), adopts the most
// frequent new key (ties: lexicographically smaller), and merges its
// occurrences everywhere. Stops at target_size entries or when no new key
// occurs at least twice. Output depends only on the corpus order; the seed is
// accepted for interface stability and recorded nowhere.
FragmentVocab build_vocab(const std::vector<Molecule>& corpus, int target_size,
                          std::uint64_t seed);

// Greedy reassembly under a fixed vocabulary: repeatedly merge the adjacent
// fragment pair whose merged key has the highest vocabulary frequency (ties:
// lexicographically smaller key, then lowest atom indices). Throws VocabError
// when the molecule contains a single-atom key missing from the vocabulary.
Decomposition decompose(const Molecule& m, const FragmentVocab& v);

// One fragment per connected component. Used when no vocabulary is supplied.
Decomposition whole_component_decomposition(const Molecule& m);

// Text format: "#psm-vocab v1 size=<n>" header, then one
// "<key>\t<frequency>\t<atom_count>" row per entry, in vocabulary order.
void save_vocab(const FragmentVocab& v, const std::string& path);
FragmentVocab load_vocab(const std::string& path);
std::string vocab_to_string(const FragmentVocab& v);
FragmentVocab vocab_from_string(const std::string& text);

}  // namespace chg

#endif  // CHG_VOCAB_HPP
