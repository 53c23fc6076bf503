//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//
// CSV corpus loading and deterministic splitting. Datasets carry raw SMILES
// plus optional per-task numeric labels; NaN marks a missing label.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chg {

struct Record {
  std::string smiles;
  std::vector<double> labels;  // one per label column; NaN = missing
};

struct Dataset {
  std::vector<std::string> label_names;
  std::vector<Record> records;
  int skipped = 0;  // rows dropped because the SMILES failed to parse

  std::size_t size() const { return records.size(); }
  int n_tasks() const { return static_cast<int>(label_names.size()); }
};

// Parses CSV text with a header row `smiles[,label1,...]`. The smiles column
// may appear at any position; every other column is a label column. Rows
// whose SMILES does not parse are counted in `skipped` and dropped; empty
// label cells become NaN. Throws DataError for a missing smiles column, a
// malformed row, a non-numeric label, or when no usable rows remain.
Dataset parse_csv(const std::string& text);

// parse_csv over a file's contents. Throws IoError when unreadable.
Dataset load_csv(const std::string& path);

struct SplitSpec {
  double train = 0.6;
  double valid = 0.2;  // test takes the remainder
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<int> train, valid, test;
};

// Seeded shuffle of [0, n), then cuts of floor(train*n) and floor(valid*n)
// rows; the remainder is the test set. Disjoint and covering by
// construction. Throws DataError when n < 5 or the ratios are inconsistent.
SplitIndices split(std::size_t n, const SplitSpec& spec);

// New dataset with the selected rows, in the given order.
Dataset subset(const Dataset& ds, const std::vector<int>& indices);

// Content hash over label names, rows, and labels; identifies a corpus for
// cache keying.
std::uint64_t corpus_hash(const Dataset& ds);

}  // namespace chg
