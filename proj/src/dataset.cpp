//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "chg/error.hpp"
#include "chg/perception.hpp"
#include "chg/rng.hpp"
#include "chg/smiles.hpp"

namespace chg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line).empty())
    throw DataError("empty dataset: no header row");

  const std::vector<std::string> header = split_fields(line);
  int smiles_col = -1;
  Dataset ds;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "smiles") {
      if (smiles_col >= 0)
        throw DataError("duplicate smiles column in header");
      smiles_col = static_cast<int>(i);
    } else {
      ds.label_names.push_back(header[i]);
    }
  }
  if (smiles_col < 0) throw DataError("missing smiles column in header");

  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw DataError("row " + std::to_string(lineno) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    Record rec;
    rec.smiles = fields[static_cast<std::size_t>(smiles_col)];
    // A usable row must survive perception too (valence checks live there),
    // since preprocessing perceives every record.
    bool parses = !rec.smiles.empty();
    if (parses) {
      try {
        perceive(parse_smiles(rec.smiles));
      } catch (const Error&) {
        parses = false;
      }
    }
    if (!parses) {
      ++ds.skipped;
      continue;
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (static_cast<int>(i) == smiles_col) continue;
      if (fields[i].empty()) {
        rec.labels.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
        rec.labels.push_back(v);
      } catch (const std::exception&) {
        throw DataError("row " + std::to_string(lineno) +
                        ": non-numeric label '" + fields[i] + "'");
      }
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty())
    throw DataError("empty dataset: no usable rows (skipped " +
                    std::to_string(ds.skipped) + ")");
  return ds;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_csv(os.str());
}

SplitIndices split(std::size_t n, const SplitSpec& spec) {
  if (n < 5)
    throw DataError("dataset too small to split: " + std::to_string(n) +
                    " rows, need at least 5");
  if (!(spec.train > 0.0) || !(spec.valid > 0.0) ||
      spec.train + spec.valid >= 1.0)
    throw DataError("split ratios must be positive and leave a test share");

  // Integer cut points; ratios are taken to micro-precision so floor() never
  // hinges on floating-point representation.
  const long long ntr =
      static_cast<long long>(n) * std::llround(spec.train * 1e6) / 1000000;
  const long long nva =
      static_cast<long long>(n) * std::llround(spec.valid * 1e6) / 1000000;

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  shuffle(perm, rng);

  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + ntr);
  out.valid.assign(perm.begin() + ntr, perm.begin() + ntr + nva);
  out.test.assign(perm.begin() + ntr + nva, perm.end());
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
  Dataset out;
  out.label_names = ds.label_names;
  out.records.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= ds.records.size())
      throw DataError("subset index out of range: " + std::to_string(i));
    out.records.push_back(ds.records[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::uint64_t corpus_hash(const Dataset& ds) {
  std::ostringstream os;
  for (const auto& name : ds.label_names) os << name << ',';
  os << '\n';
  char buf[40];
  for (const auto& rec : ds.records) {
    os << rec.smiles;
    for (double v : rec.labels) {
      if (std::isnan(v)) {
        os << ",?";
      } else {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        os << buf;
      }
    }
    os << '\n';
  }
  const std::string s = os.str();
  return fnv1a64(s.data(), s.size());
}

}  // namespace chg
