//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_ERROR_HPP
#define CHG_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chg {

// Base class for every error thrown by the library. The C API maps these to
// stable integer codes, so new subclasses must be added to capi.cpp as well.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// SMILES syntax errors. `pos` is a byte offset into the input string and is
// only meaningful for kinds that carry a position (kUnknownSymbol).
class ParseError : public Error {
public:
  enum class Kind {
    kUnbalancedParenthesis,
    kUnclosedRingBond,
    kUnknownSymbol,
    kUnsupportedFeature,
    kInvalidSyntax,
  };

  ParseError(Kind kind, const std::string& msg, std::size_t pos = 0,
             int ring_number = -1)
      : Error(msg), kind_(kind), pos_(pos), ring_number_(ring_number) {}

  Kind kind() const { return kind_; }
  std::size_t pos() const { return pos_; }
  int ring_number() const { return ring_number_; }

private:
  Kind kind_;
  std::size_t pos_;
  int ring_number_;
};

// Bond-order sum exceeds the maximum allowed valence for the atom's element
// and charge.
class ValenceError : public Error {
public:
  ValenceError(int atom_index, const std::string& msg)
      : Error(msg), atom_index_(atom_index) {}
  int atom_index() const { return atom_index_; }

private:
  int atom_index_;
};

class VocabError : public Error {
public:
  using Error::Error;
};

class GraphError : public Error {
public:
  using Error::Error;
};

class TensorError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

// roc_auc on a label vector with only one class present. Multi-task wrappers
// catch this and skip the task instead of failing the whole evaluation.
class SingleClassError : public Error {
public:
  using Error::Error;
};

class MetricError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace chg

#endif  // CHG_ERROR_HPP
