//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "chg/elements.hpp"

#include <array>
#include <cstdlib>
#include <unordered_map>

namespace chg {
namespace elements {

namespace {

struct ElementRow {
  const char* symbol;
  double mass;
};

// Z = 1..86, standard atomic weights (CIAAW abridged values).
constexpr std::array<ElementRow, 87> kTable = {{
    {"", 0.0},       {"H", 1.008},    {"He", 4.0026},  {"Li", 6.94},
    {"Be", 9.0122},  {"B", 10.811},   {"C", 12.011},   {"N", 14.007},
    {"O", 15.999},   {"F", 18.998},   {"Ne", 20.180},  {"Na", 22.990},
    {"Mg", 24.305},  {"Al", 26.982},  {"Si", 28.086},  {"P", 30.974},
    {"S", 32.065},   {"Cl", 35.453},  {"Ar", 39.948},  {"K", 39.098},
    {"Ca", 40.078},  {"Sc", 44.956},  {"Ti", 47.867},  {"V", 50.942},
    {"Cr", 51.996},  {"Mn", 54.938},  {"Fe", 55.845},  {"Co", 58.933},
    {"Ni", 58.693},  {"Cu", 63.546},  {"Zn", 65.38},   {"Ga", 69.723},
    {"Ge", 72.63},   {"As", 74.922},  {"Se", 78.971},  {"Br", 79.904},
    {"Kr", 83.798},  {"Rb", 85.468},  {"Sr", 87.62},   {"Y", 88.906},
    {"Zr", 91.224},  {"Nb", 92.906},  {"Mo", 95.95},   {"Tc", 98.0},
    {"Ru", 101.07},  {"Rh", 102.91},  {"Pd", 106.42},  {"Ag", 107.87},
    {"Cd", 112.41},  {"In", 114.82},  {"Sn", 118.71},  {"Sb", 121.76},
    {"Te", 127.60},  {"I", 126.904},  {"Xe", 131.29},  {"Cs", 132.91},
    {"Ba", 137.33},  {"La", 138.91},  {"Ce", 140.12},  {"Pr", 140.91},
    {"Nd", 144.24},  {"Pm", 145.0},   {"Sm", 150.36},  {"Eu", 151.96},
    {"Gd", 157.25},  {"Tb", 158.93},  {"Dy", 162.50},  {"Ho", 164.93},
    {"Er", 167.26},  {"Tm", 168.93},  {"Yb", 173.05},  {"Lu", 174.97},
    {"Hf", 178.49},  {"Ta", 180.95},  {"W", 183.84},   {"Re", 186.21},
    {"Os", 190.23},  {"Ir", 192.22},  {"Pt", 195.08},  {"Au", 196.97},
    {"Hg", 200.59},  {"Tl", 204.38},  {"Pb", 207.2},   {"Bi", 208.98},
    {"Po", 209.0},   {"At", 210.0},   {"Rn", 222.0},
}};

const std::unordered_map<std::string, int>& symbol_map() {
  static const std::unordered_map<std::string, int> map = [] {
    std::unordered_map<std::string, int> m;
    for (int z = 1; z <= 86; ++z) m.emplace(kTable[z].symbol, z);
    return m;
  }();
  return map;
}

}  // namespace

int atomic_number(const std::string& symbol) {
  auto it = symbol_map().find(symbol);
  return it == symbol_map().end() ? 0 : it->second;
}

const std::string& symbol(int atomic_number) {
  static const std::string empty;
  static const std::array<std::string, 87> symbols = [] {
    std::array<std::string, 87> s;
    for (int z = 0; z <= 86; ++z) s[z] = kTable[z].symbol;
    return s;
  }();
  if (atomic_number < 1 || atomic_number > 86) return empty;
  return symbols[atomic_number];
}

double mass(int atomic_number) {
  if (atomic_number < 1 || atomic_number > 86) return 0.0;
  return kTable[atomic_number].mass;
}

const std::vector<int>& default_valences(int atomic_number) {
  static const std::vector<int> none;
  static const std::vector<int> v1{1};
  static const std::vector<int> v2{2, 4, 6};
  static const std::vector<int> v3{3};
  static const std::vector<int> v4{4};
  static const std::vector<int> v35{3, 5};
  switch (atomic_number) {
    case 5: return v3;    // B
    case 6: return v4;    // C
    case 7: return v3;    // N
    case 8: {
      static const std::vector<int> vo{2};
      return vo;          // O
    }
    case 15: return v35;  // P
    case 16: return v2;   // S
    case 9:
    case 17:
    case 35:
    case 53: return v1;   // F Cl Br I
    default: return none;
  }
}

int charge_valence_shift(int atomic_number, int formal_charge) {
  if (formal_charge == 0) return 0;
  if (atomic_number == 5 || atomic_number == 6) return -std::abs(formal_charge);
  return formal_charge;
}

bool aromatic_allowed(int atomic_number) {
  switch (atomic_number) {
    case 5:
    case 6:
    case 7:
    case 8:
    case 15:
    case 16:
    case 33:
    case 34: return true;
    default: return false;
  }
}

bool in_organic_subset(int atomic_number) {
  switch (atomic_number) {
    case 5:
    case 6:
    case 7:
    case 8:
    case 9:
    case 15:
    case 16:
    case 17:
    case 35:
    case 53: return true;
    default: return false;
  }
}

}  // namespace elements
}  // namespace chg
