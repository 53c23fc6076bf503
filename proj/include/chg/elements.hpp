//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_ELEMENTS_HPP
#define CHG_ELEMENTS_HPP

#include <string>
#include <vector>

namespace chg {

// Static periodic-table data for Z = 1..86 plus the valence model used for
// implicit-hydrogen assignment. Everything here is pinned; featurization and
// canonical forms depend on these exact numbers.
namespace elements {

// 0 if the symbol is unknown. Case-sensitive ("Cl" != "CL").
int atomic_number(const std::string& symbol);

// Empty string for out-of-range Z.
const std::string& symbol(int atomic_number);

// Standard atomic weight. 0.0 for out-of-range Z.
double mass(int atomic_number);

// Allowed valences for the implicit-hydrogen model, smallest first.
// Only the organic subset has entries: B {3}, C {4}, N {3}, O {2}, P {3,5},
// S {2,4,6}, F/Cl/Br/I {1}. Empty for every other element, which means
// implicit hydrogens are never added and no valence cap is enforced.
const std::vector<int>& default_valences(int atomic_number);

// Valence shift caused by a formal charge. For B and C a charge of either
// sign removes a bonding slot (-|q|); for the other organic-subset elements
// the shift equals the charge itself (N+ binds four, O- binds one).
int charge_valence_shift(int atomic_number, int formal_charge);

// True for elements that may carry the aromatic flag: B C N O P S Se As.
bool aromatic_allowed(int atomic_number);

// True for elements readable without brackets: B C N O P S F Cl Br I.
bool in_organic_subset(int atomic_number);

}  // namespace elements
}  // namespace chg

#endif  // CHG_ELEMENTS_HPP
