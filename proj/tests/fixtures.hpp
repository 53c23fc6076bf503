//
// Project CHG - Copyright 2026 CHG Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CHG_TESTS_FIXTURES_HPP
#define CHG_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

// Hand-picked molecules used across the test files: chains, branches,
// aromatics, fused and bridged rings, charges, and every bond order the
// parser supports. All are valid inputs for the supported SMILES subset.
inline const std::vector<std::string>& fixture_molecules() {
  static const std::vector<std::string> mols = {
      "C",
      "CC",
      "CCO",
      "OCC",
      "C(C)(C)O",
      "CC(C)C",
      "CC(C)(C)C",
      "CCN",
      "CCCl",
      "CCBr",
      "CCI",
      "CCF",
      "C=C",
      "C#N",
      "CC#N",
      "C=O",
      "CC=O",
      "CC(C)=O",
      "CC(=O)O",
      "CC(=O)OC",
      "CC(=O)N",
      "CC(=O)NC",
      "COC",
      "CCOCC",
      "CS",
      "CCS",
      "CS(=O)(=O)C",
      "C[N+](C)(C)C",
      "CC(=O)[O-]",
      "[NH4+]",
      "c1ccccc1",
      "Cc1ccccc1",
      "c1ccncc1",
      "c1ccc2ccccc2c1",
      "c1ccoc1",
      "c1ccsc1",
      "c1cc[nH]c1",
      "Cc1cccc(C)c1",
      "Oc1ccccc1",
      "Nc1ccccc1",
      "Clc1ccccc1",
      "c1ccc(cc1)C(=O)O",
      "C1CCCCC1",
      "C1CCCC1",
      "C1CC1",
      "C1CCOC1",
      "C1CCNC1",
      "C1CCNCC1",
      "C1CC2CCC1C2",
      "C1CC2(CC1)CCCC2",
      "c1ccc(-c2ccccc2)cc1",
      "c1ccc(Cc2ccccc2)cc1",
      "O=C(O)c1ccccc1",
      "CC(N)C(=O)O",
      "NCCS",
      "CN1CCCC1",
      "CC1=CCCCC1",
      "C/C=C/C",
      "C/C=C\\C",
      "N#Cc1ccccc1",
      "[O-]C(=O)c1ccccc1",
      "C[C@H](N)C(=O)O",
      "C[C@@H](O)CC",
  };
  return mols;
}

#endif  // CHG_TESTS_FIXTURES_HPP
