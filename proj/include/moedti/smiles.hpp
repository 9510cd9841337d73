#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "moedti/errors.hpp"

namespace moedti {

enum class BondOrder : int { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

struct AtomNode {
  std::string element;   // canonical symbol, e.g. "C", "Cl", "Se"
  int formal_charge = 0;
  bool aromatic = false;
  int explicit_h = 0;    // bracket H count; bare atoms carry 0
  int degree = 0;        // heavy-atom graph degree
  std::size_t offset = 0;  // byte offset of the atom token in the source
};

struct Bond {
  int a = 0, b = 0;
  BondOrder order = BondOrder::kSingle;
};

struct MolecularGraph {
  std::vector<AtomNode> atoms;
  std::vector<Bond> bonds;
  std::string source;
  std::vector<std::string> warnings;  // skipped stereo/isotope annotations

  std::vector<std::vector<int>> adjacency() const;
  bool connected() const;
};

// Parses a single-molecule SMILES string: organic-subset bare atoms
// (B C N O P S F Cl Br I, aromatic b c n o p s), bracket atoms with
// charge and explicit-H counts, bonds - = # :, branches, ring closures
// including %nn. Stereo marks, isotopes, and atom classes are skipped
// with a warning; no kekulization or implicit-H computation. Dots
// (disconnected fragments) are rejected. Failures throw ParseError with
// a kind and the byte offset (end-of-input problems report s.size()).
//
// ParseError kinds: empty-input, unknown-token, unmatched-branch-open,
// unmatched-branch-close, branch-without-atom, unclosed-ring,
// dangling-bond, dangling-ring, ring-bond-mismatch, ring-self-bond,
// duplicate-bond, multi-fragment, unclosed-bracket, bad-bracket,
// valence.
MolecularGraph parse_smiles(const std::string& s);

// 28 values: element one-hot (B C N O P S F Cl Br I other) + degree
// one-hot (0..5, clamped) + formal-charge one-hot (-2..+2, clamped) +
// aromatic flag + explicit-H one-hot (0..4, clamped).
inline constexpr int kAtomFeatureDim = 28;
std::vector<double> featurize_atom(const MolecularGraph& g, int atom_idx);

}  // namespace moedti
