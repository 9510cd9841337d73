#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moedti/config.hpp"
#include "moedti/rng.hpp"

namespace moedti {

// Tiny molecular graph used by the generator: element symbols plus an
// explicit bond list. Valences are respected by construction so the
// emitted SMILES always round-trips through the parser.
struct GenMol {
  struct Bond {
    int a = 0, b = 0, order = 1;
  };
  std::vector<std::string> atoms;
  std::vector<Bond> bonds;
};

// Depth-first SMILES emission with ring-closure digits. The graph must
// be connected; bond orders 1-3 are supported.
std::string write_smiles(const GenMol& m);

// Random connected C/N/O skeleton with optional rings; every atom keeps
// at least implicit-H room, so extra leaf atoms can be attached later.
GenMol random_molecule(Rng& rng, int min_atoms, int max_atoms);

// Attaches a single-bonded leaf atom to some atom with free valence.
void attach_leaf(GenMol& m, const std::string& element, Rng& rng);

// Planted structural vocabulary, exposed so consumers can verify
// generated worlds. Marker lists cycle past four communities.
extern const std::vector<std::string> kMarkerElements;
extern const std::vector<std::string> kMarkerKmers;
extern const std::string kMotifElement;
extern const std::string kInteractionKmer;
extern const std::string kBackgroundResidues;

struct WorldSpec {
  int64_t drugs = 60, targets = 60, entities = 500;
  int64_t communities = 4;
  double motif_rate = 0.4;        // drugs carrying the interaction motif
  double kmer_rate = 0.45;        // targets carrying the interaction k-mer
  double marker_fidelity = 0.85;  // community marker matches the community
  int64_t drug_degree = 6, target_degree = 6, entity_degree = 4;
  double cross_rate = 0.05;  // cross-community noise edges, as a fraction
  int64_t dti_edges = 12;    // planted drug-target triples (leakage bait)
  int64_t seq_min = 60, seq_max = 120;
  int64_t mol_min = 8, mol_max = 16;
  uint64_t seed = 1;
  static WorldSpec from_config(const Config& cfg);
  void validate() const;
};

// A fully described benchmark world. The interaction rule is
//   interacts(d, t) = same community OR (motif drug AND k-mer target)
// and is recomputable from the stored flags for every pair. Community
// membership also leaves label-neutral traces in the structures (a
// marker element per drug community, a marker 5-mer per target
// community, both at marker_fidelity), so the structure expert can in
// principle recover what the knowledge graph shows directly.
struct SyntheticWorld {
  WorldSpec spec;
  std::vector<std::string> drug_ids, target_ids, other_ids;
  std::vector<int> drug_comm, target_comm, other_comm;
  std::vector<bool> drug_motif, target_kmer;
  std::vector<int> drug_marker, target_marker;  // realized marker community
  std::vector<std::string> drug_smiles, target_seqs;
  struct Triple {
    std::string h, r, t;
  };
  std::vector<Triple> triples;

  bool interacts(int64_t di, int64_t ti) const;
  int64_t count_positive_pairs() const;
  double positive_rate() const;
};

SyntheticWorld generate_synthetic_world(const WorldSpec& spec);

// File layout shared by gen-synth and the consumers.
struct WorldFiles {
  std::string triples, drugs, targets, smiles, sequences, pairs_pos, pairs_neg;
  static WorldFiles in_dir(const std::string& dir);
};

// Writes the world in the exact formats the ingestion path reads.
// Deterministic: same world, same bytes.
void write_world(const SyntheticWorld& w, const std::string& dir);

}  // namespace moedti
