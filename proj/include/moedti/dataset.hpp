#pragma once

#include <map>
#include <string>
#include <vector>

#include "moedti/rng.hpp"

namespace moedti {

struct DtiPair {
  std::string drug, target;
  bool operator==(const DtiPair&) const = default;
  bool operator<(const DtiPair& o) const {
    return drug != o.drug ? drug < o.drug : target < o.target;
  }
};

// Few-shot DTI dataset: `shots` positives (and as many negatives) are
// held out for training, everything else becomes the test pool with
// negatives drawn 1:1. Pairs referencing drugs without a usable SMILES
// or targets without a sequence are dropped with a warning. When the
// negative file is missing or runs short, negatives are sampled
// uniformly from unlabeled pairs and the dataset is flagged.
struct DtiDataset {
  std::vector<DtiPair> train_pos, train_neg, test_pos, test_neg;
  std::map<std::string, std::string> smiles;     // drug id -> SMILES
  std::map<std::string, std::string> sequences;  // target id -> residues
  std::vector<std::string> drug_ids, target_ids;  // universe, sorted
  int64_t shots = 0;
  uint64_t seed = 0;
  bool sampled_unlabeled_negatives = false;
  std::vector<std::string> warnings;
};

// neg_path may be empty (no negative file). The sequence file may be
// TSV (id<TAB>sequence) or FASTA.
DtiDataset load_dti_dataset(const std::string& pos_path, const std::string& neg_path,
                            const std::string& smiles_path,
                            const std::string& sequences_path, int64_t shots,
                            uint64_t seed);

// Shared low-level readers.
std::vector<DtiPair> read_pair_tsv(const std::string& path);
std::map<std::string, std::string> read_two_column_tsv(const std::string& path,
                                                       const char* what);
std::map<std::string, std::string> read_sequences(const std::string& path);

}  // namespace moedti
