#pragma once

#include <map>
#include <string>
#include <vector>

#include "moedti/tensor.hpp"

namespace moedti {

// 20 amino acids plus X for anything unrecognized.
inline constexpr int kResidueAlphabet = 21;
int residue_index(char c);

struct ResidueSequence {
  std::string target_id;
  std::vector<int64_t> residues;  // indices in [0, kResidueAlphabet)
  bool truncated = false;
  int64_t original_length = 0;
};

// Uppercases, maps unknown letters to X, truncates at max_len.
ResidueSequence encode_residues(const std::string& target_id,
                                const std::string& sequence, int64_t max_len);

// Per-residue features: either a learned embedding table (trainable)
// or a per-target matrix loaded from a precomputed feature file.
class ResidueFeaturizer {
 public:
  static ResidueFeaturizer learned(int e_dim, Rng& rng);
  static ResidueFeaturizer precomputed(const std::string& path);
  static ResidueFeaturizer precomputed_from(std::map<std::string, TensorPtr> per_target);

  TensorPtr features(const ResidueSequence& s) const;  // [M, e_dim]
  std::vector<TensorPtr> parameters() const;
  int e_dim() const { return e_dim_; }
  bool is_learned() const { return static_cast<bool>(table_); }
  TensorPtr table() const { return table_; }
  bool covers(const std::string& target_id) const;
  const std::map<std::string, TensorPtr>& per_target() const { return per_target_; }

 private:
  int e_dim_ = 0;
  TensorPtr table_;  // learned mode
  std::map<std::string, TensorPtr> per_target_;  // precomputed mode
};

// Writes the precomputed-feature binary (used by tests and tooling).
void save_residue_features(const std::map<std::string, TensorPtr>& features,
                           const std::string& path);

// 1-d CNN target encoder: K same-padded conv+ReLU layers over the
// residue features, adaptive max pool to a fixed length, then a linear
// projection. Output width is independent of sequence length.
class SeqEncoder {
 public:
  struct Spec {
    int kernel = 5;
    std::vector<int> channels = {16, 32, 32};
    int pool_len = 8;
    int out_dim = 32;
  };

  SeqEncoder(const Spec& spec, int e_dim, Rng& rng);

  TensorPtr encode(const ResidueSequence& s, const ResidueFeaturizer& f) const;
  std::vector<TensorPtr> parameters() const;
  const Spec& spec() const { return spec_; }

  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;
  void load_parameters(const std::vector<std::pair<std::string, TensorPtr>>& named);

 private:
  Spec spec_;
  std::vector<TensorPtr> kernels_, conv_b_;
  TensorPtr proj_w_, proj_b_;
};

}  // namespace moedti
