#pragma once

#include <vector>

#include "moedti/smiles.hpp"
#include "moedti/tensor.hpp"

namespace moedti {

// Graph convolutional molecule encoder. Message passing uses the
// symmetric normalization 1/sqrt((deg u + 1)(deg v + 1)) over
// N(v) + {v}; the readout applies a per-node MLP and takes the
// coordinate-wise max over nodes, so the embedding does not depend on
// atom ordering.
class MolEncoder {
 public:
  struct Spec {
    int layers = 3;
    int hidden = 64;
    int out_dim = 32;
  };

  // Per-molecule constants, computed once and reused across epochs.
  struct Prepared {
    TensorPtr features;  // [n_atoms, kAtomFeatureDim]
    TensorPtr norm_adj;  // [n_atoms, n_atoms]
  };

  MolEncoder(const Spec& spec, Rng& rng);

  static Prepared prepare(const MolecularGraph& g);

  TensorPtr encode(const Prepared& p) const;  // [1, out_dim]
  TensorPtr encode(const MolecularGraph& g) const;

  std::vector<TensorPtr> parameters() const;
  const Spec& spec() const { return spec_; }

  // Bundle round-trips.
  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;
  void load_parameters(const std::vector<std::pair<std::string, TensorPtr>>& named);

 private:
  Spec spec_;
  std::vector<TensorPtr> w_, b_;
  TensorPtr ro_w1_, ro_b1_, ro_w2_, ro_b2_;
};

}  // namespace moedti
