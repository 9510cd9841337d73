#pragma once

#include <span>
#include <string>
#include <vector>

#include "moedti/kg.hpp"
#include "moedti/tensor.hpp"

namespace moedti {

// Pretrained entity/relation embeddings plus training metadata. The
// entity matrix row order matches entity_ids; every drug and target has
// a row because they are registered in the KG vocabulary.
struct EntityEmbeddingTable {
  int64_t dim = 0;
  std::string method;  // "transe" | "rotate"
  uint64_t seed = 0;
  int64_t epochs = 0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // mean loss per epoch

  std::vector<std::string> entity_ids;
  TensorPtr entity;    // [|E|, dim]
  TensorPtr relation;  // [|R|, dim]; rotate uses the first dim/2 columns as phases
};

struct KgTrainConfig {
  int64_t dim = 32;
  double margin = 1.0;
  double lr = 0.01;
  int64_t epochs = 100;
  uint64_t seed = 7;
};

// Score helpers (exposed for tests).
double transe_distance(std::span<const double> h, std::span<const double> r,
                       std::span<const double> t);
double margin_hinge(double margin, double pos_dist, double neg_dist);
// h, t of even length d; phases of length d/2.
double rotate_distance(std::span<const double> h, std::span<const double> phases,
                       std::span<const double> t);

// Margin-ranking TransE with 1:1 filtered negative sampling. Entity
// rows are L2-renormalized at every epoch boundary.
EntityEmbeddingTable pretrain_transe(const KnowledgeGraph& kg,
                                     const KgTrainConfig& cfg);

// Sigmoid margin loss on the negated rotation distance (no
// self-adversarial weighting). Requires even dim; relation phases are
// kept in (-pi, pi].
EntityEmbeddingTable pretrain_rotate(const KnowledgeGraph& kg,
                                     const KgTrainConfig& cfg);

EntityEmbeddingTable pretrain_embeddings(const KnowledgeGraph& kg,
                                         const std::string& method,
                                         const KgTrainConfig& cfg);

void save_embeddings(const EntityEmbeddingTable& table, const std::string& path);
EntityEmbeddingTable load_embeddings(const std::string& path);

// The table must cover exactly the graph's entity vocabulary.
void validate_embeddings(const EntityEmbeddingTable& table,
                         const KnowledgeGraph& kg);

}  // namespace moedti
