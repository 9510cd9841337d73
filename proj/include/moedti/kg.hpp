#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "moedti/errors.hpp"
#include "moedti/rng.hpp"

namespace moedti {

// Immutable-after-load knowledge graph. Entity/relation vocabularies
// assign dense indices in first-appearance order; the drug and target
// id sets are subsets of the entity vocabulary.
struct KnowledgeGraph {
  struct Triple {
    int64_t head = 0, rel = 0, tail = 0;
    bool operator==(const Triple&) const = default;
  };

  std::vector<std::string> entity_ids;
  std::vector<std::string> relation_ids;
  std::unordered_map<std::string, int64_t> entity_index;
  std::unordered_map<std::string, int64_t> relation_index;
  std::vector<Triple> triples;

  std::vector<int64_t> drugs, targets;  // entity indices, ascending
  std::vector<char> is_drug, is_target;

  int64_t duplicates_dropped = 0;
  int64_t entities_added_from_lists = 0;
  int64_t removed_leakage = 0;  // set by the last filter pass

  int64_t num_entities() const { return static_cast<int64_t>(entity_ids.size()); }
  int64_t num_relations() const { return static_cast<int64_t>(relation_ids.size()); }
  int64_t num_triples() const { return static_cast<int64_t>(triples.size()); }

  bool has_triple(int64_t h, int64_t r, int64_t t) const;
  void build_index();  // called by load/filter; required before has_triple

 private:
  std::unordered_set<uint64_t> triple_set_;
  uint64_t pack(int64_t h, int64_t r, int64_t t) const;
};

// Reads a triples TSV (head\trelation\ttail per line) plus one-id-per-
// line drug and target files. Duplicate triples collapse to one; ids in
// the drug/target lists that never occur in a triple are registered as
// zero-degree entities so they still receive embedding rows.
KnowledgeGraph load_kg(const std::string& triples_path,
                       const std::string& drugs_path,
                       const std::string& targets_path);

// Drops every triple connecting a drug and a target in either
// direction. Returns a filtered copy; idempotent.
KnowledgeGraph remove_dti_leakage(const KnowledgeGraph& kg);

// Corrupts head or tail (fair coin) with a uniformly random entity,
// re-drawing up to 100 times while the corrupted triple is observed.
KnowledgeGraph::Triple sample_negative_triple(const KnowledgeGraph& kg,
                                              const KnowledgeGraph::Triple& t,
                                              Rng& rng);

}  // namespace moedti
