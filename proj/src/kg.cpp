#include "moedti/kg.hpp"

#include <algorithm>
#include <fstream>

namespace moedti {

namespace {

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> read_id_lines(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

int64_t intern(std::vector<std::string>& ids,
               std::unordered_map<std::string, int64_t>& index,
               const std::string& id) {
  auto it = index.find(id);
  if (it != index.end()) return it->second;
  int64_t ix = static_cast<int64_t>(ids.size());
  ids.push_back(id);
  index.emplace(id, ix);
  return ix;
}

void mark_sets(KnowledgeGraph& kg, const std::vector<std::string>& drug_ids,
               const std::vector<std::string>& target_ids) {
  kg.is_drug.assign(kg.entity_ids.size(), 0);
  kg.is_target.assign(kg.entity_ids.size(), 0);
  kg.drugs.clear();
  kg.targets.clear();
  for (const auto& id : drug_ids) {
    int64_t ix = kg.entity_index.at(id);
    if (!kg.is_drug[ix]) {
      kg.is_drug[ix] = 1;
      kg.drugs.push_back(ix);
    }
  }
  for (const auto& id : target_ids) {
    int64_t ix = kg.entity_index.at(id);
    if (!kg.is_target[ix]) {
      kg.is_target[ix] = 1;
      kg.targets.push_back(ix);
    }
  }
  std::sort(kg.drugs.begin(), kg.drugs.end());
  std::sort(kg.targets.begin(), kg.targets.end());
}

}  // namespace

uint64_t KnowledgeGraph::pack(int64_t h, int64_t r, int64_t t) const {
  // 21 bits per field; plenty at this scale, checked in build_index.
  return (static_cast<uint64_t>(h) << 42) | (static_cast<uint64_t>(r) << 21) |
         static_cast<uint64_t>(t);
}

void KnowledgeGraph::build_index() {
  if (num_entities() >= (1 << 21) || num_relations() >= (1 << 21)) {
    throw ContractError("knowledge graph too large for the packed triple index");
  }
  triple_set_.clear();
  triple_set_.reserve(triples.size() * 2);
  for (const Triple& t : triples) triple_set_.insert(pack(t.head, t.rel, t.tail));
}

bool KnowledgeGraph::has_triple(int64_t h, int64_t r, int64_t t) const {
  return triple_set_.count(pack(h, r, t)) != 0;
}

KnowledgeGraph load_kg(const std::string& triples_path,
                       const std::string& drugs_path,
                       const std::string& targets_path) {
  KnowledgeGraph kg;
  std::ifstream in(triples_path);
  if (!in) throw IoError("cannot open triples file: " + triples_path);

  std::unordered_set<uint64_t> seen;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    size_t p1 = line.find('\t');
    size_t p2 = p1 == std::string::npos ? std::string::npos : line.find('\t', p1 + 1);
    size_t p3 = p2 == std::string::npos ? std::string::npos : line.find('\t', p2 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos ||
        p3 != std::string::npos || p1 == 0 || p2 == p1 + 1 || p2 + 1 == line.size()) {
      throw IoError("triples file " + triples_path + " line " +
                    std::to_string(lineno) +
                    ": expected exactly head<TAB>relation<TAB>tail");
    }
    int64_t h = intern(kg.entity_ids, kg.entity_index, line.substr(0, p1));
    int64_t r = intern(kg.relation_ids, kg.relation_index,
                       line.substr(p1 + 1, p2 - p1 - 1));
    int64_t t = intern(kg.entity_ids, kg.entity_index, line.substr(p2 + 1));
    uint64_t key = (static_cast<uint64_t>(h) << 42) |
                   (static_cast<uint64_t>(r) << 21) | static_cast<uint64_t>(t);
    if (h >= (1 << 21) || r >= (1 << 21) || t >= (1 << 21)) {
      throw ContractError("knowledge graph too large for the packed triple index");
    }
    if (!seen.insert(key).second) {
      ++kg.duplicates_dropped;
      continue;
    }
    kg.triples.push_back({h, r, t});
  }

  auto drug_ids = read_id_lines(drugs_path, "drugs");
  auto target_ids = read_id_lines(targets_path, "targets");
  // Register list-only ids as zero-degree entities: they still need
  // embedding rows even without KG evidence.
  for (const auto& id : drug_ids) {
    if (!kg.entity_index.count(id)) {
      intern(kg.entity_ids, kg.entity_index, id);
      ++kg.entities_added_from_lists;
    }
  }
  for (const auto& id : target_ids) {
    if (!kg.entity_index.count(id)) {
      intern(kg.entity_ids, kg.entity_index, id);
      ++kg.entities_added_from_lists;
    }
  }
  mark_sets(kg, drug_ids, target_ids);
  kg.build_index();
  return kg;
}

KnowledgeGraph remove_dti_leakage(const KnowledgeGraph& kg) {
  KnowledgeGraph out = kg;
  out.triples.clear();
  out.removed_leakage = 0;
  for (const auto& t : kg.triples) {
    bool leak = (kg.is_drug[t.head] && kg.is_target[t.tail]) ||
                (kg.is_target[t.head] && kg.is_drug[t.tail]);
    if (leak) {
      ++out.removed_leakage;
    } else {
      out.triples.push_back(t);
    }
  }
  out.build_index();
  return out;
}

KnowledgeGraph::Triple sample_negative_triple(const KnowledgeGraph& kg,
                                              const KnowledgeGraph::Triple& t,
                                              Rng& rng) {
  const int64_t n = kg.num_entities();
  if (n < 2) throw ContractError("negative sampling needs at least 2 entities");
  KnowledgeGraph::Triple neg = t;
  for (int attempt = 0; attempt < 100; ++attempt) {
    neg = t;
    bool corrupt_head = uniform_index(rng, 2) == 0;
    int64_t e = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(n)));
    if (corrupt_head) {
      neg.head = e;
    } else {
      neg.tail = e;
    }
    if (!kg.has_triple(neg.head, neg.rel, neg.tail)) return neg;
  }
  return neg;  // densely observed neighborhood: accept the last draw
}

}  // namespace moedti
