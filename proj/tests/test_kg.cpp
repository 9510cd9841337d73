#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "moedti/kg.hpp"

using namespace moedti;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("moedti_kg_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    auto p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
  }
};

KnowledgeGraph tiny_kg(const TempDir& dir) {
  auto triples = dir.file("triples.tsv",
                          "d1\tbinds\tt1\n"
                          "d1\tbinds\tt1\n"  // duplicate
                          "d1\tassoc\tg1\n"
                          "g1\tassoc\tt1\n"
                          "t2\ttargets\td2\n"
                          "g1\trelated\tg2\n");
  auto drugs = dir.file("drugs.txt", "d1\nd2\nd3\n");
  auto targets = dir.file("targets.txt", "t1\nt2\n");
  return load_kg(triples, drugs, targets);
}

}  // namespace

TEST_CASE("load_kg builds vocabularies, drops duplicates, registers list-only ids") {
  TempDir dir;
  auto kg = tiny_kg(dir);

  CHECK(kg.num_triples() == 5);
  CHECK(kg.duplicates_dropped == 1);
  // d3 occurs only in the drug list but still gets an entity slot.
  CHECK(kg.entity_index.count("d3") == 1);
  CHECK(kg.entities_added_from_lists == 1);
  CHECK(kg.num_entities() == 7);  // d1 t1 g1 t2 d2 g2 d3
  CHECK(kg.num_relations() == 4);

  CHECK(kg.drugs.size() == 3);
  CHECK(kg.targets.size() == 2);
  for (size_t i = 1; i < kg.drugs.size(); ++i) CHECK(kg.drugs[i - 1] < kg.drugs[i]);
  CHECK(kg.is_drug[kg.entity_index.at("d1")] == 1);
  CHECK(kg.is_target[kg.entity_index.at("t2")] == 1);
  CHECK(kg.is_drug[kg.entity_index.at("g1")] == 0);

  auto h = kg.entity_index.at("d1");
  auto r = kg.relation_index.at("binds");
  auto t = kg.entity_index.at("t1");
  CHECK(kg.has_triple(h, r, t));
  CHECK_FALSE(kg.has_triple(t, r, h));
}

TEST_CASE("load_kg rejects malformed rows and missing files") {
  TempDir dir;
  auto bad = dir.file("bad.tsv", "a\tb\n");
  auto drugs = dir.file("d.txt", "a\n");
  auto targets = dir.file("t.txt", "b\n");
  CHECK_THROWS_AS(load_kg(bad, drugs, targets), IoError);
  CHECK_THROWS_AS(load_kg((dir.path / "nope.tsv").string(), drugs, targets), IoError);
}

TEST_CASE("remove_dti_leakage strips drug-target edges both ways and is idempotent") {
  TempDir dir;
  auto kg = tiny_kg(dir);
  auto filtered = remove_dti_leakage(kg);

  // d1-binds-t1 and t2-targets-d2 must be gone; the rest survive.
  CHECK(filtered.num_triples() == 3);
  CHECK(filtered.removed_leakage == 2);
  for (const auto& tr : filtered.triples) {
    bool head_drug = filtered.is_drug[tr.head] == 1;
    bool head_target = filtered.is_target[tr.head] == 1;
    bool tail_drug = filtered.is_drug[tr.tail] == 1;
    bool tail_target = filtered.is_target[tr.tail] == 1;
    CHECK_FALSE((head_drug && tail_target));
    CHECK_FALSE((head_target && tail_drug));
  }
  // Vocabulary is preserved so embedding rows stay aligned.
  CHECK(filtered.entity_ids == kg.entity_ids);

  auto again = remove_dti_leakage(filtered);
  CHECK(again.num_triples() == filtered.num_triples());
  CHECK(again.removed_leakage == 0);
  CHECK(again.triples == filtered.triples);
}

TEST_CASE("negative sampling corrupts exactly one side and avoids observed triples") {
  TempDir dir;
  auto kg = tiny_kg(dir);
  Rng rng(7);
  const auto& base = kg.triples[0];

  int heads = 0, tails = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    auto neg = sample_negative_triple(kg, base, rng);
    CHECK(neg.rel == base.rel);
    bool head_changed = neg.head != base.head;
    bool tail_changed = neg.tail != base.tail;
    CHECK(head_changed != tail_changed);  // exactly one side
    CHECK_FALSE(kg.has_triple(neg.head, neg.rel, neg.tail));
    heads += head_changed ? 1 : 0;
    tails += tail_changed ? 1 : 0;
  }
  double head_frac = static_cast<double>(heads) / trials;
  CHECK(head_frac > 0.48);
  CHECK(head_frac < 0.52);
}
