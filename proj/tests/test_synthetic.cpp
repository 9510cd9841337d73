#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "moedti/config.hpp"
#include "moedti/smiles.hpp"
#include "moedti/synthetic.hpp"

using namespace moedti;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open ", p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::multiset<std::string> element_multiset(const std::vector<std::string>& atoms) {
  return {atoms.begin(), atoms.end()};
}

WorldSpec small_spec() {
  Config cfg = Config::defaults();
  cfg.set("world.drugs", "20");
  cfg.set("world.targets", "20");
  cfg.set("world.entities", "52");
  cfg.set("world.drug_degree", "3");
  cfg.set("world.target_degree", "3");
  cfg.set("world.entity_degree", "2");
  cfg.set("world.dti_edges", "4");
  cfg.set("world.seed", "12");
  return WorldSpec::from_config(cfg);
}

}  // namespace

TEST_CASE("smiles writer handles trivial chains verbatim") {
  GenMol single;
  single.atoms = {"C"};
  CHECK(write_smiles(single) == "C");

  GenMol pair;
  pair.atoms = {"C", "C"};
  pair.bonds = {{0, 1, 1}};
  CHECK(write_smiles(pair) == "CC");

  GenMol carbonyl;
  carbonyl.atoms = {"C", "O"};
  carbonyl.bonds = {{0, 1, 2}};
  CHECK(write_smiles(carbonyl) == "C=O");

  GenMol empty;
  CHECK_THROWS_AS(write_smiles(empty), ContractError);
  GenMol split;
  split.atoms = {"C", "C"};
  CHECK_THROWS_AS(write_smiles(split), ContractError);
}

TEST_CASE("random molecules round-trip through the parser") {
  Rng rng(91);
  for (int trial = 0; trial < 100; ++trial) {
    GenMol m = random_molecule(rng, 6, 16);
    std::string s = write_smiles(m);
    auto g = parse_smiles(s);
    CHECK(g.atoms.size() == m.atoms.size());
    CHECK(g.bonds.size() == m.bonds.size());
    CHECK(g.connected());
    CHECK(g.warnings.empty());

    std::vector<std::string> parsed;
    for (const auto& a : g.atoms) parsed.push_back(a.element);
    CHECK(element_multiset(parsed) == element_multiset(m.atoms));
  }
}

TEST_CASE("attach_leaf grows the molecule until valence runs out") {
  Rng rng(92);
  GenMol m;
  m.atoms = {"C"};
  for (int i = 0; i < 4; ++i) attach_leaf(m, "F", rng);
  CHECK(m.atoms.size() == 5);
  CHECK(m.bonds.size() == 4);
  CHECK(parse_smiles(write_smiles(m)).atoms.size() == 5);
  CHECK_THROWS_AS(attach_leaf(m, "F", rng), ContractError);
}

TEST_CASE("world spec validation rejects out-of-range settings") {
  WorldSpec ok = small_spec();
  CHECK_NOTHROW(ok.validate());

  WorldSpec bad = ok;
  bad.communities = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.drugs = 2;  // fewer than communities
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.mol_min = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.motif_rate = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.entities = 20000;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("generated world plants communities, motifs, and markers as flagged") {
  auto w = generate_synthetic_world(small_spec());
  REQUIRE(w.drug_ids.size() == 20);
  REQUIRE(w.target_ids.size() == 20);

  // Round-robin community assignment.
  for (size_t i = 0; i < w.drug_ids.size(); ++i) {
    CHECK(w.drug_comm[i] == static_cast<int>(i % 4));
  }

  // Flag counts are exact: round(rate * n).
  int motifs = 0, kmers = 0;
  for (bool b : w.drug_motif) motifs += b ? 1 : 0;
  for (bool b : w.target_kmer) kmers += b ? 1 : 0;
  CHECK(motifs == 8);   // round(0.4 * 20)
  CHECK(kmers == 9);    // round(0.45 * 20)

  for (size_t i = 0; i < w.drug_ids.size(); ++i) {
    auto g = parse_smiles(w.drug_smiles[i]);
    bool has_motif = false, has_marker = false;
    const std::string& marker = kMarkerElements[w.drug_marker[i] % kMarkerElements.size()];
    for (const auto& a : g.atoms) {
      has_motif |= a.element == kMotifElement;
      has_marker |= a.element == marker;
    }
    CHECK(has_motif == w.drug_motif[i]);
    CHECK(has_marker);
  }

  for (size_t i = 0; i < w.target_ids.size(); ++i) {
    const std::string& seq = w.target_seqs[i];
    bool has_kmer = seq.find(kInteractionKmer) != std::string::npos;
    CHECK(has_kmer == w.target_kmer[i]);
    const std::string& marker = kMarkerKmers[w.target_marker[i] % kMarkerKmers.size()];
    CHECK(seq.find(marker) != std::string::npos);
  }

  // Markers usually match the community (fidelity 0.85 by default).
  int drug_match = 0, target_match = 0;
  for (size_t i = 0; i < w.drug_ids.size(); ++i) {
    drug_match += w.drug_marker[i] == w.drug_comm[i] ? 1 : 0;
  }
  for (size_t i = 0; i < w.target_ids.size(); ++i) {
    target_match += w.target_marker[i] == w.target_comm[i] ? 1 : 0;
  }
  CHECK(drug_match >= 14);
  CHECK(target_match >= 14);
}

TEST_CASE("interaction rule is combinational in the stored flags") {
  auto w = generate_synthetic_world(small_spec());
  int64_t positives = 0;
  for (size_t d = 0; d < w.drug_ids.size(); ++d) {
    for (size_t t = 0; t < w.target_ids.size(); ++t) {
      bool expect = w.drug_comm[d] == w.target_comm[t] ||
                    (w.drug_motif[d] && w.target_kmer[t]);
      CHECK(w.interacts(d, t) == expect);
      positives += expect ? 1 : 0;
    }
  }
  CHECK(w.count_positive_pairs() == positives);
}

TEST_CASE("default-scale world keeps the positive rate in the design band") {
  auto w = generate_synthetic_world(WorldSpec::from_config(Config::defaults()));
  CHECK(w.positive_rate() >= 0.2);
  CHECK(w.positive_rate() <= 0.4);
}

TEST_CASE("written worlds are byte-identical across regenerations") {
  auto base = std::filesystem::temp_directory_path() /
              ("moedti_world_" + std::to_string(::getpid()));
  auto dir_a = base / "a";
  auto dir_b = base / "b";

  auto w1 = generate_synthetic_world(small_spec());
  write_world(w1, dir_a.string());
  auto w2 = generate_synthetic_world(small_spec());
  write_world(w2, dir_b.string());

  auto fa = WorldFiles::in_dir(dir_a.string());
  auto fb = WorldFiles::in_dir(dir_b.string());
  std::vector<std::pair<std::string, std::string>> mirrored = {
      {fa.triples, fb.triples},   {fa.drugs, fb.drugs},
      {fa.targets, fb.targets},   {fa.smiles, fb.smiles},
      {fa.sequences, fb.sequences}, {fa.pairs_pos, fb.pairs_pos},
      {fa.pairs_neg, fb.pairs_neg}};
  for (const auto& [pa, pb] : mirrored) CHECK(slurp(pa) == slurp(pb));
  std::filesystem::remove_all(base);
}

TEST_CASE("pair files cover the full grid and agree with the oracle") {
  auto base = std::filesystem::temp_directory_path() /
              ("moedti_pairs_" + std::to_string(::getpid()));
  auto w = generate_synthetic_world(small_spec());
  write_world(w, base.string());
  auto files = WorldFiles::in_dir(base.string());

  std::map<std::string, size_t> drug_at, target_at;
  for (size_t i = 0; i < w.drug_ids.size(); ++i) drug_at[w.drug_ids[i]] = i;
  for (size_t i = 0; i < w.target_ids.size(); ++i) target_at[w.target_ids[i]] = i;

  auto check_file = [&](const std::string& path, bool label) -> int64_t {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int64_t count = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto tab = line.find('\t');
      REQUIRE(tab != std::string::npos);
      auto d = line.substr(0, tab);
      auto t = line.substr(tab + 1);
      REQUIRE(drug_at.count(d) == 1);
      REQUIRE(target_at.count(t) == 1);
      CHECK(w.interacts(drug_at[d], target_at[t]) == label);
      ++count;
    }
    return count;
  };
  int64_t pos = check_file(files.pairs_pos, true);
  int64_t neg = check_file(files.pairs_neg, false);
  CHECK(pos + neg == 400);
  CHECK(pos == w.count_positive_pairs());

  // The planted leakage triples connect oracle-positive pairs.
  int64_t dti = 0;
  for (const auto& tr : w.triples) {
    if (tr.r != "interacts_with") continue;
    ++dti;
    bool head_is_drug = drug_at.count(tr.h) == 1;
    auto d = head_is_drug ? tr.h : tr.t;
    auto t = head_is_drug ? tr.t : tr.h;
    REQUIRE(drug_at.count(d) == 1);
    REQUIRE(target_at.count(t) == 1);
    CHECK(w.interacts(drug_at[d], target_at[t]));
  }
  CHECK(dti == 4);
  std::filesystem::remove_all(base);
}
