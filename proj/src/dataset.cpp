#include "moedti/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "moedti/errors.hpp"
#include "moedti/smiles.hpp"

namespace moedti {
namespace {

std::vector<std::string> read_lines(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::pair<std::string, std::string> split_tab(const std::string& line,
                                              const std::string& path,
                                              size_t lineno) {
  auto tab = line.find('\t');
  if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
    throw IoError(path + ":" + std::to_string(lineno) +
                  ": expected two tab-separated columns");
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

}  // namespace

std::vector<DtiPair> read_pair_tsv(const std::string& path) {
  std::vector<DtiPair> out;
  size_t lineno = 0;
  for (const auto& line : read_lines(path, "pair")) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto [a, b] = split_tab(line, path, lineno);
    out.push_back({a, b});
  }
  return out;
}

std::map<std::string, std::string> read_two_column_tsv(const std::string& path,
                                                       const char* what) {
  std::map<std::string, std::string> out;
  size_t lineno = 0;
  for (const auto& line : read_lines(path, what)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto [id, value] = split_tab(line, path, lineno);
    out[id] = value;  // later rows win; duplicates are a data bug upstream
  }
  return out;
}

std::map<std::string, std::string> read_sequences(const std::string& path) {
  auto lines = read_lines(path, "sequence");
  bool fasta = false;
  for (const auto& l : lines) {
    if (l.empty()) continue;
    fasta = l[0] == '>';
    break;
  }
  if (!fasta) return read_two_column_tsv(path, "sequence");

  std::map<std::string, std::string> out;
  std::string id;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    if (line[0] == '>') {
      id = line.substr(1);
      auto sp = id.find_first_of(" \t");
      if (sp != std::string::npos) id = id.substr(0, sp);
      if (id.empty()) throw IoError(path + ": FASTA header with empty id");
      out[id];
    } else {
      if (id.empty()) throw IoError(path + ": sequence data before first FASTA header");
      out[id] += line;
    }
  }
  return out;
}

DtiDataset load_dti_dataset(const std::string& pos_path, const std::string& neg_path,
                            const std::string& smiles_path,
                            const std::string& sequences_path, int64_t shots,
                            uint64_t seed) {
  if (shots < 1) throw ContractError("shots must be >= 1");
  DtiDataset ds;
  ds.shots = shots;
  ds.seed = seed;

  ds.smiles = read_two_column_tsv(smiles_path, "SMILES");
  ds.sequences = read_sequences(sequences_path);

  // Drop drugs whose SMILES does not parse: they cannot feed the
  // structure expert and would otherwise abort training much later.
  for (auto it = ds.smiles.begin(); it != ds.smiles.end();) {
    try {
      parse_smiles(it->second);
      ++it;
    } catch (const ParseError& e) {
      ds.warnings.push_back("dropping drug " + it->first +
                            ": unparsable SMILES (" + e.what() + ")");
      it = ds.smiles.erase(it);
    }
  }
  for (auto it = ds.sequences.begin(); it != ds.sequences.end();) {
    if (it->second.empty()) {
      ds.warnings.push_back("dropping target " + it->first + ": empty sequence");
      it = ds.sequences.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& [id, _] : ds.smiles) ds.drug_ids.push_back(id);
  for (const auto& [id, _] : ds.sequences) ds.target_ids.push_back(id);
  if (ds.drug_ids.empty()) throw IoError("no usable drugs in " + smiles_path);
  if (ds.target_ids.empty()) throw IoError("no usable targets in " + sequences_path);

  auto usable = [&](const DtiPair& p, const char* side, size_t* dropped) {
    bool ok = ds.smiles.count(p.drug) && ds.sequences.count(p.target);
    if (!ok) ++*dropped;
    (void)side;
    return ok;
  };

  std::vector<DtiPair> pos;
  std::set<DtiPair> seen;
  size_t dropped = 0, dup = 0;
  for (const auto& p : read_pair_tsv(pos_path)) {
    if (!usable(p, "positive", &dropped)) continue;
    if (!seen.insert(p).second) {
      ++dup;
      continue;
    }
    pos.push_back(p);
  }
  std::set<DtiPair> pos_set(pos.begin(), pos.end());

  std::vector<DtiPair> neg;
  std::set<DtiPair> neg_seen;
  size_t conflicts = 0;
  if (!neg_path.empty()) {
    for (const auto& p : read_pair_tsv(neg_path)) {
      if (!usable(p, "negative", &dropped)) continue;
      if (pos_set.count(p)) {
        ++conflicts;
        continue;
      }
      if (!neg_seen.insert(p).second) {
        ++dup;
        continue;
      }
      neg.push_back(p);
    }
  }
  if (dropped)
    ds.warnings.push_back(std::to_string(dropped) +
                          " pair(s) dropped: drug or target lacks usable data");
  if (dup) ds.warnings.push_back(std::to_string(dup) + " duplicate pair(s) dropped");
  if (conflicts)
    ds.warnings.push_back(std::to_string(conflicts) +
                          " pair(s) present in both label files; kept as positive");

  if ((int64_t)pos.size() <= shots) {
    throw ContractError("need more than shots=" + std::to_string(shots) +
                        " positives to form a test split, got " +
                        std::to_string(pos.size()));
  }

  Rng split_rng(derive_seed(seed, "dataset:split"));
  shuffle_vec(pos, split_rng);
  shuffle_vec(neg, split_rng);
  ds.train_pos.assign(pos.begin(), pos.begin() + shots);
  ds.test_pos.assign(pos.begin() + shots, pos.end());

  std::set<DtiPair> taken(pos.begin(), pos.end());
  for (const auto& p : neg) taken.insert(p);
  Rng neg_rng(derive_seed(seed, "dataset:negatives"));
  auto draw_unlabeled = [&]() {
    ds.sampled_unlabeled_negatives = true;
    const size_t total = ds.drug_ids.size() * ds.target_ids.size();
    if (taken.size() >= total)
      throw ContractError("unlabeled pair pool exhausted while sampling negatives");
    for (;;) {
      size_t flat = uniform_index(neg_rng, total);
      DtiPair p{ds.drug_ids[flat / ds.target_ids.size()],
                ds.target_ids[flat % ds.target_ids.size()]};
      if (taken.insert(p).second) return p;
    }
  };

  size_t next_neg = 0;
  auto take_negative = [&]() {
    if (next_neg < neg.size()) return neg[next_neg++];
    return draw_unlabeled();
  };
  for (int64_t i = 0; i < shots; ++i) ds.train_neg.push_back(take_negative());
  for (size_t i = 0; i < ds.test_pos.size(); ++i) ds.test_neg.push_back(take_negative());
  if (ds.sampled_unlabeled_negatives)
    ds.warnings.push_back("negative labels were short; sampled unlabeled pairs as negatives");
  return ds;
}

}  // namespace moedti
