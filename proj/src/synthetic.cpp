#include "moedti/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "moedti/errors.hpp"

namespace moedti {
namespace {

int max_valence(const std::string& elem) {
  if (elem == "C") return 4;
  if (elem == "N" || elem == "P" || elem == "B") return 3;
  if (elem == "O" || elem == "S") return 2;
  if (elem == "F" || elem == "Cl" || elem == "Br" || elem == "I") return 1;
  throw ContractError("generator has no valence entry for element " + elem);
}

std::vector<int> free_valences(const GenMol& m) {
  std::vector<int> free(m.atoms.size());
  for (size_t i = 0; i < m.atoms.size(); ++i) free[i] = max_valence(m.atoms[i]);
  for (const auto& b : m.bonds) {
    free[b.a] -= b.order;
    free[b.b] -= b.order;
  }
  return free;
}

bool adjacent(const GenMol& m, int a, int b) {
  for (const auto& bd : m.bonds) {
    if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a)) return true;
  }
  return false;
}

const char* bond_symbol(int order) {
  switch (order) {
    case 1: return "";
    case 2: return "=";
    case 3: return "#";
  }
  throw ContractError("unsupported bond order " + std::to_string(order));
}

std::string ring_digit(int d) {
  if (d < 1 || d > 99) throw ContractError("ring digit out of range");
  if (d < 10) return std::to_string(d);
  return "%" + std::string(d < 10 ? "0" : "") + std::to_string(d);
}

}  // namespace

std::string write_smiles(const GenMol& m) {
  const int n = static_cast<int>(m.atoms.size());
  if (n == 0) throw ContractError("cannot write an empty molecule");
  std::vector<std::vector<std::array<int, 3>>> adj(n);  // nbr, order, edge id
  for (size_t e = 0; e < m.bonds.size(); ++e) {
    const auto& b = m.bonds[e];
    adj[b.a].push_back({b.b, b.order, static_cast<int>(e)});
    adj[b.b].push_back({b.a, b.order, static_cast<int>(e)});
  }

  struct RingMark {
    int digit, order;
    bool carrier;  // carries the bond symbol at emission
  };
  std::vector<char> visited(n, 0);
  std::vector<char> edge_tree(m.bonds.size(), 0), edge_closed(m.bonds.size(), 0);
  std::vector<std::vector<std::array<int, 3>>> children(n);  // child, order, edge
  std::vector<std::vector<RingMark>> marks(n);
  int next_digit = 1;

  std::function<void(int, int)> classify = [&](int v, int parent_edge) {
    visited[v] = 1;
    for (const auto& [nbr, order, eid] : adj[v]) {
      if (eid == parent_edge) continue;
      if (!visited[nbr]) {
        edge_tree[eid] = 1;
        children[v].push_back({nbr, order, eid});
        classify(nbr, eid);
      } else if (!edge_tree[eid] && !edge_closed[eid]) {
        edge_closed[eid] = 1;
        int d = next_digit++;
        marks[nbr].push_back({d, order, false});  // ancestor: digit only
        marks[v].push_back({d, order, true});
      }
    }
  };
  classify(0, -1);
  for (int v = 0; v < n; ++v) {
    if (!visited[v]) throw ContractError("molecule is disconnected; cannot emit SMILES");
  }

  std::string out;
  std::function<void(int, int, bool)> emit = [&](int v, int order, bool root) {
    if (!root) out += bond_symbol(order);
    out += m.atoms[v];
    for (const auto& mk : marks[v]) {
      if (mk.carrier) out += bond_symbol(mk.order);
      out += ring_digit(mk.digit);
    }
    for (size_t i = 0; i < children[v].size(); ++i) {
      const auto& [c, co, eid] = children[v][i];
      bool last = i + 1 == children[v].size();
      if (!last) out += '(';
      emit(c, co, false);
      if (!last) out += ')';
    }
  };
  emit(0, 0, true);
  return out;
}

GenMol random_molecule(Rng& rng, int min_atoms, int max_atoms) {
  if (min_atoms < 2 || max_atoms < min_atoms) {
    throw ContractError("molecule size range must satisfy 2 <= min <= max");
  }
  const int n = min_atoms + static_cast<int>(uniform_index(
                                rng, static_cast<uint64_t>(max_atoms - min_atoms + 1)));
  GenMol m;
  m.atoms.push_back("C");
  std::vector<int> free = {4};
  auto parents_with_room = [&](int need) {
    std::vector<int> v;
    for (size_t i = 0; i < free.size(); ++i) {
      if (free[i] >= need) v.push_back(static_cast<int>(i));
    }
    return v;
  };
  for (int i = 1; i < n; ++i) {
    auto parents = parents_with_room(1);
    if (parents.empty()) break;  // cannot happen with order-1 growth, kept defensive
    int parent = parents[uniform_index(rng, parents.size())];
    double u = uniform_real(rng, 0.0, 1.0);
    std::string elem = u < 0.18 ? "N" : u < 0.34 ? "O" : "C";
    int order = 1;
    if (elem == "O" && m.atoms[parent] == "C" && free[parent] >= 2 &&
        uniform_real(rng, 0.0, 1.0) < 0.30) {
      order = 2;
    }
    int idx = static_cast<int>(m.atoms.size());
    m.atoms.push_back(elem);
    free.push_back(max_valence(elem) - order);
    free[parent] -= order;
    m.bonds.push_back({parent, idx, order});
  }
  // Ring closures, guarded so at least four free valences survive for
  // later leaf attachments.
  int rings = static_cast<int>(uniform_index(rng, 3));
  for (int r = 0; r < rings; ++r) {
    int total = 0;
    for (int f : free) total += f;
    if (total < 6) break;
    for (int attempt = 0; attempt < 25; ++attempt) {
      int a = static_cast<int>(uniform_index(rng, m.atoms.size()));
      int b = static_cast<int>(uniform_index(rng, m.atoms.size()));
      if (a == b || free[a] < 1 || free[b] < 1 || adjacent(m, a, b)) continue;
      m.bonds.push_back({a, b, 1});
      --free[a];
      --free[b];
      break;
    }
  }
  return m;
}

void attach_leaf(GenMol& m, const std::string& element, Rng& rng) {
  auto free = free_valences(m);
  std::vector<int> parents;
  for (size_t i = 0; i < free.size(); ++i) {
    if (free[i] >= 1) parents.push_back(static_cast<int>(i));
  }
  if (parents.empty()) {
    throw ContractError("no free valence left to attach " + element);
  }
  int parent = parents[uniform_index(rng, parents.size())];
  int idx = static_cast<int>(m.atoms.size());
  m.atoms.push_back(element);
  m.bonds.push_back({parent, idx, 1});
}

WorldSpec WorldSpec::from_config(const Config& cfg) {
  WorldSpec s;
  s.drugs = cfg.integer("world.drugs");
  s.targets = cfg.integer("world.targets");
  s.entities = cfg.integer("world.entities");
  s.communities = cfg.integer("world.communities");
  s.motif_rate = cfg.real("world.motif_rate");
  s.kmer_rate = cfg.real("world.kmer_rate");
  s.marker_fidelity = cfg.real("world.marker_fidelity");
  s.drug_degree = cfg.integer("world.drug_degree");
  s.target_degree = cfg.integer("world.target_degree");
  s.entity_degree = cfg.integer("world.entity_degree");
  s.cross_rate = cfg.real("world.cross_rate");
  s.dti_edges = cfg.integer("world.dti_edges");
  s.seq_min = cfg.integer("world.seq_min");
  s.seq_max = cfg.integer("world.seq_max");
  s.mol_min = cfg.integer("world.mol_min");
  s.mol_max = cfg.integer("world.mol_max");
  s.seed = static_cast<uint64_t>(cfg.integer("world.seed"));
  s.validate();
  return s;
}

void WorldSpec::validate() const {
  if (communities < 2) throw ConfigError("world.communities must be >= 2");
  if (drugs < communities || targets < communities) {
    throw ConfigError("world.drugs and world.targets must be >= world.communities");
  }
  int64_t others = entities - drugs - targets;
  if (others < communities) {
    throw ConfigError("world.entities must leave at least one non-drug, non-target "
                      "entity per community");
  }
  if (entities > 9999) throw ConfigError("world.entities must be <= 9999");
  for (double r : {motif_rate, kmer_rate, marker_fidelity, cross_rate}) {
    if (r < 0.0 || r > 1.0) throw ConfigError("world rates must lie in [0, 1]");
  }
  if (mol_min < 6 || mol_max < mol_min) {
    throw ConfigError("world molecule sizes must satisfy 6 <= mol_min <= mol_max");
  }
  if (seq_min < 20 || seq_max < seq_min) {
    throw ConfigError("world sequence lengths must satisfy 20 <= seq_min <= seq_max");
  }
  if (drug_degree < 1 || target_degree < 1 || entity_degree < 1) {
    throw ConfigError("world degrees must be >= 1");
  }
  if (dti_edges < 0) throw ConfigError("world.dti_edges must be >= 0");
}

// Community markers visible to the structure expert. Elements and
// 5-mers cycle when there are more than four communities.
const std::vector<std::string> kMarkerElements = {"S", "P", "F", "Cl"};
const std::vector<std::string> kMarkerKmers = {"HWHWH", "KMKMK", "RDRDR", "EYEYE"};
// The interaction motif and k-mer of the planted rule.
const std::string kMotifElement = "Br";
const std::string kInteractionKmer = "CQCQC";
// Background residues share no letter with any planted 5-mer.
const std::string kBackgroundResidues = "AFGILNPSTV";

namespace {

std::string make_id(char prefix, int64_t i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%c%04d", prefix, static_cast<int>(i));
  return buf;
}

// Exactly round(rate * n) flags set, positions shuffled.
std::vector<bool> rate_flags(int64_t n, double rate, Rng& rng) {
  auto count = static_cast<int64_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<int64_t> idx(n);
  for (int64_t i = 0; i < n; ++i) idx[i] = i;
  shuffle_vec(idx, rng);
  std::vector<bool> flags(n, false);
  for (int64_t i = 0; i < count && i < n; ++i) flags[idx[i]] = true;
  return flags;
}

int realized_marker(int comm, int64_t communities, double fidelity, Rng& rng) {
  if (uniform_real(rng, 0.0, 1.0) < fidelity) return comm;
  auto other = static_cast<int>(uniform_index(rng, static_cast<uint64_t>(communities - 1)));
  return other < comm ? other : other + 1;
}

std::string make_sequence(Rng& rng, const WorldSpec& spec, int marker, bool kmer) {
  auto len = static_cast<int64_t>(
      spec.seq_min + uniform_index(rng, static_cast<uint64_t>(spec.seq_max - spec.seq_min + 1)));
  std::string s(len, 'A');
  for (auto& c : s) c = kBackgroundResidues[uniform_index(rng, kBackgroundResidues.size())];
  // Planted 5-mers occupy one stratum each: the marker is repeated three
  // times so the community signal survives pooling, the interaction k-mer
  // appears once. Strata keep the windows disjoint at any valid length.
  const std::string& mark = kMarkerKmers[marker % kMarkerKmers.size()];
  std::vector<const std::string*> mers = {&mark, &mark, &mark};
  if (kmer) mers.push_back(&kInteractionKmer);
  shuffle_vec(mers, rng);
  auto strata = static_cast<int64_t>(mers.size());
  const int64_t seg = len / strata;
  for (int64_t i = 0; i < strata; ++i) {
    auto off = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(seg - 4)));
    s.replace(i * seg + off, 5, *mers[i]);
  }
  return s;
}

std::string make_drug_smiles(Rng& rng, const WorldSpec& spec, int marker, bool motif) {
  // The marker atom is doubled so the community signal survives the readout.
  int plants = 2 + (motif ? 1 : 0);
  int lo = std::max(4, static_cast<int>(spec.mol_min) - plants);
  int hi = std::max(lo, static_cast<int>(spec.mol_max) - plants);
  GenMol m = random_molecule(rng, lo, hi);
  for (int copy = 0; copy < 2; ++copy) {
    attach_leaf(m, kMarkerElements[marker % kMarkerElements.size()], rng);
  }
  if (motif) attach_leaf(m, kMotifElement, rng);
  return write_smiles(m);
}

// k distinct picks from [0, n), partial Fisher-Yates over an index pool.
std::vector<int64_t> sample_distinct(Rng& rng, int64_t n, int64_t k) {
  k = std::min(k, n);
  std::vector<int64_t> pool(n);
  for (int64_t i = 0; i < n; ++i) pool[i] = i;
  for (int64_t i = 0; i < k; ++i) {
    auto j = i + static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

bool SyntheticWorld::interacts(int64_t di, int64_t ti) const {
  if (drug_comm[di] == target_comm[ti]) return true;
  return drug_motif[di] && target_kmer[ti];
}

int64_t SyntheticWorld::count_positive_pairs() const {
  int64_t n = 0;
  for (int64_t d = 0; d < spec.drugs; ++d) {
    for (int64_t t = 0; t < spec.targets; ++t) n += interacts(d, t) ? 1 : 0;
  }
  return n;
}

double SyntheticWorld::positive_rate() const {
  return static_cast<double>(count_positive_pairs()) /
         static_cast<double>(spec.drugs * spec.targets);
}

SyntheticWorld generate_synthetic_world(const WorldSpec& spec) {
  spec.validate();
  SyntheticWorld w;
  w.spec = spec;
  const int64_t others = spec.entities - spec.drugs - spec.targets;
  const auto comms = static_cast<int>(spec.communities);

  for (int64_t i = 0; i < spec.drugs; ++i) {
    w.drug_ids.push_back(make_id('D', i));
    w.drug_comm.push_back(static_cast<int>(i % comms));
  }
  for (int64_t i = 0; i < spec.targets; ++i) {
    w.target_ids.push_back(make_id('T', i));
    w.target_comm.push_back(static_cast<int>(i % comms));
  }
  for (int64_t i = 0; i < others; ++i) {
    w.other_ids.push_back(make_id('E', i));
    w.other_comm.push_back(static_cast<int>(i % comms));
  }

  {
    Rng rng(derive_seed(spec.seed, "flags:motif"));
    auto f = rate_flags(spec.drugs, spec.motif_rate, rng);
    w.drug_motif.assign(f.begin(), f.end());
  }
  {
    Rng rng(derive_seed(spec.seed, "flags:kmer"));
    auto f = rate_flags(spec.targets, spec.kmer_rate, rng);
    w.target_kmer.assign(f.begin(), f.end());
  }
  {
    Rng rng(derive_seed(spec.seed, "markers:drug"));
    for (int64_t i = 0; i < spec.drugs; ++i) {
      w.drug_marker.push_back(
          realized_marker(w.drug_comm[i], comms, spec.marker_fidelity, rng));
    }
  }
  {
    Rng rng(derive_seed(spec.seed, "markers:target"));
    for (int64_t i = 0; i < spec.targets; ++i) {
      w.target_marker.push_back(
          realized_marker(w.target_comm[i], comms, spec.marker_fidelity, rng));
    }
  }

  for (int64_t i = 0; i < spec.drugs; ++i) {
    Rng rng(derive_seed(spec.seed, "mol:" + w.drug_ids[i]));
    w.drug_smiles.push_back(make_drug_smiles(rng, spec, w.drug_marker[i], w.drug_motif[i]));
  }
  for (int64_t i = 0; i < spec.targets; ++i) {
    Rng rng(derive_seed(spec.seed, "seq:" + w.target_ids[i]));
    w.target_seqs.push_back(make_sequence(rng, spec, w.target_marker[i], w.target_kmer[i]));
  }

  // KG edges. Intra-community by construction, plus a controlled dose
  // of cross-community noise and a few direct drug-target triples that
  // the leakage filter must strip.
  std::vector<std::vector<int64_t>> comm_others(comms);
  for (int64_t i = 0; i < others; ++i) comm_others[w.other_comm[i]].push_back(i);

  {
    Rng rng(derive_seed(spec.seed, "kg:drugs"));
    for (int64_t i = 0; i < spec.drugs; ++i) {
      const auto& pool = comm_others[w.drug_comm[i]];
      for (int64_t j : sample_distinct(rng, static_cast<int64_t>(pool.size()), spec.drug_degree)) {
        w.triples.push_back({w.drug_ids[i], "drug_assoc", w.other_ids[pool[j]]});
      }
    }
  }
  {
    Rng rng(derive_seed(spec.seed, "kg:targets"));
    for (int64_t i = 0; i < spec.targets; ++i) {
      const auto& pool = comm_others[w.target_comm[i]];
      for (int64_t j : sample_distinct(rng, static_cast<int64_t>(pool.size()), spec.target_degree)) {
        w.triples.push_back({w.other_ids[pool[j]], "target_assoc", w.target_ids[i]});
      }
    }
  }
  int64_t intra_related = 0;
  {
    Rng rng(derive_seed(spec.seed, "kg:others"));
    for (int64_t i = 0; i < others; ++i) {
      const auto& pool = comm_others[w.other_comm[i]];
      if (pool.size() < 2) continue;
      auto picks = sample_distinct(rng, static_cast<int64_t>(pool.size()),
                                   spec.entity_degree + 1);
      int64_t added = 0;
      for (int64_t j : picks) {
        if (pool[j] == i) continue;
        if (added == spec.entity_degree) break;
        w.triples.push_back({w.other_ids[i], "related", w.other_ids[pool[j]]});
        ++added;
        ++intra_related;
      }
    }
  }
  {
    Rng rng(derive_seed(spec.seed, "kg:cross"));
    auto n_cross = static_cast<int64_t>(
        std::floor(spec.cross_rate * static_cast<double>(intra_related)));
    for (int64_t k = 0; k < n_cross; ++k) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        auto a = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(others)));
        auto b = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(others)));
        if (a == b || w.other_comm[a] == w.other_comm[b]) continue;
        w.triples.push_back({w.other_ids[a], "related", w.other_ids[b]});
        break;
      }
    }
  }
  {
    Rng rng(derive_seed(spec.seed, "kg:dti"));
    std::vector<std::pair<int64_t, int64_t>> positives;
    for (int64_t d = 0; d < spec.drugs; ++d) {
      for (int64_t t = 0; t < spec.targets; ++t) {
        if (w.interacts(d, t)) positives.emplace_back(d, t);
      }
    }
    shuffle_vec(positives, rng);
    auto n_dti = std::min<int64_t>(spec.dti_edges, static_cast<int64_t>(positives.size()));
    for (int64_t k = 0; k < n_dti; ++k) {
      auto [d, t] = positives[k];
      if (k % 2 == 0) {
        w.triples.push_back({w.drug_ids[d], "interacts_with", w.target_ids[t]});
      } else {
        w.triples.push_back({w.target_ids[t], "interacts_with", w.drug_ids[d]});
      }
    }
  }
  return w;
}

WorldFiles WorldFiles::in_dir(const std::string& dir) {
  auto j = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  return {j("triples.tsv"), j("drugs.txt"),    j("targets.txt"),  j("smiles.tsv"),
          j("sequences.tsv"), j("pairs_pos.tsv"), j("pairs_neg.tsv")};
}

void write_world(const SyntheticWorld& w, const std::string& dir) {
  std::filesystem::create_directories(dir);
  WorldFiles f = WorldFiles::in_dir(dir);
  auto open = [](const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw IoError("cannot write " + path);
    return out;
  };
  {
    auto out = open(f.triples);
    for (const auto& t : w.triples) out << t.h << '\t' << t.r << '\t' << t.t << '\n';
  }
  {
    auto out = open(f.drugs);
    for (const auto& id : w.drug_ids) out << id << '\n';
  }
  {
    auto out = open(f.targets);
    for (const auto& id : w.target_ids) out << id << '\n';
  }
  {
    auto out = open(f.smiles);
    for (size_t i = 0; i < w.drug_ids.size(); ++i) {
      out << w.drug_ids[i] << '\t' << w.drug_smiles[i] << '\n';
    }
  }
  {
    auto out = open(f.sequences);
    for (size_t i = 0; i < w.target_ids.size(); ++i) {
      out << w.target_ids[i] << '\t' << w.target_seqs[i] << '\n';
    }
  }
  auto pos = open(f.pairs_pos);
  auto neg = open(f.pairs_neg);
  for (int64_t d = 0; d < w.spec.drugs; ++d) {
    for (int64_t t = 0; t < w.spec.targets; ++t) {
      (w.interacts(d, t) ? pos : neg)
          << w.drug_ids[d] << '\t' << w.target_ids[t] << '\n';
    }
  }
}

}  // namespace moedti
