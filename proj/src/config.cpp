#include "moedti/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "moedti/rng.hpp"

namespace moedti {

namespace {

// Every tunable knob with its default. Keys absent from this table are
// rejected everywhere.
const std::vector<std::pair<const char*, const char*>> kDefaults = {
    // KG embedding pretraining
    {"kg.method", "transe"},
    {"kg.dim", "32"},
    {"kg.margin", "1.0"},
    {"kg.lr", "0.01"},
    {"kg.epochs", "100"},
    {"kg.seed", "7"},
    // Molecule encoder
    {"gnn.layers", "3"},
    {"gnn.hidden", "64"},
    {"gnn.out_dim", "32"},
    // Sequence encoder
    {"seq.e_dim", "16"},
    {"seq.max_len", "2000"},
    {"cnn.kernel", "5"},
    {"cnn.channels", "16,32,32"},
    {"cnn.pool_len", "8"},
    {"cnn.out_dim", "32"},
    // Heads
    {"mlp.hidden", "64"},
    {"gate.hidden", "64"},
    // Optimization
    {"opt.rule", "adaptive"},
    {"opt.lr_s1", "0.01"},
    {"opt.lr_s2", "0.005"},
    {"opt.lr_s3", "0.005"},
    {"opt.lr_s4", "0.002"},
    {"train.epochs_s1", "200"},
    {"train.epochs_s2", "100"},
    {"train.epochs_s3", "100"},
    {"train.epochs_s4", "100"},
    {"train.s4_tune_embeddings", "true"},
    // Mutual supervision
    {"syn.alpha_a", "0.05"},
    {"syn.alpha_b", "0.05"},
    {"syn.beta_a", "0.05"},
    {"syn.beta_b", "0.05"},
    {"syn.gamma_a", "4"},
    {"syn.gamma_b", "4"},
    {"syn.beta_g", "0.05"},
    {"syn.gamma_g", "4"},
    // Synthetic world generator
    {"world.drugs", "60"},
    {"world.targets", "60"},
    {"world.entities", "500"},
    {"world.communities", "4"},
    {"world.motif_rate", "0.4"},
    {"world.kmer_rate", "0.45"},
    {"world.marker_fidelity", "0.85"},
    {"world.drug_degree", "6"},
    {"world.target_degree", "6"},
    {"world.entity_degree", "4"},
    {"world.cross_rate", "0.05"},
    {"world.dti_edges", "12"},
    {"world.seq_min", "60"},
    {"world.seq_max", "120"},
    {"world.mol_min", "8"},
    {"world.mol_max", "16"},
    {"world.seed", "1"},
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  for (auto& [k, v] : kDefaults) c.values_.emplace(k, v);
  return c;
}

Config Config::from_file(const std::string& path) {
  Config c = defaults();
  c.apply_file(path);
  return c;
}

void Config::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str(), path);
}

void Config::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  if (value.empty()) throw ConfigError("empty value for config key: " + key);
  it->second = value;
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

int64_t Config::integer(const std::string& key) const {
  const std::string& v = str(key);
  char* end = nullptr;
  long long r = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config key " + key + " is not an integer: " + v);
  }
  return static_cast<int64_t>(r);
}

double Config::real(const std::string& key) const {
  const std::string& v = str(key);
  char* end = nullptr;
  double r = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config key " + key + " is not a number: " + v);
  }
  return r;
}

bool Config::boolean(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + " is not a boolean: " + v);
}

std::vector<int64_t> Config::int_list(const std::string& key) const {
  const std::string& v = str(key);
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    long long r = std::strtoll(item.c_str(), &end, 10);
    if (end == item.c_str() || *end != '\0') {
      throw ConfigError("config key " + key + " has a non-integer entry: " + item);
    }
    out.push_back(static_cast<int64_t>(r));
  }
  if (out.empty()) throw ConfigError("config key " + key + " is an empty list");
  return out;
}

std::string Config::resolved_text() const {
  std::ostringstream os;
  for (auto& [k, v] : values_) os << k << " = " << v << "\n";
  return os.str();
}

uint64_t Config::fingerprint() const { return hash64(resolved_text()); }

}  // namespace moedti
