#include "moedti/seq_encoder.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "moedti/errors.hpp"
#include "moedti/ops.hpp"

namespace moedti {

namespace {
constexpr char kResMagic[8] = {'M', 'D', 'T', 'I', 'R', 'E', 'S', '1'};
constexpr char kAminoAcids[] = "ACDEFGHIKLMNPQRSTVWY";
}  // namespace

int residue_index(char c) {
  char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const char* p = std::strchr(kAminoAcids, u);
  if (p && *p) return static_cast<int>(p - kAminoAcids);
  return 20;  // X
}

ResidueSequence encode_residues(const std::string& target_id,
                                const std::string& sequence, int64_t max_len) {
  if (max_len < 1) throw ConfigError("sequence max_len must be >= 1");
  ResidueSequence s;
  s.target_id = target_id;
  s.original_length = static_cast<int64_t>(sequence.size());
  int64_t take = std::min<int64_t>(s.original_length, max_len);
  s.truncated = take < s.original_length;
  s.residues.reserve(take);
  for (int64_t i = 0; i < take; ++i) s.residues.push_back(residue_index(sequence[i]));
  return s;
}

ResidueFeaturizer ResidueFeaturizer::learned(int e_dim, Rng& rng) {
  if (e_dim < 1) throw ConfigError("residue e_dim must be >= 1");
  ResidueFeaturizer f;
  f.e_dim_ = e_dim;
  double b = std::sqrt(6.0 / static_cast<double>(kResidueAlphabet + e_dim));
  f.table_ = Tensor::uniform({kResidueAlphabet, e_dim}, -b, b, rng, true);
  return f;
}

ResidueFeaturizer ResidueFeaturizer::precomputed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open residue feature file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kResMagic, sizeof(kResMagic)) != 0) {
    throw IoError("not a residue feature file (bad magic): " + path);
  }
  uint64_t count = 0, e_dim = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  in.read(reinterpret_cast<char*>(&e_dim), sizeof(e_dim));
  if (!in || e_dim == 0) throw IoError("corrupt residue feature file: " + path);
  ResidueFeaturizer f;
  f.e_dim_ = static_cast<int>(e_dim);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string id(len, '\0');
    in.read(id.data(), len);
    uint64_t rows = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    if (!in || rows == 0) throw IoError("corrupt residue feature file: " + path);
    auto m = Tensor::zeros({static_cast<int64_t>(rows), static_cast<int64_t>(e_dim)});
    in.read(reinterpret_cast<char*>(m->data.data()), m->data.size() * sizeof(double));
    if (!in) throw IoError("truncated residue feature file: " + path);
    f.per_target_.emplace(std::move(id), std::move(m));
  }
  return f;
}

ResidueFeaturizer ResidueFeaturizer::precomputed_from(
    std::map<std::string, TensorPtr> per_target) {
  if (per_target.empty()) throw ContractError("empty precomputed residue feature set");
  ResidueFeaturizer f;
  f.e_dim_ = static_cast<int>(per_target.begin()->second->shape[1]);
  for (auto& [id, m] : per_target) {
    if (m->shape.size() != 2 || m->shape[1] != f.e_dim_) {
      throw ContractError("residue feature matrix for '" + id +
                          "' has inconsistent width");
    }
  }
  f.per_target_ = std::move(per_target);
  return f;
}

void save_residue_features(const std::map<std::string, TensorPtr>& features,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write residue feature file: " + path);
  out.write(kResMagic, sizeof(kResMagic));
  uint64_t count = features.size();
  uint64_t e_dim = features.empty() ? 0 : static_cast<uint64_t>(features.begin()->second->shape[1]);
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(&e_dim), sizeof(e_dim));
  for (const auto& [id, m] : features) {
    if (static_cast<uint64_t>(m->shape[1]) != e_dim) {
      throw ContractError("residue feature matrices must share one width");
    }
    uint32_t len = static_cast<uint32_t>(id.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(id.data(), len);
    uint64_t rows = static_cast<uint64_t>(m->shape[0]);
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(m->data.data()),
              m->data.size() * sizeof(double));
  }
  if (!out) throw IoError("failed while writing residue feature file: " + path);
}

TensorPtr ResidueFeaturizer::features(const ResidueSequence& s) const {
  if (s.residues.empty()) {
    throw ContractError("residue featurizer: empty sequence for target '" +
                        s.target_id + "'");
  }
  if (table_) return ops::embedding_lookup(table_, s.residues);
  auto it = per_target_.find(s.target_id);
  if (it == per_target_.end()) {
    throw IoError("no precomputed residue features for target '" + s.target_id + "'");
  }
  const TensorPtr& m = it->second;
  int64_t need = static_cast<int64_t>(s.residues.size());
  if (m->shape[0] < need) {
    throw IoError("precomputed residue features for '" + s.target_id + "' cover " +
                  std::to_string(m->shape[0]) + " residues, sequence has " +
                  std::to_string(need));
  }
  if (m->shape[0] == need) return m;
  std::vector<double> rows(m->data.begin(), m->data.begin() + need * m->shape[1]);
  return Tensor::create({need, m->shape[1]}, std::move(rows));
}

std::vector<TensorPtr> ResidueFeaturizer::parameters() const {
  if (table_) return {table_};
  return {};
}

bool ResidueFeaturizer::covers(const std::string& target_id) const {
  if (table_) return true;
  return per_target_.count(target_id) != 0;
}

SeqEncoder::SeqEncoder(const Spec& spec, int e_dim, Rng& rng) : spec_(spec) {
  if (spec.channels.empty()) throw ConfigError("seq encoder needs conv channels");
  if (spec.kernel < 1) throw ConfigError("seq encoder kernel must be >= 1");
  if (spec.pool_len < 1) throw ConfigError("seq encoder pool_len must be >= 1");
  int64_t cin = e_dim;
  for (int cout : spec.channels) {
    double b = std::sqrt(6.0 / static_cast<double>(spec.kernel * cin + cout));
    kernels_.push_back(
        Tensor::uniform({spec.kernel, cin, cout}, -b, b, rng, true));
    conv_b_.push_back(Tensor::zeros({cout}, true));
    cin = cout;
  }
  int64_t flat = static_cast<int64_t>(spec.pool_len) * cin;
  double b = std::sqrt(6.0 / static_cast<double>(flat + spec.out_dim));
  proj_w_ = Tensor::uniform({flat, spec.out_dim}, -b, b, rng, true);
  proj_b_ = Tensor::zeros({spec.out_dim}, true);
}

TensorPtr SeqEncoder::encode(const ResidueSequence& s,
                             const ResidueFeaturizer& f) const {
  TensorPtr h = f.features(s);
  for (size_t l = 0; l < kernels_.size(); ++l) {
    h = ops::relu(ops::add(ops::conv1d(h, kernels_[l], 1), conv_b_[l]));
  }
  h = ops::adaptive_max_pool(h, spec_.pool_len);
  h = ops::reshape(h, {1, h->numel()});
  return ops::add(ops::matmul(h, proj_w_), proj_b_);
}

std::vector<TensorPtr> SeqEncoder::parameters() const {
  std::vector<TensorPtr> ps;
  for (size_t l = 0; l < kernels_.size(); ++l) {
    ps.push_back(kernels_[l]);
    ps.push_back(conv_b_[l]);
  }
  ps.push_back(proj_w_);
  ps.push_back(proj_b_);
  return ps;
}

std::vector<std::pair<std::string, TensorPtr>> SeqEncoder::named_parameters() const {
  std::vector<std::pair<std::string, TensorPtr>> named;
  for (size_t l = 0; l < kernels_.size(); ++l) {
    named.emplace_back("cnn/k" + std::to_string(l), kernels_[l]);
    named.emplace_back("cnn/b" + std::to_string(l), conv_b_[l]);
  }
  named.emplace_back("cnn/proj_w", proj_w_);
  named.emplace_back("cnn/proj_b", proj_b_);
  return named;
}

void SeqEncoder::load_parameters(
    const std::vector<std::pair<std::string, TensorPtr>>& named) {
  for (auto& [name, stored] : named) {
    for (auto& [want, param] : named_parameters()) {
      if (want == name) {
        if (stored->shape != param->shape) {
          throw IoError("seq encoder parameter " + name + " has shape " +
                        shape_str(stored->shape) + ", expected " +
                        shape_str(param->shape));
        }
        param->data = stored->data;
      }
    }
  }
}

}  // namespace moedti
