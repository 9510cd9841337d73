#include "moedti/bundle.hpp"

#include <cstring>
#include <fstream>

namespace moedti {

namespace {

constexpr char kMagic[8] = {'M', 'D', 'T', 'I', 'B', 'N', 'D', '1'};

void write_u64(std::ofstream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_str(std::ofstream& out, const std::string& s) {
  uint32_t len = static_cast<uint32_t>(s.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(s.data(), len);
}

uint64_t read_u64(std::ifstream& in, const std::string& path) {
  uint64_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("truncated bundle: " + path);
  return v;
}

std::string read_str(std::ifstream& in, const std::string& path) {
  uint32_t len;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw IoError("truncated bundle: " + path);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw IoError("truncated bundle: " + path);
  return s;
}

}  // namespace

void BundleWriter::add_tensor(const std::string& name, const TensorPtr& t) {
  if (!t) throw ContractError("bundle: null tensor for section " + name);
  sections_.push_back({0, name, t, {}, {}});
}

void BundleWriter::add_strings(const std::string& name,
                               const std::vector<std::string>& v) {
  sections_.push_back({1, name, nullptr, v, {}});
}

void BundleWriter::add_text(const std::string& name, const std::string& text) {
  sections_.push_back({2, name, nullptr, {}, text});
}

void BundleWriter::write(const std::string& path, uint64_t config_fingerprint) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write bundle: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, config_fingerprint);
  write_u64(out, sections_.size());
  for (const auto& s : sections_) {
    out.put(static_cast<char>(s.kind));
    write_str(out, s.name);
    if (s.kind == 0) {
      write_u64(out, s.tensor->shape.size());
      for (int64_t d : s.tensor->shape) write_u64(out, static_cast<uint64_t>(d));
      out.write(reinterpret_cast<const char*>(s.tensor->data.data()),
                s.tensor->data.size() * sizeof(double));
    } else if (s.kind == 1) {
      write_u64(out, s.strings.size());
      for (const auto& v : s.strings) write_str(out, v);
    } else {
      write_str(out, s.text);
    }
  }
  if (!out) throw IoError("failed while writing bundle: " + path);
}

BundleReader::BundleReader(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bundle: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a model bundle (bad magic): " + path);
  }
  fingerprint_ = read_u64(in, path);
  uint64_t count = read_u64(in, path);
  for (uint64_t i = 0; i < count; ++i) {
    int kind = in.get();
    if (kind == EOF) throw IoError("truncated bundle: " + path);
    std::string name = read_str(in, path);
    if (kind == 0) {
      uint64_t rank = read_u64(in, path);
      Shape shape;
      for (uint64_t r = 0; r < rank; ++r) {
        shape.push_back(static_cast<int64_t>(read_u64(in, path)));
      }
      auto t = Tensor::zeros(shape);
      in.read(reinterpret_cast<char*>(t->data.data()), t->data.size() * sizeof(double));
      if (!in) throw IoError("truncated bundle: " + path);
      tensors_.emplace(std::move(name), std::move(t));
    } else if (kind == 1) {
      uint64_t n = read_u64(in, path);
      std::vector<std::string> v;
      v.reserve(n);
      for (uint64_t j = 0; j < n; ++j) v.push_back(read_str(in, path));
      strings_.emplace(std::move(name), std::move(v));
    } else if (kind == 2) {
      texts_.emplace(std::move(name), read_str(in, path));
    } else {
      throw IoError("bundle has an unknown section kind: " + path);
    }
  }
}

bool BundleReader::has(const std::string& name) const {
  return tensors_.count(name) || strings_.count(name) || texts_.count(name);
}

TensorPtr BundleReader::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw IoError("bundle " + path_ + " lacks tensor: " + name);
  return it->second;
}

std::vector<std::string> BundleReader::strings(const std::string& name) const {
  auto it = strings_.find(name);
  if (it == strings_.end()) {
    throw IoError("bundle " + path_ + " lacks string list: " + name);
  }
  return it->second;
}

std::string BundleReader::text(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw IoError("bundle " + path_ + " lacks text: " + name);
  return it->second;
}

std::vector<std::string> BundleReader::names() const {
  std::vector<std::string> out;
  for (auto& [k, _] : tensors_) out.push_back(k);
  for (auto& [k, _] : strings_) out.push_back(k);
  for (auto& [k, _] : texts_) out.push_back(k);
  return out;
}

}  // namespace moedti
