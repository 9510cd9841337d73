#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moedti/tensor.hpp"

namespace moedti {

// Named-section binary container used for trained model bundles:
// tensors, string lists, and text blobs keyed by name, plus the
// fingerprint of the config that produced them.
class BundleWriter {
 public:
  void add_tensor(const std::string& name, const TensorPtr& t);
  void add_strings(const std::string& name, const std::vector<std::string>& v);
  void add_text(const std::string& name, const std::string& text);
  void write(const std::string& path, uint64_t config_fingerprint) const;

 private:
  struct Section {
    uint8_t kind;  // 0 tensor, 1 string list, 2 text
    std::string name;
    TensorPtr tensor;
    std::vector<std::string> strings;
    std::string text;
  };
  std::vector<Section> sections_;
};

class BundleReader {
 public:
  explicit BundleReader(const std::string& path);

  uint64_t config_fingerprint() const { return fingerprint_; }
  bool has(const std::string& name) const;
  TensorPtr tensor(const std::string& name) const;
  std::vector<std::string> strings(const std::string& name) const;
  std::string text(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  uint64_t fingerprint_ = 0;
  std::map<std::string, TensorPtr> tensors_;
  std::map<std::string, std::vector<std::string>> strings_;
  std::map<std::string, std::string> texts_;
  std::string path_;
};

}  // namespace moedti
