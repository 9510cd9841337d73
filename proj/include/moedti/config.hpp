#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moedti/errors.hpp"

namespace moedti {

// Flat "section.key = value" configuration. Every tunable default is
// registered up front; files and --set overrides may only touch known
// keys, which catches typos early. The resolved text (sorted, fully
// expanded) is echoed into output artifacts.
class Config {
 public:
  static Config defaults();
  static Config from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void apply_file(const std::string& path);
  void apply_text(const std::string& text, const std::string& origin);

  const std::string& str(const std::string& key) const;
  int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<int64_t> int_list(const std::string& key) const;  // comma separated

  std::string resolved_text() const;
  uint64_t fingerprint() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace moedti
