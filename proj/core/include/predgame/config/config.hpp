#pragma once

#include <map>
#include <string>

#include "predgame/harness/harness.hpp"

namespace predgame::cfg {

// Flat typed key-value configuration: "[section]" headers, "key = value"
// lines, '#' comments, and "include <path>" directives (resolved relative to
// the including file). Keys are stored as "section.key".
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& source_name = "<string>",
                             const std::string& include_dir = ".");

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& get(const std::string& key) const;

  // Later sources win key-by-key.
  void merge_from(const Config& other);

  // Canonical text: sections and keys in sorted order. parse(serialize(c))
  // yields entries identical to c.
  std::string serialize() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  bool operator==(const Config& other) const { return entries_ == other.entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Typed binding of a Config onto a fully resolved scenario spec. Rejects
// unknown keys; missing keys take the shipped defaults.
struct RunConfig {
  harness::ScenarioSpec spec;

  static RunConfig from_config(const Config& config);
  Config to_config() const;
};

}  // namespace predgame::cfg
