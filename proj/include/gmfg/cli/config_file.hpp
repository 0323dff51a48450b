// Copyright 2026 The GMFG Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Flat "key = value" configuration files. '#' starts a comment, blank lines
// are ignored, keys may contain dots, and every key may appear once.

#pragma once

#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/errors.hpp"

namespace gmfg::cli {

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;  // 0 for values set programmatically
  };

  static ConfigFile Parse(std::istream& in, const std::string& source = "<config>") {
    ConfigFile cfg;
    cfg.source_ = source;
    std::string raw;
    for (int line = 1; std::getline(in, raw); ++line) {
      const auto hash = raw.find('#');
      const std::string text = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) cfg.Fail(line, "expected 'key = value'");
      const std::string key = Trim(text.substr(0, eq));
      const std::string value = Trim(text.substr(eq + 1));
      if (key.empty()) cfg.Fail(line, "empty key");
      for (char c : key) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_')) {
          cfg.Fail(line, "invalid character in key '" + key + "'");
        }
      }
      if (cfg.entries_.count(key) != 0) {
        cfg.Fail(line, "duplicate key '" + key + "' (first set on line " + std::to_string(cfg.entries_[key].line) + ")");
      }
      cfg.entries_[key] = {value, line};
      cfg.order_.push_back(key);
    }
    return cfg;
  }

  static ConfigFile ParseString(const std::string& text, const std::string& source = "<config>") {
    std::istringstream in(text);
    return Parse(in, source);
  }

  static ConfigFile Load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return Parse(in, path);
  }

  const std::string& source() const { return source_; }
  const std::vector<std::string>& keys() const { return order_; }
  bool Has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry& at(const std::string& key) const { return entries_.at(key); }

  // Command-line overrides replace file values.
  void Set(const std::string& key, const std::string& value) {
    if (entries_.count(key) == 0) order_.push_back(key);
    entries_[key] = {value, 0};
  }

  [[noreturn]] void Fail(int line, const std::string& msg) const {
    if (line > 0) throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    throw ConfigError(source_ + ": " + msg);
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

}  // namespace gmfg::cli
