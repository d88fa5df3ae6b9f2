// Copyright 2026 the citerank authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "citerank/citegraph.hpp"

namespace citerank {

/// Pipeline stages in execution order.
enum class Stage { kIngested, kEnriched, kProfiled, kCorrelated, kEvaluated };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kIngested: return "ingested";
    case Stage::kEnriched: return "enriched";
    case Stage::kProfiled: return "profiled";
    case Stage::kCorrelated: return "correlated";
    case Stage::kEvaluated: return "evaluated";
  }
  return "?";
}

/// Persistent workspace directory holding stage outputs, a manifest with
/// completion flags and input checksums, and an advisory lock so one command
/// runs at a time.
class Workspace {
 public:
  explicit Workspace(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::create_directories(dir_);
    load();
  }

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const {
    return dir_ / name;
  }

  /// FNV-1a content checksum of a file, hex.
  static std::string checksum_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return DiskCache::key_hash(buf.str());
  }

  bool stage_done(Stage s) const {
    auto it = manifest_.find("stage." + std::string(stage_name(s)));
    return it != manifest_.end() && it->second == "done";
  }

  /// A stage flag only counts as fresh if every output file it recorded
  /// still exists with its recorded checksum.
  bool stage_fresh(Stage s) const {
    if (!stage_done(s)) return false;
    std::string prefix = "output." + std::string(stage_name(s)) + ".";
    for (const auto& [key, sum] : manifest_) {
      if (key.rfind(prefix, 0) != 0) continue;
      std::filesystem::path p = dir_ / key.substr(prefix.size());
      if (!std::filesystem::exists(p) || checksum_file(p) != sum) return false;
    }
    return true;
  }

  void mark_stage(Stage s, const std::vector<std::string>& output_files) {
    manifest_["stage." + std::string(stage_name(s))] = "done";
    for (const auto& f : output_files)
      manifest_["output." + std::string(stage_name(s)) + "." + f] =
          checksum_file(dir_ / f);
    save();
  }

  /// Invalidates a stage and everything after it.
  void invalidate_from(Stage s) {
    for (Stage st : {Stage::kIngested, Stage::kEnriched, Stage::kProfiled,
                     Stage::kCorrelated, Stage::kEvaluated}) {
      if (static_cast<int>(st) < static_cast<int>(s)) continue;
      manifest_.erase("stage." + std::string(stage_name(st)));
    }
    save();
  }

  std::optional<std::string> get(const std::string& key) const {
    auto it = manifest_.find(key);
    if (it == manifest_.end()) return std::nullopt;
    return it->second;
  }

  void set(const std::string& key, const std::string& value) {
    manifest_[key] = value;
    save();
  }

  /// Input unchanged since the recorded checksum?
  bool input_unchanged(const std::string& key,
                       const std::filesystem::path& file) const {
    auto recorded = get("input." + key);
    return recorded && *recorded == checksum_file(file);
  }

  void record_input(const std::string& key, const std::filesystem::path& file) {
    set("input." + key, checksum_file(file));
  }

  /// Advisory single-writer lock. Throws if another command holds it.
  class Lock {
   public:
    explicit Lock(const std::filesystem::path& dir) : path_(dir / ".lock") {
      if (std::filesystem::exists(path_))
        throw std::runtime_error(
            "workspace is locked by another command (remove " + path_.string() +
            " if stale)");
      std::ofstream(path_) << "locked\n";
    }
    ~Lock() {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
    Lock(const Lock&) = delete;
    Lock& operator=(const Lock&) = delete;

   private:
    std::filesystem::path path_;
  };

 private:
  void load() {
    auto mf = dir_ / "manifest.json";
    if (!std::filesystem::exists(mf)) return;
    std::ifstream in(mf);
    nlohmann::json j = nlohmann::json::parse(in);
    for (auto it = j.begin(); it != j.end(); ++it)
      manifest_[it.key()] = it.value().get<std::string>();
  }

  void save() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : manifest_) j[k] = v;
    std::ofstream out(dir_ / "manifest.json");
    out << j.dump(2) << '\n';
  }

  std::filesystem::path dir_;
  std::map<std::string, std::string> manifest_;
};

/// Flat key=value config file; '#' comments and blank lines are skipped.
inline std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = line;
    std::size_t b = t.find_first_not_of(" \t");
    if (b == std::string::npos || t[b] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "config line missing '='");
    auto trim = [](std::string s) {
      std::size_t x = s.find_first_not_of(" \t");
      if (x == std::string::npos) return std::string();
      std::size_t y = s.find_last_not_of(" \t");
      return s.substr(x, y - x + 1);
    };
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

}  // namespace citerank
