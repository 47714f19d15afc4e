#pragma once

// Run manifest: what produced a set of outputs. Contains no timestamps, so two
// runs with identical inputs and config write identical manifests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "esgread/digest.hpp"
#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/text.hpp"

namespace esgread {

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // sorted by key
  int64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::string artifact_version;

  void set(const std::string& k, const std::string& v) { config[k] = v; }

  void add_input(const std::filesystem::path& p) {
    inputs.emplace_back(p.filename().string(), file_sha256(p.string()));
  }

  std::string serialize() const {
    std::string out = "esgread-manifest 1\n";
    out += "command " + command + "\n";
    out += "artifact_version " + artifact_version + "\n";
    out += "seed " + std::to_string(seed) + "\n";
    for (const auto& [k, v] : config) out += "config " + k + " " + v + "\n";
    for (const auto& [p, d] : inputs) out += "input " + d + " " + p + "\n";
    return out;
  }

  static RunManifest parse(std::string_view s) {
    RunManifest m;
    auto lines = text::split(s, '\n');
    if (lines.empty() || lines[0] != "esgread-manifest 1") {
      throw DataError("not an esgread manifest");
    }
    for (size_t i = 1; i < lines.size(); ++i) {
      const std::string_view line = lines[i];
      if (line.empty()) continue;
      const auto sp = line.find(' ');
      const auto key = line.substr(0, sp);
      const std::string rest =
          sp == std::string_view::npos ? "" : std::string(line.substr(sp + 1));
      if (key == "command") {
        m.command = rest;
      } else if (key == "artifact_version") {
        m.artifact_version = rest;
      } else if (key == "seed") {
        m.seed = std::stoll(rest);
      } else if (key == "config" || key == "input") {
        const auto sp2 = rest.find(' ');
        if (sp2 == std::string::npos) {
          throw DataError("manifest line " + std::to_string(i + 1) +
                          ": malformed " + std::string(key));
        }
        if (key == "config") {
          m.config[rest.substr(0, sp2)] = rest.substr(sp2 + 1);
        } else {
          m.inputs.emplace_back(rest.substr(sp2 + 1), rest.substr(0, sp2));
        }
      } else {
        throw DataError("manifest line " + std::to_string(i + 1) +
                        ": unknown key '" + std::string(key) + "'");
      }
    }
    return m;
  }

  void save(const std::filesystem::path& p) const { write_file(p.string(), serialize()); }
};

}  // namespace esgread
