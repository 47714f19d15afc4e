#pragma once

// Self-describing text container for trained models:
//
//   esgread-artifact 1
//   kind <name>
//   meta <key> <value>            (value runs to end of line)
//   tensor <name> <count>
//   <count whitespace-separated shortest-round-trip decimals>
//   end
//
// Doubles are written with the shortest representation that parses back to
// the same bits, so save -> load is exact.

#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/text.hpp"

namespace esgread {

inline constexpr std::string_view kArtifactMagic = "esgread-artifact";
inline constexpr int kArtifactVersion = 1;

struct Artifact {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, std::vector<double>>> tensors;

  void set(std::string key, std::string value) {
    for (auto& [k, v] : meta) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    meta.emplace_back(std::move(key), std::move(value));
  }

  const std::string& get(std::string_view key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return v;
    }
    throw DataError("artifact '" + kind + "': missing meta '" +
                    std::string(key) + "'");
  }

  bool has(std::string_view key) const {
    for (const auto& [k, _] : meta) {
      if (k == key) return true;
    }
    return false;
  }

  double get_double(std::string_view key) const {
    const auto v = parse_double(get(key));
    if (!v) throw DataError("artifact: meta '" + std::string(key) +
                            "' is not a number");
    return *v;
  }

  int64_t get_int(std::string_view key) const {
    const auto v = parse_int(get(key));
    if (!v) throw DataError("artifact: meta '" + std::string(key) +
                            "' is not an integer");
    return *v;
  }

  void add_tensor(std::string name, std::vector<double> values) {
    tensors.emplace_back(std::move(name), std::move(values));
  }

  const std::vector<double>& tensor(std::string_view name) const {
    for (const auto& [n, v] : tensors) {
      if (n == name) return v;
    }
    throw DataError("artifact '" + kind + "': missing tensor '" +
                    std::string(name) + "'");
  }

  std::string serialize() const {
    std::ostringstream os;
    os << kArtifactMagic << ' ' << kArtifactVersion << '\n';
    os << "kind " << kind << '\n';
    for (const auto& [k, v] : meta) {
      if (k.find_first_of(" \t\n") != std::string::npos ||
          v.find('\n') != std::string::npos) {
        throw DataError("artifact: meta entry '" + k +
                        "' contains whitespace/newline");
      }
      os << "meta " << k << ' ' << v << '\n';
    }
    for (const auto& [name, values] : tensors) {
      os << "tensor " << name << ' ' << values.size() << '\n';
      for (size_t i = 0; i < values.size(); ++i) {
        if (i) os << ' ';
        os << format_double(values[i]);
      }
      os << '\n';
    }
    os << "end\n";
    return os.str();
  }

  static Artifact parse(std::string_view content) {
    auto lines = text::split(content, '\n');
    size_t i = 0;
    auto next = [&]() -> const std::string& {
      if (i >= lines.size()) throw DataError("artifact: truncated file");
      return lines[i++];
    };
    {
      std::istringstream h(next());
      std::string magic;
      int version = 0;
      h >> magic >> version;
      if (magic != kArtifactMagic) throw DataError("artifact: bad magic");
      if (version != kArtifactVersion) {
        throw DataError("artifact: unsupported version " +
                        std::to_string(version));
      }
    }
    Artifact a;
    {
      const auto& l = next();
      if (l.rfind("kind ", 0) != 0) throw DataError("artifact: missing kind");
      a.kind = l.substr(5);
    }
    while (true) {
      const std::string line = next();
      if (line == "end") break;
      if (line.rfind("meta ", 0) == 0) {
        const auto rest = line.substr(5);
        const auto sp = rest.find(' ');
        if (sp == std::string::npos) {
          a.meta.emplace_back(rest, "");
        } else {
          a.meta.emplace_back(rest.substr(0, sp), rest.substr(sp + 1));
        }
      } else if (line.rfind("tensor ", 0) == 0) {
        std::istringstream h(line.substr(7));
        std::string name;
        size_t count = 0;
        h >> name >> count;
        if (!h) throw DataError("artifact: bad tensor header '" + line + "'");
        std::vector<double> values;
        values.reserve(count);
        const std::string& body = next();
        size_t pos = 0;
        while (pos < body.size()) {
          const auto sp = body.find(' ', pos);
          const auto end = sp == std::string::npos ? body.size() : sp;
          const auto v = parse_double(std::string_view(body).substr(pos, end - pos));
          if (!v) throw DataError("artifact: bad number in tensor " + name);
          values.push_back(*v);
          pos = end + 1;
        }
        if (values.size() != count) {
          throw DataError("artifact: tensor " + name + " declares " +
                          std::to_string(count) + " values, has " +
                          std::to_string(values.size()));
        }
        a.tensors.emplace_back(std::move(name), std::move(values));
      } else {
        throw DataError("artifact: unexpected line '" + line + "'");
      }
    }
    return a;
  }

  static Artifact load(const std::string& path) {
    return parse(read_file(path));
  }
  void save(const std::string& path) const { write_file(path, serialize()); }

  bool operator==(const Artifact&) const = default;
};

}  // namespace esgread
