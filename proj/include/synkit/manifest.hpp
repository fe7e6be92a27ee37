//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synkit/common.hpp"

namespace synkit::manifest {

inline std::string file_digest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot digest missing file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
  return buf;
}

inline std::string git_describe() {
  FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[128] = {0};
  std::string out;
  if (std::fgets(buf, sizeof(buf), pipe)) out = trim(buf);
  ::pclose(pipe);
  return out.empty() ? "unknown" : out;
}

struct RunManifest {
  std::string subcommand;
  std::string config_text;
  std::uint64_t seed = 0;
  std::string git;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;

  void add_input(const std::string& path) { input_digests[path] = file_digest(path); }

  void write(const std::string& path) const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["config"] = config_text;
    j["seed"] = seed;
    j["git_describe"] = git.empty() ? git_describe() : git;
    j["input_digests"] = input_digests;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest: " + path);
    f << j.dump(2) << "\n";
  }

  // recomputes every input digest; mismatch means the inputs moved under us
  static bool verify(const std::string& path, std::string* detail = nullptr) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read manifest: " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    for (const auto& [file, digest] : j["input_digests"].items()) {
      const std::string now = file_digest(file);
      if (now != digest.get<std::string>()) {
        if (detail) *detail = file + ": stored " + digest.get<std::string>() + ", recomputed " + now;
        return false;
      }
    }
    return true;
  }
};

}  // namespace synkit::manifest
