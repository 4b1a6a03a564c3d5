#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"

namespace trimlab::tools {

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(std::string_view content);

struct Gate {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

class Manifest {
 public:
  Manifest(std::string subcommand, const RunConfig& cfg, std::vector<std::uint64_t> seeds);

  void add_gate(std::string name, double value, double threshold, bool pass);
  /// Records the artifact's content hash; the path is stored relative to the output directory.
  void add_artifact(const std::filesystem::path& root, const std::filesystem::path& file);

  const std::vector<Gate>& gates() const noexcept { return gates_; }
  bool all_pass() const;
  /// Hash of the canonical config plus the code version stamp.
  const std::string& config_hash() const noexcept { return config_hash_; }

  std::string json() const;

 private:
  std::string subcommand_;
  std::string canonical_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::uint64_t> seeds_;
  std::string config_hash_;
  std::vector<Gate> gates_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
};

const char* version_stamp();

}  // namespace trimlab::tools
