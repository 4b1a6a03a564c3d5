#include "manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#ifndef TRIMLAB_VERSION
#define TRIMLAB_VERSION "unknown"
#endif

namespace trimlab::tools {

const char* version_stamp() { return TRIMLAB_VERSION; }

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) &&
                  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

Manifest::Manifest(std::string subcommand, const RunConfig& cfg, std::vector<std::uint64_t> seeds)
    : subcommand_(std::move(subcommand)), canonical_(cfg.canonical()), seeds_(std::move(seeds)) {
  for (const auto& kv : cfg.values()) config_.push_back(kv);
  config_hash_ = git_blob_sha1("subcommand = " + subcommand_ + "\n" + canonical_ +
                               "version = " + version_stamp() + "\n");
}

void Manifest::add_gate(std::string name, double value, double threshold, bool pass) {
  gates_.push_back({std::move(name), value, threshold, pass});
}

void Manifest::add_artifact(const std::filesystem::path& root, const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  artifacts_.emplace_back(std::filesystem::relative(file, root).generic_string(), git_blob_sha1(ss.str()));
}

bool Manifest::all_pass() const {
  for (const auto& g : gates_)
    if (!g.pass) return false;
  return true;
}

std::string Manifest::json() const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand_;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_) config[k] = v;
  j["config"] = config;
  j["seeds"] = seeds_;
  j["versions"] = {{"trimlab", version_stamp()}};
  nlohmann::ordered_json hashes;
  hashes["config"] = config_hash_;
  nlohmann::ordered_json arts = nlohmann::ordered_json::object();
  for (const auto& [p, h] : artifacts_) arts[p] = h;
  hashes["artifacts"] = arts;
  j["hashes"] = hashes;
  nlohmann::ordered_json gates = nlohmann::ordered_json::array();
  for (const auto& g : gates_)
    gates.push_back({{"name", g.name}, {"value", g.value}, {"threshold", g.threshold}, {"pass", g.pass}});
  j["gates"] = gates;
  return j.dump(2) + "\n";
}

}  // namespace trimlab::tools
