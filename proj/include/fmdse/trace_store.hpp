#pragma once

#include <filesystem>
#include <string>
#include <unordered_set>

namespace fmdse {

// Append-only set of trace hashes backing rejection sampling. One fixed-width
// lowercase hex digest per line; insert is idempotent and flushed eagerly so
// a reopened store sees every accepted trace.
class TraceStore {
 public:
  explicit TraceStore(std::filesystem::path path);

  // Returns true when the hash was new. Malformed digests are rejected.
  bool insert(const std::string& digest);
  bool contains(const std::string& digest) const;
  std::size_t size() const { return hashes_.size(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::unordered_set<std::string> hashes_;
};

// Store path resolution: FMDSE_STORE overrides, else the configured path,
// else a default next to the working directory.
std::filesystem::path resolve_store_path(const std::string& configured);

}  // namespace fmdse
