#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fmdse {

// Single pinned hash primitive for the whole artifact: vertex refs, state
// digests, trace hashes and store keys all go through sha256_hex.
inline constexpr const char* kDigestAlgorithm = "SHA-256";
inline constexpr std::size_t kDigestHexChars = 64;

std::string sha256_hex(std::string_view bytes);

// Incremental variant used where inputs are assembled from chunks.
class Sha256Stream {
 public:
  Sha256Stream();
  ~Sha256Stream();
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  void update(std::string_view bytes);
  std::string finish_hex();

 private:
  void* ctx_;
};

bool looks_like_digest(std::string_view s);

}  // namespace fmdse
