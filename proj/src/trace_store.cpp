#include "fmdse/trace_store.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "fmdse/digest.hpp"

namespace fmdse {

TraceStore::TraceStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // fresh store
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!looks_like_digest(line)) {
      throw std::runtime_error("trace store " + path_.string() + " corrupt at line " +
                               std::to_string(lineno));
    }
    hashes_.insert(line);
  }
}

bool TraceStore::insert(const std::string& digest) {
  if (!looks_like_digest(digest)) {
    throw std::runtime_error("trace store: refusing to insert malformed digest");
  }
  if (!hashes_.insert(digest).second) return false;
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    throw std::runtime_error("trace store: cannot open " + path_.string() + " for append");
  }
  out << digest << '\n';
  if (!out.flush()) {
    throw std::runtime_error("trace store: write to " + path_.string() + " failed");
  }
  return true;
}

bool TraceStore::contains(const std::string& digest) const {
  return hashes_.count(digest) != 0;
}

std::filesystem::path resolve_store_path(const std::string& configured) {
  if (const char* env = std::getenv("FMDSE_STORE"); env != nullptr && *env != '\0') {
    return env;
  }
  if (!configured.empty()) return configured;
  return "fmdse.store";
}

}  // namespace fmdse
