#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "fmdse/digest.hpp"
#include "fmdse/trace_store.hpp"

using namespace fmdse;

namespace {

struct TempPath {
  std::filesystem::path p;
  explicit TempPath(const std::string& name) : p(name) { std::filesystem::remove(p); }
  ~TempPath() { std::filesystem::remove(p); }
};

}  // namespace

TEST_SUITE("store") {

TEST_CASE("insert on a fresh store returns true, repeat returns false") {
  TempPath tmp("store_basic.tmp");
  TraceStore store(tmp.p);
  const std::string h = sha256_hex("trace-1");
  CHECK(store.size() == 0);
  CHECK_FALSE(store.contains(h));
  CHECK(store.insert(h));
  CHECK(store.contains(h));
  CHECK(store.size() == 1);
  CHECK_FALSE(store.insert(h));
  CHECK(store.size() == 1);
}

TEST_CASE("a thousand digests survive a reopen") {
  TempPath tmp("store_reopen.tmp");
  {
    TraceStore store(tmp.p);
    for (int i = 0; i < 1000; ++i) {
      CHECK(store.insert(sha256_hex("t" + std::to_string(i))));
    }
    CHECK(store.size() == 1000);
  }
  TraceStore reopened(tmp.p);
  CHECK(reopened.size() == 1000);
  for (int i = 0; i < 1000; ++i) {
    CHECK(reopened.contains(sha256_hex("t" + std::to_string(i))));
  }
  CHECK_FALSE(reopened.contains(sha256_hex("t1000")));
}

TEST_CASE("malformed digests are refused") {
  TempPath tmp("store_malformed.tmp");
  TraceStore store(tmp.p);
  CHECK_THROWS(store.insert("not-a-digest"));
  CHECK_THROWS(store.insert(""));
  CHECK_THROWS(store.insert(std::string(64, 'Z')));
  CHECK(store.size() == 0);
}

TEST_CASE("a corrupt store file is reported on open") {
  TempPath tmp("store_corrupt.tmp");
  {
    std::ofstream out(tmp.p);
    out << sha256_hex("fine") << "\n" << "garbage line\n";
  }
  CHECK_THROWS(TraceStore{tmp.p});
}

TEST_CASE("blank lines in the backing file are tolerated") {
  TempPath tmp("store_blank.tmp");
  {
    std::ofstream out(tmp.p);
    out << sha256_hex("one") << "\n\n" << sha256_hex("two") << "\n";
  }
  TraceStore store(tmp.p);
  CHECK(store.size() == 2);
}

TEST_CASE("store path resolution prefers environment, then config") {
  unsetenv("FMDSE_STORE");
  CHECK(resolve_store_path("") == std::filesystem::path("fmdse.store"));
  CHECK(resolve_store_path("configured.store") ==
        std::filesystem::path("configured.store"));

  setenv("FMDSE_STORE", "env.store", 1);
  CHECK(resolve_store_path("") == std::filesystem::path("env.store"));
  CHECK(resolve_store_path("configured.store") ==
        std::filesystem::path("env.store"));

  // An empty override is treated as unset.
  setenv("FMDSE_STORE", "", 1);
  CHECK(resolve_store_path("configured.store") ==
        std::filesystem::path("configured.store"));
  unsetenv("FMDSE_STORE");
}

}  // TEST_SUITE
