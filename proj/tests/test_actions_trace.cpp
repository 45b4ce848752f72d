#include "doctest.h"

#include <string>
#include <vector>

#include "fmdse/actions.hpp"
#include "fmdse/digest.hpp"
#include "fmdse/trace.hpp"

using namespace fmdse;

namespace {

std::string fake_digest(const std::string& tag) { return sha256_hex(tag); }

Trace small_trace() {
  Trace t;
  t.meta.source = "simulator";
  t.meta.seed = 42;
  t.meta.config_id = "cfg-a";
  t.init_digest = fake_digest("init");
  t.steps.push_back({make_action(kNextRound, {{"p", std::string("P1")}}),
                     fake_digest("s1"), std::nullopt});
  t.steps.push_back({make_action(kCreateVertex, {{"p", std::string("P1")}}),
                     fake_digest("s2"), std::nullopt});
  return t;
}

}  // namespace

TEST_SUITE("actions-trace") {

TEST_CASE("canonical rendering sorts parameters by name") {
  Action a = make_action(kReceiveVertex, {{"v", std::string("ref")},
                                          {"p", std::string("P1")},
                                          {"r", std::int64_t{3}},
                                          {"q", std::string("P2")}});
  CHECK(canonical_action(a) == "ReceiveVertex(p=P1,q=P2,r=3,v=ref)");
  CHECK(canonical_action(make_action(kReconfigure, {})) == "Reconfigure()");
  CHECK(canonical_action(make_action(kNextRound, {{"p", std::string("P4")}})) ==
        "NextRound(p=P4)");
}

TEST_CASE("abstract action schemas are enforced") {
  CHECK(validate_abstract_action(
            make_action(kNextRound, {{"p", std::string("P1")}})) == "");
  CHECK(validate_abstract_action(
            make_action(kCommitLeader,
                        {{"p", std::string("P1")}, {"w", std::int64_t{1}}})) == "");
  CHECK(validate_abstract_action(make_action(kReconfigure, {})) == "");

  // Wrong kind, missing param, extra param, misnamed param. Value types are
  // checked at the point of use, not by the schema.
  CHECK(validate_abstract_action(make_action("Bogus", {})) != "");
  CHECK(validate_abstract_action(make_action(kNextRound, {})) != "");
  CHECK(validate_abstract_action(
            make_action(kNextRound, {{"p", std::string("P1")},
                                     {"x", std::int64_t{1}}})) != "");
  CHECK(validate_abstract_action(
            make_action(kNextRound, {{"q", std::string("P1")}})) != "");
  CHECK(validate_abstract_action(
            make_action(kCommitLeader, {{"p", std::string("P1")}})) != "");
  CHECK(validate_abstract_action(
            make_action(kImplAdvanceRound, {{"p", std::string("P1")}})) != "");
  CHECK(validate_abstract_action(
            make_action(kNextRound, {{"p", std::int64_t{1}}})) == "");
}

TEST_CASE("abstract and concrete kinds partition the vocabulary") {
  for (const char* k :
       {kCreateVertex, kReceiveVertex, kNextRound, kCommitLeader, kEquivocate,
        kReconfigure}) {
    CHECK(is_abstract_kind(k));
  }
  CHECK(impl_action_kinds().size() == 12);
  for (const auto& k : impl_action_kinds()) {
    CHECK_FALSE(is_abstract_kind(k));
    CHECK(k.rfind(kImplPrefix, 0) == 0);
  }
}

TEST_CASE("trace hash ignores metadata") {
  Trace a = small_trace();
  Trace b = small_trace();
  b.meta.seed = 4242;
  b.meta.source = "model";
  b.meta.config_id = "cfg-b";
  CHECK(hash_trace(a) == hash_trace(b));
}

TEST_CASE("trace hash depends on step order") {
  Trace a = small_trace();
  Trace b = small_trace();
  std::swap(b.steps[0], b.steps[1]);
  CHECK(hash_trace(a) != hash_trace(b));
}

TEST_CASE("trace hash depends on digests and init state") {
  Trace a = small_trace();
  Trace b = small_trace();
  b.steps[1].post_digest = fake_digest("other");
  CHECK(hash_trace(a) != hash_trace(b));
  Trace c = small_trace();
  c.init_digest = fake_digest("other-init");
  CHECK(hash_trace(a) != hash_trace(c));
}

TEST_CASE("serialization round trip preserves every field") {
  Trace t = small_trace();
  t.steps[0].post_state = nlohmann::json{{"probe", 1}};
  const Trace back = deserialize_trace(serialize_trace(t, true));
  CHECK(back.meta.source == t.meta.source);
  CHECK(back.meta.seed == t.meta.seed);
  CHECK(back.meta.config_id == t.meta.config_id);
  CHECK(back.init_digest == t.init_digest);
  REQUIRE(back.steps.size() == t.steps.size());
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    CHECK(canonical_action(back.steps[i].action) ==
          canonical_action(t.steps[i].action));
    CHECK(back.steps[i].post_digest == t.steps[i].post_digest);
  }
  CHECK(back.steps[0].post_state.has_value());
  CHECK(hash_trace(back) == hash_trace(t));
}

TEST_CASE("serialization round trip of a long generated trace") {
  Trace t;
  t.meta.source = "model";
  t.meta.seed = 1;
  t.meta.config_id = "long";
  t.init_digest = fake_digest("init");
  for (int i = 0; i < 1000; ++i) {
    t.steps.push_back(
        {make_action(kReceiveVertex,
                     {{"p", std::string("P1")},
                      {"q", std::string("P2")},
                      {"r", std::int64_t{i + 1}},
                      {"v", fake_digest("v" + std::to_string(i))}}),
         fake_digest("d" + std::to_string(i)), std::nullopt});
  }
  const Trace back = deserialize_trace(serialize_trace(t));
  REQUIRE(back.steps.size() == 1000);
  CHECK(hash_trace(back) == hash_trace(t));
}

TEST_CASE("states survive the embedded round trip") {
  AbstractState s;
  for (int i = 0; i < 3; ++i) {
    NodeView n;
    n.id = node_id_for_index(i);
    n.round = i + 1;
    n.dag[1][i] = vertex_ref(n.id, 1, {}, 0);
    s.nodes.push_back(std::move(n));
  }
  s.nodes[0].dag[2][1] = vertex_ref("P2", 2, {}, 0);
  s.nodes[1].leaders.emplace_back(1, vertex_ref("P1", 1, {}, 0));
  s.faulty = {"P3"};

  const AbstractState back = state_from_json(state_to_json(s));
  CHECK(state_digest(back) == state_digest(s));
  CHECK(back.nodes[0].dag.at(2).at(1) == s.nodes[0].dag.at(2).at(1));
  CHECK(back.faulty == s.faulty);
}

TEST_CASE("malformed trace text is rejected with a line number") {
  const std::string good = serialize_trace(small_trace());

  CHECK_THROWS_AS(deserialize_trace(""), TraceParseError);
  CHECK_THROWS_AS(deserialize_trace("{not json"), TraceParseError);

  // Header only, no steps.
  const std::string header = good.substr(0, good.find('\n') + 1);
  CHECK_THROWS_AS(deserialize_trace(header), TraceParseError);

  // Truncated mid-line.
  CHECK_THROWS_AS(deserialize_trace(good.substr(0, good.size() - 20)),
                  TraceParseError);

  // Step with a malformed digest.
  std::string bad = good;
  const auto pos = bad.find(fake_digest("s1"));
  bad.replace(pos, 64, std::string(64, 'z'));
  try {
    deserialize_trace(bad);
    CHECK(false);
  } catch (const TraceParseError& e) {
    CHECK(e.line() == 2);
  }

  // Version from the future.
  std::string futural = good;
  futural.replace(futural.find("\"version\":1"), 11, "\"version\":9");
  CHECK_THROWS_AS(deserialize_trace(futural), TraceParseError);
}

TEST_CASE("trace files round trip through the filesystem") {
  const Trace t = small_trace();
  const std::filesystem::path p = "trace_roundtrip.tmp";
  write_trace_file(p, t);
  const Trace back = read_trace_file(p);
  CHECK(hash_trace(back) == hash_trace(t));
  std::filesystem::remove(p);
  CHECK_THROWS(read_trace_file(p));
}

}  // TEST_SUITE
