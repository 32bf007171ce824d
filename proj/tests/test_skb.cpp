#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>
#include <sstream>

#include "glosskit/error.hpp"
#include "glosskit/skb.hpp"
#include "oracles.hpp"

using namespace glosskit;

namespace {

SkbGraph load_text(const std::string& text) {
  std::istringstream in(text);
  return load_skb(in);
}

std::string dump(const SkbGraph& g) {
  std::ostringstream out;
  write_skb(out, g);
  return out.str();
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

const char* kFiveRecords =
    R"({"id":"entity","pos":"n","lemmas":["entity"],"gloss":"a thing","examples":[],"hypernyms":[]}
{"id":"organism","pos":"n","lemmas":["organism","being"],"gloss":"a living thing","examples":[],"hypernyms":["entity"]}
{"id":"animal","pos":"n","lemmas":["animal"],"gloss":"moves","examples":["an animal ran"],"hypernyms":["organism"]}
{"id":"dog","pos":"n","lemmas":["dog"],"gloss":"barks","examples":[],"hypernyms":["animal"]}
{"id":"cat","pos":"n","lemmas":["cat"],"gloss":"purrs","examples":[],"hypernyms":["animal"]}
)";

}  // namespace

TEST_SUITE("skb") {
  TEST_CASE("five records load into a graph with derived hyponyms") {
    const auto g = load_text(kFiveRecords);
    CHECK(g.size() == 5);
    CHECK(g.hyponyms("animal") == std::vector<std::string>{"cat", "dog"});
    CHECK(g.hyponyms("dog").empty());
    CHECK(g.at("animal").examples == std::vector<std::string>{"an animal ran"});
    CHECK(g.senses("being").size() == 1);
    CHECK(g.senses("nothing").empty());
  }

  TEST_CASE("dangling hypernym, cycle and duplicate id are rejected") {
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"n","lemmas":["a"],"gloss":"","examples":[],"hypernyms":["missing-n"]})");
          }) == ErrorCode::DanglingHypernym);
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"n","lemmas":["a"],"gloss":"","examples":[],"hypernyms":["b"]}
{"id":"b","pos":"n","lemmas":["b"],"gloss":"","examples":[],"hypernyms":["a"]})");
          }) == ErrorCode::CycleDetected);
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"n","lemmas":["a"],"gloss":"","examples":[],"hypernyms":[]}
{"id":"a","pos":"n","lemmas":["b"],"gloss":"","examples":[],"hypernyms":[]})");
          }) == ErrorCode::DuplicateId);
  }

  TEST_CASE("cycle error names the ids on the cycle") {
    try {
      SkbGraph::build({oracle::synset("r"), oracle::synset("x", {"r", "z"}), oracle::synset("y", {"x"}),
                       oracle::synset("z", {"y"})});
      FAIL("no cycle reported");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CycleDetected);
      const std::string msg = e.what();
      CHECK(msg.find("x") != std::string::npos);
      CHECK(msg.find("y") != std::string::npos);
      CHECK(msg.find("z") != std::string::npos);
    }
  }

  TEST_CASE("malformed records report the line number") {
    try {
      load_text(std::string(kFiveRecords) + "{\"id\":\"x\",\"pos\":\"n\"}\n");
      FAIL("accepted a truncated record");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedRecord);
      CHECK(std::string(e.what()).find("line 6") != std::string::npos);
    }
    CHECK(code_of([] { load_text("not json\n"); }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"n","lemmas":["a"],"gloss":"","examples":[],"hypernyms":[],"extra":1})");
          }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"n","lemmas":[],"gloss":"","examples":[],"hypernyms":[]})");
          }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"x","lemmas":["a"],"gloss":"","examples":[],"hypernyms":[]})");
          }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] {
            load_text(R"({"id":"a","pos":"n","lemmas":["a"],"gloss":"","examples":[],"hypernyms":["a"]})");
          }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] {
            load_text(R"({"id":"b","pos":"n","lemmas":["b"],"gloss":"","examples":[],"hypernyms":[]}
{"id":"a","pos":"n","lemmas":["a"],"gloss":"","examples":[],"hypernyms":["b","b"]})");
          }) == ErrorCode::MalformedRecord);
  }

  TEST_CASE("depth follows the longest path with the virtual root at 1") {
    const auto g = SkbGraph::build(oracle::toy_chain());
    CHECK(g.depth("entity") == 2);
    CHECK(g.depth("organism") == 3);
    CHECK(g.depth("animal") == 4);
    CHECK(g.depth("dog") == 5);
    CHECK_THROWS_AS(g.depth("unicorn"), Error);

    // dog has a 4-node path (short -> root) and a 6-node path to the root.
    const auto diamond = SkbGraph::build({oracle::synset("root"), oracle::synset("short", {"root"}),
                                          oracle::synset("m1", {"root"}), oracle::synset("m2", {"m1"}),
                                          oracle::synset("m3", {"m2"}), oracle::synset("dog", {"short", "m3"})});
    oracle::Closure c({oracle::synset("root"), oracle::synset("short", {"root"}), oracle::synset("m1", {"root"}),
                       oracle::synset("m2", {"m1"}), oracle::synset("m3", {"m2"}),
                       oracle::synset("dog", {"short", "m3"})});
    CHECK(c.depth("dog") == 6);
    CHECK(diamond.depth("dog") == 6);
    CHECK(diamond.depth("root") == 2);
  }

  TEST_CASE("lcs examples") {
    const auto g = SkbGraph::build(oracle::toy_chain());
    CHECK(g.lcs("dog", "cat") == "animal");
    CHECK(g.lcs("dog", "dog") == "dog");
    CHECK(g.lcs("dog", "entity") == "entity");
    const auto two = SkbGraph::build({oracle::synset("r1"), oracle::synset("r2")});
    CHECK(two.lcs("r1", "r2") == kVirtualRoot);
    CHECK_THROWS_AS(g.lcs("dog", "unicorn"), Error);
  }

  TEST_CASE("lcs ties go to the smallest id") {
    // a and b both sit under p and q, which have equal depth.
    const auto g = SkbGraph::build({oracle::synset("r"), oracle::synset("q", {"r"}), oracle::synset("p", {"r"}),
                                    oracle::synset("a", {"q", "p"}), oracle::synset("b", {"p", "q"})});
    CHECK(g.lcs("a", "b") == "p");
    CHECK(g.lcs("b", "a") == "p");
  }

  TEST_CASE("depth and lcs agree with the path enumeration oracle on random DAGs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
      const auto synsets = oracle::random_dag(rng, 30);
      const auto g = SkbGraph::build(synsets);
      oracle::Closure c(synsets);
      for (const auto& s : synsets) {
        REQUIRE(g.depth(s.id) == c.depth(s.id));
        CHECK(g.depth(s.id) >= 2);
        for (const auto& p : s.hypernym_ids) CHECK(g.depth(s.id) >= g.depth(p) + 1);
      }
      for (const auto& a : synsets) {
        for (const auto& b : synsets) {
          const auto l = g.lcs(a.id, b.id);
          REQUIRE(l == c.lcs(a.id, b.id));
          CHECK(l == g.lcs(b.id, a.id));
          const int dl = l == kVirtualRoot ? 1 : g.depth(l);
          CHECK(dl <= std::min(g.depth(a.id), g.depth(b.id)));
        }
      }
    }
  }

  TEST_CASE("write then load reproduces the graph") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const auto g = SkbGraph::build(oracle::random_dag(rng, 40));
      const auto text = dump(g);
      const auto back = load_text(text);
      CHECK(dump(back) == text);
      REQUIRE(back.size() == g.size());
      for (const auto& s : g.synsets()) {
        CHECK(back.at(s.id) == s);
        CHECK(back.hyponyms(s.id) == g.hyponyms(s.id));
      }
      CHECK(back.lemma_index() == g.lemma_index());
    }
  }

  TEST_CASE("export order preserves an explicit sense ranking") {
    // The index ranks b before a for the shared lemma, against record order.
    LemmaIndex index{{"bank", {"b", "a"}}, {"a", {"a"}}, {"b", {"b"}}};
    const auto g = SkbGraph::build({oracle::synset("a", {}, {"a", "bank"}), oracle::synset("b", {}, {"b", "bank"})},
                                   index);
    const auto back = load_text(dump(g));
    CHECK(back.senses("bank")[0] == "b");
    CHECK(back.lemma_index() == g.lemma_index());
  }

  TEST_CASE("contradictory sense rankings cannot be exported") {
    LemmaIndex index{{"x", {"a", "b"}}, {"y", {"b", "a"}}};
    const auto g = SkbGraph::build({oracle::synset("a", {}, {"x", "y"}), oracle::synset("b", {}, {"x", "y"})}, index);
    std::ostringstream out;
    CHECK(code_of([&] { write_skb(out, g); }) == ErrorCode::SenseOrderConflict);
  }

  TEST_CASE("lemma index must reference known synsets") {
    LemmaIndex index{{"ghost", {"nowhere"}}};
    CHECK(code_of([&] { SkbGraph::build({oracle::synset("a")}, index); }) == ErrorCode::UnknownSynset);
  }

  TEST_CASE("concurrent readers see the same answers") {
    const auto g = SkbGraph::build(oracle::toy_chain());
    std::vector<std::jthread> pool;
    std::atomic<int> bad{0};
    for (int t = 0; t < 4; ++t) {
      pool.emplace_back([&] {
        for (int i = 0; i < 500; ++i) {
          if (g.lcs("dog", "cat") != "animal" || g.depth("dog") != 5) ++bad;
        }
      });
    }
    pool.clear();
    CHECK(bad == 0);
  }
}
