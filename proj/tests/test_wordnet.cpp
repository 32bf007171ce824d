#include <doctest.h>

#include <fstream>
#include <sstream>

#include "glosskit/error.hpp"
#include "glosskit/skb.hpp"
#include "glosskit/wordnet.hpp"
#include "oracles.hpp"

using namespace glosskit;

namespace {

SkbGraph import_fixture() {
  std::ifstream data(oracle::fixture("wordnet/data.noun"));
  std::ifstream index(oracle::fixture("wordnet/index.noun"));
  return wordnet::import_wordnet(data, index);
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

}  // namespace

TEST_SUITE("wordnet") {
  TEST_CASE("data line decodes per the file grammar") {
    const std::string line =
        "02084071 05 n 03 dog 0 domestic_dog 0 Canis_familiaris 0 002 @ 02083346 n 0000 ~ 01322604 n 0000 | "
        "a member of the genus Canis; \"the dog barked all night\"  ";
    const auto raw = wordnet::parse_data_line(line, 1);
    CHECK(raw.synset_offset == "02084071");
    CHECK(raw.lex_filenum == "05");
    CHECK(raw.words.size() == 3);
    CHECK(raw.pointers.size() == 2);
    CHECK(raw.pointers[1].symbol == "~");
    const auto s = wordnet::to_synset(raw);
    CHECK(s.id == "02084071-n");
    CHECK(s.pos == 'n');
    CHECK(s.lemmas == std::vector<std::string>{"dog", "domestic_dog", "canis_familiaris"});
    CHECK(s.hypernym_ids == std::vector<std::string>{"02083346-n"});
    CHECK(s.gloss == "a member of the genus Canis");
    CHECK(s.examples == std::vector<std::string>{"the dog barked all night"});
  }

  TEST_CASE("instance hypernyms become edges, other pointers are dropped") {
    const auto s = wordnet::to_synset(wordnet::parse_data_line(
        "11111111 18 n 01 Einstein 0 003 @i 10000000 n 0000 + 22222222 a 0101 %p 33333333 n 0000 | a physicist", 1));
    CHECK(s.hypernym_ids == std::vector<std::string>{"10000000-n"});
    CHECK(s.lemmas == std::vector<std::string>{"einstein"});
  }

  TEST_CASE("count mismatches and truncation are malformed") {
    CHECK(code_of([] {
            wordnet::parse_data_line("02084071 05 n 03 dog 0 domestic_dog 0 000 | too few words", 3);
          }) == ErrorCode::MalformedLine);
    CHECK(code_of([] {
            wordnet::parse_data_line("02084071 05 n 01 dog 0 002 @ 02083346 n 0000 | too few pointers", 3);
          }) == ErrorCode::MalformedLine);
    CHECK(code_of([] { wordnet::parse_data_line("02084071 05 n 01 dog 0 000 no gloss bar", 3); }) ==
          ErrorCode::MalformedLine);
    CHECK(code_of([] { wordnet::parse_data_line("2084071 05 n 01 dog 0 000 | short offset", 3); }) ==
          ErrorCode::MalformedLine);
    CHECK(code_of([] { wordnet::parse_data_line("02084071 05 n 1 dog 0 000 | one-digit count", 3); }) ==
          ErrorCode::MalformedLine);
    CHECK(code_of([] { wordnet::parse_data_line("02084071 05 n 01 dog 0 1 | short p_cnt", 3); }) ==
          ErrorCode::MalformedLine);
    CHECK(code_of([] {
            wordnet::parse_data_line("02084071 05 n 01 dog 0 001 @ 02083346 n 00 | short source/target", 3);
          }) == ErrorCode::MalformedLine);
    try {
      std::istringstream in("  header\n02084071 05 n 03 dog 0 domestic_dog 0 000 | bad\n");
      wordnet::parse_data_noun(in);
      FAIL("accepted a short word list");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("word count is hexadecimal") {
    std::string words;
    for (int i = 0; i < 11; ++i) words += "w" + std::to_string(i) + " 0 ";
    const auto raw = wordnet::parse_data_line("00000001 03 n 0b " + words + "000 | eleven words", 1);
    CHECK(raw.words.size() == 11);
  }

  TEST_CASE("header lines are skipped") {
    std::istringstream in("  1 license text\n  2 more license text\n");
    CHECK(wordnet::parse_data_noun(in).empty());
  }

  TEST_CASE("gloss splitting") {
    auto [d, ex] = wordnet::split_gloss("a young dog; \"the puppy chewed\"; \"she adopted a puppy\"");
    CHECK(d == "a young dog");
    CHECK(ex == std::vector<std::string>{"the puppy chewed", "she adopted a puppy"});
    auto [d2, ex2] = wordnet::split_gloss("lifts things; used on building sites");
    CHECK(d2 == "lifts things; used on building sites");
    CHECK(ex2.empty());
    auto [d3, ex3] = wordnet::split_gloss("\"only an example\"");
    CHECK(d3.empty());
    CHECK(ex3 == std::vector<std::string>{"only an example"});
  }

  TEST_CASE("index line keeps offsets in file order") {
    std::istringstream in("  header\ndog n 7 5 @ ~ #m #p %p 7 2 02084071 10114209 10023039 09886220 07676602 03907626 02710044\n");
    const auto idx = wordnet::parse_index_noun(in);
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].first == "dog");
    CHECK(idx[0].second.size() == 7);
    CHECK(idx[0].second.front() == "02084071");
    CHECK(idx[0].second[1] == "10114209");
  }

  TEST_CASE("index edge cases") {
    std::istringstream empty;
    CHECK(wordnet::parse_index_noun(empty).empty());
    std::istringstream dup("cat n 1 0 1 0 00005000\ncat n 1 0 1 0 00005000\n");
    CHECK(code_of([&] { wordnet::parse_index_noun(dup); }) == ErrorCode::MalformedLine);
    std::istringstream short_line("cat n 2 0 2 0 00005000\n");
    CHECK(code_of([&] { wordnet::parse_index_noun(short_line); }) == ErrorCode::MalformedLine);
  }

  TEST_CASE("fixture imports with hand-decoded contents") {
    const auto g = import_fixture();
    CHECK(g.size() == 20);
    CHECK(g.lemma_index().size() == 12);
    CHECK_FALSE(g.frequency_unreliable());

    const auto& dog = g.at("00004000-n");
    CHECK(dog.lemmas == std::vector<std::string>{"dog", "domestic_dog", "canis_familiaris"});
    CHECK(dog.gloss == "a member of the genus Canis that has been domesticated by man since prehistoric times");
    CHECK(dog.examples == std::vector<std::string>{"the dog barked all night"});
    CHECK(dog.hypernym_ids == std::vector<std::string>{"00003000-n"});

    const auto& puppy = g.at("00006000-n");
    CHECK(puppy.hypernym_ids == std::vector<std::string>{"00004000-n", "00021000-n"});
    CHECK(puppy.examples.size() == 2);

    // The machine sense is listed first for crane, the light sense first for ray.
    CHECK(std::vector<std::string>(g.senses("crane").begin(), g.senses("crane").end()) ==
          std::vector<std::string>{"00013000-n", "00008000-n"});
    CHECK(g.senses("ray")[0] == "00014000-n");
    CHECK(g.hyponyms("00003000-n") ==
          std::vector<std::string>{"00004000-n", "00005000-n", "00007000-n", "00009000-n", "00020000-n"});
  }

  TEST_CASE("import, export and load round-trips byte-identically") {
    const auto g = import_fixture();
    std::ostringstream first;
    write_skb(first, g);
    std::istringstream in(first.str());
    const auto back = load_skb(in);
    std::ostringstream second;
    write_skb(second, back);
    CHECK(first.str() == second.str());
    for (const auto& [lemma, ids] : g.lemma_index()) {
      const auto again = back.senses(lemma);
      CHECK(std::vector<std::string>(again.begin(), again.end()) == ids);
    }
    CHECK(first.str() == oracle::slurp(oracle::fixture("toy_skb.jsonl")));
  }

  TEST_CASE("index offsets must exist in the data") {
    std::ifstream data(oracle::fixture("wordnet/data.noun"));
    std::istringstream index("dog n 1 0 1 0 99999999\n");
    CHECK(code_of([&] { wordnet::import_wordnet(data, index); }) == ErrorCode::IndexDataMismatch);
  }

  TEST_CASE("data-only import derives sense order and flags it") {
    std::ifstream data(oracle::fixture("wordnet/data.noun"));
    std::istringstream index;
    const auto g = wordnet::import_wordnet(data, index);
    CHECK(g.frequency_unreliable());
    CHECK(g.senses("crane")[0] == "00008000-n");  // data order
    CHECK(g.senses("beam").size() == 1);
  }

  TEST_CASE("parsed edges form a DAG") {
    const auto g = import_fixture();
    for (const auto& s : g.synsets()) {
      for (const auto& h : s.hypernym_ids) CHECK(g.depth(s.id) > g.depth(h));
    }
  }
}
