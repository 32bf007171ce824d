#pragma once

// Reader for the WordNet 3.0 noun database files (data.noun, index.noun).

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "glosskit/skb.hpp"

namespace glosskit::wordnet {

struct Pointer {
  std::string symbol;
  std::string target_offset;
  char target_pos = 'n';
  std::string source_target;  // 4 hex digits
};

struct DataLine {
  std::string synset_offset;
  std::string lex_filenum;
  char ss_type = 'n';
  std::vector<std::pair<std::string, std::string>> words;  // (word, lex_id)
  std::vector<Pointer> pointers;
  std::string gloss;  // raw text after " | "
};

// Parses one data line. Throws MalformedLine on count mismatches or
// truncated fields.
DataLine parse_data_line(std::string_view line, std::size_t line_number);

// Splits a raw gloss into its definition and its quoted usage examples.
std::pair<std::string, std::vector<std::string>> split_gloss(std::string_view gloss);

Synset to_synset(const DataLine& line);

// One synset per data line; license header lines (two leading spaces) are skipped.
std::vector<Synset> parse_data_noun(std::istream& in);

// lemma -> synset offsets in file order (the sense-frequency ranking).
std::vector<std::pair<std::string, std::vector<std::string>>> parse_index_noun(std::istream& in);

// Builds a graph whose lemma index comes from index.noun. With an empty index
// the sense order falls back to data order and the graph is flagged
// frequency_unreliable.
SkbGraph import_wordnet(std::istream& data, std::istream& index);

}  // namespace glosskit::wordnet
