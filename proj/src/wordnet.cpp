#include "glosskit/wordnet.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <set>
#include <unordered_map>

#include "glosskit/error.hpp"

namespace glosskit::wordnet {
namespace {

std::vector<std::string_view> split_spaces(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    const auto end = std::min(text.find(' ', pos), text.size());
    out.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

bool all_of_class(std::string_view s, int (*pred)(int)) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [&](char c) { return pred(static_cast<unsigned char>(c)) != 0; });
}

bool is_digits(std::string_view s, std::size_t width) {
  return s.size() == width && all_of_class(s, &isdigit);
}

bool is_hex(std::string_view s, std::size_t width) {
  return s.size() == width && all_of_class(s, &isxdigit);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_header(std::string_view line) { return line.size() >= 2 && line[0] == ' ' && line[1] == ' '; }

}  // namespace

DataLine parse_data_line(std::string_view line, std::size_t line_number) {
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::MalformedLine, "line " + std::to_string(line_number) + ": " + why);
  };
  const auto bar = line.find(" | ");
  if (bar == std::string_view::npos) throw fail("missing gloss separator");

  const auto tokens = split_spaces(line.substr(0, bar));
  std::size_t pos = 0;
  const auto next = [&](const char* what) -> std::string_view {
    if (pos >= tokens.size()) throw fail(std::string("truncated before ") + what);
    return tokens[pos++];
  };

  DataLine out;
  const auto offset = next("synset_offset");
  if (!is_digits(offset, 8)) throw fail("synset_offset must be 8 digits");
  out.synset_offset = offset;
  const auto lex_filenum = next("lex_filenum");
  if (!is_digits(lex_filenum, 2)) throw fail("lex_filenum must be 2 digits");
  out.lex_filenum = lex_filenum;
  const auto ss_type = next("ss_type");
  if (ss_type.size() != 1 || std::string_view("nvasr").find(ss_type[0]) == std::string_view::npos) {
    throw fail("bad ss_type");
  }
  out.ss_type = ss_type[0];

  const auto w_cnt = next("w_cnt");
  if (!is_hex(w_cnt, 2)) throw fail("w_cnt must be 2 hex digits");
  const auto words = std::stoul(std::string(w_cnt), nullptr, 16);
  if (words == 0) throw fail("w_cnt is zero");
  for (std::size_t i = 0; i < words; ++i) {
    const auto word = next("word");
    const auto lex_id = next("lex_id");
    if (!is_hex(lex_id, 1)) {
      throw fail("word count " + std::string(w_cnt) + " does not match word/lex_id pairs");
    }
    out.words.emplace_back(std::string(word), std::string(lex_id));
  }

  const auto p_cnt = next("p_cnt");
  if (!is_digits(p_cnt, 3)) throw fail("p_cnt must be 3 decimal digits");
  const auto pointers = std::stoul(std::string(p_cnt));
  for (std::size_t i = 0; i < pointers; ++i) {
    Pointer p;
    p.symbol = next("pointer_symbol");
    const auto target = next("pointer offset");
    const auto pos_tok = next("pointer pos");
    const auto st = next("source/target");
    if (!is_digits(target, 8) || pos_tok.size() != 1 || !is_hex(st, 4)) {
      throw fail("pointer count " + std::string(p_cnt) + " does not match pointer fields");
    }
    p.target_offset = target;
    p.target_pos = pos_tok[0];
    p.source_target = st;
    out.pointers.push_back(std::move(p));
  }
  // Verb frames would follow here; noun lines carry none.
  if (pos != tokens.size()) throw fail("unexpected trailing fields before gloss");

  out.gloss = std::string(trim(line.substr(bar + 3)));
  return out;
}

std::pair<std::string, std::vector<std::string>> split_gloss(std::string_view gloss) {
  gloss = trim(gloss);
  std::size_t split = gloss.find("; \"");
  if (!gloss.empty() && gloss.front() == '"') split = 0;
  if (split == std::string_view::npos) return {std::string(gloss), {}};

  std::string_view definition = trim(gloss.substr(0, split));
  while (!definition.empty() && definition.back() == ';') {
    definition = trim(definition.substr(0, definition.size() - 1));
  }
  std::vector<std::string> examples;
  std::size_t pos = split;
  while (true) {
    const auto open = gloss.find('"', pos);
    if (open == std::string_view::npos) break;
    const auto close = gloss.find('"', open + 1);
    if (close == std::string_view::npos) break;
    const auto example = trim(gloss.substr(open + 1, close - open - 1));
    if (!example.empty()) examples.emplace_back(example);
    pos = close + 1;
  }
  return {std::string(definition), std::move(examples)};
}

Synset to_synset(const DataLine& line) {
  Synset s;
  s.pos = line.ss_type == 's' ? 'a' : line.ss_type;
  s.id = line.synset_offset + "-" + s.pos;
  for (const auto& [word, lex_id] : line.words) {
    auto lemma = lowercase(word);
    if (std::find(s.lemmas.begin(), s.lemmas.end(), lemma) == s.lemmas.end()) {
      s.lemmas.push_back(std::move(lemma));
    }
  }
  for (const auto& p : line.pointers) {
    if (p.symbol != "@" && p.symbol != "@i") continue;
    auto target = p.target_offset + "-" + std::string(1, p.target_pos);
    if (std::find(s.hypernym_ids.begin(), s.hypernym_ids.end(), target) == s.hypernym_ids.end()) {
      s.hypernym_ids.push_back(std::move(target));
    }
  }
  auto [definition, examples] = split_gloss(line.gloss);
  s.gloss = std::move(definition);
  s.examples = std::move(examples);
  return s;
}

std::vector<Synset> parse_data_noun(std::istream& in) {
  std::vector<Synset> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_header(line) || trim(line).empty()) continue;
    out.push_back(to_synset(parse_data_line(line, line_number)));
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_index_noun(std::istream& in) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_header(line) || trim(line).empty()) continue;
    const auto fail = [&](const std::string& why) {
      return Error(ErrorCode::MalformedLine, "line " + std::to_string(line_number) + ": " + why);
    };
    const auto tokens = split_spaces(line);
    std::size_t pos = 0;
    const auto next = [&](const char* what) -> std::string_view {
      if (pos >= tokens.size()) throw fail(std::string("truncated before ") + what);
      return tokens[pos++];
    };
    const auto decimal = [&](const char* what) {
      const auto tok = next(what);
      if (!all_of_class(tok, &isdigit)) throw fail(std::string(what) + " is not a number");
      return std::stoul(std::string(tok));
    };

    auto lemma = lowercase(next("lemma"));
    const auto pos_tok = next("pos");
    if (pos_tok.size() != 1) throw fail("bad pos");
    const auto synset_cnt = decimal("synset_cnt");
    const auto p_cnt = decimal("p_cnt");
    for (std::size_t i = 0; i < p_cnt; ++i) next("ptr_symbol");
    decimal("sense_cnt");
    decimal("tagsense_cnt");
    std::vector<std::string> offsets;
    for (std::size_t i = 0; i < synset_cnt; ++i) {
      const auto offset = next("synset_offset");
      if (!is_digits(offset, 8)) throw fail("synset_offset must be 8 digits");
      offsets.emplace_back(offset);
    }
    if (pos != tokens.size()) throw fail("synset_cnt does not match offsets");
    if (!seen.insert(lemma).second) throw fail("duplicate lemma " + lemma);
    out.emplace_back(std::move(lemma), std::move(offsets));
  }
  return out;
}

SkbGraph import_wordnet(std::istream& data, std::istream& index) {
  auto synsets = parse_data_noun(data);
  const auto entries = parse_index_noun(index);
  if (entries.empty()) return SkbGraph::build(std::move(synsets), std::nullopt, true);

  std::unordered_map<std::string, const Synset*> by_offset;
  for (const auto& s : synsets) by_offset.emplace(s.id.substr(0, s.id.find('-')), &s);

  LemmaIndex lemma_index;
  for (const auto& [lemma, offsets] : entries) {
    auto& ids = lemma_index[lemma];
    for (const auto& offset : offsets) {
      const auto it = by_offset.find(offset);
      if (it == by_offset.end()) {
        throw Error(ErrorCode::IndexDataMismatch, "offset " + offset + " (lemma " + lemma + ")");
      }
      const auto& lemmas = it->second->lemmas;
      if (std::find(lemmas.begin(), lemmas.end(), lemma) == lemmas.end()) {
        throw Error(ErrorCode::IndexDataMismatch,
                    "offset " + offset + " does not list lemma " + lemma);
      }
      ids.push_back(it->second->id);
    }
  }
  return SkbGraph::build(std::move(synsets), std::move(lemma_index), false);
}

}  // namespace glosskit::wordnet
