#include "glosskit/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "glosskit/error.hpp"
#include "glosskit/hash.hpp"

namespace glosskit {
namespace {

void push_unique(std::vector<std::string>& list, std::string value) {
  if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(std::move(value));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto bar = std::min(value.find(" | ", pos), value.size());
    const auto item = trim(value.substr(pos, bar - pos));
    if (!item.empty()) out.emplace_back(item);
    pos = bar + 3;
  }
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep, bool display) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += display ? display_lemma(item) : item;
  }
  return out;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

}  // namespace

std::string display_lemma(std::string_view lemma) {
  std::string out(lemma);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

SemanticPayload build_semantic_payload(const SkbGraph& graph, const ClassMapping& mapping) {
  SemanticPayload p;
  if (!mapping.synset) {
    p.lemma = normalize_label(mapping.label.empty() ? mapping.class_id : mapping.label);
    p.gloss = mapping.manual_gloss.value_or("");
    return p;
  }
  const auto& s = graph.at(*mapping.synset);
  p.synset_id = s.id;
  p.lemma = s.lemmas.front();
  for (std::size_t i = 1; i < s.lemmas.size(); ++i) push_unique(p.synonyms, s.lemmas[i]);
  p.gloss = s.gloss;
  for (const auto& e : s.examples) push_unique(p.examples, e);
  for (const auto& h : s.hypernym_ids) push_unique(p.hypernyms, graph.at(h).lemmas.front());
  const auto children = graph.hyponyms(s.id);
  for (std::size_t i = 0; i < children.size() && i < kHyponymCap; ++i) {
    push_unique(p.hyponyms, graph.at(children[i]).lemmas.front());
  }
  return p;
}

ExemplarSet parse_exemplars(std::string_view text) {
  ExemplarSet set;
  set.content_hash = sha256_hex(text);
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_number = 0;
  Exemplar* current = nullptr;
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::MalformedExemplars, "line " + std::to_string(line_number) + ": " + why);
  };
  while (std::getline(in, raw)) {
    ++line_number;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (set.version.empty()) {
      constexpr std::string_view kMagic = "glosskit-exemplars ";
      if (!line.starts_with(kMagic)) throw fail("missing 'glosskit-exemplars <version>' header");
      set.version = std::string(trim(line.substr(kMagic.size())));
      if (set.version.empty()) throw fail("empty version");
      continue;
    }
    if (line == "== exemplar") {
      current = &set.exemplars.emplace_back();
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw fail("expected 'key: value'");
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    if (!current) {
      if (key == "instruction") {
        set.instruction = value;
      } else if (key == "contrast") {
        set.contrast_template = value;
      } else {
        throw fail("unknown header key '" + std::string(key) + "'");
      }
      continue;
    }
    auto& in_payload = current->input;
    if (key == "concept") {
      in_payload.lemma = value;
    } else if (key == "synonyms") {
      in_payload.synonyms = split_list(value);
    } else if (key == "definition") {
      in_payload.gloss = value;
    } else if (key == "examples") {
      in_payload.examples = split_list(value);
    } else if (key == "hypernyms") {
      in_payload.hypernyms = split_list(value);
    } else if (key == "hyponyms") {
      in_payload.hyponyms = split_list(value);
    } else if (key == "description") {
      current->description = value;
    } else {
      throw fail("unknown exemplar key '" + std::string(key) + "'");
    }
  }
  if (set.version.empty()) throw Error(ErrorCode::MalformedExemplars, "empty exemplar file");
  if (set.instruction.empty()) throw Error(ErrorCode::MalformedExemplars, "missing instruction");
  if (set.contrast_template.find("{neighbor}") == std::string::npos) {
    throw Error(ErrorCode::MalformedExemplars, "contrast template must mention {neighbor}");
  }
  if (set.exemplars.empty()) throw Error(ErrorCode::MalformedExemplars, "no exemplars");
  for (const auto& e : set.exemplars) {
    if (e.input.lemma.empty() || e.description.empty()) {
      throw Error(ErrorCode::MalformedExemplars, "exemplar without concept or description");
    }
  }
  return set;
}

ExemplarSet load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open exemplar file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_exemplars(buf.str());
}

std::filesystem::path default_exemplar_path() {
  return std::filesystem::path(GLOSSKIT_DATA_DIR) / "exemplars_v1.txt";
}

std::string render_payload_block(const SemanticPayload& p) {
  std::string out = "Concept: " + display_lemma(p.lemma) + "\n";
  if (!p.synonyms.empty()) out += "Synonyms: " + join(p.synonyms, ", ", true) + "\n";
  if (!p.gloss.empty()) out += "Definition: " + p.gloss + "\n";
  if (!p.examples.empty()) {
    std::vector<std::string> quoted;
    for (const auto& e : p.examples) quoted.push_back("\"" + e + "\"");
    out += "Examples: " + join(quoted, "; ", false) + "\n";
  }
  if (!p.hypernyms.empty()) out += "Hypernyms: " + join(p.hypernyms, ", ", true) + "\n";
  if (!p.hyponyms.empty()) out += "Hyponyms: " + join(p.hyponyms, ", ", true) + "\n";
  return out;
}

PromptBuilder::PromptBuilder(ExemplarSet exemplars) : exemplars_(std::move(exemplars)) {
  scaffold_ = exemplars_.instruction + "\n\n";
  for (const auto& e : exemplars_.exemplars) {
    scaffold_ += render_payload_block(e.input);
    scaffold_ += "Description: " + e.description + "\n\n";
  }
}

std::string PromptBuilder::scaffold() const { return scaffold_; }

std::string PromptBuilder::normal_prompt(const SemanticPayload& target) const {
  return scaffold() + render_payload_block(target) + "Description:";
}

std::string PromptBuilder::contrastive_prompt(const SemanticPayload& target,
                                              const SemanticPayload& neighbor) const {
  const bool same = (target.synset_id && target.synset_id == neighbor.synset_id) ||
                    (!target.synset_id && !neighbor.synset_id && target == neighbor);
  if (same) {
    throw Error(ErrorCode::SameClass, "cannot contrast " + target.lemma + " with itself");
  }
  auto instruction = replace_all(exemplars_.contrast_template, "{target}", display_lemma(target.lemma));
  instruction = replace_all(std::move(instruction), "{neighbor}", display_lemma(neighbor.lemma));
  std::string block = render_payload_block(target) + "Contrast: " + instruction + "\n";
  if (!neighbor.gloss.empty()) {
    block += "Neighbor definition: " + neighbor.gloss + "\n";
  }
  return scaffold() + block + "Description:";
}

}  // namespace glosskit
